/**
 * Canvas drawing for the annotation view. Manual points render as red
 * circles, predicted points as blue dots, the coin pair as a joined line.
 */

import { Draft } from "./draft.js";
import type { Landmarks, Point } from "./types.js";
import { ViewTransform, imageToScreen } from "./view.js";

export const MANUAL_COLOR = "#d62728";
export const PREDICTED_COLOR = "#1f77b4";
export const COIN_COLOR = "#e8b00c";
export const BOX_COLOR = "#2ca02c";

function dot(ctx: CanvasRenderingContext2D, p: Point, color: string, ring: boolean): void {
  ctx.beginPath();
  ctx.arc(p[0], p[1], 5, 0, Math.PI * 2);
  if (ring) {
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    ctx.stroke();
  } else {
    ctx.fillStyle = color;
    ctx.fill();
  }
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  view: ViewTransform,
  image: CanvasImageSource | null,
  imageSize: { width: number; height: number } | null,
  draft: Draft,
  prediction: Landmarks | null,
): void {
  const canvas = ctx.canvas;
  ctx.setTransform(1, 0, 0, 1, 0, 0);
  ctx.fillStyle = "#202225";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (image && imageSize) {
    ctx.imageSmoothingEnabled = view.zoom < 4;
    ctx.setTransform(view.zoom, 0, 0, view.zoom, view.panX, view.panY);
    ctx.drawImage(image, 0, 0, imageSize.width, imageSize.height);
    ctx.setTransform(1, 0, 0, 1, 0, 0);
  }

  if (draft.noseBox) {
    const [x, y, w, h] = draft.noseBox;
    const a = imageToScreen(view, [x, y]);
    const b = imageToScreen(view, [x + w, y + h]);
    ctx.strokeStyle = BOX_COLOR;
    ctx.lineWidth = 1.5;
    ctx.setLineDash([6, 4]);
    ctx.strokeRect(a[0], a[1], b[0] - a[0], b[1] - a[1]);
    ctx.setLineDash([]);
  }

  const coin1 = draft.points.coinP1;
  const coin2 = draft.points.coinP2;
  if (coin1 && coin2) {
    const a = imageToScreen(view, coin1);
    const b = imageToScreen(view, coin2);
    ctx.strokeStyle = COIN_COLOR;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.moveTo(a[0], a[1]);
    ctx.lineTo(b[0], b[1]);
    ctx.stroke();
  }
  for (const p of [coin1, coin2]) {
    if (p) dot(ctx, imageToScreen(view, p), COIN_COLOR, false);
  }

  for (const key of ["left", "right"] as const) {
    const p = draft.points[key];
    if (p) dot(ctx, imageToScreen(view, p), MANUAL_COLOR, false);
  }

  const shown = draft.acceptedPrediction ?? prediction;
  if (shown) {
    dot(ctx, imageToScreen(view, shown.left), PREDICTED_COLOR, draft.acceptedPrediction == null);
    dot(ctx, imageToScreen(view, shown.right), PREDICTED_COLOR, draft.acceptedPrediction == null);
  }
}
