/**
 * Zoom/pan view transform between image space and screen space.
 *
 * Image coordinates are the single source of truth: every point sent to the
 * server is in original-image pixels regardless of the current zoom level.
 * screen = image * zoom + pan.
 */

import type { Point } from "./types.js";

export interface ViewTransform {
  zoom: number;
  panX: number;
  panY: number;
}

export const MIN_ZOOM = 0.05;
export const MAX_ZOOM = 40;

export function identityView(): ViewTransform {
  return { zoom: 1, panX: 0, panY: 0 };
}

export function imageToScreen(view: ViewTransform, p: Point): Point {
  return [p[0] * view.zoom + view.panX, p[1] * view.zoom + view.panY];
}

export function screenToImage(view: ViewTransform, p: Point): Point {
  return [(p[0] - view.panX) / view.zoom, (p[1] - view.panY) / view.zoom];
}

/** Zoom by `factor` keeping the image point under `anchor` (screen px) fixed. */
export function zoomAt(view: ViewTransform, anchor: Point, factor: number): ViewTransform {
  const zoom = Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, view.zoom * factor));
  const applied = zoom / view.zoom;
  return {
    zoom,
    panX: anchor[0] - (anchor[0] - view.panX) * applied,
    panY: anchor[1] - (anchor[1] - view.panY) * applied,
  };
}

export function pan(view: ViewTransform, dx: number, dy: number): ViewTransform {
  return { zoom: view.zoom, panX: view.panX + dx, panY: view.panY + dy };
}

/** Center the whole image inside a viewport, with a small margin. */
export function fitImage(
  imageW: number,
  imageH: number,
  viewportW: number,
  viewportH: number,
): ViewTransform {
  const zoom = Math.min(viewportW / imageW, viewportH / imageH) * 0.96;
  return {
    zoom,
    panX: (viewportW - imageW * zoom) / 2,
    panY: (viewportH - imageH * zoom) / 2,
  };
}
