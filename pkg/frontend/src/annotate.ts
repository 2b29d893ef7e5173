/**
 * Annotation controller: point placement, drag correction, autosave, and
 * size refresh. Pure helpers are exported for tests; DOM wiring lives in
 * main.ts.
 */

import { ApiClient } from "./api.js";
import {
  Draft,
  acceptPrediction,
  canRequestSize,
  emptyDraft,
  fromAnnotationDoc,
  markSaved,
  moveAcceptedPoint,
  movePoint,
  placePoint,
  toAnnotationDoc,
} from "./draft.js";
import type { Landmarks, Point, PointRole, SizeResponse } from "./types.js";
import { ViewTransform, imageToScreen } from "./view.js";

export const HIT_RADIUS_PX = 9;

export interface Draggable {
  kind: "manual" | "predicted";
  role: PointRole | "left" | "right";
  point: Point; // image space
}

export function draggablePoints(draft: Draft): Draggable[] {
  const out: Draggable[] = [];
  for (const role of ["left", "right", "coinP1", "coinP2"] as PointRole[]) {
    const p = draft.points[role];
    if (p) out.push({ kind: "manual", role, point: p });
  }
  if (draft.acceptedPrediction) {
    out.push({ kind: "predicted", role: "left", point: draft.acceptedPrediction.left });
    out.push({ kind: "predicted", role: "right", point: draft.acceptedPrediction.right });
  }
  return out;
}

/** Nearest draggable within the hit radius (screen px), or null. */
export function pickPoint(
  view: ViewTransform,
  candidates: Draggable[],
  screenP: Point,
  radius: number = HIT_RADIUS_PX,
): Draggable | null {
  let best: Draggable | null = null;
  let bestDist = radius;
  for (const c of candidates) {
    const s = imageToScreen(view, c.point);
    const d = Math.hypot(s[0] - screenP[0], s[1] - screenP[1]);
    if (d <= bestDist) {
      best = c;
      bestDist = d;
    }
  }
  return best;
}

export interface ControllerEvents {
  onDraftChanged(draft: Draft): void;
  onSize(size: SizeResponse | null): void;
  onPrediction(landmarks: Landmarks | null): void;
  onError(message: string): void;
}

/**
 * Single-sample session: owns the draft, talks to the service, and keeps the
 * displayed size in sync with the latest server response.
 */
export class AnnotationController {
  draft: Draft;
  prediction: Landmarks | null = null;
  lastSize: SizeResponse | null = null;
  activeRole: PointRole = "left";

  constructor(
    private api: ApiClient,
    public sampleId: string,
    private events: ControllerEvents,
  ) {
    this.draft = emptyDraft(sampleId);
  }

  async loadExisting(): Promise<void> {
    try {
      const stored = await this.api.getAnnotation(this.sampleId);
      this.draft = fromAnnotationDoc(this.sampleId, stored.annotation);
      this.events.onDraftChanged(this.draft);
    } catch {
      /* nothing annotated yet */
    }
  }

  placeAt(imageP: Point): void {
    this.draft = placePoint(this.draft, this.activeRole, imageP);
    this.events.onDraftChanged(this.draft);
  }

  dragTo(target: Draggable, imageP: Point): void {
    if (target.kind === "manual") {
      this.draft = movePoint(this.draft, target.role as PointRole, imageP);
    } else {
      this.draft = moveAcceptedPoint(this.draft, target.role as "left" | "right", imageP);
    }
    this.events.onDraftChanged(this.draft);
  }

  /** Persist the draft; on success refresh the size if it can be computed. */
  async save(): Promise<void> {
    try {
      await this.api.putAnnotation(this.sampleId, toAnnotationDoc(this.draft));
      this.draft = markSaved(this.draft);
      this.events.onDraftChanged(this.draft);
    } catch (err) {
      this.events.onError(err instanceof Error ? err.message : String(err));
      return;
    }
    await this.refreshSize();
  }

  async requestPrediction(): Promise<void> {
    try {
      const res = await this.api.predict(this.sampleId);
      this.prediction = res.landmarks;
      this.events.onPrediction(this.prediction);
    } catch (err) {
      this.events.onError(err instanceof Error ? err.message : String(err));
    }
  }

  /** Accept the (possibly drag-corrected) prediction for sizing. */
  async acceptCurrentPrediction(): Promise<void> {
    if (!this.prediction) return;
    this.draft = acceptPrediction(this.draft, this.prediction);
    this.events.onDraftChanged(this.draft);
    await this.refreshSize();
  }

  async refreshSize(): Promise<void> {
    if (!canRequestSize(this.draft)) {
      this.lastSize = null;
      this.events.onSize(null);
      return;
    }
    try {
      // accepted predictions are written into the annotation before sizing
      if (this.draft.acceptedPrediction && !this.draft.points.left) {
        await this.api.putAnnotation(this.sampleId, {
          ...toAnnotationDoc(this.draft),
          landmarks: this.draft.acceptedPrediction,
        });
      }
      this.lastSize = await this.api.size(this.sampleId);
      this.events.onSize(this.lastSize);
    } catch (err) {
      this.events.onError(err instanceof Error ? err.message : String(err));
    }
  }
}
