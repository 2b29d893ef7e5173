/**
 * Annotation draft state and its pure transitions.
 *
 * At most one point per role. A size can only be requested once the coin
 * pair exists together with either a manual landmark pair or an accepted
 * prediction. The client never computes width or size itself.
 */

import type { AnnotationDoc, Landmarks, Point, PointRole } from "./types.js";

export interface Draft {
  sampleId: string;
  points: Partial<Record<PointRole, Point>>;
  noseBox?: [number, number, number, number];
  faceBox?: [number, number, number, number];
  alarMm?: number;
  /** Prediction accepted (possibly after drag-correction) for sizing. */
  acceptedPrediction?: Landmarks;
  dirty: boolean;
}

export function emptyDraft(sampleId: string): Draft {
  return { sampleId, points: {}, dirty: false };
}

export function placePoint(draft: Draft, role: PointRole, p: Point): Draft {
  return { ...draft, points: { ...draft.points, [role]: p }, dirty: true };
}

export function movePoint(draft: Draft, role: PointRole, p: Point): Draft {
  if (draft.points[role] === undefined) return draft;
  return placePoint(draft, role, p);
}

export function clearPoint(draft: Draft, role: PointRole): Draft {
  const points = { ...draft.points };
  delete points[role];
  return { ...draft, points, dirty: true };
}

export function setNoseBox(draft: Draft, box: [number, number, number, number]): Draft {
  return { ...draft, noseBox: box, dirty: true };
}

export function acceptPrediction(draft: Draft, landmarks: Landmarks): Draft {
  return { ...draft, acceptedPrediction: landmarks, dirty: false };
}

export function moveAcceptedPoint(draft: Draft, which: "left" | "right", p: Point): Draft {
  if (!draft.acceptedPrediction) return draft;
  return {
    ...draft,
    acceptedPrediction: { ...draft.acceptedPrediction, [which]: p },
  };
}

export function markSaved(draft: Draft): Draft {
  return { ...draft, dirty: false };
}

export function hasCoinPair(draft: Draft): boolean {
  return draft.points.coinP1 !== undefined && draft.points.coinP2 !== undefined;
}

export function hasLandmarkPair(draft: Draft): boolean {
  return draft.points.left !== undefined && draft.points.right !== undefined;
}

/** Gate for the size request: coin pair plus landmarks or an accepted prediction. */
export function canRequestSize(draft: Draft): boolean {
  return hasCoinPair(draft) && (hasLandmarkPair(draft) || draft.acceptedPrediction !== undefined);
}

/** Serialize the draft into the annotation document the server validates. */
export function toAnnotationDoc(draft: Draft): AnnotationDoc {
  const doc: AnnotationDoc = {};
  if (hasLandmarkPair(draft)) {
    doc.landmarks = { left: draft.points.left!, right: draft.points.right! };
  }
  if (hasCoinPair(draft)) {
    doc.coin = { p1: draft.points.coinP1!, p2: draft.points.coinP2! };
  }
  if (draft.noseBox) doc.nose_box = draft.noseBox;
  if (draft.faceBox) doc.face_box = draft.faceBox;
  if (draft.alarMm !== undefined) doc.alar_mm = draft.alarMm;
  return doc;
}

export function fromAnnotationDoc(sampleId: string, doc: AnnotationDoc): Draft {
  const draft = emptyDraft(sampleId);
  if (doc.landmarks) {
    draft.points.left = doc.landmarks.left;
    draft.points.right = doc.landmarks.right;
  }
  if (doc.coin?.p1) draft.points.coinP1 = doc.coin.p1;
  if (doc.coin?.p2) draft.points.coinP2 = doc.coin.p2;
  if (doc.nose_box) draft.noseBox = doc.nose_box;
  if (doc.face_box) draft.faceBox = doc.face_box;
  if (doc.alar_mm !== undefined) draft.alarMm = doc.alar_mm;
  return draft;
}
