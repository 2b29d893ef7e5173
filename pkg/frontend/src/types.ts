/** Shared types mirroring the service's JSON wire format. */

export type Point = [number, number];

export type PointRole = "left" | "right" | "coinP1" | "coinP2";

export interface Landmarks {
  left: Point;
  right: Point;
}

export interface Coin {
  p1?: Point;
  p2?: Point;
  px_per_mm?: number;
}

export interface AnnotationDoc {
  landmarks?: Landmarks;
  coin?: Coin;
  face_box?: [number, number, number, number];
  nose_box?: [number, number, number, number];
  alar_mm?: number;
  size?: string;
  meta?: Record<string, unknown>;
}

export interface BoundaryBand {
  boundary: number;
  low: number;
  high: number;
  sizes: string[];
}

export interface SizeResponse {
  width_mm: number;
  size: string;
  scale_px_per_mm: number;
  landmarks: Landmarks;
  source: string;
  boundary_band: BoundaryBand | null;
}

export interface PredictionResponse {
  version: number;
  landmarks: Landmarks;
  crop_landmarks: Landmarks;
}

export interface SampleInfo {
  id: string;
  content_type: string;
  width: number;
  height: number;
  annotation_version: number | null;
  prediction_version: number | null;
}
