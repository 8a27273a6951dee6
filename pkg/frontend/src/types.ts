export interface StackMeta {
  id: string;
  frames: number;
  x_min: number;
  x_max: number;
  path_length: number;
  spacing: number;
  altitude: number;
  fov_deg: number;
  width: number;
  height: number;
  has_ground_truth: boolean;
}

export type DisplayMode = "sbs" | "anaglyph";

export interface ViewerState {
  stackId: string;
  meta: StackMeta;
  u: number;
  a: number;
  ef: number;
  h: number;
  mode: DisplayMode;
}

export interface Range {
  min: number;
  max: number;
  step: number;
}

/** Perceived-depth readout as returned by /perception; computed server-side only. */
export interface PerceptionReadout {
  target_height: number;
  baseline: number;
  disparity_m: number;
  disparity_arcmin: number;
  perceived_distance_m: number | null;
  pth: number | null;
  jddi: number;
  gradient: number;
  detectable: boolean;
  fusible: boolean;
  beyond_infinity: boolean;
}

export interface ServiceError {
  error: string;
  constraint?: string;
}
