// Wire types mirroring the tuning service's JSON bodies.

export interface ScaleParams {
  median_radius_px: number;
  se_radius_px: number;
  threshold: number;
}

export interface PipelineParams {
  scales: ScaleParams[];
  erosion_count: number;
  erosion_se_radius_px: number;
  reconstruct: boolean;
  silt_ecd_min_um: number;
}

export interface SessionSummary {
  session_id: string;
  source_id: string;
  width: number;
  height: number;
  pitch_um: number;
  histogram: number[];
}

export interface ClassStats {
  class_fractions: { clay: number; silt: number; pore: number };
  component_counts: { clay: number; silt: number; pore: number };
  silt_ecd_um: number[];
}

export interface UpdateResponse {
  revision: number;
  stats: ClassStats;
  overlay_url: string;
  stage_urls: {
    smoothed: string[];
    enhanced: string[];
    thresholded: string[];
    pores: string;
    silt: string;
    overlay: string;
    mask: string;
  };
}

export type StageName =
  | "smoothed"
  | "enhanced"
  | "thresholded"
  | "pores"
  | "silt"
  | "overlay"
  | "mask";

export const PER_SCALE_STAGES: StageName[] = ["smoothed", "enhanced", "thresholded"];
