// Wire types of the /api/v1 endpoints. Field names and shapes mirror the
// server's JSON exactly; the UI never re-derives any of these numbers.

export type Approach = 1 | 2 | 3;

export type ConstraintMode = "flops-budget" | "fixed-characters";

export interface VocabPrediction {
  vocab_size: number;
  n_v: number;
  embed_dim: number;
  approach: Approach;
  mode: ConstraintMode;
  n_nv: number | null;
  chars: number | null;
  loss_u: number | null;
  boundary: boolean;
  constraint: Record<string, number>;
}

export interface CurvePoint {
  v: number;
  loss_u: number;
}

export interface LossCurve {
  points: CurvePoint[];
  minimum: CurvePoint;
  boundary: boolean;
  n_nv: number;
  flops: number;
  embed_dim: number;
}

export interface ApiError {
  error: { type: string; message: string };
}

export interface PresetSummary {
  name: string;
  fertility: Record<string, number | null>;
  laws: unknown;
  gamma: Record<string, number>;
  ploss: Record<string, number>;
}

export interface PresetsResponse {
  default: string;
  presets: PresetSummary[];
}
