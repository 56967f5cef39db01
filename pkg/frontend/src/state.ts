// Planner state and the request plan it implies. Validation mirrors the
// server's request rules so obviously-invalid states never hit the network;
// a generation counter makes sure stale responses are never rendered.

import type { Approach } from "./types.js";

export type ApproachChoice = Approach | "all";

export interface PlannerState {
  nNv: number;
  mode: "flops" | "chars";
  flops: number;
  chars: number;
  approach: ApproachChoice;
}

export interface PredictQuery {
  approach: Approach;
  params: Record<string, string>;
}

export const N_NV_MIN = 1e7;
export const N_NV_MAX = 1e12;

// Reference family sizes: slider snap points.
export const SNAP_POINTS: number[] = [
  33e6, 85e6, 151e6, 302e6, 631e6, 1.13e9, 3e9, 7e9, 13e9, 30e9, 70e9, 130e9, 300e9,
];

export function defaultState(): PlannerState {
  return { nNv: 3e9, mode: "flops", flops: 1.3e21, chars: 4.3e10, approach: "all" };
}

export function validate(state: PlannerState): string | null {
  if (!(state.nNv >= N_NV_MIN && state.nNv <= N_NV_MAX)) {
    return "model size must lie between 10M and 1T non-vocabulary parameters";
  }
  if (state.mode === "flops" && !(state.flops > 0)) {
    return "the FLOPs budget must be positive";
  }
  if (state.mode === "chars" && !(state.chars > 0)) {
    return "the training-character count must be positive";
  }
  if (state.mode === "chars" && state.approach !== 3 && state.approach !== "all") {
    return "fixed training characters are only supported by approach 3";
  }
  return null;
}

/** Per-approach request parameters implied by the state.
 *
 * Approach 1 sends the budget only, approach 2 the model size only, and
 * approach 3 the model size plus the active constraint; in character mode
 * only approach 3 applies.
 */
export function predictQueries(state: PlannerState): PredictQuery[] {
  const approaches: Approach[] =
    state.approach === "all"
      ? state.mode === "chars"
        ? [3]
        : [1, 2, 3]
      : [state.approach];
  return approaches.map((approach) => {
    const params: Record<string, string> = { approach: String(approach) };
    if (approach !== 1) {
      params.n_nv = String(state.nNv);
    }
    if (approach === 1 || (approach === 3 && state.mode === "flops")) {
      params.flops = String(state.flops);
    }
    if (approach === 3 && state.mode === "chars") {
      params.chars = String(state.chars);
    }
    return { approach, params };
  });
}

/** Curve requests are only meaningful under a FLOPs budget. */
export function curveQuery(state: PlannerState): Record<string, string> | null {
  if (state.mode !== "flops") {
    return null;
  }
  return { n_nv: String(state.nNv), flops: String(state.flops) };
}

/** Monotone counter deciding whether a response is still current. */
export class RequestGeneration {
  private current = 0;

  next(): number {
    this.current += 1;
    return this.current;
  }

  isCurrent(generation: number): boolean {
    return generation === this.current;
  }
}

export function snapToReference(value: number): number {
  let best = SNAP_POINTS[0];
  let bestDist = Infinity;
  for (const point of SNAP_POINTS) {
    const dist = Math.abs(Math.log(value) - Math.log(point));
    if (dist < bestDist) {
      best = point;
      bestDist = dist;
    }
  }
  // Snap within 6% on the log scale, otherwise keep the raw value.
  return bestDist < 0.06 ? best : value;
}
