import { describe, expect, it } from "vitest";

import {
  RequestGeneration,
  curveQuery,
  defaultState,
  predictQueries,
  snapToReference,
  validate,
} from "../src/state.js";

describe("request planning", () => {
  it("mirrors the per-approach parameter rules", () => {
    const state = { ...defaultState(), approach: "all" as const };
    const queries = predictQueries(state);
    expect(queries.map((q) => q.approach)).toEqual([1, 2, 3]);
    expect(queries[0].params).toEqual({ approach: "1", flops: String(state.flops) });
    expect(queries[1].params).toEqual({ approach: "2", n_nv: String(state.nNv) });
    expect(queries[2].params).toEqual({
      approach: "3",
      n_nv: String(state.nNv),
      flops: String(state.flops),
    });
  });

  it("switching mode implies exactly one request for a single approach", () => {
    const state = { ...defaultState(), approach: 3 as const };
    expect(predictQueries(state)).toHaveLength(1);
    const switched = { ...state, mode: "chars" as const, chars: 4.3e10 };
    const queries = predictQueries(switched);
    expect(queries).toHaveLength(1);
    expect(queries[0].params).toEqual({
      approach: "3",
      n_nv: String(state.nNv),
      chars: String(4.3e10),
    });
  });

  it("character mode narrows 'all' to the loss-surface approach", () => {
    const state = { ...defaultState(), mode: "chars" as const, chars: 1e10 };
    expect(predictQueries(state).map((q) => q.approach)).toEqual([3]);
  });

  it("requests no curve without a FLOPs budget", () => {
    const state = { ...defaultState(), mode: "chars" as const, chars: 1e10 };
    expect(curveQuery(state)).toBeNull();
    expect(curveQuery(defaultState())).toEqual({
      n_nv: String(defaultState().nNv),
      flops: String(defaultState().flops),
    });
  });

  it("validates the same rules the server enforces", () => {
    expect(validate(defaultState())).toBeNull();
    expect(validate({ ...defaultState(), nNv: 1 })).toMatch(/model size/);
    expect(validate({ ...defaultState(), flops: 0 })).toMatch(/budget/);
    expect(
      validate({ ...defaultState(), mode: "chars", chars: 1e10, approach: 2 })
    ).toMatch(/approach 3/);
  });
});

describe("stale-response guard", () => {
  it("only the newest generation is current", () => {
    const gen = new RequestGeneration();
    const first = gen.next();
    const second = gen.next();
    expect(gen.isCurrent(first)).toBe(false);
    expect(gen.isCurrent(second)).toBe(true);
  });
});

describe("slider snapping", () => {
  it("snaps near reference family sizes and not elsewhere", () => {
    expect(snapToReference(3.05e9)).toBe(3e9);
    expect(snapToReference(33.5e6)).toBe(33e6);
    expect(snapToReference(5e10)).toBe(5e10);
  });
});
