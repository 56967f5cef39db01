// Contract tests: the prediction panel must display exactly the values the
// API returned, with no numeric drift. Fixtures are recorded responses of a
// live server.

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { buildCell, buildPanel, cellHtml } from "../src/panel.js";
import type { VocabPrediction } from "../src/types.js";

function fixture(name: string): VocabPrediction {
  const raw = readFileSync(join(__dirname, "..", "fixtures", name), "utf-8");
  return JSON.parse(raw) as VocabPrediction;
}

const app1 = fixture("predict_app1.json");
const app2 = fixture("predict_app2.json");
const app3 = fixture("predict_app3.json");

describe("prediction panel", () => {
  it("carries the API values verbatim", () => {
    for (const fx of [app1, app2, app3]) {
      const cell = buildCell(fx);
      expect(cell.vocabRaw).toBe(String(fx.vocab_size));
      expect(cell.nVRaw).toBe(String(fx.n_v));
      expect(cell.embedDimRaw).toBe(String(fx.embed_dim));
      if (fx.loss_u === null) {
        expect(cell.lossRaw).toBeNull();
      } else {
        expect(cell.lossRaw).toBe(String(fx.loss_u));
      }
    }
  });

  it("renders the raw values into the cell markup", () => {
    for (const fx of [app1, app2, app3]) {
      const html = cellHtml(buildCell(fx));
      expect(html).toContain(`<code>${String(fx.vocab_size)}</code>`);
      expect(html).toContain(`<code>${String(fx.n_v)}</code>`);
      expect(html).toContain(`<code>${String(fx.embed_dim)}</code>`);
    }
  });

  it("shows the three approaches side by side in order", () => {
    const cells = buildPanel([app3, app1, app2]);
    expect(cells.map((c) => c.approach)).toEqual([1, 2, 3]);
    // The reference row: the three estimates agree to within ~25%.
    const vocabs = cells.map((c) => Number(c.vocabRaw));
    const spread = Math.max(...vocabs) / Math.min(...vocabs);
    expect(spread).toBeLessThan(1.3);
  });

  it("flags solver boundaries", () => {
    const boundary = { ...app3, boundary: true };
    const cell = buildCell(boundary);
    expect(cell.boundary).toBe(true);
    expect(cellHtml(cell)).toContain("boundary");
  });

  it("omits the loss row when the API sent none", () => {
    expect(app2.loss_u).toBeNull();
    expect(cellHtml(buildCell(app2))).not.toContain("predicted loss");
  });
});
