// Prediction panel model: a pure projection of API responses into the cells
// the page renders. The `*Raw` strings are the API's numbers stringified
// without any arithmetic, so what the user sees byte-matches the response.

import { countWithUnit } from "./format.js";
import type { VocabPrediction } from "./types.js";

export const APPROACH_NAMES: Record<number, string> = {
  1: "Allocation power laws",
  2: "Cost-derivative scaling",
  3: "Parametric loss surface",
};

export interface PanelCell {
  approach: number;
  approachName: string;
  vocabRaw: string;
  nVRaw: string;
  embedDimRaw: string;
  lossRaw: string | null;
  vocabLabel: string;
  nVLabel: string;
  boundary: boolean;
  mode: string;
}

export function buildCell(prediction: VocabPrediction): PanelCell {
  return {
    approach: prediction.approach,
    approachName: APPROACH_NAMES[prediction.approach] ?? `approach ${prediction.approach}`,
    vocabRaw: String(prediction.vocab_size),
    nVRaw: String(prediction.n_v),
    embedDimRaw: String(prediction.embed_dim),
    lossRaw: prediction.loss_u === null ? null : String(prediction.loss_u),
    vocabLabel: countWithUnit(prediction.vocab_size),
    nVLabel: countWithUnit(prediction.n_v),
    boundary: prediction.boundary,
    mode: prediction.mode,
  };
}

export function buildPanel(predictions: VocabPrediction[]): PanelCell[] {
  return [...predictions]
    .sort((a, b) => a.approach - b.approach)
    .map((prediction) => buildCell(prediction));
}

export function cellHtml(cell: PanelCell): string {
  const boundaryBadge = cell.boundary
    ? '<span class="badge badge-boundary" title="solver stopped at a search boundary">boundary</span>'
    : "";
  const loss =
    cell.lossRaw === null
      ? ""
      : `<div class="cell-row"><span>predicted loss</span><code>${cell.lossRaw}</code></div>`;
  return [
    `<article class="cell" data-approach="${cell.approach}">`,
    `<h3>${cell.approachName} ${boundaryBadge}</h3>`,
    `<div class="cell-main"><strong>${cell.vocabLabel}</strong> tokens</div>`,
    `<div class="cell-row"><span>V (exact)</span><code>${cell.vocabRaw}</code></div>`,
    `<div class="cell-row"><span>vocab parameters</span><code>${cell.nVRaw}</code> (${cell.nVLabel})</div>`,
    `<div class="cell-row"><span>embedding width</span><code>${cell.embedDimRaw}</code></div>`,
    loss,
    `</article>`,
  ].join("\n");
}
