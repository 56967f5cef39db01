// DOM wiring for the planner page. All numbers come from the API; this file
// only moves them between controls and rendered panels.

import { ApiRequestError, fetchCurve, fetchPrediction } from "./api.js";
import { chartSvg } from "./chart.js";
import { countWithUnit, flopsLabel } from "./format.js";
import { buildPanel, cellHtml } from "./panel.js";
import {
  N_NV_MAX,
  N_NV_MIN,
  PlannerState,
  RequestGeneration,
  curveQuery,
  defaultState,
  predictQueries,
  snapToReference,
  validate,
} from "./state.js";
import type { VocabPrediction } from "./types.js";

const state: PlannerState = defaultState();
const generation = new RequestGeneration();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const controls = {
  nNv: el<HTMLInputElement>("n-nv-slider"),
  nNvLabel: el<HTMLElement>("n-nv-label"),
  budget: el<HTMLInputElement>("budget-input"),
  budgetLabel: el<HTMLElement>("budget-label"),
  modeFlops: el<HTMLInputElement>("mode-flops"),
  modeChars: el<HTMLInputElement>("mode-chars"),
  approach: el<HTMLSelectElement>("approach-select"),
  panel: el<HTMLElement>("prediction-panel"),
  chart: el<HTMLElement>("loss-chart"),
  message: el<HTMLElement>("message-area"),
};

function sliderToNnv(position: number): number {
  const t = position / 1000;
  return snapToReference(Math.exp(Math.log(N_NV_MIN) + t * Math.log(N_NV_MAX / N_NV_MIN)));
}

function nnvToSlider(nNv: number): number {
  return Math.round((Math.log(nNv / N_NV_MIN) / Math.log(N_NV_MAX / N_NV_MIN)) * 1000);
}

function showMessage(kind: "error" | "retry" | "none", text = ""): void {
  if (kind === "none") {
    controls.message.innerHTML = "";
    return;
  }
  const retry =
    kind === "retry"
      ? '<button id="retry-button" class="retry">retry</button>'
      : "";
  controls.message.innerHTML = `<div class="banner banner-${kind}">${text} ${retry}</div>`;
  const button = document.getElementById("retry-button");
  if (button) button.addEventListener("click", () => void refresh());
}

function renderPanel(predictions: VocabPrediction[]): void {
  controls.panel.innerHTML = buildPanel(predictions).map(cellHtml).join("\n");
}

async function refresh(): Promise<void> {
  const problem = validate(state);
  if (problem) {
    showMessage("error", problem);
    return;
  }
  showMessage("none");
  const gen = generation.next();
  try {
    const predictions = await Promise.all(
      predictQueries(state).map((q) => fetchPrediction(q.params))
    );
    if (!generation.isCurrent(gen)) return; // stale: a newer request exists
    renderPanel(predictions);

    const curveParams = curveQuery(state);
    if (curveParams) {
      const curve = await fetchCurve(curveParams);
      if (!generation.isCurrent(gen)) return;
      controls.chart.innerHTML = chartSvg(curve);
    } else {
      controls.chart.innerHTML =
        '<div class="chart-empty">The loss curve needs a FLOPs budget; character mode shows predictions only.</div>';
    }
  } catch (err) {
    if (!generation.isCurrent(gen)) return;
    if (err instanceof ApiRequestError) {
      showMessage("error", err.message);
    } else {
      showMessage("retry", "The planner API is unreachable.");
    }
  }
}

function syncLabels(): void {
  controls.nNvLabel.textContent = countWithUnit(state.nNv);
  controls.budgetLabel.textContent =
    state.mode === "flops" ? flopsLabel(state.flops) + " FLOPs" : countWithUnit(state.chars) + " chars";
}

function wire(): void {
  controls.nNv.value = String(nnvToSlider(state.nNv));
  controls.budget.value = state.mode === "flops" ? String(state.flops) : String(state.chars);
  syncLabels();

  controls.nNv.addEventListener("input", () => {
    state.nNv = sliderToNnv(Number(controls.nNv.value));
    syncLabels();
  });
  controls.nNv.addEventListener("change", () => void refresh());

  controls.budget.addEventListener("change", () => {
    const value = Number(controls.budget.value);
    if (state.mode === "flops") state.flops = value;
    else state.chars = value;
    syncLabels();
    void refresh();
  });

  const onMode = () => {
    state.mode = controls.modeChars.checked ? "chars" : "flops";
    if (state.mode === "chars" && !(state.chars > 0)) state.chars = 4.3e10;
    controls.budget.value = state.mode === "flops" ? String(state.flops) : String(state.chars);
    syncLabels();
    void refresh();
  };
  controls.modeFlops.addEventListener("change", onMode);
  controls.modeChars.addEventListener("change", onMode);

  controls.approach.addEventListener("change", () => {
    const raw = controls.approach.value;
    state.approach = raw === "all" ? "all" : (Number(raw) as 1 | 2 | 3);
    void refresh();
  });

  void refresh();
}

wire();
