// SVG loss-curve rendering as a pure string builder: log-V on x, loss on y,
// with the server-computed minimum marked. No numeric work beyond mapping
// values onto pixels.

import type { LossCurve } from "./types.js";

export interface ChartLayout {
  width: number;
  height: number;
  margin: number;
}

export const DEFAULT_LAYOUT: ChartLayout = { width: 640, height: 320, margin: 42 };

export interface ChartModel {
  pathD: string;
  marker: { x: number; y: number; v: number; loss: number } | null;
  xTicks: { x: number; label: string }[];
  yTicks: { y: number; label: string }[];
}

function mapper(curve: LossCurve, layout: ChartLayout) {
  const xs = curve.points.map((p) => Math.log(p.v));
  const ys = curve.points.map((p) => p.loss_u);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys, curve.minimum.loss_u);
  const yMax = Math.max(...ys);
  const xSpan = xMax - xMin || 1;
  const ySpan = yMax - yMin || 1;
  const inner = {
    w: layout.width - 2 * layout.margin,
    h: layout.height - 2 * layout.margin,
  };
  return {
    x: (v: number) => layout.margin + ((Math.log(v) - xMin) / xSpan) * inner.w,
    y: (loss: number) => layout.margin + (1 - (loss - yMin) / ySpan) * inner.h,
    xMin,
    xMax,
    yMin,
    yMax,
  };
}

export function buildChart(curve: LossCurve, layout: ChartLayout = DEFAULT_LAYOUT): ChartModel {
  if (curve.points.length === 0) {
    return { pathD: "", marker: null, xTicks: [], yTicks: [] };
  }
  const m = mapper(curve, layout);
  const pathD = curve.points
    .map((p, i) => `${i === 0 ? "M" : "L"}${m.x(p.v).toFixed(2)},${m.y(p.loss_u).toFixed(2)}`)
    .join(" ");
  const marker = {
    x: m.x(curve.minimum.v),
    y: m.y(curve.minimum.loss_u),
    v: curve.minimum.v,
    loss: curve.minimum.loss_u,
  };
  const xTicks = [];
  for (const v of [1024, 8192, 65536, 524288]) {
    if (v >= Math.exp(m.xMin) && v <= Math.exp(m.xMax)) {
      xTicks.push({ x: m.x(v), label: v >= 1024 ? `${Math.round(v / 1024)}K` : String(v) });
    }
  }
  const yTicks = [
    { y: m.y(m.yMin), label: m.yMin.toFixed(4) },
    { y: m.y(m.yMax), label: m.yMax.toFixed(4) },
  ];
  return { pathD, marker, xTicks, yTicks };
}

export function chartSvg(curve: LossCurve, layout: ChartLayout = DEFAULT_LAYOUT): string {
  const model = buildChart(curve, layout);
  if (!model.pathD) {
    return `<div class="chart-empty">No curve for this configuration: pick a FLOPs budget to see the loss trade-off.</div>`;
  }
  const ticks = [
    ...model.xTicks.map(
      (t) =>
        `<text x="${t.x.toFixed(1)}" y="${layout.height - 14}" class="tick">${t.label}</text>`
    ),
    ...model.yTicks.map(
      (t) => `<text x="6" y="${t.y.toFixed(1)}" class="tick">${t.label}</text>`
    ),
  ].join("");
  const marker = model.marker
    ? `<circle cx="${model.marker.x.toFixed(2)}" cy="${model.marker.y.toFixed(2)}" r="5" class="marker"/>` +
      `<text x="${model.marker.x.toFixed(1)}" y="${(model.marker.y - 10).toFixed(1)}" class="marker-label">` +
      `V*=${model.marker.v}</text>`
    : "";
  return (
    `<svg viewBox="0 0 ${layout.width} ${layout.height}" role="img" aria-label="loss versus vocabulary size">` +
    `<path d="${model.pathD}" class="curve"/>` +
    marker +
    ticks +
    `</svg>`
  );
}
