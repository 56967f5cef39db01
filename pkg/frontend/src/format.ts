// Unit formatting helpers. These produce the *supplementary* human-readable
// labels; the panel always carries the API's raw values verbatim as well.

export function countWithUnit(value: number): string {
  const abs = Math.abs(value);
  if (abs >= 1e12) return trim(value / 1e12) + "T";
  if (abs >= 1e9) return trim(value / 1e9) + "B";
  if (abs >= 1e6) return trim(value / 1e6) + "M";
  if (abs >= 1e3) return trim(value / 1e3) + "K";
  return trim(value);
}

export function flopsLabel(value: number): string {
  return value.toExponential(2).replace("e+", "e");
}

function trim(value: number): string {
  const rounded = Math.round(value * 100) / 100;
  return String(rounded);
}
