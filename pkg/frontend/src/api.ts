// Thin typed client over the /api/v1 endpoints.

import type { ApiError, LossCurve, PresetsResponse, VocabPrediction } from "./types.js";

export class ApiRequestError extends Error {
  readonly status: number;

  constructor(status: number, message: string) {
    super(message);
    this.status = status;
  }
}

export function apiBase(): string {
  const override =
    (globalThis as { VOCAB_API_BASE?: string }).VOCAB_API_BASE ??
    new URLSearchParams(globalThis.location?.search ?? "").get("api") ??
    undefined;
  return (override ?? "http://127.0.0.1:8000").replace(/\/$/, "");
}

async function getJson<T>(path: string, params: Record<string, string>): Promise<T> {
  const url = new URL(apiBase() + path);
  for (const [key, value] of Object.entries(params)) {
    url.searchParams.set(key, value);
  }
  const response = await fetch(url.toString());
  const body = (await response.json()) as T | ApiError;
  if (!response.ok) {
    const message =
      typeof body === "object" && body !== null && "error" in body
        ? (body as ApiError).error.message
        : `request failed with status ${response.status}`;
    throw new ApiRequestError(response.status, message);
  }
  return body as T;
}

export function fetchPrediction(params: Record<string, string>): Promise<VocabPrediction> {
  return getJson<VocabPrediction>("/api/v1/predict", params);
}

export function fetchCurve(params: Record<string, string>): Promise<LossCurve> {
  return getJson<LossCurve>("/api/v1/curve", params);
}

export function fetchPresets(): Promise<PresetsResponse> {
  return getJson<PresetsResponse>("/api/v1/presets", {});
}
