// Thin client for the classifier's HTTP API. This is the UI's only
// connection to the backend; there is no direct storage access.

import type { PhasicityName, PredictionResponse } from './session.js';

export interface ModelInfo {
  version: string;
  input_side: number;
  classes: PhasicityName[];
}

export class ApiError extends Error {
  constructor(public readonly status: number, detail: string) {
    super(detail);
  }
}

async function errorFrom(res: Response): Promise<ApiError> {
  let detail = `request failed with status ${res.status}`;
  try {
    const body = await res.json();
    if (typeof body?.detail === 'string') detail = body.detail;
  } catch {
    // non-JSON error body; keep the generic message
  }
  return new ApiError(res.status, detail);
}

export async function fetchModelInfo(): Promise<ModelInfo> {
  const res = await fetch('/api/v1/model');
  if (!res.ok) throw await errorFrom(res);
  return res.json();
}

export async function requestPrediction(clip: Blob): Promise<PredictionResponse> {
  const res = await fetch('/api/v1/predict', {
    method: 'POST',
    headers: { 'content-type': 'audio/wav' },
    body: clip,
  });
  if (!res.ok) throw await errorFrom(res);
  return res.json();
}

export async function submitRecording(
  clip: Blob, label: PhasicityName, artery?: string,
): Promise<string> {
  const form = new FormData();
  form.append('file', clip, 'clip.wav');
  form.append('label', label);
  if (artery) form.append('artery', artery);
  const res = await fetch('/api/v1/recordings', { method: 'POST', body: form });
  if (!res.ok) throw await errorFrom(res);
  const body = await res.json();
  return body.id;
}

export function spectrogramUrl(id: string): string {
  return `/api/v1/spectrogram/${encodeURIComponent(id)}`;
}
