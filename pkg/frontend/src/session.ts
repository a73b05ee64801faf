// Session domain model. Records move strictly forward:
// recorded -> predicted -> submitted. Every transition returns a new
// object; nothing here mutates, so stale references stay truthful.

export type PhasicityName = 'Monophasic' | 'Biphasic' | 'Triphasic';

// index in this array == class index in the server's probability vector
export const CLASS_ORDER: readonly PhasicityName[] =
  ['Monophasic', 'Biphasic', 'Triphasic'];

// display order puts the healthy waveform first
export const DISPLAY_ORDER: readonly PhasicityName[] =
  ['Triphasic', 'Biphasic', 'Monophasic'];

export interface PredictionResponse {
  label: PhasicityName;
  probabilities: number[];
  model_version: string;
  spectrogram_id: string;
}

export type SessionStatus = 'recorded' | 'predicted' | 'submitted';

export interface SessionRecording {
  readonly ordinal: number;
  readonly blob: Blob;
  readonly durationS: number;
  readonly status: SessionStatus;
  readonly prediction?: PredictionResponse;
  readonly clinicianLabel?: PhasicityName;
  readonly artery?: string;
  readonly serverId?: string;
}

export class StateTransitionError extends Error {}

let nextOrdinal = 1;

export function createRecording(blob: Blob, durationS: number): SessionRecording {
  return { ordinal: nextOrdinal++, blob, durationS, status: 'recorded' };
}

export function withPrediction(
  rec: SessionRecording, prediction: PredictionResponse,
): SessionRecording {
  if (rec.status !== 'recorded') {
    throw new StateTransitionError(
      `cannot predict a ${rec.status} recording; transitions only move forward`);
  }
  return { ...rec, status: 'predicted', prediction };
}

export function asSubmitted(
  rec: SessionRecording, label: PhasicityName, artery: string | undefined,
  serverId: string,
): SessionRecording {
  if (rec.status !== 'predicted') {
    throw new StateTransitionError(
      `cannot submit a ${rec.status} recording; it must be predicted first`);
  }
  if (!serverId) {
    // a submitted record without a server id would violate durability
    throw new StateTransitionError('submission did not return an id');
  }
  return { ...rec, status: 'submitted', clinicianLabel: label, artery, serverId };
}

export function argmaxLabel(probabilities: readonly number[]): PhasicityName {
  let best = 0;
  for (let i = 1; i < probabilities.length; i++) {
    if (probabilities[i] > probabilities[best]) best = i;
  }
  return CLASS_ORDER[best];
}
