import { describe, expect, it } from 'vitest';

import {
  argmaxLabel,
  asSubmitted,
  CLASS_ORDER,
  createRecording,
  DISPLAY_ORDER,
  StateTransitionError,
  withPrediction,
} from '../src/session.js';
import type { PredictionResponse } from '../src/session.js';

const clip = () => new Blob([new Uint8Array(8)], { type: 'audio/wav' });

const prediction: PredictionResponse = {
  label: 'Triphasic',
  probabilities: [0.05, 0.15, 0.8],
  model_version: 'phzm1-abc12345',
  spectrogram_id: 'feed',
};

describe('status transitions', () => {
  it('starts new recordings at recorded', () => {
    const rec = createRecording(clip(), 4.0);
    expect(rec.status).toBe('recorded');
    expect(rec.prediction).toBeUndefined();
  });

  it('assigns distinct ordinals', () => {
    const a = createRecording(clip(), 4.0);
    const b = createRecording(clip(), 4.0);
    expect(a.ordinal).not.toBe(b.ordinal);
  });

  it('moves recorded -> predicted -> submitted', () => {
    const rec = createRecording(clip(), 4.0);
    const predicted = withPrediction(rec, prediction);
    expect(predicted.status).toBe('predicted');
    const submitted = asSubmitted(predicted, 'Biphasic', 'popliteal', 'srv-1');
    expect(submitted.status).toBe('submitted');
    expect(submitted.serverId).toBe('srv-1');
  });

  it('never mutates the input record', () => {
    const rec = createRecording(clip(), 4.0);
    withPrediction(rec, prediction);
    expect(rec.status).toBe('recorded');
  });

  it('refuses to skip the predicted stage', () => {
    const rec = createRecording(clip(), 4.0);
    expect(() => asSubmitted(rec as never, 'Triphasic', undefined, 'srv'))
      .toThrow(StateTransitionError);
  });

  it('refuses to predict twice', () => {
    const predicted = withPrediction(createRecording(clip(), 4.0), prediction);
    expect(() => withPrediction(predicted, prediction))
      .toThrow(StateTransitionError);
  });

  it('refuses a submitted state without a server id', () => {
    const predicted = withPrediction(createRecording(clip(), 4.0), prediction);
    expect(() => asSubmitted(predicted, 'Triphasic', undefined, ''))
      .toThrow(StateTransitionError);
  });

  it('stores the clinician label even when it overrides the prediction', () => {
    const predicted = withPrediction(createRecording(clip(), 4.0), prediction);
    const submitted = asSubmitted(predicted, 'Monophasic', undefined, 'srv-2');
    expect(submitted.clinicianLabel).toBe('Monophasic');
    expect(submitted.prediction?.label).toBe('Triphasic'); // both kept
  });
});

describe('label orderings', () => {
  it('class order matches the probability vector indexing', () => {
    expect(CLASS_ORDER).toEqual(['Monophasic', 'Biphasic', 'Triphasic']);
  });

  it('display order leads with the healthy waveform', () => {
    expect(DISPLAY_ORDER).toEqual(['Triphasic', 'Biphasic', 'Monophasic']);
  });

  it('argmax maps through class order', () => {
    expect(argmaxLabel([0.7, 0.2, 0.1])).toBe('Monophasic');
    expect(argmaxLabel([0.1, 0.7, 0.2])).toBe('Biphasic');
    expect(argmaxLabel([0.1, 0.2, 0.7])).toBe('Triphasic');
  });

  it('breaks exact ties toward the lower class index', () => {
    expect(argmaxLabel([0.5, 0.5, 0.0])).toBe('Monophasic');
  });
});
