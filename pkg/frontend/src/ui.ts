// DOM builders for the pieces with contracts worth testing: probability
// bars rendered verbatim from the server response, and the label picker
// that blocks submission until the clinician chooses.

import { spectrogramUrl } from './api.js';
import { argmaxLabel, DISPLAY_ORDER } from './session.js';
import type { PhasicityName, PredictionResponse } from './session.js';

// Bars use the raw server probabilities as percent widths; no rounding
// or renormalization, so the visual always matches the response body.
export function probabilityBars(prediction: PredictionResponse): HTMLElement {
  const wrap = document.createElement('div');
  wrap.className = 'probabilities';
  const top = argmaxLabel(prediction.probabilities);
  for (const name of DISPLAY_ORDER) {
    const p = prediction.probabilities[classIndex(name)];
    const row = document.createElement('div');
    row.className = name === top ? 'prob-row predicted' : 'prob-row';
    row.dataset.label = name;

    const caption = document.createElement('span');
    caption.className = 'prob-label';
    caption.textContent = name;

    const track = document.createElement('div');
    track.className = 'prob-track';
    const bar = document.createElement('div');
    bar.className = 'prob-bar';
    bar.style.width = `${p * 100}%`;
    track.appendChild(bar);

    const value = document.createElement('span');
    value.className = 'prob-value';
    value.textContent = `${(p * 100).toFixed(1)}%`;

    row.append(caption, track, value);
    wrap.appendChild(row);
  }
  return wrap;
}

function classIndex(name: PhasicityName): number {
  return { Monophasic: 0, Biphasic: 1, Triphasic: 2 }[name];
}

export function spectrogramImage(spectrogramId: string): HTMLImageElement {
  const img = document.createElement('img');
  img.className = 'spectrogram';
  img.alt = 'spectrogram of the recorded clip';
  img.src = spectrogramUrl(spectrogramId);
  return img;
}

export interface LabelPicker {
  element: HTMLElement;
  chosen(): PhasicityName | null;
}

// Radio group in display order. Nothing is preselected: the clinician
// must actively choose, even when accepting the suggestion.
export function labelPicker(suggested: PhasicityName, groupName: string): LabelPicker {
  const wrap = document.createElement('div');
  wrap.className = 'label-picker';
  const inputs: HTMLInputElement[] = [];
  for (const name of DISPLAY_ORDER) {
    const lab = document.createElement('label');
    lab.className = 'label-option';
    const input = document.createElement('input');
    input.type = 'radio';
    input.name = groupName;
    input.value = name;
    inputs.push(input);
    lab.appendChild(input);
    lab.append(` ${name}`);
    if (name === suggested) {
      const tag = document.createElement('em');
      tag.className = 'suggested';
      tag.textContent = ' (suggested)';
      lab.appendChild(tag);
    }
    wrap.appendChild(lab);
  }
  return {
    element: wrap,
    chosen: () => {
      const picked = inputs.find((i) => i.checked);
      return picked ? (picked.value as PhasicityName) : null;
    },
  };
}

export function errorBanner(message: string): HTMLElement {
  const el = document.createElement('div');
  el.className = 'error-banner';
  el.setAttribute('role', 'alert');
  el.textContent = message;
  return el;
}
