// @vitest-environment jsdom
import { describe, expect, it } from 'vitest';

import { errorBanner, labelPicker, probabilityBars } from '../src/ui.js';
import type { PredictionResponse } from '../src/session.js';

// probabilities deliberately do NOT sum to 1: the bars must show the
// server's numbers verbatim, with no client-side renormalization
const prediction: PredictionResponse = {
  label: 'Biphasic',
  probabilities: [0.24, 0.55, 0.18],
  model_version: 'phzm1-1',
  spectrogram_id: 'sid',
};

describe('probabilityBars', () => {
  it('renders one row per class in display order', () => {
    const el = probabilityBars(prediction);
    const rows = [...el.querySelectorAll('.prob-row')];
    expect(rows.map((r) => (r as HTMLElement).dataset.label))
      .toEqual(['Triphasic', 'Biphasic', 'Monophasic']);
  });

  it('uses the raw server probabilities as widths', () => {
    const el = probabilityBars(prediction);
    const widthOf = (label: string) =>
      (el.querySelector(`[data-label="${label}"] .prob-bar`) as HTMLElement)
        .style.width;
    expect(widthOf('Monophasic')).toBe('24%');
    expect(widthOf('Biphasic')).toBe('55.00000000000001%'); // 0.55*100, verbatim
    expect(widthOf('Triphasic')).toBe('18%');
  });

  it('prints percentages to one decimal', () => {
    const el = probabilityBars(prediction);
    const values = [...el.querySelectorAll('.prob-value')]
      .map((n) => n.textContent);
    expect(values).toEqual(['18.0%', '55.0%', '24.0%']);
  });

  it('highlights exactly the argmax row', () => {
    const el = probabilityBars(prediction);
    const marked = [...el.querySelectorAll('.prob-row.predicted')];
    expect(marked).toHaveLength(1);
    expect((marked[0] as HTMLElement).dataset.label).toBe('Biphasic');
  });

  it('derives the highlight from the probabilities, not the label field', () => {
    // if the two ever disagree, the numbers the user sees win
    const skewed = { ...prediction, label: 'Monophasic' as const };
    const el = probabilityBars(skewed);
    const marked = el.querySelector('.prob-row.predicted') as HTMLElement;
    expect(marked.dataset.label).toBe('Biphasic');
  });
});

describe('labelPicker', () => {
  it('offers the three classes in display order with nothing preselected', () => {
    const picker = labelPicker('Triphasic', 'g1');
    const inputs = [...picker.element.querySelectorAll('input')];
    expect(inputs.map((i) => i.value))
      .toEqual(['Triphasic', 'Biphasic', 'Monophasic']);
    expect(inputs.every((i) => !i.checked)).toBe(true);
    expect(picker.chosen()).toBeNull();
  });

  it('marks the model suggestion without selecting it', () => {
    const picker = labelPicker('Biphasic', 'g2');
    const options = [...picker.element.querySelectorAll('.label-option')];
    const tagged = options.filter((o) => o.querySelector('.suggested'));
    expect(tagged).toHaveLength(1);
    expect(tagged[0].textContent).toContain('Biphasic');
    expect(picker.chosen()).toBeNull();
  });

  it('reports the clinician choice, including overrides', () => {
    const picker = labelPicker('Triphasic', 'g3');
    const mono = [...picker.element.querySelectorAll('input')]
      .find((i) => i.value === 'Monophasic')!;
    mono.checked = true;
    expect(picker.chosen()).toBe('Monophasic');
  });
});

describe('errorBanner', () => {
  it('is an alert with the message text', () => {
    const el = errorBanner('server unreachable');
    expect(el.getAttribute('role')).toBe('alert');
    expect(el.textContent).toBe('server unreachable');
  });
});
