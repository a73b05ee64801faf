// App wiring: microphone/upload intake on top, session cards below.
// All state lives in the SessionController; this file only renders it
// and forwards DOM events.

import * as api from './api.js';
import { SessionController } from './controller.js';
import { recordClip } from './recorder.js';
import { encodeWavPcm16, readWavSummary } from './wav.js';
import { errorBanner, labelPicker, probabilityBars, spectrogramImage } from './ui.js';
import type { PhasicityName, SessionRecording } from './session.js';

const TARGET_DURATION_S = 4;

interface DraftInputs {
  label: PhasicityName | null;
  artery: string;
}

const controller = new SessionController(api);
const drafts = new Map<number, DraftInputs>();
let capturing = false; // actively capturing from the microphone

const root = document.getElementById('app');
if (!root) throw new Error('missing #app mount point');

controller.onChange(render);
render();
void showModelBadge();

async function showModelBadge(): Promise<void> {
  const badge = document.getElementById('model-badge');
  if (!badge) return;
  try {
    const info = await api.fetchModelInfo();
    badge.textContent = `model ${info.version}`;
  } catch {
    badge.textContent = 'no model loaded';
  }
}

function render(): void {
  root!.replaceChildren(intakeRow(), ...errors(), ...cards());
}

function errors(): HTMLElement[] {
  return controller.lastError ? [errorBanner(controller.lastError)] : [];
}

function intakeRow(): HTMLElement {
  const row = document.createElement('div');
  row.className = 'intake';

  const recordBtn = document.createElement('button');
  recordBtn.id = 'record';
  recordBtn.textContent = capturing
    ? 'recording…'
    : `record ${TARGET_DURATION_S} s clip`;
  recordBtn.disabled = capturing;
  recordBtn.onclick = () => void captureFromMicrophone();

  const uploadLabel = document.createElement('label');
  uploadLabel.className = 'upload';
  uploadLabel.textContent = 'or upload a .wav ';
  const file = document.createElement('input');
  file.type = 'file';
  file.accept = '.wav,audio/wav';
  file.onchange = () => {
    const picked = file.files?.[0];
    if (picked) void intakeFile(picked);
    file.value = '';
  };
  uploadLabel.appendChild(file);

  row.append(recordBtn, uploadLabel);
  return row;
}

async function captureFromMicrophone(): Promise<void> {
  capturing = true;
  render();
  try {
    const capture = await recordClip(TARGET_DURATION_S);
    const wav = encodeWavPcm16(capture.samples, Math.round(capture.sampleRateHz));
    controller.addRecording(new Blob([wav], { type: 'audio/wav' }), capture.durationS);
  } catch (err) {
    controller.lastError = err instanceof DOMException && err.name === 'NotAllowedError'
      ? 'microphone permission denied; allow access and try again'
      : `could not record: ${err instanceof Error ? err.message : err}`;
  } finally {
    capturing = false;
    render();
  }
}

async function intakeFile(file: File): Promise<void> {
  try {
    const summary = readWavSummary(await file.arrayBuffer());
    controller.addRecording(file.slice(0, file.size, 'audio/wav'), summary.durationS);
  } catch (err) {
    controller.lastError = `not a usable WAV file: ${err instanceof Error ? err.message : err}`;
    render();
  }
}

function cards(): HTMLElement[] {
  // newest on top, matching how consecutive arteries are worked through
  return [...controller.recordings].reverse().map((rec) => card(rec));
}

function card(rec: SessionRecording): HTMLElement {
  const el = document.createElement('section');
  el.className = `card status-${rec.status}`;

  const head = document.createElement('header');
  head.textContent =
    `clip #${rec.ordinal} · ${rec.durationS.toFixed(1)} s · ${rec.status}`;
  el.appendChild(head);

  if (rec.status === 'recorded') {
    const btn = document.createElement('button');
    btn.textContent = controller.busy ? 'working…' : 'classify';
    btn.disabled = controller.busy;
    btn.onclick = () => void controller.predict(rec.ordinal);
    el.appendChild(btn);
  }

  if (rec.prediction) {
    el.appendChild(spectrogramImage(rec.prediction.spectrogram_id));
    el.appendChild(probabilityBars(rec.prediction));
  }

  if (rec.status === 'predicted' && rec.prediction) {
    el.appendChild(submitForm(rec));
  }

  if (rec.status === 'submitted') {
    const done = document.createElement('p');
    done.className = 'submitted-note';
    done.textContent =
      `stored as ${rec.serverId} with label ${rec.clinicianLabel}` +
      (rec.artery ? ` (${rec.artery})` : '');
    el.appendChild(done);
  }
  return el;
}

function submitForm(rec: SessionRecording): HTMLElement {
  const draft = drafts.get(rec.ordinal) ?? { label: null, artery: '' };
  drafts.set(rec.ordinal, draft);

  const form = document.createElement('div');
  form.className = 'submit-form';

  const picker = labelPicker(rec.prediction!.label, `label-${rec.ordinal}`);
  picker.element.querySelectorAll('input').forEach((input) => {
    input.checked = input.value === draft.label;
    input.addEventListener('change', () => {
      draft.label = picker.chosen();
      submit.disabled = controller.busy || !draft.label;
    });
  });

  const artery = document.createElement('input');
  artery.type = 'text';
  artery.placeholder = 'artery (optional)';
  artery.value = draft.artery;
  artery.oninput = () => { draft.artery = artery.value; };

  const submit = document.createElement('button');
  submit.textContent = controller.busy ? 'working…' : 'submit to dataset';
  submit.disabled = controller.busy || !draft.label;
  submit.onclick = () =>
    void controller.submit(rec.ordinal, draft.label, draft.artery.trim() || undefined);

  form.append(picker.element, artery, submit);
  return form;
}
