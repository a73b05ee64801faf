// Orchestrates the session against the API with the UI's concurrency
// rules: at most one request in flight, and a failed request leaves the
// recording exactly where it was so the user can retry.

import {
  asSubmitted,
  createRecording,
  withPrediction,
} from './session.js';
import type {
  PhasicityName,
  PredictionResponse,
  SessionRecording,
} from './session.js';

export interface ApiLike {
  requestPrediction(clip: Blob): Promise<PredictionResponse>;
  submitRecording(clip: Blob, label: PhasicityName, artery?: string): Promise<string>;
}

export class SessionController {
  recordings: SessionRecording[] = [];
  busy = false;
  lastError: string | null = null;
  private listeners: Array<() => void> = [];

  constructor(private readonly api: ApiLike) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  addRecording(blob: Blob, durationS: number): SessionRecording {
    const rec = createRecording(blob, durationS);
    this.recordings = [...this.recordings, rec];
    this.lastError = null;
    this.emit();
    return rec;
  }

  async predict(ordinal: number): Promise<void> {
    const rec = this.mustFind(ordinal);
    if (this.busy) return; // one in-flight request at a time
    if (rec.status !== 'recorded') return;
    this.busy = true;
    this.lastError = null;
    this.emit();
    try {
      const prediction = await this.api.requestPrediction(rec.blob);
      this.replace(withPrediction(rec, prediction));
    } catch (err) {
      // recording stays in 'recorded'; the predict control doubles as retry
      this.lastError = messageOf(err);
    } finally {
      this.busy = false;
      this.emit();
    }
  }

  async submit(ordinal: number, label: PhasicityName | null, artery?: string): Promise<void> {
    const rec = this.mustFind(ordinal);
    if (this.busy) return;
    if (rec.status !== 'predicted') return;
    if (!label) {
      this.lastError = 'choose a label before submitting';
      this.emit();
      return;
    }
    this.busy = true;
    this.lastError = null;
    this.emit();
    try {
      const id = await this.api.submitRecording(rec.blob, label, artery);
      this.replace(asSubmitted(rec, label, artery, id));
    } catch (err) {
      this.lastError = messageOf(err);
    } finally {
      this.busy = false;
      this.emit();
    }
  }

  private mustFind(ordinal: number): SessionRecording {
    const rec = this.recordings.find((r) => r.ordinal === ordinal);
    if (!rec) throw new Error(`no recording with ordinal ${ordinal}`);
    return rec;
  }

  private replace(updated: SessionRecording): void {
    this.recordings = this.recordings.map(
      (r) => (r.ordinal === updated.ordinal ? updated : r));
  }
}

function messageOf(err: unknown): string {
  if (err instanceof Error && err.message) return err.message;
  return 'request failed; check that the service is running';
}
