// Microphone capture. Doppler audio is the signal of interest, so the
// browser's voice processing (echo cancellation, noise suppression, AGC)
// is explicitly disabled; it would eat exactly the sound we want.

export interface CaptureResult {
  samples: Float32Array;
  sampleRateHz: number;
  durationS: number;
}

// Accumulates capture chunks up to a fixed number of samples. Kept free
// of Web Audio types so the auto-stop arithmetic is unit-testable.
export class ClipAccumulator {
  private chunks: Float32Array[] = [];
  private collected = 0;
  readonly targetSamples: number;

  constructor(readonly sampleRateHz: number, targetDurationS = 4) {
    this.targetSamples = Math.round(targetDurationS * sampleRateHz);
  }

  // returns true once the target is reached
  push(chunk: Float32Array): boolean {
    if (this.collected < this.targetSamples) {
      this.chunks.push(chunk.slice());
      this.collected += chunk.length;
    }
    return this.collected >= this.targetSamples;
  }

  result(): CaptureResult {
    const take = Math.min(this.collected, this.targetSamples);
    const samples = new Float32Array(take);
    let at = 0;
    for (const chunk of this.chunks) {
      if (at >= take) break;
      const n = Math.min(chunk.length, take - at);
      samples.set(chunk.subarray(0, n), at);
      at += n;
    }
    return {
      samples,
      sampleRateHz: this.sampleRateHz,
      durationS: take / this.sampleRateHz,
    };
  }
}

export async function recordClip(targetDurationS = 4): Promise<CaptureResult> {
  const stream = await navigator.mediaDevices.getUserMedia({
    audio: {
      channelCount: 1,
      echoCancellation: false,
      noiseSuppression: false,
      autoGainControl: false,
    },
  });
  const ctx = new AudioContext();
  const source = ctx.createMediaStreamSource(stream);
  const processor = ctx.createScriptProcessor(4096, 1, 1);
  const acc = new ClipAccumulator(ctx.sampleRate, targetDurationS);

  return new Promise<CaptureResult>((resolve) => {
    processor.onaudioprocess = (event) => {
      if (acc.push(event.inputBuffer.getChannelData(0))) {
        processor.disconnect();
        source.disconnect();
        stream.getTracks().forEach((t) => t.stop());
        void ctx.close();
        resolve(acc.result());
      }
    };
    source.connect(processor);
    processor.connect(ctx.destination); // required for onaudioprocess to fire
  });
}
