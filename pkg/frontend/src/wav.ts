// PCM-16 mono WAV encoding and header inspection. The backend accepts
// 16-bit PCM at 8-48 kHz, so clips are kept at the capture rate and the
// server does its own resampling.

const HEADER_BYTES = 44;

function writeAscii(view: DataView, offset: number, text: string): void {
  for (let i = 0; i < text.length; i++) {
    view.setUint8(offset + i, text.charCodeAt(i));
  }
}

function readAscii(view: DataView, offset: number, length: number): string {
  let out = '';
  for (let i = 0; i < length; i++) {
    out += String.fromCharCode(view.getUint8(offset + i));
  }
  return out;
}

export function encodeWavPcm16(samples: Float32Array, sampleRateHz: number): ArrayBuffer {
  if (!Number.isInteger(sampleRateHz) || sampleRateHz < 8000 || sampleRateHz > 48000) {
    throw new RangeError(`sample rate ${sampleRateHz} outside the supported 8000..48000`);
  }
  const n = samples.length;
  const buf = new ArrayBuffer(HEADER_BYTES + n * 2);
  const v = new DataView(buf);
  writeAscii(v, 0, 'RIFF');
  v.setUint32(4, 36 + n * 2, true);
  writeAscii(v, 8, 'WAVE');
  writeAscii(v, 12, 'fmt ');
  v.setUint32(16, 16, true);
  v.setUint16(20, 1, true);                 // PCM
  v.setUint16(22, 1, true);                 // mono
  v.setUint32(24, sampleRateHz, true);
  v.setUint32(28, sampleRateHz * 2, true);  // byte rate
  v.setUint16(32, 2, true);                 // block align
  v.setUint16(34, 16, true);
  writeAscii(v, 36, 'data');
  v.setUint32(40, n * 2, true);
  for (let i = 0; i < n; i++) {
    const s = Math.min(1, Math.max(-1, samples[i]));
    v.setInt16(HEADER_BYTES + i * 2, Math.round(s * 32767), true);
  }
  return buf;
}

export interface WavSummary {
  sampleRateHz: number;
  channels: number;
  bitsPerSample: number;
  durationS: number;
}

// Header-only parse, enough to show duration for uploaded files and to
// reject non-WAV uploads before they hit the network.
export function readWavSummary(buf: ArrayBuffer): WavSummary {
  const v = new DataView(buf);
  if (buf.byteLength < HEADER_BYTES) throw new Error('file too small to be a WAV');
  if (readAscii(v, 0, 4) !== 'RIFF' || readAscii(v, 8, 4) !== 'WAVE') {
    throw new Error('not a RIFF/WAVE file');
  }
  let offset = 12;
  let fmt: { channels: number; rate: number; bits: number } | null = null;
  while (offset + 8 <= buf.byteLength) {
    const id = readAscii(v, offset, 4);
    const size = v.getUint32(offset + 4, true);
    if (id === 'fmt ') {
      fmt = {
        channels: v.getUint16(offset + 10, true),
        rate: v.getUint32(offset + 12, true),
        bits: v.getUint16(offset + 22, true),
      };
    } else if (id === 'data') {
      if (!fmt) throw new Error('data chunk before fmt chunk');
      const bytesPerFrame = fmt.channels * (fmt.bits / 8);
      return {
        sampleRateHz: fmt.rate,
        channels: fmt.channels,
        bitsPerSample: fmt.bits,
        durationS: size / bytesPerFrame / fmt.rate,
      };
    }
    offset += 8 + size + (size % 2);
  }
  throw new Error('no data chunk found');
}
