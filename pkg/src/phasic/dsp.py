"""Audio ingestion and the sound-to-spectrogram pipeline.

Everything here is a pure function over immutable inputs: decode a WAV,
resample, window, transform, and render a fixed-size log-magnitude
spectrogram. The FFT is a self-contained radix-2 implementation so the
whole numeric path is auditable end to end.
"""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, RangeError, TooShortError, UnsupportedError

CANONICAL_RATE_HZ = 16000
CLIP_DURATION_S = 4.0
DEFAULT_FLOOR_DB = -80.0
DEFAULT_SIDE = 64
MAG_EPS = 1e-10

MIN_RATE_HZ = 8000
MAX_RATE_HZ = 48000

WINDOW_KINDS = ("hann", "rectangular")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass
class AudioClip:
    """Mono PCM samples in [-1, 1] at a known sample rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        self.sample_rate_hz = int(self.sample_rate_hz)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


@dataclass(frozen=True)
class StftParams:
    """Analysis frame length (power of two), hop, and window type."""

    frame_len: int = 512
    hop: int = 128
    window_kind: str = "hann"

    def __post_init__(self):
        n = self.frame_len
        if n < 1 or (n & (n - 1)) != 0:
            raise RangeError(f"frame_len must be a power of two, got {n}")
        if not (0 < self.hop <= n):
            raise RangeError(f"hop must be in (0, frame_len], got {self.hop}")
        if self.window_kind not in WINDOW_KINDS:
            raise RangeError(f"unknown window kind {self.window_kind!r}")


@dataclass
class Spectrogram:
    """Log-magnitude (dB) matrix; rows = frequency bins, cols = time frames."""

    values: np.ndarray
    params: StftParams = field(default_factory=StftParams)
    floor_db: float = DEFAULT_FLOOR_DB

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


# ---------------------------------------------------------------------------
# WAV container
# ---------------------------------------------------------------------------


def decode_wav(data: bytes) -> AudioClip:
    """Parse RIFF/WAVE PCM-16 bytes into a mono AudioClip.

    Stereo is averaged to mono; integer samples are scaled by 1/32768.
    """
    if len(data) < 12:
        raise FormatError("not a RIFF/WAVE file: too short")
    if data[0:4] != b"RIFF":
        raise FormatError(f"bad container magic {data[0:4]!r}, expected b'RIFF'")
    if data[8:12] != b"WAVE":
        raise FormatError(f"bad RIFF form type {data[8:12]!r}, expected b'WAVE'")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        tag = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8:pos + 8 + size]
        if len(body) < size:
            raise FormatError(f"truncated {tag!r} chunk")
        if tag == b"fmt ":
            if size < 16:
                raise FormatError("fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif tag == b"data":
            payload = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt is None:
        raise FormatError("missing fmt chunk")
    if payload is None:
        raise FormatError("missing data chunk")

    audio_format, channels, rate, _byte_rate, _block_align, bits = fmt
    if audio_format != 1:
        raise UnsupportedError(f"only PCM (format 1) supported, got format {audio_format}")
    if bits != 16:
        raise UnsupportedError(f"only 16-bit samples supported, got {bits}-bit")
    if channels not in (1, 2):
        raise UnsupportedError(f"only mono/stereo supported, got {channels} channels")
    if not (MIN_RATE_HZ <= rate <= MAX_RATE_HZ):
        raise UnsupportedError(f"sample rate {rate} outside [{MIN_RATE_HZ}, {MAX_RATE_HZ}] Hz")

    frame_bytes = 2 * channels
    usable = len(payload) - (len(payload) % frame_bytes)
    ints = np.frombuffer(payload[:usable], dtype="<i2").astype(np.float64)
    if channels == 2:
        ints = ints.reshape(-1, 2).mean(axis=1)
    return AudioClip(samples=ints / 32768.0, sample_rate_hz=rate)


def encode_wav(clip: AudioClip) -> bytes:
    """Serialize a clip as mono PCM-16 little-endian WAV bytes."""
    samples = np.clip(clip.samples, -1.0, 1.0)
    ints = np.floor(samples * 32767.0 + 0.5).astype("<i2")
    payload = ints.tobytes()
    rate = clip.sample_rate_hz
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, 1, 1, rate, rate * 2, 2, 16,
        b"data", len(payload),
    )
    return header + payload


# ---------------------------------------------------------------------------
# Signal conditioning
# ---------------------------------------------------------------------------


def resample(clip: AudioClip, target_rate_hz: int) -> AudioClip:
    """Linear-interpolation resampling to target_rate_hz."""
    if not (MIN_RATE_HZ <= target_rate_hz <= MAX_RATE_HZ):
        raise RangeError(f"target rate {target_rate_hz} outside [{MIN_RATE_HZ}, {MAX_RATE_HZ}] Hz")
    src = clip.sample_rate_hz
    if target_rate_hz == src:
        return AudioClip(clip.samples.copy(), src)
    n_out = _round_half_up(len(clip.samples) * target_rate_hz / src)
    if n_out == 0:
        return AudioClip(np.zeros(0), target_rate_hz)
    positions = np.arange(n_out) * (src / target_rate_hz)
    out = np.interp(positions, np.arange(len(clip.samples)), clip.samples)
    return AudioClip(out, target_rate_hz)


def peak_normalize(clip: AudioClip) -> AudioClip:
    """Scale so max |sample| = 1; a zero signal is returned unchanged."""
    peak = np.max(np.abs(clip.samples)) if len(clip.samples) else 0.0
    if peak == 0.0:
        return AudioClip(clip.samples.copy(), clip.sample_rate_hz)
    return AudioClip(clip.samples / peak, clip.sample_rate_hz)


def make_window(kind: str, n: int) -> np.ndarray:
    """Analysis window of length n: all-ones or symmetric hann."""
    if n < 1:
        raise RangeError(f"window length must be >= 1, got {n}")
    if kind == "rectangular":
        return np.ones(n)
    if kind == "hann":
        if n == 1:
            return np.ones(1)
        k = np.arange(n)
        return 0.5 * (1.0 - np.cos(2.0 * np.pi * k / (n - 1)))
    raise RangeError(f"unknown window kind {kind!r}")


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------


def fft(frame: np.ndarray) -> np.ndarray:
    """Radix-2 DFT along the last axis; length must be a power of two.

    X[k] = sum_n x[n] * exp(-2j*pi*k*n/N), identical to the naive DFT.
    """
    x = np.asarray(frame, dtype=np.complex128)
    n = x.shape[-1]
    if n < 1 or (n & (n - 1)) != 0:
        raise RangeError(f"fft length must be a power of two, got {n}")
    if n == 1:
        return x.copy()

    # bit-reversal permutation
    stages = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for _ in range(stages):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    y = x[..., rev]

    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp((-2j * np.pi / size) * np.arange(half))
        y = y.reshape(y.shape[:-1] + (n // size, size))
        even = y[..., :half]
        odd = y[..., half:] * twiddle
        y = np.concatenate((even + odd, even - odd), axis=-1)
        y = y.reshape(y.shape[:-2] + (n,))
        size *= 2
    return y


def stft(clip: AudioClip, params: StftParams) -> np.ndarray:
    """Windowed short-time transform; column t covers samples [t*hop, t*hop+frame_len)."""
    n = len(clip.samples)
    frame_len, hop = params.frame_len, params.hop
    if n < frame_len:
        raise TooShortError(f"clip of {n} samples shorter than one {frame_len}-sample frame")
    n_frames = 1 + (n - frame_len) // hop
    frames = np.lib.stride_tricks.sliding_window_view(clip.samples, frame_len)[::hop][:n_frames]
    window = make_window(params.window_kind, frame_len)
    return fft(frames * window).T


def to_spectrogram(stft_matrix: np.ndarray, params: StftParams,
                   floor_db: float = DEFAULT_FLOOR_DB) -> Spectrogram:
    """Keep bins 0..frame_len/2 and convert magnitude to floored dB."""
    m = np.asarray(stft_matrix)
    if m.size == 0:
        raise RangeError("empty STFT matrix")
    half = m.shape[0] // 2 + 1
    mag = np.abs(m[:half, :])
    values = np.maximum(20.0 * np.log10(mag + MAG_EPS), floor_db)
    return Spectrogram(values=values, params=params, floor_db=floor_db)


def resize_bilinear(spec: Spectrogram, out_rows: int, out_cols: int) -> Spectrogram:
    """Bilinear resize with edge clamping (corner-aligned sampling)."""
    if out_rows < 1 or out_cols < 1:
        raise RangeError(f"target shape ({out_rows}, {out_cols}) must be positive")
    v = spec.values
    in_rows, in_cols = v.shape

    def coords(n_in: int, n_out: int) -> np.ndarray:
        if n_out == 1:
            return np.full(1, (n_in - 1) / 2.0)
        return np.arange(n_out) * ((n_in - 1) / (n_out - 1))

    rc = coords(in_rows, out_rows)
    cc = coords(in_cols, out_cols)
    r0 = np.floor(rc).astype(np.intp)
    c0 = np.floor(cc).astype(np.intp)
    r1 = np.minimum(r0 + 1, in_rows - 1)
    c1 = np.minimum(c0 + 1, in_cols - 1)
    fr = (rc - r0)[:, None]
    fc = (cc - c0)[None, :]

    top = v[np.ix_(r0, c0)] * (1.0 - fc) + v[np.ix_(r0, c1)] * fc
    bottom = v[np.ix_(r1, c0)] * (1.0 - fc) + v[np.ix_(r1, c1)] * fc
    out = top * (1.0 - fr) + bottom * fr
    return Spectrogram(values=out, params=spec.params, floor_db=spec.floor_db)


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------


def fix_length(clip: AudioClip, duration_s: float = CLIP_DURATION_S) -> AudioClip:
    """Center-crop longer clips; zero-pad shorter ones to the target duration."""
    target = _round_half_up(duration_s * clip.sample_rate_hz)
    n = len(clip.samples)
    if n == target:
        return clip
    if n > target:
        start = (n - target) // 2
        return AudioClip(clip.samples[start:start + target].copy(), clip.sample_rate_hz)
    out = np.zeros(target)
    out[:n] = clip.samples
    return AudioClip(out, clip.sample_rate_hz)


def clip_to_input(clip: AudioClip, params: StftParams | None = None,
                  side: int = DEFAULT_SIDE, *,
                  canonical_rate_hz: int = CANONICAL_RATE_HZ,
                  floor_db: float = DEFAULT_FLOOR_DB) -> Spectrogram:
    """Full deterministic pipeline: resample, normalize, STFT, dB, resize to side x side."""
    params = params or StftParams()
    c = resample(clip, canonical_rate_hz)
    if len(c.samples) < params.frame_len:
        raise TooShortError(f"clip of {len(c.samples)} samples shorter than one frame")
    c = fix_length(c)
    c = peak_normalize(c)
    spec = to_spectrogram(stft(c, params), params, floor_db)
    return resize_bilinear(spec, side, side)


# ---------------------------------------------------------------------------
# PNG export
# ---------------------------------------------------------------------------


def _png_chunk(tag: bytes, payload: bytes) -> bytes:
    return (struct.pack(">I", len(payload)) + tag + payload
            + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF))


def spectrogram_to_png(spec: Spectrogram) -> bytes:
    """Render as 8-bit grayscale PNG, lowest frequency at the bottom edge."""
    v = spec.values
    scaled = 255.0 * (v - spec.floor_db) / (0.0 - spec.floor_db)
    img = np.clip(np.floor(scaled + 0.5), 0, 255).astype(np.uint8)
    img = img[::-1, :]  # matrix row 0 (lowest freq) goes to the bottom row
    height, width = img.shape

    raw = b"".join(b"\x00" + img[r].tobytes() for r in range(height))
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 0, 0, 0, 0)
    return (b"\x89PNG\r\n\x1a\n"
            + _png_chunk(b"IHDR", ihdr)
            + _png_chunk(b"IDAT", zlib.compress(raw, 9))
            + _png_chunk(b"IEND", b""))
