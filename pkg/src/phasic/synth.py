"""Synthetic Doppler audio with mono-, bi-, or triphasic velocity envelopes.

Each class is realized as a sum of Gaussian lobes over the cardiac period;
the audible signal is a frequency-modulated tone whose instantaneous
frequency and amplitude both track the envelope, plus optional white noise
and mains hum. Generation is a pure function of (label, params).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .dsp import AudioClip
from .dataset import (
    DatasetEntry,
    DatasetManifest,
    DatasetStore,
    MANIFEST_VERSION,
    PhasicityLabel,
)
from .errors import RangeError

DEFAULT_F_MIN_HZ = 200.0
DEFAULT_F_MAX_HZ = 3000.0
DEFAULT_HUM_FREQ_HZ = 60.0

# Per-clip jitter applied by generate_corpus so the classifier has to learn
# envelope shape, not cardiac period or noise floor.
HEART_RATE_JITTER_BPM = (55.0, 95.0)
NOISE_JITTER = (0.0, 0.15)


@dataclass(frozen=True)
class SynthParams:
    """Knobs for one generated clip; seed makes the clip reproducible."""

    heart_rate_bpm: float = 72.0
    duration_s: float = 4.0
    sample_rate_hz: int = 16000
    noise_level: float = 0.0
    hum_level: float = 0.0
    hum_freq_hz: float = DEFAULT_HUM_FREQ_HZ
    f_min_hz: float = DEFAULT_F_MIN_HZ
    f_max_hz: float = DEFAULT_F_MAX_HZ
    seed: int = 0

    def __post_init__(self):
        if not (40.0 <= self.heart_rate_bpm <= 140.0):
            raise RangeError(f"heart rate {self.heart_rate_bpm} outside [40, 140] bpm")
        if not (0.0 < self.f_min_hz < self.f_max_hz < self.sample_rate_hz / 2):
            raise RangeError("need 0 < f_min < f_max < Nyquist")
        if self.duration_s <= 60.0 / self.heart_rate_bpm:
            raise RangeError("duration must exceed one cardiac period")
        if not (0.0 <= self.noise_level <= 1.0):
            raise RangeError(f"noise_level {self.noise_level} outside [0, 1]")
        if not (0.0 <= self.hum_level <= 1.0):
            raise RangeError(f"hum_level {self.hum_level} outside [0, 1]")
        if not (0 <= self.seed < 2 ** 64):
            raise RangeError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class EnvelopeSpec:
    """Gaussian lobes as (center, width, amplitude), fractions of the period."""

    lobes: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        if not (1 <= len(self.lobes) <= 3):
            raise RangeError(f"lobe count must be 1..3, got {len(self.lobes)}")
        centers = [c for c, _, _ in self.lobes]
        if any(b <= a for a, b in zip(centers, centers[1:])):
            raise RangeError("lobe centers must be strictly increasing")


# Lobe tables per class: forward systolic peak, early-diastolic reversal,
# late-diastolic forward rebound. Monophasic is one broad damped lobe.
_ENVELOPES = {
    PhasicityLabel.Monophasic: EnvelopeSpec(lobes=(
        (0.18, 0.14, 0.6),
    )),
    PhasicityLabel.Biphasic: EnvelopeSpec(lobes=(
        (0.12, 0.05, 1.0),
        (0.28, 0.05, -0.35),
    )),
    PhasicityLabel.Triphasic: EnvelopeSpec(lobes=(
        (0.12, 0.05, 1.0),
        (0.28, 0.05, -0.35),
        (0.45, 0.06, 0.20),
    )),
}


def envelope_for(label: PhasicityLabel) -> EnvelopeSpec:
    """Lobe layout for a class; lobe count equals the class phase count."""
    return _ENVELOPES[PhasicityLabel(label)]


def velocity_envelope(spec: EnvelopeSpec, params: SynthParams) -> np.ndarray:
    """Periodic velocity v(t) sampled over the clip duration.

    v(t) = sum_i a_i * exp(-((t mod T) - c_i*T)^2 / (2 (w_i*T)^2)),
    T = 60 / heart_rate.
    """
    n = int(round(params.duration_s * params.sample_rate_hz))
    t = np.arange(n) / params.sample_rate_hz
    period = 60.0 / params.heart_rate_bpm
    phase = np.mod(t, period)
    v = np.zeros(n)
    for center, width, amplitude in spec.lobes:
        v += amplitude * np.exp(-((phase - center * period) ** 2)
                                / (2.0 * (width * period) ** 2))
    return v


def synthesize_clip(label: PhasicityLabel, params: SynthParams) -> AudioClip:
    """FM tone riding the class envelope, plus seeded noise and hum.

    Instantaneous frequency sweeps [f_min, f_max] with |v|/max|v|; the tone
    amplitude is |v|. White-noise RMS and hum amplitude are both relative to
    the envelope peak. The result is peak-normalized.
    """
    spec = envelope_for(label)
    v = velocity_envelope(spec, params)
    speed = np.abs(v)
    peak = speed.max()

    freq = params.f_min_hz + (params.f_max_hz - params.f_min_hz) * speed / peak
    phase = 2.0 * np.pi * np.cumsum(freq) / params.sample_rate_hz
    signal = speed * np.sin(phase)

    if params.noise_level > 0.0:
        rng = np.random.default_rng(params.seed)
        signal = signal + params.noise_level * peak * rng.standard_normal(len(signal))
    if params.hum_level > 0.0:
        t = np.arange(len(signal)) / params.sample_rate_hz
        signal = signal + params.hum_level * peak * np.sin(2.0 * np.pi * params.hum_freq_hz * t)

    signal = signal / np.max(np.abs(signal))
    return AudioClip(samples=signal, sample_rate_hz=params.sample_rate_hz)


def generate_corpus(root: Path | str, n_per_class: int, params: SynthParams,
                    heart_rate_range: tuple[float, float] = HEART_RATE_JITTER_BPM,
                    noise_range: tuple[float, float] = NOISE_JITTER) -> DatasetManifest:
    """Write n_per_class labeled clips per class under root and persist a manifest.

    Per-clip seeds are master_seed XOR clip_index, so the whole corpus is a
    pure function of (n_per_class, params): same inputs, identical bytes.
    """
    if n_per_class < 1:
        raise RangeError(f"n_per_class must be >= 1, got {n_per_class}")
    store = DatasetStore(root)
    entries = []
    index = 0
    for label in PhasicityLabel:
        for j in range(n_per_class):
            clip_seed = params.seed ^ index
            jitter = np.random.default_rng(clip_seed)
            clip_params = replace(
                params,
                heart_rate_bpm=float(jitter.uniform(*heart_rate_range)),
                noise_level=float(jitter.uniform(*noise_range)),
                seed=clip_seed,
            )
            clip = synthesize_clip(label, clip_params)
            entry_id = f"{label.name.lower()}_{j:04d}_{clip_seed:016x}"
            store.write_wav(entry_id, clip)
            entries.append(DatasetEntry(
                id=entry_id,
                wav_path=f"wav/{entry_id}.wav",
                label=label,
                artery=None,
                split="unassigned",
                source="synthetic",
            ))
            index += 1
    manifest = DatasetManifest(entries=entries, version=MANIFEST_VERSION)
    store.save_manifest(manifest)
    return manifest
