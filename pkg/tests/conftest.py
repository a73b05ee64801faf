"""Shared fixtures: WAV builders, a small training corpus, and the
full benchmark run that the acceptance tests grade.

The benchmark fixture is session-scoped because it costs real training
time; every test that needs a competent model shares the same run.
"""

from __future__ import annotations

import struct
import time
from types import SimpleNamespace

import numpy as np
import pytest

from phasic import (
    DatasetStore,
    SynthParams,
    TrainConfig,
    assign_split,
    build_model,
    evaluate,
    generate_corpus,
    train,
)

# One line per acceptance criterion, printed in the terminal summary so the
# pass/fail verdicts are visible even with output capture on.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_wav(samples, rate=16000, *, channels=1, bits=16, audio_format=1,
             magic=b"RIFF", form=b"WAVE") -> bytes:
    """Hand-built RIFF/WAVE bytes, independent of the package encoder.

    samples: int16 values, already interleaved when channels == 2.
    The header knobs exist so malformed-container tests can lie.
    """
    ints = np.asarray(samples, dtype="<i2")
    payload = ints.tobytes()
    block_align = channels * bits // 8
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        magic, 36 + len(payload), form,
        b"fmt ", 16, audio_format, channels, rate,
        rate * block_align, block_align, bits,
        b"data", len(payload),
    )
    return header + payload


def sine_wav(freq_hz=440.0, rate=16000, duration_s=4.0, amplitude=0.5) -> bytes:
    t = np.arange(int(duration_s * rate)) / rate
    ints = np.round(amplitude * 32767.0 * np.sin(2 * np.pi * freq_hz * t)).astype("<i2")
    return make_wav(ints, rate)


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    """Small balanced corpus with an 80/20 split, for fast dataset/trainer tests."""
    root = tmp_path_factory.mktemp("tiny-corpus")
    manifest = generate_corpus(root, 5, SynthParams(seed=7), noise_range=(0.0, 0.1))
    manifest = assign_split(manifest, train_fraction=0.8, seed=1)
    store = DatasetStore(root)
    store.save_manifest(manifest)
    return SimpleNamespace(root=root, store=store, manifest=manifest)


@pytest.fixture(scope="session")
def tiny_model(tiny_corpus):
    """Two quick epochs at input side 16: enough to exercise every code path."""
    cfg = TrainConfig(epochs=2, batch_size=8, seed=3, input_side=16)
    model = build_model(16, seed=3)
    trained, history = train(model, tiny_corpus.store, tiny_corpus.manifest, cfg)
    return SimpleNamespace(model=trained, history=history, cfg=cfg)


@pytest.fixture(scope="session")
def benchmark(tmp_path_factory):
    """The reference benchmark: 100 clips/class at master seed 42, 80/20 split
    at seed 0, default model trained 10 epochs at seed 0. Wall times recorded.
    """
    root = tmp_path_factory.mktemp("benchmark-corpus")
    t0 = time.perf_counter()
    manifest = generate_corpus(root, 100, SynthParams(seed=42))
    manifest = assign_split(manifest, train_fraction=0.8, seed=0)
    store = DatasetStore(root)
    store.save_manifest(manifest)
    gen_s = time.perf_counter() - t0

    t0 = time.perf_counter()
    model = build_model(64, seed=0)
    model, history = train(model, store, manifest, TrainConfig(epochs=10, seed=0))
    train_s = time.perf_counter() - t0

    cm, metrics = evaluate(model, store, manifest, split="test")
    return SimpleNamespace(root=root, store=store, manifest=manifest,
                           model=model, history=history, cm=cm, metrics=metrics,
                           gen_s=gen_s, train_s=train_s)
