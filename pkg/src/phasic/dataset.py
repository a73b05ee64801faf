"""Labeled recording store, stratified splits, and zoom augmentation.

The on-disk layout is {root}/manifest.json plus {root}/wav/{id}.wav. The
manifest is rewritten atomically; reads are freely concurrent.
"""

from __future__ import annotations

import json
import math
import os
import secrets
from dataclasses import dataclass, replace
from enum import IntEnum
from pathlib import Path

import numpy as np

from . import dsp
from .dsp import AudioClip, Spectrogram, StftParams
from .errors import EmptyError, FormatError, IoError, RangeError, ShapeError

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"

SPLITS = ("train", "test", "unassigned")
SOURCES = ("clinical", "synthetic", "ui_upload")


class PhasicityLabel(IntEnum):
    """Waveform phasicity class; integer codes are a serialization contract."""

    Monophasic = 0
    Biphasic = 1
    Triphasic = 2


def parse_label(name: str) -> PhasicityLabel:
    for label in PhasicityLabel:
        if label.name.lower() == name.strip().lower():
            return label
    raise RangeError(f"unknown phasicity label {name!r}")


@dataclass
class DatasetEntry:
    id: str
    wav_path: str
    label: PhasicityLabel
    artery: str | None = None
    split: str = "unassigned"
    source: str = "synthetic"


@dataclass
class DatasetManifest:
    entries: list[DatasetEntry]
    version: int = MANIFEST_VERSION

    def by_split(self, split: str) -> list[DatasetEntry]:
        return [e for e in self.entries if e.split == split]


@dataclass(frozen=True)
class AugmentConfig:
    """Randomized zoom: fraction 0.20 means factors down to 0.8 (and up to 1.2 in in_out mode)."""

    zoom_fraction: float = 0.20
    mode: str = "in_only"
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.zoom_fraction <= 0.5):
            raise RangeError(f"zoom_fraction {self.zoom_fraction} outside [0, 0.5]")
        if self.mode not in ("in_only", "in_out"):
            raise RangeError(f"unknown zoom mode {self.mode!r}")


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def manifest_to_json(manifest: DatasetManifest) -> str:
    doc = {
        "version": manifest.version,
        "entries": [
            {
                "id": e.id,
                "wav_path": e.wav_path,
                "label": e.label.name,
                "artery": e.artery,
                "split": e.split,
                "source": e.source,
            }
            for e in manifest.entries
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def manifest_from_json(text: str) -> DatasetManifest:
    try:
        doc = json.loads(text)
        entries = [
            DatasetEntry(
                id=item["id"],
                wav_path=item["wav_path"],
                label=parse_label(item["label"]),
                artery=item["artery"],
                split=item["split"],
                source=item["source"],
            )
            for item in doc["entries"]
        ]
        version = int(doc["version"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed manifest: {exc}") from exc
    return DatasetManifest(entries=entries, version=version)


class DatasetStore:
    """Owns one dataset root directory; serializes manifest writes."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        try:
            (self.root / "wav").mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise IoError(f"cannot create dataset root {self.root}: {exc}") from exc

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_NAME

    def save_manifest(self, manifest: DatasetManifest) -> None:
        tmp = self.manifest_path.with_suffix(".tmp")
        try:
            tmp.write_text(manifest_to_json(manifest), encoding="utf-8")
            os.replace(tmp, self.manifest_path)
        except OSError as exc:
            raise IoError(f"cannot write manifest: {exc}") from exc

    def load_manifest(self) -> DatasetManifest:
        try:
            text = self.manifest_path.read_text(encoding="utf-8")
        except FileNotFoundError:
            # a fresh store has no manifest yet; that is an empty dataset,
            # not an I/O failure
            return DatasetManifest(entries=[])
        except OSError as exc:
            raise IoError(f"cannot read manifest: {exc}") from exc
        return manifest_from_json(text)

    def write_wav(self, entry_id: str, clip: AudioClip) -> Path:
        path = self.root / "wav" / f"{entry_id}.wav"
        try:
            path.write_bytes(dsp.encode_wav(clip))
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc}") from exc
        return path

    def read_clip(self, entry: DatasetEntry) -> AudioClip:
        path = self.root / entry.wav_path
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise IoError(f"entry {entry.id}: cannot read {path}: {exc}") from exc
        return dsp.decode_wav(data)

    def add_entry(self, manifest: DatasetManifest, clip: AudioClip,
                  label: PhasicityLabel, artery: str | None = None,
                  source: str = "ui_upload") -> DatasetEntry:
        """Persist a clip, append an unassigned entry, and rewrite the manifest."""
        existing = {e.id for e in manifest.entries}
        entry_id = secrets.token_hex(8)
        while entry_id in existing:
            entry_id = secrets.token_hex(8)
        self.write_wav(entry_id, clip)
        entry = DatasetEntry(
            id=entry_id,
            wav_path=f"wav/{entry_id}.wav",
            label=PhasicityLabel(label),
            artery=artery,
            split="unassigned",
            source=source,
        )
        manifest.entries.append(entry)
        self.save_manifest(manifest)
        return entry


# ---------------------------------------------------------------------------
# Splitting and loading
# ---------------------------------------------------------------------------


def assign_split(manifest: DatasetManifest, train_fraction: float,
                 seed: int) -> DatasetManifest:
    """Stratified per-class shuffle split; deterministic for a fixed seed."""
    if not (0.0 < train_fraction < 1.0):
        raise RangeError(f"train_fraction {train_fraction} outside (0, 1)")
    if not manifest.entries:
        raise EmptyError("cannot split an empty manifest")
    rng = np.random.default_rng(seed)
    split_of = {}
    for label in PhasicityLabel:
        idxs = [i for i, e in enumerate(manifest.entries) if e.label == label]
        order = rng.permutation(len(idxs))
        n_train = int(math.floor(train_fraction * len(idxs) + 0.5))
        for rank, pos in enumerate(order):
            split_of[idxs[pos]] = "train" if rank < n_train else "test"
    entries = [replace(e, split=split_of[i]) for i, e in enumerate(manifest.entries)]
    return DatasetManifest(entries=entries, version=manifest.version)


def random_zoom(spec: Spectrogram, cfg: AugmentConfig, draw: float) -> Spectrogram:
    """Zoom about the center by a factor mapped from draw in [0, 1].

    in_only maps draw to [1 - zf, 1]; in_out to [1 - zf, 1 + zf]. Factors
    below 1 center-crop then resize back; above 1 pad with the dB floor then
    resize back. Output shape always equals input shape.
    """
    v = spec.values
    if v.shape[0] != v.shape[1]:
        raise ShapeError(f"random_zoom needs a square input, got {v.shape}")
    side = v.shape[0]
    zf = cfg.zoom_fraction
    if cfg.mode == "in_only":
        z = (1.0 - zf) + zf * draw
    else:
        z = (1.0 - zf) + 2.0 * zf * draw

    new_side = int(math.floor(z * side + 0.5))
    if new_side == side:
        return Spectrogram(values=v.copy(), params=spec.params, floor_db=spec.floor_db)
    if new_side < side:
        start = (side - new_side) // 2
        cropped = v[start:start + new_side, start:start + new_side]
        inner = Spectrogram(values=cropped, params=spec.params, floor_db=spec.floor_db)
    else:
        pad_total = new_side - side
        before = pad_total // 2
        after = pad_total - before
        padded = np.pad(v, ((before, after), (before, after)),
                        constant_values=spec.floor_db)
        inner = Spectrogram(values=padded, params=spec.params, floor_db=spec.floor_db)
    return dsp.resize_bilinear(inner, side, side)


def load_training_pairs(store: DatasetStore, manifest: DatasetManifest, split: str,
                        stft_params: StftParams, side: int,
                        augment: AugmentConfig | None = None,
                        ) -> list[tuple[Spectrogram, PhasicityLabel]]:
    """Decode, transform, and (train only) augment every entry of a split.

    Entries come back in manifest order; augmentation draws are seeded, so
    the whole sequence is deterministic.
    """
    entries = manifest.by_split(split)
    rng = np.random.default_rng(augment.seed) if augment is not None else None
    pairs = []
    for entry in entries:
        clip = store.read_clip(entry)
        spec = dsp.clip_to_input(clip, stft_params, side)
        if augment is not None and split == "train":
            spec = random_zoom(spec, augment, float(rng.random()))
        pairs.append((spec, entry.label))
    return pairs
