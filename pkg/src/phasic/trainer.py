"""Training orchestration, accuracy/F1 metrics, history export, model files.

The training loop is deterministic for a fixed seed: one RNG drives the
per-epoch augmentation draws and the shuffle, batches are walked in order,
and gradients reduce in a fixed order.
"""

from __future__ import annotations

import json
import os
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .dataset import (AugmentConfig, DatasetManifest, DatasetStore,
                      PhasicityLabel, load_training_pairs, random_zoom)
from .dsp import DEFAULT_SIDE, Spectrogram, StftParams
from .errors import (CorruptError, DataError, EmptyError, FormatError,
                     IoError, RangeError, VersionError)
from .nn import Model

MODEL_MAGIC = b"PHZM"
MODEL_FORMAT_VERSION = 1

HISTORY_HEADER = "epoch,train_loss,train_acc,test_loss,test_acc"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 16
    lr: float = 1e-3
    seed: int = 0
    train_fraction: float = 0.8
    augment: AugmentConfig | None = None
    input_side: int = DEFAULT_SIDE
    stft: StftParams = field(default_factory=StftParams)

    def __post_init__(self):
        if self.epochs < 1:
            raise RangeError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise RangeError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr <= 0.0:
            raise RangeError(f"lr must be positive, got {self.lr}")
        if not (0.0 < self.train_fraction < 1.0):
            raise RangeError(f"train_fraction {self.train_fraction} outside (0, 1)")


@dataclass
class ConfusionMatrix:
    """counts[true, predicted]; 3x3 for the phasicity classes."""

    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    per_class_precision: tuple[float, ...]
    per_class_recall: tuple[float, ...]
    per_class_f1: tuple[float, ...]
    macro_f1: float
    micro_f1: float


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    test_loss: float
    test_accuracy: float


@dataclass
class TrainingHistory:
    records: list[EpochRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def confusion_from_predictions(true_labels, predicted_labels, n_classes: int = 3) -> ConfusionMatrix:
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    for t, p in zip(true_labels, predicted_labels):
        t, p = int(t), int(p)
        if not (0 <= t < n_classes and 0 <= p < n_classes):
            raise RangeError(f"label pair ({t}, {p}) outside [0, {n_classes})")
        counts[t, p] += 1
    return ConfusionMatrix(counts=counts)


def accuracy_from_confusion(cm: ConfusionMatrix) -> float:
    """Fraction of diagonal mass: per-sample correctness over all samples."""
    total = cm.total
    if total == 0:
        raise EmptyError("confusion matrix has no samples")
    return float(np.trace(cm.counts)) / total


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def f1_from_confusion(cm: ConfusionMatrix) -> Metrics:
    """Per-class one-vs-rest precision/recall/F1 plus macro and micro means.

    F1_c = TP / (TP + (FP + FN)/2), with 0/0 defined as 0. Micro pools
    TP/FP/FN across classes, which collapses to accuracy for single-label
    multiclass problems.
    """
    counts = cm.counts
    total = cm.total
    if total == 0:
        raise EmptyError("confusion matrix has no samples")
    k = counts.shape[0]
    precision, recall, f1 = [], [], []
    pooled_tp = pooled_fp = pooled_fn = 0
    for c in range(k):
        tp = float(counts[c, c])
        fp = float(counts[:, c].sum() - counts[c, c])
        fn = float(counts[c, :].sum() - counts[c, c])
        precision.append(_safe_div(tp, tp + fp))
        recall.append(_safe_div(tp, tp + fn))
        f1.append(_safe_div(tp, tp + 0.5 * (fp + fn)))
        pooled_tp += tp
        pooled_fp += fp
        pooled_fn += fn
    micro = _safe_div(pooled_tp, pooled_tp + 0.5 * (pooled_fp + pooled_fn))
    return Metrics(accuracy=accuracy_from_confusion(cm),
                   per_class_precision=tuple(precision),
                   per_class_recall=tuple(recall),
                   per_class_f1=tuple(f1),
                   macro_f1=float(np.mean(f1)),
                   micro_f1=micro)


# ---------------------------------------------------------------------------
# Batched inference helpers
# ---------------------------------------------------------------------------


def _scaled_inputs(specs: list[Spectrogram], dtype=np.float32) -> np.ndarray:
    """Stack spectrograms as (N, side, side, 1) arrays scaled to [0, 1]."""
    arrs = [nn.scale_input(s).astype(dtype)[:, :, None] for s in specs]
    return np.stack(arrs, axis=0)


def predict_proba(model: Model, x: np.ndarray, chunk: int = 64) -> np.ndarray:
    """Class probabilities for a stacked (N, side, side, 1) input block."""
    outs = []
    for start in range(0, x.shape[0], chunk):
        probs, _ = nn.forward_batch(model, x[start:start + chunk])
        outs.append(probs)
    return np.concatenate(outs, axis=0)


def _loss_and_accuracy(model: Model, x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    if x.shape[0] == 0:
        return float("nan"), float("nan")
    probs = predict_proba(model, x)
    picked = probs[np.arange(len(y)), y]
    loss = float(np.mean(-np.log(picked.astype(np.float64) + nn.CE_EPS)))
    acc = float(np.mean(probs.argmax(axis=1) == y))
    return loss, acc


# ---------------------------------------------------------------------------
# Training and evaluation
# ---------------------------------------------------------------------------


def train(model: Model, store: DatasetStore, manifest: DatasetManifest,
          cfg: TrainConfig) -> tuple[Model, TrainingHistory]:
    """Mini-batch Adam over the train split; per-epoch metrics on both splits.

    Zoom augmentation (when configured) is re-drawn every epoch; history
    rows are measured on the clean spectrograms after the epoch's updates.
    """
    train_pairs = load_training_pairs(store, manifest, "train", cfg.stft, cfg.input_side)
    test_pairs = load_training_pairs(store, manifest, "test", cfg.stft, cfg.input_side)
    if not train_pairs:
        raise DataError("train split is empty")
    present = {int(label) for _, label in train_pairs}
    missing = [l.name for l in PhasicityLabel if int(l) not in present]
    if missing:
        raise DataError(f"train split lacks classes: {', '.join(missing)}")

    train_specs = [spec for spec, _ in train_pairs]
    y_train = np.array([int(label) for _, label in train_pairs], dtype=np.int64)
    x_train = _scaled_inputs(train_specs)
    if test_pairs:
        x_test = _scaled_inputs([spec for spec, _ in test_pairs])
        y_test = np.array([int(label) for _, label in test_pairs], dtype=np.int64)
    else:
        x_test = np.zeros((0,) + x_train.shape[1:], dtype=x_train.dtype)
        y_test = np.zeros((0,), dtype=np.int64)

    n = len(train_specs)
    params = nn.parameters(model)
    state = nn.adam_init(params, lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)
    history = TrainingHistory()

    for epoch in range(cfg.epochs):
        if cfg.augment is not None:
            draws = rng.random(n)
            x_epoch = _scaled_inputs([
                random_zoom(spec, cfg.augment, float(draws[i]))
                for i, spec in enumerate(train_specs)])
        else:
            x_epoch = x_train
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            probs, cache = nn.forward_batch(model, x_epoch[idx])
            grads = nn.backward_batch(model, cache, y_train[idx])
            params, state = nn.adam_step(params, nn.grads_as_list(model, grads), state)
            nn.set_parameters(model, params)

        train_loss, train_acc = _loss_and_accuracy(model, x_train, y_train)
        test_loss, test_acc = _loss_and_accuracy(model, x_test, y_test)
        history.records.append(EpochRecord(epoch=epoch + 1,
                                           train_loss=train_loss,
                                           train_accuracy=train_acc,
                                           test_loss=test_loss,
                                           test_accuracy=test_acc))
    return model, history


def evaluate(model: Model, store: DatasetStore, manifest: DatasetManifest,
             split: str = "test", stft: StftParams | None = None,
             ) -> tuple[ConfusionMatrix, Metrics]:
    """Argmax predictions over a split, never augmented, model untouched."""
    stft = stft or StftParams()
    pairs = load_training_pairs(store, manifest, split, stft, model.input_side)
    if not pairs:
        raise EmptyError(f"split {split!r} has no entries")
    x = _scaled_inputs([spec for spec, _ in pairs])
    y = np.array([int(label) for _, label in pairs], dtype=np.int64)
    predicted = predict_proba(model, x).argmax(axis=1)
    cm = confusion_from_predictions(y, predicted, n_classes=model.n_classes)
    return cm, f1_from_confusion(cm)


def export_history(history: TrainingHistory, path: Path | str) -> None:
    """CSV with one row per epoch; floats use shortest-roundtrip repr."""
    if not history.records:
        raise EmptyError("history has no records")
    lines = [HISTORY_HEADER]
    for r in history.records:
        lines.append(f"{r.epoch},{r.train_loss!r},{r.train_accuracy!r},"
                     f"{r.test_loss!r},{r.test_accuracy!r}")
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write history to {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Model serialization
# ---------------------------------------------------------------------------
# Layout: "PHZM" | u32 format version | u32 descriptor length | descriptor
# JSON (utf-8) | float32 LE weight blobs in declaration order | u32 CRC32 of
# everything before it.


def _descriptor(model: Model) -> dict:
    layers = []
    for layer in model.layers:
        entry: dict = {"kind": layer.kind}
        if layer.kind == "conv2d":
            entry["out_channels"] = layer.out_channels
        elif layer.kind == "dense":
            entry["out_units"] = layer.out_units
        layers.append(entry)
    return {"input_side": model.input_side, "n_classes": model.n_classes,
            "layers": layers}


def save_model(model: Model, path: Path | str) -> None:
    desc = json.dumps(_descriptor(model), separators=(",", ":")).encode("utf-8")
    blob = bytearray()
    blob += MODEL_MAGIC
    blob += struct.pack("<I", MODEL_FORMAT_VERSION)
    blob += struct.pack("<I", len(desc))
    blob += desc
    for tensor in nn.parameters(model):
        blob += np.ascontiguousarray(tensor, dtype="<f4").tobytes()
    blob += struct.pack("<I", zlib.crc32(bytes(blob)) & 0xFFFFFFFF)
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    try:
        tmp.write_bytes(bytes(blob))
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write model to {path}: {exc}") from exc


def load_model(path: Path | str) -> Model:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read model from {path}: {exc}") from exc
    if data[:4] != MODEL_MAGIC:
        raise FormatError("not a model file: bad magic")
    if len(data) < 12:
        raise CorruptError("model file truncated in header")
    version = struct.unpack_from("<I", data, 4)[0]
    if version != MODEL_FORMAT_VERSION:
        raise VersionError(f"unsupported model format version {version}")
    desc_len = struct.unpack_from("<I", data, 8)[0]
    body_start = 12 + desc_len
    if len(data) < body_start + 4:
        raise CorruptError("model file truncated in descriptor")
    stored_crc = struct.unpack_from("<I", data, len(data) - 4)[0]
    if zlib.crc32(data[:-4]) & 0xFFFFFFFF != stored_crc:
        raise CorruptError("model file checksum mismatch")
    try:
        desc = json.loads(data[12:body_start].decode("utf-8"))
        layers = []
        for entry in desc["layers"]:
            kind = entry["kind"]
            if kind == "conv2d":
                layers.append(nn.conv2d(int(entry["out_channels"])))
            elif kind == "dense":
                layers.append(nn.dense(int(entry["out_units"])))
            elif kind in ("relu", "maxpool2", "flatten"):
                layers.append(nn.LayerDescriptor(kind))
            else:
                raise CorruptError(f"unknown layer kind {kind!r}")
        input_side = int(desc["input_side"])
        n_classes = int(desc["n_classes"])
    except (KeyError, ValueError, TypeError, UnicodeDecodeError) as exc:
        raise CorruptError(f"model descriptor unreadable: {exc}") from exc

    offset = body_start
    weights = []
    for shapes in nn.weight_shapes(layers, input_side):
        layer_w = {}
        for name, shape in shapes.items():
            count = int(np.prod(shape))
            end = offset + 4 * count
            if end > len(data) - 4:
                raise CorruptError("model file truncated in weights")
            layer_w[name] = (np.frombuffer(data, dtype="<f4", count=count,
                                           offset=offset)
                             .reshape(shape).astype(np.float32))
            offset = end
        weights.append(layer_w)
    if offset != len(data) - 4:
        raise CorruptError("model file has trailing bytes after weights")
    return Model(layers=layers, weights=weights,
                 input_side=input_side, n_classes=n_classes)


def model_fingerprint(path: Path | str) -> str:
    """Short stable id for a model file: format version plus stored CRC."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read model from {path}: {exc}") from exc
    if len(data) < 4:
        raise CorruptError("model file too short")
    crc = struct.unpack_from("<I", data, len(data) - 4)[0]
    return f"phzm{MODEL_FORMAT_VERSION}-{crc:08x}"
