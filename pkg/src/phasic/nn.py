"""Minimal tensor NN engine: conv, pool, dense, softmax, backprop, Adam.

Tensors are plain numpy arrays (row-major). Training arithmetic is float32;
the finite-difference gradient checker promotes everything to float64.
Batched internals carry a leading batch axis; the public single-sample
operations wrap them. Convolutions are 3x3, stride 1, same padding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dsp import Spectrogram
from .errors import NumericError, RangeError, ShapeError, StateError

CE_EPS = 1e-12

LAYER_KINDS = ("conv2d", "maxpool2", "relu", "flatten", "dense")


@dataclass(frozen=True)
class LayerDescriptor:
    kind: str
    out_channels: int = 0  # conv2d only
    out_units: int = 0     # dense only

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ShapeError(f"unknown layer kind {self.kind!r}")


def conv2d(out_channels: int) -> LayerDescriptor:
    return LayerDescriptor("conv2d", out_channels=out_channels)


def maxpool2() -> LayerDescriptor:
    return LayerDescriptor("maxpool2")


def relu() -> LayerDescriptor:
    return LayerDescriptor("relu")


def flatten() -> LayerDescriptor:
    return LayerDescriptor("flatten")


def dense(out_units: int) -> LayerDescriptor:
    return LayerDescriptor("dense", out_units=out_units)


@dataclass
class Model:
    """Ordered layer descriptors plus matching weight tensors."""

    layers: list[LayerDescriptor]
    weights: list[dict[str, np.ndarray]]
    input_side: int
    n_classes: int = 3


@dataclass
class AdamState:
    """First/second moment accumulators plus hyperparameters."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


# ---------------------------------------------------------------------------
# Shape inference and construction
# ---------------------------------------------------------------------------


def layer_shapes(layers: list[LayerDescriptor], input_side: int) -> list[tuple[int, ...]]:
    """Output shape after each layer, starting from (side, side, 1)."""
    shape: tuple[int, ...] = (input_side, input_side, 1)
    out = []
    for layer in layers:
        if layer.kind == "conv2d":
            if len(shape) != 3:
                raise ShapeError("conv2d needs an HxWxC input")
            shape = (shape[0], shape[1], layer.out_channels)
        elif layer.kind == "maxpool2":
            if len(shape) != 3 or shape[0] % 2 or shape[1] % 2:
                raise ShapeError(f"maxpool2 needs even HxW, got {shape}")
            shape = (shape[0] // 2, shape[1] // 2, shape[2])
        elif layer.kind == "flatten":
            shape = (int(np.prod(shape)),)
        elif layer.kind == "dense":
            if len(shape) != 1:
                raise ShapeError("dense needs a flat input")
            shape = (layer.out_units,)
        # relu keeps the shape
        out.append(shape)
    return out


def weight_shapes(layers: list[LayerDescriptor], input_side: int) -> list[dict[str, tuple[int, ...]]]:
    """Per-layer parameter shapes in canonical (kernel/weight, bias) order."""
    shapes = []
    prev: tuple[int, ...] = (input_side, input_side, 1)
    for layer, out_shape in zip(layers, layer_shapes(layers, input_side)):
        if layer.kind == "conv2d":
            shapes.append({"kernel": (3, 3, prev[2], layer.out_channels),
                           "bias": (layer.out_channels,)})
        elif layer.kind == "dense":
            shapes.append({"weight": (prev[0], layer.out_units),
                           "bias": (layer.out_units,)})
        else:
            shapes.append({})
        prev = out_shape
    return shapes


# Conv widths (16, 32) rather than a thinner stack: the discriminative
# feature separating two- from three-phase clips is a faint, thin arc, and
# narrower first layers leave some seeds stuck in a two-class optimum
# within the short default training budget.
def default_layers(conv_channels: tuple[int, ...] = (16, 32),
                   dense_units: tuple[int, ...] = (32,),
                   n_classes: int = 3) -> list[LayerDescriptor]:
    layers: list[LayerDescriptor] = []
    for ch in conv_channels:
        layers += [conv2d(ch), relu(), maxpool2()]
    layers.append(flatten())
    for units in dense_units:
        layers += [dense(units), relu()]
    layers.append(dense(n_classes))
    return layers


def build_model(input_side: int = 64, layers: list[LayerDescriptor] | None = None,
                n_classes: int = 3, seed: int = 0) -> Model:
    """He-uniform conv/dense weights, zero biases, seeded; float32 tensors."""
    if layers is None:
        layers = default_layers(n_classes=n_classes)
    final = layers[-1]
    if final.kind != "dense" or final.out_units != n_classes:
        raise ShapeError("final layer must be dense with n_classes units")
    rng = np.random.default_rng(seed)
    weights = []
    for shapes in weight_shapes(layers, input_side):
        layer_w = {}
        for name, shape in shapes.items():
            if name in ("kernel", "weight"):
                fan_in = int(np.prod(shape[:-1]))
                limit = math.sqrt(6.0 / fan_in)
                layer_w[name] = rng.uniform(-limit, limit, shape).astype(np.float32)
            else:
                layer_w[name] = np.zeros(shape, dtype=np.float32)
        weights.append(layer_w)
    return Model(layers=list(layers), weights=weights,
                 input_side=input_side, n_classes=n_classes)


_PARAM_ORDER = ("kernel", "weight", "bias")


def parameters(model: Model) -> list[np.ndarray]:
    """All parameter tensors in a fixed (layer, kernel-before-bias) order."""
    out = []
    for layer_w in model.weights:
        for name in _PARAM_ORDER:
            if name in layer_w:
                out.append(layer_w[name])
    return out


def set_parameters(model: Model, params: list[np.ndarray]) -> None:
    expected = parameters(model)
    if len(params) != len(expected):
        raise ShapeError(f"expected {len(expected)} parameter tensors, "
                         f"got {len(params)}")
    for have, new in zip(expected, params):
        if have.shape != np.shape(new):
            raise ShapeError(f"parameter shape {np.shape(new)} does not match "
                             f"{have.shape}")
    it = iter(params)
    for layer_w in model.weights:
        for name in _PARAM_ORDER:
            if name in layer_w:
                layer_w[name] = next(it)


def grads_as_list(model: Model, grads: list[dict[str, np.ndarray]]) -> list[np.ndarray]:
    out = []
    for layer_g in grads:
        for name in _PARAM_ORDER:
            if name in layer_g:
                out.append(layer_g[name])
    return out


def copy_model(model: Model, dtype=None) -> Model:
    weights = [{k: np.array(w, dtype=dtype or w.dtype) for k, w in lw.items()}
               for lw in model.weights]
    return Model(layers=list(model.layers), weights=weights,
                 input_side=model.input_side, n_classes=model.n_classes)


# ---------------------------------------------------------------------------
# Layer primitives (batched; leading axis = batch)
# ---------------------------------------------------------------------------


def _im2col(x: np.ndarray) -> np.ndarray:
    """(B,H,W,C) -> (B,H,W,9C) patches for 3x3 same-padding convolution."""
    b, h, w, c = x.shape
    padded = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    cols = np.empty((b, h, w, 9, c), dtype=x.dtype)
    pos = 0
    for dy in range(3):
        for dx in range(3):
            cols[:, :, :, pos, :] = padded[:, dy:dy + h, dx:dx + w, :]
            pos += 1
    return cols.reshape(b, h, w, 9 * c)


def _conv2d_batch(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray):
    b, h, w, c = x.shape
    k = kernel.shape[3]
    cols = _im2col(x)
    out = cols.reshape(b * h * w, 9 * c) @ kernel.reshape(9 * c, k) + bias
    return out.reshape(b, h, w, k), cols


def _conv2d_backward(dout: np.ndarray, cols: np.ndarray, kernel: np.ndarray):
    b, h, w, k = dout.shape
    c = kernel.shape[2]
    flat_dout = dout.reshape(b * h * w, k)
    dkernel = (cols.reshape(b * h * w, 9 * c).T @ flat_dout).reshape(kernel.shape)
    dbias = flat_dout.sum(axis=0)
    dcols = (flat_dout @ kernel.reshape(9 * c, k).T).reshape(b, h, w, 9, c)
    dpadded = np.zeros((b, h + 2, w + 2, c), dtype=dout.dtype)
    pos = 0
    for dy in range(3):
        for dx in range(3):
            dpadded[:, dy:dy + h, dx:dx + w, :] += dcols[:, :, :, pos, :]
            pos += 1
    return dpadded[:, 1:h + 1, 1:w + 1, :], dkernel, dbias


def _maxpool2_batch(x: np.ndarray):
    b, h, w, c = x.shape
    win = (x.reshape(b, h // 2, 2, w // 2, 2, c)
            .transpose(0, 1, 3, 5, 2, 4)
            .reshape(b, h // 2, w // 2, c, 4))
    idx = win.argmax(axis=-1)
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return out, idx


def _maxpool2_backward(dout: np.ndarray, idx: np.ndarray, in_shape):
    b, h, w, c = in_shape
    dwin = np.zeros((b, h // 2, w // 2, c, 4), dtype=dout.dtype)
    np.put_along_axis(dwin, idx[..., None], dout[..., None], axis=-1)
    return (dwin.reshape(b, h // 2, w // 2, c, 2, 2)
                .transpose(0, 1, 4, 2, 5, 3)
                .reshape(b, h, w, c))


def _softmax_batch(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# Public single-sample operations
# ---------------------------------------------------------------------------


def conv2d_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """3x3 stride-1 same-padding convolution of an HxWxC input."""
    x = np.asarray(x)
    if x.ndim != 3:
        raise ShapeError(f"expected HxWxC input, got shape {x.shape}")
    if kernel.shape[:2] != (3, 3) or kernel.shape[2] != x.shape[2]:
        raise ShapeError(f"kernel {kernel.shape} incompatible with input {x.shape}")
    if bias.shape != (kernel.shape[3],):
        raise ShapeError(f"bias {bias.shape} incompatible with kernel {kernel.shape}")
    out, _ = _conv2d_batch(x[None], kernel, bias)
    return out[0]


def maxpool2_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """2x2 non-overlapping max pooling; returns (pooled, window argmax)."""
    x = np.asarray(x)
    if x.ndim != 3 or x.shape[0] % 2 or x.shape[1] % 2:
        raise ShapeError(f"maxpool2 needs even HxWxC input, got {x.shape}")
    out, idx = _maxpool2_batch(x[None])
    return out[0], idx[0]


def dense_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """out = x @ W + b for a flat input of length N and W of shape NxM."""
    x = np.asarray(x)
    if x.ndim != 1 or weights.ndim != 2 or x.shape[0] != weights.shape[0]:
        raise ShapeError(f"dense shapes incompatible: x {x.shape}, W {weights.shape}")
    if bias.shape != (weights.shape[1],):
        raise ShapeError(f"bias {bias.shape} incompatible with W {weights.shape}")
    return x @ weights + bias


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-shifted stable softmax; preserves argmax, sums to 1."""
    z = np.asarray(logits, dtype=np.float64)
    if np.isnan(z).any():
        raise NumericError("softmax received NaN logits")
    return _softmax_batch(z)


def sparse_ce_loss(probs: np.ndarray, true_class: int) -> float:
    """-log(probs[true_class] + eps); expects softmax output.

    Clamped at zero: the eps that guards log(0) would otherwise make a
    fully confident correct prediction score -log(1 + eps) < 0.
    """
    probs = np.asarray(probs)
    if not (0 <= true_class < probs.shape[-1]):
        raise RangeError(f"class {true_class} out of range for {probs.shape[-1]} classes")
    return max(0.0, float(-np.log(probs[true_class] + CE_EPS)))


# ---------------------------------------------------------------------------
# Model forward / backward
# ---------------------------------------------------------------------------


INPUT_WINDOW_DB = 40.0


def scale_input(spec: Spectrogram) -> np.ndarray:
    """Map the top 40 dB below each clip's peak onto [0, 1], mean-centered.

    Referencing the clip's own maximum keeps the flow arcs at the same
    contrast no matter how much broadband noise the recording carries, and
    the fixed window clips the noise floor away entirely. Mean-centering
    removes the remaining all-positive offset, which otherwise conditions
    the first conv layer's gradients badly.
    """
    v = spec.values
    x = np.clip((v - v.max() + INPUT_WINDOW_DB) / INPUT_WINDOW_DB, 0.0, 1.0)
    return x - x.mean()


def _weights_token(model: Model) -> tuple[int, ...]:
    return tuple(id(w) for lw in model.weights for w in lw.values())


def forward_batch(model: Model, x: np.ndarray):
    """x: (B, side, side, 1) in the model's dtype. Returns (probs, cache)."""
    caches: list[dict] = []
    cur = x
    for layer, layer_w in zip(model.layers, model.weights):
        if layer.kind == "conv2d":
            cur, cols = _conv2d_batch(cur, layer_w["kernel"], layer_w["bias"])
            caches.append({"cols": cols})
        elif layer.kind == "relu":
            caches.append({"x": cur})
            cur = np.maximum(cur, 0)
        elif layer.kind == "maxpool2":
            if cur.shape[1] % 2 or cur.shape[2] % 2:
                raise ShapeError(f"maxpool2 needs even dims, got {cur.shape}")
            out, idx = _maxpool2_batch(cur)
            caches.append({"idx": idx, "in_shape": cur.shape})
            cur = out
        elif layer.kind == "flatten":
            caches.append({"in_shape": cur.shape})
            cur = cur.reshape(cur.shape[0], -1)
        elif layer.kind == "dense":
            caches.append({"x": cur})
            cur = cur @ layer_w["weight"] + layer_w["bias"]
    probs = _softmax_batch(cur.astype(np.float64)).astype(cur.dtype)
    return probs, {"layers": caches, "probs": probs,
                   "token": _weights_token(model)}


def backward_batch(model: Model, cache: dict, labels: np.ndarray):
    """Mean-loss gradients over the batch; returns per-layer grad dicts."""
    probs = cache["probs"]
    b = probs.shape[0]
    d = probs.copy()
    d[np.arange(b), labels] -= 1.0
    d /= b

    grads: list[dict[str, np.ndarray]] = [dict() for _ in model.layers]
    for i in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[i]
        layer_cache = cache["layers"][i]
        if layer.kind == "dense":
            x = layer_cache["x"]
            grads[i]["weight"] = x.T @ d
            grads[i]["bias"] = d.sum(axis=0)
            d = d @ model.weights[i]["weight"].T
        elif layer.kind == "relu":
            d = d * (layer_cache["x"] > 0)
        elif layer.kind == "flatten":
            d = d.reshape(layer_cache["in_shape"])
        elif layer.kind == "maxpool2":
            d = _maxpool2_backward(d, layer_cache["idx"], layer_cache["in_shape"])
        elif layer.kind == "conv2d":
            d, dk, db = _conv2d_backward(d, layer_cache["cols"], model.weights[i]["kernel"])
            grads[i]["kernel"] = dk
            grads[i]["bias"] = db
    return grads


def _as_input_array(model: Model, x) -> np.ndarray:
    if isinstance(x, Spectrogram):
        arr = scale_input(x)
    else:
        arr = np.asarray(x)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    side = model.input_side
    if arr.shape != (side, side, 1):
        raise ShapeError(f"expected ({side}, {side}, 1) input, got {arr.shape}")
    dtype = parameters(model)[0].dtype
    return arr.astype(dtype)


def forward(model: Model, x) -> tuple[np.ndarray, dict]:
    """Run the layer stack on one spectrogram; returns (probs, cache)."""
    arr = _as_input_array(model, x)
    probs, cache = forward_batch(model, arr[None])
    return probs[0], cache


def backward(model: Model, cache: dict, true_class: int) -> list[dict[str, np.ndarray]]:
    """Gradients of the single-sample CE loss wrt every parameter."""
    if cache.get("token") != _weights_token(model):
        raise StateError("cache does not match this model's current weights")
    if not (0 <= true_class < model.n_classes):
        raise RangeError(f"class {true_class} out of range")
    return backward_batch(model, cache, np.array([true_class]))


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


def adam_init(params: list[np.ndarray], lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    return AdamState(m=[np.zeros_like(p) for p in params],
                     v=[np.zeros_like(p) for p in params],
                     t=0, lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(params: list[np.ndarray], grads: list[np.ndarray],
              state: AdamState) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam update; returns fresh params and state."""
    if not (len(params) == len(grads) == len(state.m)):
        raise ShapeError("params/grads/state length mismatch")
    for p, g, m in zip(params, grads, state.m):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeError(f"shape mismatch: param {p.shape}, grad {g.shape}, moment {m.shape}")
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t
    new_m, new_v, new_p = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m2 = b1 * m + (1.0 - b1) * g
        v2 = b2 * v + (1.0 - b2) * (g * g)
        m_hat = m2 / bc1
        v_hat = v2 / bc2
        new_m.append(m2)
        new_v.append(v2)
        new_p.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return new_p, AdamState(m=new_m, v=new_v, t=t, lr=state.lr,
                            beta1=b1, beta2=b2, eps=state.eps)


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


def _loss_and_pattern(model: Model, x: np.ndarray, true_class: int):
    """Loss plus a byte signature of the relu sign and pool argmax patterns."""
    probs, cache = forward_batch(model, x[None])
    parts = []
    for layer, layer_cache in zip(model.layers, cache["layers"]):
        if layer.kind == "relu":
            parts.append((layer_cache["x"] > 0).tobytes())
        elif layer.kind == "maxpool2":
            parts.append(layer_cache["idx"].tobytes())
    loss = float(-np.log(probs[0, true_class] + CE_EPS))
    return loss, b"".join(parts)


def gradient_check(model: Model, x, true_class: int,
                   samples_per_tensor: int = 30, h: float = 1e-4,
                   seed: int = 0) -> float:
    """Max relative error between backprop and central finite differences.

    Runs on a float64 copy of the model so the h=1e-4 stencil is not
    dominated by rounding. Meant for tiny models (input_side <= 8).

    A sampled coordinate is skipped when the two stencil points land on
    different relu sign or pool argmax patterns: the loss has a kink
    between them and the central difference stops being a derivative
    estimate there. Overlapping conv patches make near-tied pool windows
    common, so such coordinates show up at unremarkable seeds.
    """
    m64 = copy_model(model, dtype=np.float64)
    if isinstance(x, Spectrogram):
        arr = scale_input(x)
    else:
        arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    arr = arr.astype(np.float64)

    probs, cache = forward_batch(m64, arr[None])
    analytic = grads_as_list(m64, backward_batch(m64, cache, np.array([true_class])))
    params = parameters(m64)

    rng = np.random.default_rng(seed)
    worst = 0.0
    for p, g in zip(params, analytic):
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        n = flat_p.size
        picks = np.arange(n) if n <= samples_per_tensor else np.sort(
            rng.choice(n, size=samples_per_tensor, replace=False))
        for i in picks:
            orig = flat_p[i]
            flat_p[i] = orig + h
            lo_plus, sig_plus = _loss_and_pattern(m64, arr, true_class)
            flat_p[i] = orig - h
            lo_minus, sig_minus = _loss_and_pattern(m64, arr, true_class)
            flat_p[i] = orig
            if sig_plus != sig_minus:
                continue
            numeric = (lo_plus - lo_minus) / (2.0 * h)
            denom = max(abs(flat_g[i]), abs(numeric), 1e-8)
            worst = max(worst, abs(flat_g[i] - numeric) / denom)
    return worst
