"""From-scratch neural network kernels on float64 numpy arrays.

Provides the 1-D convolution and dense layers used by the ablation feature
selector, the LSTM cell and classifier, binary cross-entropy, RMSProp, a
deterministic training loop, a finite-difference gradient checker, and a
binary parameter format with bit-exact round-trips.

Parameters live in an ordered name -> array dict; gradients mirror it
key-for-key. All forward/backward math is batched over rows.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .ingest import DatasetTable

BCE_CLAMP = 1e-12
GRADIENT_CHECK_MAX_PARAMS = 5000

MAGIC = b"MGNN"
FORMAT_VERSION = 1

_ACTIVATIONS = ("relu", "sigmoid", "tanh", "linear")


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        return sigmoid(z)
    if kind == "tanh":
        return np.tanh(z)
    if kind == "linear":
        return z
    raise ValueError(f"unknown activation {kind!r}")


def _activate_grad(a: np.ndarray, z: np.ndarray, kind: str) -> np.ndarray:
    # Derivative expressed through the cached output where possible.
    if kind == "relu":
        return (z > 0).astype(np.float64)
    if kind == "sigmoid":
        return a * (1.0 - a)
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "linear":
        return np.ones_like(a)
    raise ValueError(f"unknown activation {kind!r}")


# --------------------------------------------------------------------------
# Model structure


@dataclass(frozen=True)
class LayerSpec:
    """One architecture element: conv1d / dense / lstm."""

    kind: str
    filters: int = 0
    kernel: int = 0
    units: int = 0
    hidden: int = 0
    input_dim: int = 1
    activation: str = "linear"

    def to_json_dict(self) -> dict:
        if self.kind == "conv1d":
            return {"kind": "conv1d", "filters": self.filters,
                    "kernel": self.kernel, "activation": self.activation}
        if self.kind == "dense":
            return {"kind": "dense", "units": self.units,
                    "activation": self.activation}
        if self.kind == "lstm":
            return {"kind": "lstm", "hidden": self.hidden,
                    "input_dim": self.input_dim}
        raise ValueError(f"unknown layer kind {self.kind!r}")

    @classmethod
    def from_json_dict(cls, d: dict) -> "LayerSpec":
        kind = d["kind"]
        if kind == "conv1d":
            return cls(kind="conv1d", filters=int(d["filters"]),
                       kernel=int(d["kernel"]),
                       activation=d.get("activation", "relu"))
        if kind == "dense":
            return cls(kind="dense", units=int(d["units"]),
                       activation=d.get("activation", "linear"))
        if kind == "lstm":
            return cls(kind="lstm", hidden=int(d["hidden"]),
                       input_dim=int(d.get("input_dim", 1)))
        raise ValueError(f"unknown layer kind {kind!r}")


@dataclass(frozen=True)
class ModelSpec:
    """Ordered layer list plus the expected input width; the final layer must
    emit a single sigmoid probability."""

    input_width: int
    layers: tuple[LayerSpec, ...]

    def __post_init__(self):
        if self.input_width < 1:
            raise ValueError("input_width must be >= 1")
        if not self.layers:
            raise ValueError("model needs at least one layer")
        width = self.input_width
        for i, layer in enumerate(self.layers):
            width = _output_width(layer, width, i)
        last = self.layers[-1]
        if last.kind != "dense" or last.units != 1 or last.activation != "sigmoid":
            raise ValueError("final layer must be dense(1, sigmoid)")

    def to_json_dict(self) -> dict:
        return {"input_width": self.input_width,
                "layers": [l.to_json_dict() for l in self.layers]}

    @classmethod
    def from_json_dict(cls, d: dict) -> "ModelSpec":
        return cls(input_width=int(d["input_width"]),
                   layers=tuple(LayerSpec.from_json_dict(x) for x in d["layers"]))


def _output_width(layer: LayerSpec, width: int, index: int) -> int:
    if layer.kind == "conv1d":
        if layer.kernel < 1 or layer.filters < 1:
            raise ValueError(f"layer {index}: conv1d needs kernel, filters >= 1")
        if width < layer.kernel:
            raise ValueError(
                f"layer {index}: kernel {layer.kernel} wider than input {width}"
            )
        return (width - layer.kernel + 1) * layer.filters
    if layer.kind == "dense":
        if layer.units < 1:
            raise ValueError(f"layer {index}: dense needs units >= 1")
        if layer.activation not in _ACTIVATIONS:
            raise ValueError(f"layer {index}: unknown activation")
        return layer.units
    if layer.kind == "lstm":
        if layer.hidden < 1 or layer.input_dim < 1:
            raise ValueError(f"layer {index}: lstm needs hidden, input_dim >= 1")
        if width % layer.input_dim != 0:
            raise ValueError(
                f"layer {index}: width {width} not divisible by "
                f"input_dim {layer.input_dim}"
            )
        return layer.hidden
    raise ValueError(f"unknown layer kind {layer.kind!r}")


def lstm_classifier_spec(input_width: int, hidden: int = 64) -> ModelSpec:
    """Default classifier: features as a scalar sequence into one LSTM."""
    return ModelSpec(
        input_width=input_width,
        layers=(
            LayerSpec(kind="lstm", hidden=hidden, input_dim=1),
            LayerSpec(kind="dense", units=1, activation="sigmoid"),
        ),
    )


def selector_cnn_spec(input_width: int) -> ModelSpec:
    """Feature-selection network: small conv over the feature vector so every
    input position has identifiable first-layer weights."""
    return ModelSpec(
        input_width=input_width,
        layers=(
            LayerSpec(kind="conv1d", filters=16, kernel=3, activation="relu"),
            LayerSpec(kind="dense", units=32, activation="relu"),
            LayerSpec(kind="dense", units=1, activation="sigmoid"),
        ),
    )


_LSTM_PARTS = ("Wi", "Ui", "bi", "Wf", "Uf", "bf", "Wo", "Uo", "bo", "Wc", "Uc", "bc")


def _param_plan(spec: ModelSpec) -> list[tuple[str, tuple[int, ...], int, int]]:
    """(name, shape, fan_in, fan_out) per tensor, in deterministic order."""
    plan = []
    width = spec.input_width
    for i, layer in enumerate(spec.layers):
        prefix = f"layer{i}"
        if layer.kind == "conv1d":
            plan.append((f"{prefix}.W", (layer.filters, layer.kernel),
                         layer.kernel, layer.filters))
            plan.append((f"{prefix}.b", (layer.filters,), 0, 0))
        elif layer.kind == "dense":
            plan.append((f"{prefix}.W", (layer.units, width), width, layer.units))
            plan.append((f"{prefix}.b", (layer.units,), 0, 0))
        elif layer.kind == "lstm":
            d, h = layer.input_dim, layer.hidden
            for part in _LSTM_PARTS:
                if part.startswith("W"):
                    plan.append((f"{prefix}.{part}", (h, d), d, h))
                elif part.startswith("U"):
                    plan.append((f"{prefix}.{part}", (h, h), h, h))
                else:
                    plan.append((f"{prefix}.{part}", (h,), 0, 0))
        width = _output_width(layer, width, i)
    return plan


def init_params(spec: ModelSpec, seed: int) -> dict[str, np.ndarray]:
    """Seeded Glorot-uniform weights, zero biases, in plan order."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape, fan_in, fan_out in _param_plan(spec):
        if len(shape) == 1:
            params[name] = np.zeros(shape)
        else:
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            params[name] = rng.uniform(-bound, bound, size=shape)
    return params


@dataclass
class Model:
    """A spec, its parameter tensors, and the input ablation mask."""

    spec: ModelSpec
    params: dict[str, np.ndarray]
    input_mask: np.ndarray | None = None

    def __post_init__(self):
        if self.input_mask is None:
            self.input_mask = np.ones(self.spec.input_width)
        self.input_mask = np.asarray(self.input_mask, dtype=np.float64)
        if self.input_mask.shape != (self.spec.input_width,):
            raise ValueError("input mask length must equal input width")

    def copy(self) -> "Model":
        return Model(
            spec=self.spec,
            params={k: v.copy() for k, v in self.params.items()},
            input_mask=self.input_mask.copy(),
        )


def build_model(spec: ModelSpec, seed: int) -> Model:
    return Model(spec=spec, params=init_params(spec, seed))


# --------------------------------------------------------------------------
# LSTM cell (single-vector view used by the cell-level operations)


@dataclass(frozen=True)
class LstmCell:
    """All gate parameters for one cell: W* (h x d), U* (h x h), b* (h)."""

    Wi: np.ndarray
    Ui: np.ndarray
    bi: np.ndarray
    Wf: np.ndarray
    Uf: np.ndarray
    bf: np.ndarray
    Wo: np.ndarray
    Uo: np.ndarray
    bo: np.ndarray
    Wc: np.ndarray
    Uc: np.ndarray
    bc: np.ndarray

    def __post_init__(self):
        h, d = self.Wi.shape
        for name in ("Wi", "Wf", "Wo", "Wc"):
            if getattr(self, name).shape != (h, d):
                raise ValueError(f"{name} must be {h}x{d}")
        for name in ("Ui", "Uf", "Uo", "Uc"):
            if getattr(self, name).shape != (h, h):
                raise ValueError(f"{name} must be {h}x{h}")
        for name in ("bi", "bf", "bo", "bc"):
            if getattr(self, name).shape != (h,):
                raise ValueError(f"{name} must have length {h}")

    @property
    def input_size(self) -> int:
        return self.Wi.shape[1]

    @property
    def hidden_size(self) -> int:
        return self.Wi.shape[0]


@dataclass(frozen=True)
class LstmState:
    h: np.ndarray
    c: np.ndarray


def zero_state(hidden_size: int) -> LstmState:
    return LstmState(h=np.zeros(hidden_size), c=np.zeros(hidden_size))


def _lstm_step(cell: LstmCell, x, h_prev, c_prev):
    """One batched gate update; returns the new state and the gate cache."""
    i = sigmoid(x @ cell.Wi.T + h_prev @ cell.Ui.T + cell.bi)
    f = sigmoid(x @ cell.Wf.T + h_prev @ cell.Uf.T + cell.bf)
    o = sigmoid(x @ cell.Wo.T + h_prev @ cell.Uo.T + cell.bo)
    g = np.tanh(x @ cell.Wc.T + h_prev @ cell.Uc.T + cell.bc)
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (x, h_prev, c_prev, i, f, o, g, c, tc)


def lstm_cell_forward(x_t, prev: LstmState, cell: LstmCell) -> LstmState:
    """Single time-step update for one input vector."""
    x = np.asarray(x_t, dtype=np.float64)
    if x.shape != (cell.input_size,):
        raise ValueError(f"input must have length {cell.input_size}")
    if prev.h.shape != (cell.hidden_size,) or prev.c.shape != (cell.hidden_size,):
        raise ValueError(f"state vectors must have length {cell.hidden_size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(prev.h))
            and np.all(np.isfinite(prev.c))):
        raise ValueError("non-finite input to LSTM cell")
    h, c, _ = _lstm_step(cell, x[None, :], prev.h[None, :], prev.c[None, :])
    return LstmState(h=h[0], c=c[0])


def lstm_forward(sequence, cell: LstmCell) -> LstmState:
    """Fold the cell over a sequence of input vectors from the zero state."""
    seq = [np.asarray(x, dtype=np.float64) for x in sequence]
    if not seq:
        raise ValueError("sequence must be non-empty")
    state = zero_state(cell.hidden_size)
    for x in seq:
        state = lstm_cell_forward(x, state, cell)
    return state


def _cell_from_params(params: dict[str, np.ndarray], prefix: str) -> LstmCell:
    return LstmCell(**{part: params[f"{prefix}.{part}"] for part in _LSTM_PARTS})


# --------------------------------------------------------------------------
# Whole-model forward / backward


def _forward_layers(model: Model, x: np.ndarray):
    """Run all layers, returning per-row probabilities and backward caches."""
    caches = []
    out = x * model.input_mask
    caches.append(("mask", None))
    width = model.spec.input_width
    for i, layer in enumerate(model.spec.layers):
        prefix = f"layer{i}"
        if layer.kind == "dense":
            w = model.params[f"{prefix}.W"]
            b = model.params[f"{prefix}.b"]
            z = out @ w.T + b
            a = _activate(z, layer.activation)
            caches.append(("dense", (prefix, layer, out, z, a)))
            out = a
        elif layer.kind == "conv1d":
            w = model.params[f"{prefix}.W"]
            b = model.params[f"{prefix}.b"]
            windows = np.lib.stride_tricks.sliding_window_view(out, layer.kernel, axis=1)
            z = windows @ w.T + b  # (B, T, F)
            a = _activate(z, layer.activation)
            caches.append(("conv1d", (prefix, layer, out, windows, z, a)))
            out = a.reshape(a.shape[0], -1)
        elif layer.kind == "lstm":
            cell = _cell_from_params(model.params, prefix)
            batch = out.shape[0]
            t_steps = width // layer.input_dim
            seq = out.reshape(batch, t_steps, layer.input_dim)
            h = np.zeros((batch, layer.hidden))
            c = np.zeros((batch, layer.hidden))
            steps = []
            for t in range(t_steps):
                h, c, cache = _lstm_step(cell, seq[:, t, :], h, c)
                steps.append(cache)
            caches.append(("lstm", (prefix, layer, t_steps, steps)))
            out = h
        width = _output_width(layer, width, i)
    return out[:, 0], caches


def model_forward(model: Model, batch) -> np.ndarray:
    """Probability of the positive class for every row of the batch."""
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.spec.input_width:
        raise ValueError(
            f"batch must be 2-D with width {model.spec.input_width}"
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite values in batch")
    probs, _ = _forward_layers(model, x)
    return probs


def bce_loss(probabilities, labels) -> float:
    """Mean binary cross-entropy with probabilities clamped away from 0/1."""
    p = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.shape != y.shape:
        raise ValueError("probabilities and labels must have equal length")
    p = np.clip(p, BCE_CLAMP, 1.0 - BCE_CLAMP)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))


def _backward_layers(model: Model, caches, probs, labels):
    """Gradient of mean BCE w.r.t. every parameter (fused sigmoid+BCE at the
    output, standard chain rule elsewhere, BPTT through the LSTM)."""
    grads = {name: np.zeros_like(arr) for name, arr in model.params.items()}
    batch = probs.shape[0]
    # d(loss)/d(final logit): (p - y) / B
    dout = ((probs - labels) / batch)[:, None]
    skip_activation = True
    for kind, cache in reversed(caches):
        if kind == "mask":
            break
        if kind == "dense":
            prefix, layer, x_in, z, a = cache
            if skip_activation:
                dz = dout
                skip_activation = False
            else:
                dz = dout * _activate_grad(a, z, layer.activation)
            grads[f"{prefix}.W"] += dz.T @ x_in
            grads[f"{prefix}.b"] += dz.sum(axis=0)
            dout = dz @ model.params[f"{prefix}.W"]
        elif kind == "conv1d":
            prefix, layer, x_in, windows, z, a = cache
            da = dout.reshape(a.shape)
            dz = da * _activate_grad(a, z, layer.activation)
            grads[f"{prefix}.W"] += np.einsum("btf,btk->fk", dz, windows)
            grads[f"{prefix}.b"] += dz.sum(axis=(0, 1))
            w = model.params[f"{prefix}.W"]
            dx = np.zeros_like(x_in)
            t_len = dz.shape[1]
            for j in range(layer.kernel):
                dx[:, j:j + t_len] += dz @ w[:, j]
            dout = dx
        elif kind == "lstm":
            prefix, layer, t_steps, steps = cache
            cell = _cell_from_params(model.params, prefix)
            dh = dout
            dc = np.zeros_like(dh)
            dx_seq = np.zeros((batch, t_steps, layer.input_dim))
            for t in range(t_steps - 1, -1, -1):
                x_t, h_prev, c_prev, i, f, o, g, c, tc = steps[t]
                do = dh * tc
                dc = dc + dh * o * (1.0 - tc * tc)
                di = dc * g
                df = dc * c_prev
                dg = dc * i
                dzi = di * i * (1.0 - i)
                dzf = df * f * (1.0 - f)
                dzo = do * o * (1.0 - o)
                dzc = dg * (1.0 - g * g)
                grads[f"{prefix}.Wi"] += dzi.T @ x_t
                grads[f"{prefix}.Ui"] += dzi.T @ h_prev
                grads[f"{prefix}.bi"] += dzi.sum(axis=0)
                grads[f"{prefix}.Wf"] += dzf.T @ x_t
                grads[f"{prefix}.Uf"] += dzf.T @ h_prev
                grads[f"{prefix}.bf"] += dzf.sum(axis=0)
                grads[f"{prefix}.Wo"] += dzo.T @ x_t
                grads[f"{prefix}.Uo"] += dzo.T @ h_prev
                grads[f"{prefix}.bo"] += dzo.sum(axis=0)
                grads[f"{prefix}.Wc"] += dzc.T @ x_t
                grads[f"{prefix}.Uc"] += dzc.T @ h_prev
                grads[f"{prefix}.bc"] += dzc.sum(axis=0)
                dx_seq[:, t, :] = (dzi @ cell.Wi + dzf @ cell.Wf
                                   + dzo @ cell.Wo + dzc @ cell.Wc)
                dh = (dzi @ cell.Ui + dzf @ cell.Uf
                      + dzo @ cell.Uo + dzc @ cell.Uc)
                dc = dc * f
            dout = dx_seq.reshape(batch, -1)
        else:
            raise AssertionError(f"unknown cache kind {kind!r}")
    return grads


def backward(model: Model, batch, labels) -> dict[str, np.ndarray]:
    """Gradients of the mean BCE loss over the batch, one per parameter."""
    x = np.asarray(batch, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.spec.input_width:
        raise ValueError(f"batch must be 2-D with width {model.spec.input_width}")
    if y.shape != (x.shape[0],):
        raise ValueError("labels length must match batch")
    probs, caches = _forward_layers(model, x)
    return _backward_layers(model, caches, probs, y)


# --------------------------------------------------------------------------
# Optimizer and training


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 6
    batch_size: int = 64
    learning_rate: float = 1e-3
    rmsprop_decay: float = 0.9
    rmsprop_epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 < self.rmsprop_decay < 1.0:
            raise ValueError("rmsprop_decay must be in (0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.rmsprop_epsilon <= 0:
            raise ValueError("rmsprop_epsilon must be positive")


def rmsprop_init(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(arr) for name, arr in params.items()}


def rmsprop_step(params, grads, state, config: TrainConfig):
    """s <- rho*s + (1-rho)*g^2; theta <- theta - lr*g/sqrt(s+eps)."""
    if set(params) != set(grads) or set(params) != set(state):
        raise ValueError("params, grads and state must share keys")
    rho = config.rmsprop_decay
    lr = config.learning_rate
    eps = config.rmsprop_epsilon
    new_params = {}
    new_state = {}
    for name in params:
        if params[name].shape != grads[name].shape:
            raise ValueError(f"gradient shape mismatch for {name!r}")
        s = rho * state[name] + (1.0 - rho) * grads[name] * grads[name]
        new_state[name] = s
        new_params[name] = params[name] - lr * grads[name] / np.sqrt(s + eps)
    return new_params, new_state


def train(spec: ModelSpec, table: DatasetTable, config: TrainConfig):
    """Mini-batch RMSProp training, reproducible for a fixed seed.

    Returns the trained model and a per-epoch history of mean training loss
    and end-of-epoch training accuracy. The last partial batch is trained on.
    """
    if table.n_cols != spec.input_width:
        raise ValueError("table width does not match model input width")
    if len(np.unique(table.labels)) < 2:
        warnings.warn("training table contains a single class", stacklevel=2)

    rng = np.random.default_rng(config.seed)
    model = Model(spec=spec, params=init_params(spec, config.seed))
    state = rmsprop_init(model.params)
    x_all = table.features
    y_all = table.labels.astype(np.float64)
    n = table.n_rows

    history = []
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            xb = x_all[idx]
            yb = y_all[idx]
            probs, caches = _forward_layers(model, xb)
            loss_sum += bce_loss(probs, yb) * idx.size
            grads = _backward_layers(model, caches, probs, yb)
            model.params, state = rmsprop_step(model.params, grads, state, config)
        probs = model_forward(model, x_all)
        acc = float(np.mean((probs >= 0.5) == (y_all == 1.0)))
        history.append({"epoch": epoch + 1, "loss": loss_sum / n, "accuracy": acc})
    return model, history


def gradient_check(model: Model, batch, labels, epsilon: float = 1e-5) -> float:
    """Max relative error between backprop and central finite differences."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    n_params = sum(arr.size for arr in model.params.values())
    if n_params > GRADIENT_CHECK_MAX_PARAMS:
        raise ValueError(
            f"model has {n_params} parameters; gradient_check caps at "
            f"{GRADIENT_CHECK_MAX_PARAMS}"
        )
    x = np.asarray(batch, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    analytic = backward(model, x, y)
    worst = 0.0
    work = model.copy()
    for name, arr in work.params.items():
        ga_flat = analytic[name].ravel()
        for j in range(arr.size):
            orig = arr.flat[j]
            arr.flat[j] = orig + epsilon
            up = bce_loss(model_forward(work, x), y)
            arr.flat[j] = orig - epsilon
            down = bce_loss(model_forward(work, x), y)
            arr.flat[j] = orig
            numeric = (up - down) / (2.0 * epsilon)
            err = abs(ga_flat[j] - numeric) / max(1e-8, abs(ga_flat[j]) + abs(numeric))
            worst = max(worst, err)
    return worst


# --------------------------------------------------------------------------
# Parameter serialization (magic "MGNN", version, per-tensor records)


def save_tensors(path, tensors: dict[str, np.ndarray]) -> None:
    """Write name/shape/float64-data records; bit-exact on round-trip."""
    p = Path(path)
    with open(p, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        for name, arr in tensors.items():
            data = np.ascontiguousarray(arr, dtype=np.float64)
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", data.ndim))
            for extent in data.shape:
                fh.write(struct.pack("<Q", extent))
            fh.write(data.astype("<f8", copy=False).tobytes(order="C"))


def load_tensors(path) -> dict[str, np.ndarray]:
    p = Path(path)
    if not p.is_file():
        raise DataError(f"model file not found: {p}")
    raw = p.read_bytes()
    if raw[:4] != MAGIC:
        raise DataError(f"{p}: bad magic bytes, not a model file")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != FORMAT_VERSION:
        raise DataError(f"{p}: unsupported format version {version}")
    offset = 8
    tensors: dict[str, np.ndarray] = {}
    while offset < len(raw):
        (name_len,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        name = raw[offset:offset + name_len].decode("utf-8")
        offset += name_len
        (rank,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        shape = struct.unpack_from(f"<{rank}Q", raw, offset)
        offset += 8 * rank
        count = int(np.prod(shape, dtype=np.int64)) if rank else 1
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).copy()
        offset += 8 * count
        tensors[name] = arr.reshape(shape)
    return tensors


def save_model(model: Model, path) -> None:
    tensors = {"input_mask": model.input_mask}
    tensors.update(model.params)
    save_tensors(path, tensors)


def load_model(path, spec: ModelSpec) -> Model:
    tensors = load_tensors(path)
    if "input_mask" not in tensors:
        raise DataError(f"{path}: missing input_mask tensor")
    mask = tensors.pop("input_mask")
    return Model(spec=spec, params=tensors, input_mask=mask)
