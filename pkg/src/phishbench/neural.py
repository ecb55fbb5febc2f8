"""Feed-forward and LSTM layers with hand-written backpropagation.

Networks are built from *branches* that all read the same input batch.  Each
branch is a stack of dense and/or LSTM layers; branch outputs are concatenated
and fed through a dense *head* that ends in a single sigmoid unit.  A plain
MLP is one dense branch, the BiLSTM is two LSTM branches running in opposite
directions, and the ANN-LSTM hybrid is one dense branch next to one LSTM
branch.

LSTM layers read a tabular row of width ``T * input_size`` as ``T`` time
steps of width ``input_size`` (column order is time order).

The training loss is mean binary cross-entropy evaluated from the output
logit, ``softplus(z) - y*z``, which equals ``-(y ln p + (1-y) ln(1-p))`` with
``p = sigmoid(z)`` but never needs clamping.
"""
from __future__ import annotations

import copy
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import _kernels
from .numerics import (
    Matrix,
    ParameterError,
    SeededRng,
    ShapeError,
    add_row_broadcast,
    matmul,
    random_init,
)

ACTIVATIONS = ("sigmoid", "relu", "tanh", "identity")
BCE_EPS = 1e-12
GATES = ("i", "f", "o", "g")


class InputError(ValueError):
    pass


def sigmoid(z):
    """Logistic function, stable for large ``|z|``.

    Scalars use the sign-split form; arrays go through ``scipy.special.expit``,
    which is computed the same way in C.
    """
    if np.isscalar(z):
        if z >= 0:
            return 1.0 / (1.0 + math.exp(-z))
        e = math.exp(z)
        return e / (1.0 + e)
    z = np.asarray(z)
    if not np.issubdtype(z.dtype, np.floating):
        z = z.astype(np.float64)
    return expit(z)


def _activate(z: np.ndarray, name: str) -> np.ndarray:
    if name == "sigmoid":
        return sigmoid(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "identity":
        return z
    raise ParameterError(f"unknown activation {name!r}")


def _activation_grad(z: np.ndarray, a: np.ndarray, name: str) -> np.ndarray:
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "relu":
        return (z > 0).astype(np.float64)
    if name == "tanh":
        return 1.0 - a * a
    return np.ones_like(z)


def bce_loss(p: float, y: int) -> float:
    """Binary cross-entropy of one prediction, ``p`` clamped to ``[1e-12, 1 - 1e-12]``."""
    p = min(max(float(p), BCE_EPS), 1.0 - BCE_EPS)
    return -(y * math.log(p) + (1 - y) * math.log(1.0 - p))


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def mean_bce_from_logits(z: np.ndarray, y: np.ndarray):
    return np.mean(_softplus(z) - y * z)


# --------------------------------------------------------------------------- layers


@dataclass
class DenseLayer:
    weights: Matrix
    bias: Matrix
    activation: str = "identity"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ParameterError(f"unknown activation {self.activation!r}")
        if self.bias.shape != (1, self.weights.shape[1]):
            raise ShapeError(f"bias {self.bias.shape} does not match weights {self.weights.shape}")

    @classmethod
    def init(cls, fan_in: int, fan_out: int, activation: str, rng: SeededRng) -> "DenseLayer":
        return cls(random_init(fan_in, fan_out, "fan_in", rng), np.zeros((1, fan_out)), activation)

    @property
    def fan_in(self) -> int:
        return self.weights.shape[0]

    @property
    def fan_out(self) -> int:
        return self.weights.shape[1]

    def params(self) -> dict[str, np.ndarray]:
        return {"weights": self.weights, "bias": self.bias}

    def describe(self) -> dict:
        return {"type": "dense", "fan_in": self.fan_in, "fan_out": self.fan_out,
                "activation": self.activation}


def dense_forward(x: Matrix, layer: DenseLayer) -> Matrix:
    if x.shape[1] != layer.fan_in:
        raise ShapeError(f"input width {x.shape[1]} does not match layer fan-in {layer.fan_in}")
    return _activate(add_row_broadcast(matmul(x, layer.weights), layer.bias), layer.activation)


@dataclass
class LstmCell:
    input_size: int
    hidden_size: int
    W_i: Matrix
    W_f: Matrix
    W_o: Matrix
    W_g: Matrix
    b_i: Matrix
    b_f: Matrix
    b_o: Matrix
    b_g: Matrix

    def __post_init__(self):
        rows = self.input_size + self.hidden_size
        for gate in GATES:
            w, b = getattr(self, f"W_{gate}"), getattr(self, f"b_{gate}")
            if w.shape != (rows, self.hidden_size) or b.shape != (1, self.hidden_size):
                raise ShapeError(f"gate {gate}: weights {w.shape}, bias {b.shape} "
                                 f"inconsistent with sizes ({self.input_size}, {self.hidden_size})")

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int) -> "LstmCell":
        rows = input_size + hidden_size
        mats = {f"W_{g}": np.zeros((rows, hidden_size)) for g in GATES}
        biases = {f"b_{g}": np.zeros((1, hidden_size)) for g in GATES}
        return cls(input_size, hidden_size, **mats, **biases)

    @classmethod
    def init(cls, input_size: int, hidden_size: int, rng: SeededRng,
             forget_bias: float = 1.0) -> "LstmCell":
        rows = input_size + hidden_size
        mats = {f"W_{g}": random_init(rows, hidden_size, "fan_in", rng) for g in GATES}
        biases = {f"b_{g}": np.zeros((1, hidden_size)) for g in GATES}
        biases["b_f"][:] = forget_bias
        return cls(input_size, hidden_size, **mats, **biases)

    def params(self) -> dict[str, np.ndarray]:
        out = {f"W_{g}": getattr(self, f"W_{g}") for g in GATES}
        out.update({f"b_{g}": getattr(self, f"b_{g}") for g in GATES})
        return out

    def fused(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Input weights (D x 4H), recurrent weights (H x 4H), bias (1 x 4H), gate order i, f, o, g."""
        W = np.hstack([self.W_i, self.W_f, self.W_o, self.W_g])
        b = np.hstack([self.b_i, self.b_f, self.b_o, self.b_g])
        return W[: self.input_size], W[self.input_size:], b


def lstm_step(x_t: Matrix, h_prev: Matrix, c_prev: Matrix, cell: LstmCell) -> tuple[Matrix, Matrix]:
    if x_t.shape[1] != cell.input_size:
        raise ShapeError(f"x_t width {x_t.shape[1]} != input_size {cell.input_size}")
    if h_prev.shape[1] != cell.hidden_size or c_prev.shape[1] != cell.hidden_size:
        raise ShapeError(f"state widths {h_prev.shape}, {c_prev.shape} != hidden_size {cell.hidden_size}")
    if not (x_t.shape[0] == h_prev.shape[0] == c_prev.shape[0]):
        raise ShapeError("batch sizes of x_t, h_prev and c_prev differ")
    xh = np.hstack([x_t, h_prev])
    i = sigmoid(xh @ cell.W_i + cell.b_i)
    f = sigmoid(xh @ cell.W_f + cell.b_f)
    o = sigmoid(xh @ cell.W_o + cell.b_o)
    g = np.tanh(xh @ cell.W_g + cell.b_g)
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c


def lstm_forward(seq, cell: LstmCell, direction: str = "forward") -> Matrix:
    """Run ``cell`` over ``seq`` (list of batch x input_size matrices) from zero state; return final h."""
    if len(seq) == 0:
        raise InputError("empty sequence")
    if direction not in ("forward", "backward"):
        raise ParameterError(f"unknown direction {direction!r}")
    steps = list(seq)[::-1] if direction == "backward" else list(seq)
    batch = steps[0].shape[0]
    h = np.zeros((batch, cell.hidden_size))
    c = np.zeros((batch, cell.hidden_size))
    for x_t in steps:
        h, c = lstm_step(x_t, h, c, cell)
    return h


@dataclass
class LstmLayer:
    """LSTM over a row reshaped to ``(steps, input_size)``; emits the final hidden state."""

    cell: LstmCell
    direction: str = "forward"

    def __post_init__(self):
        if self.direction not in ("forward", "backward"):
            raise ParameterError(f"unknown direction {self.direction!r}")

    @property
    def fan_out(self) -> int:
        return self.cell.hidden_size

    def params(self) -> dict[str, np.ndarray]:
        return self.cell.params()

    def describe(self) -> dict:
        return {"type": "lstm", "input_size": self.cell.input_size,
                "hidden_size": self.cell.hidden_size, "direction": self.direction}

    def _steps(self, x: Matrix) -> np.ndarray:
        d = self.cell.input_size
        if x.shape[1] % d:
            raise ShapeError(f"input width {x.shape[1]} is not a multiple of input_size {d}")
        xs = x.reshape(x.shape[0], -1, d).transpose(1, 0, 2)  # (T, B, D)
        return xs[::-1] if self.direction == "backward" else xs


# --------------------------------------------------------------------------- graph


@dataclass
class NetworkGraph:
    branches: list[list]
    head: list[DenseLayer]
    loss: str = "bce"

    def __post_init__(self):
        if not self.branches or not self.head:
            raise ShapeError("a network needs at least one branch and one head layer")
        for branch in self.branches:
            if not branch:
                raise ShapeError("empty branch")
            for prev, nxt in zip(branch, branch[1:]):
                if isinstance(nxt, LstmLayer):
                    raise ShapeError("LSTM layers must start their branch")
                if prev.fan_out != nxt.fan_in:
                    raise ShapeError(f"width mismatch {prev.fan_out} -> {nxt.fan_in}")
        junction = self.junction_width
        if self.head[0].fan_in != junction:
            raise ShapeError(f"junction width {junction} != head fan-in {self.head[0].fan_in}")
        for prev, nxt in zip(self.head, self.head[1:]):
            if prev.fan_out != nxt.fan_in:
                raise ShapeError(f"width mismatch {prev.fan_out} -> {nxt.fan_in}")
        out = self.head[-1]
        if out.fan_out != 1 or out.activation != "sigmoid":
            raise ShapeError("the output layer must be a single sigmoid unit")

    @property
    def junction_width(self) -> int:
        return sum(branch[-1].fan_out for branch in self.branches)

    def layers(self):
        """Yield ``(prefix, layer)`` in canonical parameter order."""
        for bi, branch in enumerate(self.branches):
            for li, layer in enumerate(branch):
                yield f"branch{bi}.{li}", layer
        for li, layer in enumerate(self.head):
            yield f"head.{li}", layer

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        return [(f"{prefix}.{name}", arr)
                for prefix, layer in self.layers()
                for name, arr in layer.params().items()]

    def n_parameters(self) -> int:
        return sum(arr.size for _, arr in self.parameters())

    def describe(self) -> dict:
        return {"branches": [[layer.describe() for layer in b] for b in self.branches],
                "head": [layer.describe() for layer in self.head], "loss": self.loss}

    def copy(self) -> "NetworkGraph":
        return copy.deepcopy(self)


def _dense_fwd(layer: DenseLayer, x):
    z = x @ layer.weights + layer.bias
    a = _activate(z, layer.activation)
    return a, (x, z, a)


def _dense_bwd(layer: DenseLayer, cache, da, grads, prefix, need_dx=True, dz=None):
    x, z, a = cache
    if dz is None:
        dz = da * _activation_grad(z, a, layer.activation)
    grads[f"{prefix}.weights"] = x.T @ dz
    grads[f"{prefix}.bias"] = dz.sum(axis=0, keepdims=True)
    return dz @ layer.weights.T if need_dx else None


def _lstm_fwd(layer: LstmLayer, x):
    cell = layer.cell
    H = cell.hidden_size
    xs = layer._steps(x)
    T, B, D = xs.shape
    Wx, Wh, b = cell.fused()
    xw = (xs.reshape(T * B, D) @ Wx).reshape(T, B, 4 * H) + b
    dtype = xw.dtype
    acts = np.empty((T, B, 4 * H), dtype)   # activated gates i, f, o, g
    cs = np.zeros((T + 1, B, H), dtype)
    hs = np.zeros((T + 1, B, H), dtype)
    tcs = np.empty((T, B, H), dtype)
    fused = dtype in (np.float32, np.float64)
    for t in range(T):
        a = acts[t]
        np.matmul(hs[t], Wh, out=a)
        if fused:
            _kernels.gate_prepare(a, xw[t], H)
            np.tanh(a, out=a)
            _kernels.gate_finish(a, cs[t], cs[t + 1], H)
            np.tanh(cs[t + 1], out=tcs[t])
            np.multiply(a[:, 2 * H:3 * H], tcs[t], out=hs[t + 1])
            continue
        a += xw[t]
        gates = a[:, : 3 * H]
        gates *= 0.5                      # sigmoid(z) = (1 + tanh(z / 2)) / 2
        np.tanh(a, out=a)
        gates *= 0.5
        gates += 0.5
        c = cs[t + 1]
        np.multiply(a[:, H:2 * H], cs[t], out=c)
        c += a[:, :H] * a[:, 3 * H:]
        np.tanh(c, out=tcs[t])
        np.multiply(a[:, 2 * H:3 * H], tcs[t], out=hs[t + 1])
    return hs[T], (xs, Wx, Wh, acts, cs, hs, tcs)


def _lstm_bwd(layer: LstmLayer, cache, dh, grads, prefix, need_dx=True):
    xs, Wx, Wh, acts, cs, hs, tcs = cache
    H = layer.cell.hidden_size
    T, B, D = xs.shape
    WhT = np.ascontiguousarray(Wh.T)
    da_all = np.empty((T, B, 4 * H), dtype=acts.dtype)
    dc = np.zeros((B, H), dtype=acts.dtype)
    if acts.dtype in (np.float32, np.float64):
        dh = np.ascontiguousarray(dh, dtype=acts.dtype)
        for t in range(T - 1, -1, -1):
            _kernels.lstm_step_bwd(dh, dc, acts[t], cs[t], tcs[t], da_all[t])
            dh = da_all[t] @ WhT
    else:
        i, f, o, g = (acts[..., k * H:(k + 1) * H] for k in range(4))
        # Per-step factors that do not depend on the incoming gradient.
        f_o = tcs * o * (1.0 - o)
        f_c = o * (1.0 - tcs * tcs)
        f_i = g * i * (1.0 - i)
        f_f = cs[:-1] * f * (1.0 - f)
        f_g = i * (1.0 - g * g)
        for t in range(T - 1, -1, -1):
            da = da_all[t]
            np.multiply(dh, f_o[t], out=da[:, 2 * H:3 * H])
            dc += dh * f_c[t]
            np.multiply(dc, f_i[t], out=da[:, :H])
            np.multiply(dc, f_f[t], out=da[:, H:2 * H])
            np.multiply(dc, f_g[t], out=da[:, 3 * H:])
            dh = da @ WhT
            dc *= f[t]
    flat = da_all.reshape(T * B, 4 * H)
    dWh = hs[:-1].reshape(T * B, H).T @ flat
    dWx = xs.reshape(T * B, D).T @ flat
    db = flat.sum(axis=0, keepdims=True)
    dW = np.vstack([dWx, dWh])
    for k, gate in enumerate(GATES):
        grads[f"{prefix}.W_{gate}"] = dW[:, k * H:(k + 1) * H]
        grads[f"{prefix}.b_{gate}"] = db[:, k * H:(k + 1) * H]
    if not need_dx:
        return None
    dxs = (flat @ Wx.T).reshape(T, B, D)
    if layer.direction == "backward":
        dxs = dxs[::-1]
    return dxs.transpose(1, 0, 2).reshape(B, T * D)


def _layer_fwd(layer, x):
    return _lstm_fwd(layer, x) if isinstance(layer, LstmLayer) else _dense_fwd(layer, x)


def forward(net: NetworkGraph, x: Matrix, keep_cache: bool = False):
    """Return the output logits ``(batch x 1)`` and, optionally, the backprop cache."""
    branch_caches, outs = [], []
    for branch in net.branches:
        a, caches = x, []
        for layer in branch:
            a, cache = _layer_fwd(layer, a)
            caches.append(cache)
        outs.append(a)
        branch_caches.append(caches)
    a = outs[0] if len(outs) == 1 else np.hstack(outs)
    head_caches = []
    for layer in net.head[:-1]:
        a, cache = _dense_fwd(layer, a)
        head_caches.append(cache)
    last = net.head[-1]
    z = a @ last.weights + last.bias
    head_caches.append((a, z, None))
    if keep_cache:
        return z, (branch_caches, head_caches, [o.shape[1] for o in outs])
    return z


def predict_proba(net: NetworkGraph, x: Matrix) -> np.ndarray:
    """Phishing probability per row, shape ``(batch,)``."""
    x = np.asarray(x, dtype=np.float64)
    return sigmoid(forward(net, x)[:, 0])


def network_loss(net: NetworkGraph, x: Matrix, y: np.ndarray) -> float:
    y = np.asarray(y, dtype=x.dtype).reshape(-1, 1)
    return mean_bce_from_logits(forward(net, x), y)


def _cast(net: NetworkGraph, dtype) -> NetworkGraph:
    out = net.copy()
    for _, layer in out.layers():
        target = layer.cell if isinstance(layer, LstmLayer) else layer
        for name, arr in layer.params().items():
            setattr(target, name, arr.astype(dtype))
    return out


def backprop(net: NetworkGraph, batch_x: Matrix, batch_y) -> tuple[float, dict[str, np.ndarray]]:
    """Mean BCE loss and its exact gradient with respect to every parameter.

    Arithmetic runs in the dtype of the network parameters.
    """
    dtype = net.parameters()[0][1].dtype
    batch_x = np.asarray(batch_x, dtype=dtype)
    y = np.asarray(batch_y, dtype=dtype).reshape(-1, 1)
    if batch_x.ndim != 2 or y.shape[0] != batch_x.shape[0]:
        raise ShapeError(f"batch_x {batch_x.shape} and batch_y {y.shape} disagree")
    z, (branch_caches, head_caches, widths) = forward(net, batch_x, keep_cache=True)
    loss = float(mean_bce_from_logits(z, y))
    grads: dict[str, np.ndarray] = {}
    n = batch_x.shape[0]
    dz = (sigmoid(z) - y) / n
    nh = len(net.head)
    da = _dense_bwd(net.head[-1], head_caches[-1], None, grads, f"head.{nh - 1}", dz=dz)
    for li in range(nh - 2, -1, -1):
        da = _dense_bwd(net.head[li], head_caches[li], da, grads, f"head.{li}")
    offsets = np.cumsum([0] + widths)
    for bi, branch in enumerate(net.branches):
        d = da[:, offsets[bi]:offsets[bi + 1]]
        for li in range(len(branch) - 1, -1, -1):
            layer, cache, prefix = branch[li], branch_caches[bi][li], f"branch{bi}.{li}"
            need_dx = li > 0
            if isinstance(layer, LstmLayer):
                d = _lstm_bwd(layer, cache, d, grads, prefix, need_dx)
            else:
                d = _dense_bwd(layer, cache, d, grads, prefix, need_dx)
    return loss, grads


def grad_check(net: NetworkGraph, batch: tuple, fd_step: float = 1e-5,
               max_params: int = 10_000) -> float:
    """Largest relative gap between analytic and central-difference gradients.

    The relative gap is ``|a - n| / max(1e-8, |a| + |n|)``.  Finite differences
    are evaluated in ``np.longdouble`` (80-bit on x86) so that rounding in the
    loss does not swamp gradients of order 1e-8.
    """
    n_params = net.n_parameters()
    if n_params > max_params:
        raise ParameterError(f"{n_params} parameters exceed the grad-check limit of {max_params}")
    x, y = batch
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _, grads = backprop(net, x, y)
    probe = _cast(net, np.longdouble)
    x, y = x.astype(np.longdouble), y.astype(np.longdouble)
    worst = 0.0
    for name, arr in probe.parameters():
        g = grads[name]
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + fd_step
            up = network_loss(probe, x, y)
            flat[idx] = orig - fd_step
            down = network_loss(probe, x, y)
            flat[idx] = orig
            numeric = float((up - down) / (2.0 * fd_step))
            analytic = float(gflat[idx])
            rel = abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))
            worst = max(worst, rel)
    return worst


# --------------------------------------------------------------------------- training


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    dtype: str = "float32"   # arithmetic precision while training; the result is float64

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ParameterError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ParameterError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ParameterError("epochs must be >= 0")
        if self.optimizer not in ("sgd", "adam"):
            raise ParameterError(f"unknown optimizer {self.optimizer!r}")
        if self.dtype not in ("float32", "float64"):
            raise ParameterError(f"dtype must be float32 or float64, got {self.dtype!r}")


@dataclass
class TrainResult:
    net: NetworkGraph
    losses: list[float] = field(default_factory=list)
    single_class: bool = False


class _Adam:
    def __init__(self, params, cfg: TrainConfig):
        self.cfg = cfg
        self.m = {name: np.zeros_like(a) for name, a in params}
        self.v = {name: np.zeros_like(a) for name, a in params}
        self.t = 0

    def step(self, params, grads):
        cfg = self.cfg
        self.t += 1
        c1 = 1.0 - cfg.beta1 ** self.t
        c2 = 1.0 - cfg.beta2 ** self.t
        for name, arr in params:
            g = grads[name]
            m, v = self.m[name], self.v[name]
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * g
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * g * g
            arr -= cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.epsilon)


def train_network(net: NetworkGraph, x: Matrix, y, config: TrainConfig) -> TrainResult:
    """Minibatch training on mean BCE.  ``net`` is copied, never modified."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape[0] != y.shape[0] or x.shape[0] == 0:
        raise ShapeError(f"{x.shape[0]} rows but {y.shape[0]} labels")
    if not np.all((y == 0) | (y == 1)):
        raise InputError("labels must be 0 or 1")
    single = len(np.unique(y)) < 2
    if single:
        warnings.warn("training data contains a single class", RuntimeWarning, stacklevel=2)
    if config.epochs == 0:
        return TrainResult(net.copy(), [], single)
    net = _cast(net, np.dtype(config.dtype))
    x = x.astype(config.dtype)
    params = net.parameters()
    rng = SeededRng(config.seed)
    adam = _Adam(params, config) if config.optimizer == "adam" else None
    losses = []
    n = x.shape[0]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads = backprop(net, x[idx], y[idx])
            total += loss * len(idx)
            if adam is not None:
                adam.step(params, grads)
            else:
                for name, arr in params:
                    arr -= config.learning_rate * grads[name]
        losses.append(total / n)
    return TrainResult(_cast(net, np.float64), losses, single)


# --------------------------------------------------------------------------- probes

PROBE_KINDS = ("dense", "lstm", "hybrid")


def probe_network(kind: str, rng: SeededRng) -> tuple[NetworkGraph, tuple[np.ndarray, np.ndarray]]:
    """Small random network plus a matching batch, for gradient checking.

    ``dense`` is 8->4->1 on a batch of 16, ``lstm`` is hidden 6 over length-5
    sequences, ``hybrid`` is a miniature dense+LSTM junction network.  Biases
    are random too, so ReLU units do not sit exactly on their kink.
    """
    if kind == "dense":
        net = NetworkGraph([[DenseLayer.init(8, 4, "relu", rng)]],
                           [DenseLayer.init(4, 1, "sigmoid", rng)])
        x = rng.normal((16, 8))
    elif kind == "lstm":
        net = NetworkGraph([[LstmLayer(LstmCell.init(1, 6, rng))]],
                           [DenseLayer.init(6, 1, "sigmoid", rng)])
        x = rng.normal((8, 5))
    elif kind == "hybrid":
        net = NetworkGraph(
            [[DenseLayer.init(5, 4, "relu", rng), DenseLayer.init(4, 3, "relu", rng)],
             [LstmLayer(LstmCell.init(1, 3, rng))]],
            [DenseLayer.init(6, 3, "relu", rng), DenseLayer.init(3, 1, "sigmoid", rng)])
        x = rng.normal((8, 5))
    else:
        raise ParameterError(f"unknown probe kind {kind!r}")
    for _, layer in net.layers():
        for name, arr in layer.params().items():
            if name.startswith("b"):
                arr[:] = rng.uniform(-0.5, 0.5, arr.shape)
    y = (rng.uniform(0.0, 1.0, x.shape[0]) < 0.5).astype(np.float64)
    return net, (x, y)
