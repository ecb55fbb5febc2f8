"""The nine comparison classifiers behind one fit / predict_proba contract.

Classical models: CART decision tree (Gini), brute-force KNN, Gaussian naive
Bayes, and linear models trained by full-batch gradient descent (logistic loss
or hinge loss).  Deep models are :class:`~phishbench.neural.NetworkGraph`
instances: a dense ANN, an LSTM, a BiLSTM and the ANN-LSTM hybrid.

Every model emits a phishing probability; labels are ``probability >= threshold``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import neural
from .dataset import ScalerStats, SplitDataset, fit_scaler
from .features import FeatureVector
from .neural import DenseLayer, LstmCell, LstmLayer, NetworkGraph, TrainConfig, sigmoid
from .numerics import ParameterError, SeededRng
from .schema import FEATURE_NAMES, N_FEATURES, SCHEMA_FINGERPRINT, fingerprint

KINDS = ("decision_tree", "knn", "naive_bayes", "logistic_regression", "linear_svm",
         "ann", "lstm", "bilstm", "ann_lstm")
DEEP_KINDS = ("ann", "lstm", "bilstm", "ann_lstm")

DISPLAY_NAMES = {
    "decision_tree": "Decision Tree",
    "knn": "KNN",
    "naive_bayes": "Naive Bayes",
    "logistic_regression": "Logistic Regression",
    "linear_svm": "SVM",
    "ann": "ANN",
    "lstm": "LSTM",
    "bilstm": "BI-LSTM",
    "ann_lstm": "ANN-LSTM",
}

_TRAIN_DEFAULTS = {"epochs": 50, "batch_size": 32, "learning_rate": 1e-3, "optimizer": "adam",
                   "beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8, "dtype": "float32"}

DEFAULT_HP = {
    "decision_tree": {"max_depth": None, "min_leaf": 1},
    "knn": {"k": 100, "metric": "euclidean"},
    "naive_bayes": {"variance_floor": 1e-3},
    "logistic_regression": {"lr": 0.1, "epochs": 1000, "l2": 1e-4},
    "linear_svm": {"lr": 0.1, "epochs": 1000, "l2": 1e-3},
    "ann": {"hidden": [64, 32], "activation": "relu", **_TRAIN_DEFAULTS},
    "lstm": {"hidden_size": 128, **_TRAIN_DEFAULTS},
    "bilstm": {"hidden_size": 64, **_TRAIN_DEFAULTS},
    "ann_lstm": {"dense": [64, 32], "lstm_hidden": 64, "head": [32], "activation": "relu",
                 **_TRAIN_DEFAULTS},
}

# KNN defaults to raw feature values; scaling is a per-model override.
DEFAULT_SCALING = {kind: "standard" for kind in KINDS}
DEFAULT_SCALING["knn"] = "none"


class SchemaMismatchError(ValueError):
    pass


class StateError(RuntimeError):
    pass


class ModelFormatError(ValueError):
    pass


@dataclass
class ClassifierSpec:
    kind: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0
    scaling: str = "standard"
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        self.hyperparameters = {**DEFAULT_HP[self.kind], **self.hyperparameters}
        if not self.name:
            self.name = self.kind
        self.validate()

    def validate(self) -> None:
        hp = self.hyperparameters
        unknown = set(hp) - set(DEFAULT_HP[self.kind])
        if unknown:
            raise ParameterError(f"{self.kind}: unknown hyperparameters {sorted(unknown)}")
        if self.scaling not in ("standard", "minmax", "none"):
            raise ParameterError(f"unknown scaling mode {self.scaling!r}")
        k = self.kind
        if k == "decision_tree":
            if (hp["max_depth"] is not None and hp["max_depth"] < 1) or hp["min_leaf"] < 1:
                raise ParameterError("max_depth must be >= 1 (None = unbounded) and min_leaf >= 1")
        elif k == "knn":
            if int(hp["k"]) < 1:
                raise ParameterError("k must be >= 1")
            if hp["metric"] != "euclidean":
                raise ParameterError("only the euclidean metric is supported")
        elif k == "naive_bayes":
            if hp["variance_floor"] <= 0:
                raise ParameterError("variance_floor must be positive")
        elif k in ("logistic_regression", "linear_svm"):
            if hp["lr"] <= 0 or hp["epochs"] < 0 or hp["l2"] < 0:
                raise ParameterError("lr must be positive, epochs and l2 non-negative")
        else:
            self.train_config()

    def train_config(self) -> TrainConfig:
        hp = self.hyperparameters
        return TrainConfig(**{key: hp[key] for key in _TRAIN_DEFAULTS}, seed=self.seed)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "name": self.name, "seed": self.seed, "scaling": self.scaling,
                "hyperparameters": self.hyperparameters}

    @classmethod
    def from_dict(cls, d: dict) -> "ClassifierSpec":
        return cls(d["kind"], dict(d["hyperparameters"]), d["seed"], d["scaling"], d.get("name", ""))


def default_spec(kind: str, seed: int = 0, scaling: str | None = None, **hp) -> ClassifierSpec:
    return ClassifierSpec(kind, hp, seed, scaling or DEFAULT_SCALING[kind])


def build_ann_spec(seed: int = 0) -> ClassifierSpec:
    """Dense 48 -> 64 -> 32 -> 1, ReLU hidden units, sigmoid head."""
    return default_spec("ann", seed)


def build_lstm_spec(seed: int = 0) -> ClassifierSpec:
    """LSTM with 128 hidden units over the 48 features as a length-48 sequence."""
    return default_spec("lstm", seed)


def build_bilstm_spec(seed: int = 0) -> ClassifierSpec:
    return default_spec("bilstm", seed)


def build_ann_lstm_spec(seed: int = 0) -> ClassifierSpec:
    """Dense branch 48->64->32 beside an LSTM branch (hidden 64); junction 96 -> 32 -> 1."""
    return default_spec("ann_lstm", seed)


def comparison_specs(seed: int = 0) -> list[ClassifierSpec]:
    """The nine comparison models in table order."""
    order = ("ann", "logistic_regression", "decision_tree", "naive_bayes", "knn",
             "linear_svm", "lstm", "bilstm", "ann_lstm")
    return [default_spec(kind, seed) for kind in order]


# --------------------------------------------------------------------------- networks


def build_network(spec: ClassifierSpec, n_features: int, rng: SeededRng) -> NetworkGraph:
    hp = spec.hyperparameters
    kind = spec.kind

    def dense_stack(widths, fan_in, act):
        layers = []
        for w in widths:
            layers.append(DenseLayer.init(fan_in, w, act, rng))
            fan_in = w
        return layers

    if kind == "ann":
        branch = dense_stack(hp["hidden"], n_features, hp["activation"])
        return NetworkGraph([branch], [DenseLayer.init(branch[-1].fan_out, 1, "sigmoid", rng)])
    if kind == "lstm":
        h = hp["hidden_size"]
        return NetworkGraph([[LstmLayer(LstmCell.init(1, h, rng))]],
                            [DenseLayer.init(h, 1, "sigmoid", rng)])
    if kind == "bilstm":
        h = hp["hidden_size"]
        return NetworkGraph([[LstmLayer(LstmCell.init(1, h, rng), "forward")],
                             [LstmLayer(LstmCell.init(1, h, rng), "backward")]],
                            [DenseLayer.init(2 * h, 1, "sigmoid", rng)])
    if kind == "ann_lstm":
        dense = dense_stack(hp["dense"], n_features, hp["activation"])
        lstm = [LstmLayer(LstmCell.init(1, hp["lstm_hidden"], rng))]
        junction = dense[-1].fan_out + hp["lstm_hidden"]
        head = dense_stack(hp["head"], junction, hp["activation"])
        head.append(DenseLayer.init(head[-1].fan_out if head else junction, 1, "sigmoid", rng))
        return NetworkGraph([dense, lstm], head)
    raise ParameterError(f"{kind} is not a network model")


# --------------------------------------------------------------------------- estimators


class DecisionTree:
    """CART with Gini impurity.  Nodes are stored in flat arrays; ``feature == -1`` marks a leaf."""

    def __init__(self, feature=None, threshold=None, left=None, right=None, value=None):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value

    @staticmethod
    def gini(y: np.ndarray) -> float:
        if len(y) == 0:
            return 0.0
        p = float(np.mean(y))
        return 1.0 - p * p - (1.0 - p) * (1.0 - p)

    def fit(self, x: np.ndarray, y: np.ndarray, max_depth: int | None = None, min_leaf: int = 1):
        feature, threshold, left, right, value = [], [], [], [], []

        def new_node(rows):
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(float(np.mean(y[rows])))
            return len(feature) - 1

        root = new_node(np.arange(len(y)))
        stack = [(root, np.arange(len(y)), 0)]
        while stack:
            node, rows, depth = stack.pop()
            if value[node] in (0.0, 1.0) or (max_depth and depth >= max_depth):
                continue
            best = self._best_split(x[rows], y[rows], min_leaf)
            if best is None:
                continue
            j, thr = best
            go_left = x[rows, j] <= thr
            lrows, rrows = rows[go_left], rows[~go_left]
            feature[node], threshold[node] = j, thr
            left[node] = new_node(lrows)
            right[node] = new_node(rrows)
            stack.append((right[node], rrows, depth + 1))
            stack.append((left[node], lrows, depth + 1))
        self.feature = np.array(feature, dtype=np.int64)
        self.threshold = np.array(threshold)
        self.left = np.array(left, dtype=np.int64)
        self.right = np.array(right, dtype=np.int64)
        self.value = np.array(value)
        return self

    @staticmethod
    def _best_split(x: np.ndarray, y: np.ndarray, min_leaf: int):
        """Lowest weighted child Gini; ties go to the lower feature index, then lower threshold."""
        n, d = x.shape
        order = np.argsort(x, axis=0, kind="stable")
        xs = np.take_along_axis(x, order, axis=0)
        ys = y[order].astype(np.float64)
        pos_left = np.cumsum(ys, axis=0)[:-1]               # (n-1, d)
        n_left = np.arange(1, n, dtype=np.float64)[:, None]
        n_right = n - n_left
        pos_right = ys.sum(axis=0) - pos_left
        pl, pr = pos_left / n_left, pos_right / n_right
        gini_l = 1.0 - pl ** 2 - (1.0 - pl) ** 2
        gini_r = 1.0 - pr ** 2 - (1.0 - pr) ** 2
        impurity = (n_left * gini_l + n_right * gini_r) / n
        valid = xs[1:] > xs[:-1]
        if min_leaf > 1:
            valid &= (n_left >= min_leaf) & (n_right >= min_leaf)
        if not valid.any():
            return None
        impurity = np.where(valid, impurity, np.inf).T   # (d, n-1): feature-major
        flat = int(np.argmin(impurity))
        j, i = divmod(flat, n - 1)
        return j, float((xs[i, j] + xs[i + 1, j]) / 2.0)

    def proba(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(x.shape[0], dtype=np.int64)
        rows = np.arange(x.shape[0])
        while True:
            feat = self.feature[node]
            inner = feat >= 0
            if not inner.any():
                break
            r, nd = rows[inner], node[inner]
            go_left = x[r, feat[inner]] <= self.threshold[nd]
            node[inner] = np.where(go_left, self.left[nd], self.right[nd])
        return self.value[node]

    def depth(self) -> int:
        depths = {0: 0}
        for i in range(len(self.feature)):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return max(depths.values())

    def arrays(self):
        return {"feature": self.feature.astype(np.float64), "threshold": self.threshold,
                "left": self.left.astype(np.float64), "right": self.right.astype(np.float64),
                "value": self.value}

    @classmethod
    def from_arrays(cls, a):
        return cls(a["feature"].astype(np.int64), a["threshold"], a["left"].astype(np.int64),
                   a["right"].astype(np.int64), a["value"])


def knn_distances(train_x: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, summed feature by feature in column order."""
    d = np.zeros((queries.shape[0], train_x.shape[0]))
    for j in range(train_x.shape[1]):
        diff = queries[:, j:j + 1] - train_x[None, :, j]
        d += diff * diff
    return d


class Knn:
    def __init__(self, train_x, train_y, k: int):
        if k > len(train_y):
            raise ParameterError(f"k={k} exceeds the {len(train_y)} training rows")
        self.train_x = np.asarray(train_x, dtype=np.float64)
        self.train_y = np.asarray(train_y, dtype=np.float64)
        self.k = int(k)

    def neighbours(self, queries: np.ndarray) -> np.ndarray:
        """Indices of the k nearest rows; equal distances resolve to the lower row index."""
        out = np.empty((queries.shape[0], self.k), dtype=np.int64)
        for start in range(0, queries.shape[0], 256):
            d = knn_distances(self.train_x, queries[start:start + 256])
            out[start:start + 256] = np.argsort(d, axis=1, kind="stable")[:, : self.k]
        return out

    def proba(self, x: np.ndarray) -> np.ndarray:
        if self.k < 1:
            raise StateError(f"knn needs k >= 1, got {self.k}")
        return self.train_y[self.neighbours(x)].mean(axis=1)

    def arrays(self):
        return {"train_x": self.train_x, "train_y": self.train_y}


def knn_predict(model: "TrainedModel", query, k: int | None = None) -> float:
    """Phishing fraction among the ``k`` nearest training rows of one query."""
    est = model.estimator
    if not isinstance(est, Knn):
        raise StateError("knn_predict needs a fitted KNN model")
    k = est.k if k is None else int(k)
    if k < 1 or k > len(est.train_y):
        raise ParameterError(f"k={k} must lie in [1, {len(est.train_y)}]")
    q = model.scaler.transform(_as_rows(query))
    probe = Knn(est.train_x, est.train_y, k)
    return float(probe.proba(q)[0])


class GaussianNB:
    def __init__(self, priors=None, means=None, variances=None):
        self.priors = priors
        self.means = means
        self.variances = variances

    def fit(self, x, y, variance_floor: float):
        priors, means, variances = np.zeros(2), np.zeros((2, x.shape[1])), np.ones((2, x.shape[1]))
        for c in (0, 1):
            rows = x[y == c]
            priors[c] = len(rows) / len(y)
            if len(rows):
                means[c] = rows.mean(axis=0)
                variances[c] = rows.var(axis=0)
        self.priors, self.means = priors, means
        self.variances = np.maximum(variances, variance_floor)
        return self

    def log_joint(self, x) -> np.ndarray:
        out = np.empty((x.shape[0], 2))
        for c in (0, 1):
            var = self.variances[c]
            ll = -0.5 * (np.log(2.0 * np.pi * var) + (x - self.means[c]) ** 2 / var).sum(axis=1)
            out[:, c] = (np.log(self.priors[c]) if self.priors[c] > 0 else -np.inf) + ll
        return out

    def proba(self, x) -> np.ndarray:
        if self.priors[1] == 0:
            return np.zeros(x.shape[0])
        if self.priors[0] == 0:
            return np.ones(x.shape[0])
        lj = self.log_joint(x)
        return sigmoid(lj[:, 1] - lj[:, 0])

    def arrays(self):
        return {"priors": self.priors, "means": self.means, "variances": self.variances}


class LinearModel:
    def __init__(self, loss: str, w=None, b: float = 0.0):
        if loss not in ("logistic", "hinge"):
            raise ParameterError(f"unknown linear loss {loss!r}")
        self.loss = loss
        self.w = w
        self.b = b

    def gradient(self, x, y, l2: float):
        """Gradient of the mean loss plus ``l2/2 * |w|^2`` at the current weights."""
        n = x.shape[0]
        z = x @ self.w + self.b
        if self.loss == "logistic":
            r = sigmoid(z) - y
        else:
            s = 2.0 * y - 1.0
            r = np.where(s * z < 1.0, -s, 0.0)
        return x.T @ r / n + l2 * self.w, float(r.sum() / n)

    def fit(self, x, y, lr: float, epochs: int, l2: float):
        self.w = np.zeros(x.shape[1])
        self.b = 0.0
        y = y.astype(np.float64)
        for _ in range(int(epochs)):
            gw, gb = self.gradient(x, y, l2)
            self.w -= lr * gw
            self.b -= lr * gb
        return self

    def decision(self, x) -> np.ndarray:
        return x @ self.w + self.b

    def proba(self, x) -> np.ndarray:
        return sigmoid(self.decision(x))

    def arrays(self):
        return {"w": self.w, "b": np.array([self.b])}


class NeuralModel:
    def __init__(self, net: NetworkGraph):
        self.net = net

    def proba(self, x) -> np.ndarray:
        return neural.predict_proba(self.net, x)

    def arrays(self):
        return {name: arr for name, arr in self.net.parameters()}


def fit_decision_tree(x, y, max_depth: int | None = None, min_leaf: int = 1) -> DecisionTree:
    return DecisionTree().fit(np.asarray(x, float), np.asarray(y), max_depth, min_leaf)


def fit_gaussian_nb(x, y, variance_floor: float = 1e-3) -> GaussianNB:
    return GaussianNB().fit(np.asarray(x, float), np.asarray(y), variance_floor)


def fit_linear(x, y, loss: str, lr: float = 0.1, epochs: int = 1000, l2: float = 1e-4) -> LinearModel:
    return LinearModel(loss).fit(np.asarray(x, float), np.asarray(y), lr, epochs, l2)


# --------------------------------------------------------------------------- trained model


@dataclass
class TrainedModel:
    spec: ClassifierSpec
    estimator: object = None
    scaler: ScalerStats | None = None
    fingerprint: str = SCHEMA_FINGERPRINT
    meta: dict = field(default_factory=dict)
    train_seconds: float = 0.0

    @property
    def kind(self) -> str:
        return self.spec.kind

    @property
    def fitted(self) -> bool:
        return self.estimator is not None


def _as_rows(features) -> np.ndarray:
    if isinstance(features, FeatureVector):
        return features.as_array()[None, :]
    arr = np.asarray(features, dtype=np.float64)
    return arr[None, :] if arr.ndim == 1 else arr


def fit(spec: ClassifierSpec, train: SplitDataset | tuple) -> TrainedModel:
    """Fit ``spec`` on the training rows (a SplitDataset or an ``(x, y)`` pair)."""
    if isinstance(train, SplitDataset):
        x_raw, y = train.x_train, train.y_train
        scaler = train.scaler_for(spec.scaling)
    else:
        x_raw, y = (np.asarray(a) for a in train)
        scaler = fit_scaler(x_raw, spec.scaling)
    x_raw = np.asarray(x_raw, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    if x_raw.ndim != 2 or x_raw.shape[0] != len(y) or len(y) == 0:
        raise ParameterError(f"training data shape {x_raw.shape} does not match {len(y)} labels")
    if np.isnan(x_raw).any():
        raise ParameterError("training data contains missing values")
    x = scaler.transform(x_raw)
    hp = spec.hyperparameters
    meta = {"n_train": int(len(y)), "n_features": int(x.shape[1]), "seed": spec.seed}
    start = time.perf_counter()
    kind = spec.kind
    if kind == "decision_tree":
        est = fit_decision_tree(x, y, hp["max_depth"], hp["min_leaf"])
        meta["n_nodes"] = int(len(est.feature))
    elif kind == "knn":
        est = Knn(x, y, hp["k"])
    elif kind == "naive_bayes":
        est = fit_gaussian_nb(x, y, hp["variance_floor"])
    elif kind in ("logistic_regression", "linear_svm"):
        loss = "logistic" if kind == "logistic_regression" else "hinge"
        est = fit_linear(x, y, loss, hp["lr"], hp["epochs"], hp["l2"])
    else:
        net = build_network(spec, x.shape[1], SeededRng(spec.seed))
        result = neural.train_network(net, x, y, spec.train_config())
        est = NeuralModel(result.net)
        meta["loss_curve"] = [float(v) for v in result.losses]
        meta["single_class"] = result.single_class
    elapsed = time.perf_counter() - start
    if x.shape[1] == N_FEATURES:
        fp = SCHEMA_FINGERPRINT
    else:
        fp = fingerprint([f"f{j}" for j in range(x.shape[1])])
    return TrainedModel(spec, est, scaler, fp, meta, elapsed)


def predict_proba(model: TrainedModel, features, schema_fingerprint: str | None = None) -> np.ndarray:
    """Phishing probabilities for one FeatureVector or a batch of raw feature rows."""
    if not model.fitted:
        raise StateError("model has not been fitted")
    if isinstance(features, FeatureVector):
        schema_fingerprint = fingerprint(tuple(features.values))
    rows = _as_rows(features)
    if schema_fingerprint is None:
        schema_fingerprint = SCHEMA_FINGERPRINT if rows.shape[1] == N_FEATURES else None
    if schema_fingerprint != model.fingerprint:
        raise SchemaMismatchError("input feature schema does not match the model's schema")
    expected = model.meta.get("n_features", N_FEATURES)
    if rows.shape[1] != expected:
        raise SchemaMismatchError(f"expected {expected} features, got {rows.shape[1]}")
    with np.errstate(invalid="ignore", divide="ignore"):
        p = model.estimator.proba(model.scaler.transform(rows))
    if not np.all(np.isfinite(p)):
        raise StateError("model produced non-finite probabilities")
    return np.clip(p, 0.0, 1.0)


def predict(model: TrainedModel, features, threshold: float = 0.5, **kw) -> np.ndarray:
    return (predict_proba(model, features, **kw) >= threshold).astype(np.int64)


__all__ = [
    "KINDS", "DEEP_KINDS", "DISPLAY_NAMES", "ClassifierSpec", "TrainedModel", "default_spec",
    "comparison_specs", "build_ann_spec", "build_lstm_spec", "build_bilstm_spec", "build_ann_lstm_spec",
    "build_network", "fit", "predict", "predict_proba", "knn_predict", "fit_decision_tree",
    "fit_gaussian_nb", "fit_linear", "SchemaMismatchError", "StateError", "ModelFormatError",
    "FEATURE_NAMES",
]
