"""PHFG model files.

Layout (all integers little-endian)::

    magic        4 bytes   b"PHFG"
    version      u16
    kind         u8 length + ASCII kind tag
    fingerprint  32 bytes  raw SHA-256 of the ordered feature names
    header       u32 length + UTF-8 JSON (sorted keys): spec, meta, scaler mode,
                 array manifest [[name, shape], ...]
    payload      float64 arrays in manifest order
    checksum     32 bytes  SHA-256 of everything above

The encoding contains no timestamps or timings, so a deterministic fit
produces byte-identical files.
"""
from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from .dataset import ScalerStats
from .models import (
    ClassifierSpec,
    DecisionTree,
    GaussianNB,
    Knn,
    LinearModel,
    ModelFormatError,
    NeuralModel,
    TrainedModel,
    build_network,
)
from .numerics import SeededRng

MAGIC = b"PHFG"
FORMAT_VERSION = 1


def _arrays(model: TrainedModel) -> dict[str, np.ndarray]:
    out = {"scaler.center": model.scaler.center, "scaler.scale": model.scaler.scale}
    out.update({f"est.{k}": v for k, v in model.estimator.arrays().items()})
    return out


def dumps(model: TrainedModel) -> bytes:
    if not model.fitted:
        raise ModelFormatError("cannot serialise an unfitted model")
    arrays = _arrays(model)
    header = {
        "spec": model.spec.to_dict(),
        "meta": model.meta,
        "scaler_mode": model.scaler.mode,
        "arrays": [[name, list(arr.shape)] for name, arr in arrays.items()],
    }
    if isinstance(model.estimator, LinearModel):
        header["linear_loss"] = model.estimator.loss
    kind = model.kind.encode("ascii")
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [
        MAGIC,
        struct.pack("<H", FORMAT_VERSION),
        struct.pack("<B", len(kind)), kind,
        bytes.fromhex(model.fingerprint),
        struct.pack("<I", len(head)), head,
    ]
    parts += [np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays.values()]
    body = b"".join(parts)
    return body + hashlib.sha256(body).digest()


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ModelFormatError("model file is truncated")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk


def loads(data: bytes) -> TrainedModel:
    if len(data) < len(MAGIC) + 32 or data[:4] != MAGIC:
        raise ModelFormatError("not a PHFG model file")
    body, digest = data[:-32], data[-32:]
    r = _Reader(body)
    r.take(4)
    (version,) = struct.unpack("<H", r.take(2))
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version} (expected {FORMAT_VERSION})")
    if hashlib.sha256(body).digest() != digest:
        raise ModelFormatError("model file checksum mismatch (truncated or corrupt)")
    (klen,) = struct.unpack("<B", r.take(1))
    kind = r.take(klen).decode("ascii")
    fp = r.take(32).hex()
    (hlen,) = struct.unpack("<I", r.take(4))
    try:
        header = json.loads(r.take(hlen).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"corrupt model header: {exc}") from None
    arrays = {}
    for name, shape in header["arrays"]:
        count = int(np.prod(shape)) if shape else 1
        arrays[name] = np.frombuffer(r.take(8 * count), dtype="<f8").astype(np.float64).reshape(shape)
    if r.pos != len(body):
        raise ModelFormatError("trailing bytes after payload")
    spec = ClassifierSpec.from_dict(header["spec"])
    if spec.kind != kind:
        raise ModelFormatError(f"kind tag {kind!r} disagrees with header kind {spec.kind!r}")
    meta = header["meta"]
    scaler = ScalerStats(header["scaler_mode"], arrays.pop("scaler.center"), arrays.pop("scaler.scale"))
    est_arrays = {k[len("est."):]: v for k, v in arrays.items()}
    return TrainedModel(spec, _restore(spec, est_arrays, meta, header), scaler, fp, meta)


def _restore(spec: ClassifierSpec, a: dict, meta: dict, header: dict):
    kind = spec.kind
    if kind == "decision_tree":
        return DecisionTree.from_arrays(a)
    if kind == "knn":
        return Knn(a["train_x"], a["train_y"], spec.hyperparameters["k"])
    if kind == "naive_bayes":
        return GaussianNB(a["priors"], a["means"], a["variances"])
    if kind in ("logistic_regression", "linear_svm"):
        return LinearModel(header["linear_loss"], a["w"], float(a["b"][0]))
    net = build_network(spec, meta["n_features"], SeededRng(spec.seed))
    params = dict(net.parameters())
    if set(params) != set(a):
        raise ModelFormatError("network parameters in file do not match the architecture")
    for name, arr in params.items():
        if arr.shape != a[name].shape:
            raise ModelFormatError(f"parameter {name} has shape {a[name].shape}, expected {arr.shape}")
        arr[...] = a[name]
    return NeuralModel(net)


def save_model(model: TrainedModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(model))


def load_model(path) -> TrainedModel:
    with open(path, "rb") as fh:
        return loads(fh.read())


def file_digest(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()
