"""Dense float64 matrices and seeded randomness.

Matrices are plain 2-D ``numpy.float64`` arrays laid out row-major with one
sample per row.  The helpers here add the shape checks and finiteness
guarantees the learning code relies on.

Randomness comes from :class:`SeededRng`, a thin wrapper around numpy's
PCG64 bit generator.  PCG64 output for a given seed is fixed by numpy's
stream-compatibility policy, so runs are replayable across machines.
"""
from __future__ import annotations

import math

import numpy as np

Matrix = np.ndarray


class ShapeError(ValueError):
    """Operand shapes are incompatible."""


class ParameterError(ValueError):
    """A numeric parameter is out of its valid range."""


class NonFiniteError(FloatingPointError):
    """An operation produced NaN or Inf."""


def as_matrix(values, rows: int | None = None, cols: int | None = None) -> Matrix:
    """Coerce ``values`` into a finite 2-D float64 array.

    A flat sequence needs ``rows`` and ``cols``; nested sequences keep their shape.
    """
    arr = np.asarray(values, dtype=np.float64)
    if rows is not None or cols is not None:
        if rows is None or cols is None:
            raise ShapeError("rows and cols must be given together")
        if arr.size != rows * cols:
            raise ShapeError(f"{arr.size} values cannot fill a {rows}x{cols} matrix")
        arr = arr.reshape(rows, cols)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got {arr.ndim}-D")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"matrix dimensions must be positive, got {arr.shape}")
    _check_finite(arr)
    return arr


def _check_finite(m: Matrix) -> None:
    if not np.all(np.isfinite(m)):
        raise NonFiniteError("matrix contains NaN or Inf")


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        out = a @ b
    _check_finite(out)
    return out


def add_row_broadcast(z: Matrix, bias: Matrix) -> Matrix:
    """Add the single-row ``bias`` to every row of ``z``."""
    if bias.ndim != 2 or bias.shape[0] != 1 or z.ndim != 2 or bias.shape[1] != z.shape[1]:
        raise ShapeError(f"bias of shape {bias.shape} cannot broadcast over {z.shape}")
    out = z + bias
    _check_finite(out)
    return out


class SeededRng:
    """Deterministic random stream (PCG64) keyed by a 64-bit unsigned seed."""

    algorithm = "PCG64"

    def __init__(self, seed: int):
        if not 0 <= int(seed) < 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, lo: float, hi: float, shape) -> np.ndarray:
        return self._gen.uniform(lo, hi, size=shape)

    def normal(self, shape, scale: float = 1.0) -> np.ndarray:
        return self._gen.normal(0.0, scale, size=shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def integers(self, lo: int, hi: int, shape=None) -> np.ndarray:
        return self._gen.integers(lo, hi, size=shape)

    def spawn(self, key: int) -> "SeededRng":
        """Derive an independent child stream; the same key always yields the same child."""
        mixed = (self.seed * 0x9E3779B97F4A7C15 + int(key) * 0xBF58476D1CE4E5B9) % 2**64
        return SeededRng(mixed)

    def raw_bytes(self, n: int) -> bytes:
        return self._gen.bytes(n)


def random_init(rows: int, cols: int, scheme: str | tuple, rng: SeededRng) -> Matrix:
    """Draw a ``rows x cols`` matrix.

    ``scheme`` is either ``("uniform", lo, hi)`` or ``"fan_in"``; the latter is
    Glorot-uniform, bounded by ``sqrt(6 / (rows + cols))``.
    """
    if rows < 1 or cols < 1:
        raise ParameterError(f"matrix dimensions must be >= 1, got {rows}x{cols}")
    if scheme == "fan_in":
        bound = math.sqrt(6.0 / (rows + cols))
        return rng.uniform(-bound, bound, (rows, cols))
    if isinstance(scheme, tuple) and len(scheme) == 3 and scheme[0] == "uniform":
        lo, hi = float(scheme[1]), float(scheme[2])
        if lo > hi:
            raise ParameterError(f"uniform bounds reversed: lo={lo} > hi={hi}")
        if lo == hi:
            return np.full((rows, cols), lo)
        return rng.uniform(lo, hi, (rows, cols))
    raise ParameterError(f"unknown init scheme {scheme!r}")
