"""Small dense matrices: validation, products, norms and spectral radius.

Matrices are plain ``float64`` numpy arrays, frozen (``writeable=False``)
once they pass :func:`as_matrix`. All functions are pure.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from ._backend import kernels

MAX_DIM = 64
DEFAULT_TOL = 1e-9
MAX_SQUARINGS = 64


class MatrixError(ValueError):
    """Invalid matrix input (shape, dimension cap, non-finite entries)."""


class SpectralRadiusError(ArithmeticError):
    """Spectral radius did not converge; carries the best bracket found."""

    def __init__(self, message, lo, hi):
        super().__init__(message)
        self.lo = lo
        self.hi = hi


class NormKind(str, enum.Enum):
    ONE = "one"
    INF = "inf"
    TWO = "two"
    FRO = "fro"

    @classmethod
    def parse(cls, value) -> "NormKind":
        if isinstance(value, cls):
            return value
        aliases = {"1": "one", "infinity": "inf", "frobenius": "fro", "2": "two"}
        key = str(value).strip().lower()
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(f"unknown norm {value!r}; expected one of one, inf, two, fro") from None

    @property
    def code(self) -> int:
        return _KIND_CODES[self]


_KIND_CODES = {
    NormKind.ONE: kernels.NORM_ONE,
    NormKind.INF: kernels.NORM_INF,
    NormKind.TWO: kernels.NORM_TWO,
    NormKind.FRO: kernels.NORM_FRO,
}


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and freeze a square real matrix."""
    try:
        arr = np.array(a, dtype=float)
    except (TypeError, ValueError) as exc:
        raise MatrixError(f"{name}: not a real matrix ({exc})") from None
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise MatrixError(f"{name}: expected a square matrix, got shape {arr.shape}")
    m = arr.shape[0]
    if m < 1:
        raise MatrixError(f"{name}: dimension must be at least 1")
    if m > MAX_DIM:
        raise MatrixError(f"{name}: dimension {m} exceeds the cap of {MAX_DIM}")
    if not np.isfinite(arr).all():
        raise MatrixError(f"{name}: entries must be finite")
    arr.flags.writeable = False
    return arr


def _checked(result: np.ndarray, what: str) -> np.ndarray:
    if not np.isfinite(result).all():
        raise OverflowError(f"{what} produced non-finite entries")
    result.flags.writeable = False
    return result


def identity(m: int) -> np.ndarray:
    return as_matrix(np.eye(m))


def multiply(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise MatrixError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    with np.errstate(over="ignore", invalid="ignore"):
        return _checked(a @ b, "multiply")


def scale(a, c: float) -> np.ndarray:
    a = as_matrix(a)
    if not math.isfinite(c):
        raise ValueError(f"scale factor must be finite, got {c!r}")
    with np.errstate(over="ignore", invalid="ignore"):
        return _checked(a * float(c), "scale")


def norm(a, kind=NormKind.INF) -> float:
    """Induced 1/inf/2 norm or Frobenius norm.

    The 2-norm is ``sqrt(rho(a^T a))`` from the spectral-radius routine,
    rounded to the upper end of its bracket.
    """
    return float(kernels.norm(as_matrix(a), NormKind.parse(kind).code))


def spectral_bracket(a, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """``(lo, hi)`` with ``lo <= rho(a) <= hi`` and ``hi - lo <= tol``.

    Raises :class:`SpectralRadiusError` when the iteration budget runs out.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    a = as_matrix(a)
    est, lo, hi, converged = kernels.spectral_radius(a, tol, MAX_SQUARINGS)
    if not converged:
        raise SpectralRadiusError(
            f"spectral radius not converged to {tol:g} (bracket [{lo:.12g}, {hi:.12g}])", lo, hi
        )
    return max(0.0, lo), hi


def spectral_radius(a, tol: float = DEFAULT_TOL) -> float:
    """Largest eigenvalue modulus of ``a`` within absolute ``tol``.

    Nonnegative matrices use power iteration on ``a/r + I`` (``r`` the max
    row sum) accelerated by repeated squaring, with a Collatz-Wielandt
    bracket as the stopping rule. The shift makes imprimitive matrices such
    as ``[[0, 2], [0.5, 0]]`` converge. Matrices with negative entries fall
    back to Gelfand's formula on ``a^(2^j)``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    a = as_matrix(a)
    est, lo, hi, converged = kernels.spectral_radius(a, tol, MAX_SQUARINGS)
    if not converged:
        raise SpectralRadiusError(
            f"spectral radius not converged to {tol:g} (bracket [{lo:.12g}, {hi:.12g}])", lo, hi
        )
    return max(0.0, float(est))


def matrix_power_norm(a, k: int, kind=NormKind.INF) -> float:
    """``||a^k||^(1/k)``, computed by squaring with a separate log scale."""
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    log_norm = kernels.power_log_norm(as_matrix(a), int(k), NormKind.parse(kind).code)
    if log_norm == -math.inf:
        return 0.0
    return math.exp(log_norm / int(k))


def norm_equivalence(kind, m: int) -> float:
    """Smallest ``kappa`` with ``||X||_inf <= kappa * ||X||_kind`` for all m x m X."""
    kind = NormKind.parse(kind)
    if kind is NormKind.INF:
        return 1.0
    if kind is NormKind.ONE:
        return float(m)
    return math.sqrt(m)


def vector_norm(v, kind=NormKind.INF) -> float:
    """Vector norm matching ``kind`` (l1, l-inf, l2; Frobenius reads as l2)."""
    v = np.asarray(v, dtype=float)
    kind = NormKind.parse(kind)
    if kind is NormKind.ONE:
        return float(np.abs(v).sum())
    if kind is NormKind.INF:
        return float(np.abs(v).max()) if v.size else 0.0
    return float(np.sqrt((v * v).sum()))
