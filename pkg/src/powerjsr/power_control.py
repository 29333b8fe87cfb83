"""Uplink power control: interference matrices, SINR, and DPC/DBA updates.

Gains follow the convention ``G[i, j]`` = gain from mobile ``j`` to the
base serving mobile ``i``. SINR is a pure interference ratio (no thermal
noise term):

    sinr_i = P_i G_ii / sum_{j != i} P_j G_ij
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .jsr import UpdateSet
from .matrix_core import MAX_DIM, MatrixError, as_matrix


class Scheme(str, enum.Enum):
    DPC = "DPC"
    DBA = "DBA"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown scheme {value!r}; expected DPC or DBA") from None


class _Unbounded:
    """SINR marker for a link that sees no interference."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUNDED"

    def __str__(self):
        return "inf"

    def __reduce__(self):
        return (_Unbounded, ())


UNBOUNDED = _Unbounded()


class DegenerateInputError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GainMatrix:
    """Nonnegative link gains with a strictly positive diagonal."""

    entries: np.ndarray

    def __post_init__(self):
        g = np.array(self.entries, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 1:
            raise MatrixError(f"gain matrix must be square, got shape {g.shape}")
        if g.shape[0] > MAX_DIM:
            raise MatrixError(f"gain matrix dimension {g.shape[0]} exceeds the cap of {MAX_DIM}")
        if not np.isfinite(g).all():
            raise MatrixError("gain entries must be finite")
        neg = np.argwhere(g < 0)
        if len(neg):
            i, j = neg[0]
            raise MatrixError(f"gain[{i}][{j}] must be >= 0, got {g[i, j]!r}")
        for i in range(g.shape[0]):
            if not g[i, i] > 0:
                raise MatrixError(f"gain[{i}][{i}] must be > 0, got {g[i, i]!r}")
        g.flags.writeable = False
        object.__setattr__(self, "entries", g)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __eq__(self, other):
        if not isinstance(other, GainMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    __hash__ = None


def _gain(g) -> GainMatrix:
    return g if isinstance(g, GainMatrix) else GainMatrix(g)


def _power(p, m=None) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError(f"power vector must be one-dimensional, got shape {p.shape}")
    if m is not None and p.shape[0] != m:
        raise ValueError(f"power vector has length {p.shape[0]}, expected {m}")
    if not np.isfinite(p).all() or (p < 0).any():
        raise ValueError("powers must be finite and nonnegative")
    return p


def build_A(g) -> np.ndarray:
    """Normalized interference matrix: ``G_ij / G_ii`` off the diagonal, 0 on it."""
    g = _gain(g).entries
    a = g / np.diag(g)[:, None]
    np.fill_diagonal(a, 0.0)
    return as_matrix(a)


def build_Z(g) -> np.ndarray:
    """DBA update matrix ``A + I``."""
    a = build_A(g)
    return as_matrix(a + np.eye(a.shape[0]))


def sinr(p, g) -> tuple:
    """Per-link SINR; links without interference get :data:`UNBOUNDED`."""
    g = _gain(g).entries
    p = _power(p, g.shape[0])
    if not (p > 0).any():
        raise DegenerateInputError("all powers are zero; SINR is undefined")
    signal = p * np.diag(g)
    # off-diagonal sum taken directly; g @ p - signal cancels badly
    cross = g.copy()
    np.fill_diagonal(cross, 0.0)
    interference = cross @ p
    out = []
    for i in range(len(p)):
        if interference[i] > 0:
            out.append(float(signal[i] / interference[i]))
        elif signal[i] > 0:
            out.append(UNBOUNDED)
        else:
            raise DegenerateInputError(f"link {i} has neither signal nor interference")
    return tuple(out)


def _step_args(p, a, c):
    a = as_matrix(a)
    p = _power(p, a.shape[0])
    if not (math.isfinite(c) and c > 0):
        raise ValueError(f"c must be positive and finite, got {c!r}")
    return p, a, float(c)


def dpc_step(p, a, c: float) -> np.ndarray:
    """One DPC update ``c * A @ p`` (equals ``c * P_i / sinr_i`` componentwise)."""
    p, a, c = _step_args(p, a, c)
    return c * (a @ p)


def dba_step(p, a, c: float) -> np.ndarray:
    """One DBA update ``c * (A + I) @ p = c * (p + A @ p)``."""
    p, a, c = _step_args(p, a, c)
    return c * (p + a @ p)


@dataclass(frozen=True)
class CSchedule:
    """Sequence of positive constants ``c(0), c(1), ...``.

    ``explicit`` lists repeat cyclically past their end.
    """

    policy: str = "constant"
    c0: float = 1.0
    ratio: float = 1.0
    values: tuple = ()

    def __post_init__(self):
        if self.policy not in ("constant", "geometric", "explicit"):
            raise ValueError(f"unknown c-schedule policy {self.policy!r}")
        if self.policy == "explicit":
            vals = tuple(float(v) for v in self.values)
            if not vals:
                raise ValueError("explicit c-schedule needs at least one value")
            if not all(math.isfinite(v) and v > 0 for v in vals):
                raise ValueError("every c value must be positive and finite")
            object.__setattr__(self, "values", vals)
        else:
            if not (math.isfinite(self.c0) and self.c0 > 0):
                raise ValueError(f"c0 must be positive and finite, got {self.c0!r}")
            if not (math.isfinite(self.ratio) and self.ratio > 0):
                raise ValueError(f"ratio must be positive and finite, got {self.ratio!r}")
            object.__setattr__(self, "c0", float(self.c0))
            object.__setattr__(self, "ratio", float(self.ratio))

    @classmethod
    def constant(cls, c0: float) -> "CSchedule":
        return cls("constant", c0=c0)

    @classmethod
    def geometric(cls, c0: float, ratio: float) -> "CSchedule":
        return cls("geometric", c0=c0, ratio=ratio)

    @classmethod
    def explicit(cls, values) -> "CSchedule":
        return cls("explicit", values=tuple(values))

    def value(self, n: int) -> float:
        if self.policy == "constant":
            return self.c0
        if self.policy == "geometric":
            return self.c0 * self.ratio**n
        return self.values[n % len(self.values)]

    def take(self, count: int) -> list[float]:
        return [self.value(n) for n in range(count)]

    def envelope(self, horizon: int) -> float:
        """Largest ``c(n)`` for ``n < horizon``."""
        if self.policy == "constant":
            return self.c0
        if self.policy == "geometric":
            return max(self.c0, self.value(horizon - 1))
        return max(self.values[: horizon] or self.values)


class CProductVerdict(str, enum.Enum):
    BOUNDED = "bounded"
    UNBOUNDED = "unbounded"
    INCONCLUSIVE = "inconclusive"


def c_product_verdict(schedule: CSchedule, horizon: int = 1000) -> CProductVerdict:
    """Is the running product of ``c(n)`` bounded?

    Constant and geometric schedules are decided in closed form. Explicit
    lists are judged from the partial products up to ``horizon``: bounded
    when the final quarter sets no new maximum, inconclusive otherwise.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if schedule.policy == "constant":
        return CProductVerdict.BOUNDED if schedule.c0 <= 1.0 else CProductVerdict.UNBOUNDED
    if schedule.policy == "geometric":
        if schedule.ratio < 1.0:
            return CProductVerdict.BOUNDED
        if schedule.ratio > 1.0:
            return CProductVerdict.UNBOUNDED
        return CProductVerdict.BOUNDED if schedule.c0 <= 1.0 else CProductVerdict.UNBOUNDED
    logs = np.cumsum(np.log(schedule.take(horizon)))
    head = max(1, (3 * horizon) // 4)
    if logs[head:].size == 0 or logs[head:].max() <= logs[:head].max():
        return CProductVerdict.BOUNDED
    return CProductVerdict.INCONCLUSIVE


def build_update_set(gains, schedule: CSchedule, scheme) -> UpdateSet:
    """``B(i) = c(i) A(i)`` for DPC or ``c(i) (A(i) + I)`` for DBA.

    ``c(i)`` is the schedule's ``i``-th value, one per gain matrix.
    """
    scheme = Scheme.parse(scheme)
    gains = [_gain(g) for g in gains]
    if not gains:
        raise ValueError("need at least one gain matrix")
    dims = {g.dim for g in gains}
    if len(dims) != 1:
        raise MatrixError(f"gain matrices have different dimensions {sorted(dims)}")
    build = build_A if scheme is Scheme.DPC else build_Z
    members = tuple(schedule.value(i) * build(g) for i, g in enumerate(gains))
    prefix = "A" if scheme is Scheme.DPC else "Z"
    return UpdateSet(members, tuple(f"c*{prefix}{i}" for i in range(len(gains))))
