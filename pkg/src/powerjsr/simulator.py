"""Roll out switched power-control trajectories and judge boundedness."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .jsr import JsrEstimate, StabilityCertificate, UpdateSet
from .matrix_core import NormKind, vector_norm
from .power_control import CProductVerdict, CSchedule, GainMatrix, c_product_verdict, sinr

DIVERGE_FACTOR = 1e9
ABSORB_FACTOR = 1e-12
_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 (Steele, Lea, Flood 2014): a fixed, portable 64-bit stream.

    ``below(n)`` draws uniformly from ``range(n)`` by rejection, so every
    platform produces the same index sequence for a given seed.
    """

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        threshold = (1 << 64) % n
        while True:
            r = self.next_u64()
            if r >= threshold:
                return r % n


@dataclass(frozen=True)
class SwitchingPolicy:
    kind: str
    seed: int = 0
    word: tuple = ()
    norm: NormKind = NormKind.INF

    def __post_init__(self):
        if self.kind not in ("iid_uniform", "cyclic", "greedy_adversarial"):
            raise ValueError(f"unknown switching policy {self.kind!r}")
        if self.kind == "cyclic" and not self.word:
            raise ValueError("cyclic policy needs a nonempty word")
        if not 0 <= int(self.seed) <= _MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "word", tuple(int(i) for i in self.word))
        object.__setattr__(self, "norm", NormKind.parse(self.norm))

    @classmethod
    def iid_uniform(cls, seed: int) -> "SwitchingPolicy":
        return cls("iid_uniform", seed=seed)

    @classmethod
    def cyclic(cls, word) -> "SwitchingPolicy":
        """Repeat ``word`` in time order: step n uses ``word[n % len(word)]``."""
        return cls("cyclic", word=tuple(word))

    @classmethod
    def witness_replay(cls, witness) -> "SwitchingPolicy":
        """Cyclic replay realizing the product of a JSR witness word.

        Witness words list the most recent factor first, so the time-order
        sequence is the reversed word.
        """
        return cls("cyclic", word=tuple(reversed(tuple(witness))))

    @classmethod
    def greedy_adversarial(cls, norm=NormKind.INF) -> "SwitchingPolicy":
        return cls("greedy_adversarial", norm=norm)


@dataclass(frozen=True, eq=False)
class Trajectory:
    powers: np.ndarray  # shape (steps + 1, m)
    switch_indices: tuple
    c_values: tuple
    norms: np.ndarray  # ||P(n)||_inf
    sinrs: tuple | None = None  # one SinrVector per transition
    status: str = "completed"  # or "diverged" / "absorbed"
    crossing_step: int | None = None

    @property
    def steps(self) -> int:
        return len(self.switch_indices)


def greedy_adversarial_choice(uset: UpdateSet, p, norm=NormKind.INF) -> int:
    """Member maximizing ``||B p||``; ties go to the lowest index."""
    p = np.asarray(p, dtype=float)
    if not np.any(p):
        raise ValueError("power vector must be nonzero")
    norm = NormKind.parse(norm)
    best, best_i = -math.inf, 0
    for i, member in enumerate(uset.members):
        v = vector_norm(member @ p, norm)
        if v > best:
            best, best_i = v, i
    return best_i


def run_trajectory(
    uset: UpdateSet,
    schedule: CSchedule,
    policy: SwitchingPolicy,
    p0,
    steps: int,
    gains=None,
    diverge: float = DIVERGE_FACTOR,
    absorb: float = ABSORB_FACTOR,
) -> Trajectory:
    """Iterate ``P(n+1) = c(n) * B[s(n)] @ P(n)`` under a switching policy.

    Stops early once ``||P(n)||_inf`` reaches ``diverge * ||P(0)||_inf``
    (status ``diverged``) or falls below ``absorb * ||P(0)||_inf`` (status
    ``absorbed``). When ``gains`` is given, the SINR seen at each step is
    logged from the gain matrix matching the chosen member.
    """
    if int(steps) != steps or steps < 1:
        raise ValueError("steps must be a positive integer")
    p = np.array(p0, dtype=float)
    if p.shape != (uset.dim,):
        raise ValueError(f"p0 must have length {uset.dim}")
    if not np.isfinite(p).all() or (p < 0).any() or not p.any():
        raise ValueError("p0 must be nonnegative, finite and nonzero")
    if gains is not None:
        gains = [g if isinstance(g, GainMatrix) else GainMatrix(g) for g in gains]
        if len(gains) != len(uset):
            raise ValueError("gains must align one to one with the update set")
    for i in policy.word:
        if not 0 <= i < len(uset):
            raise ValueError(f"cyclic word index {i} out of range")

    rng = SplitMix64(policy.seed) if policy.kind == "iid_uniform" else None
    p0_norm = float(np.abs(p).max())
    hi = diverge * p0_norm
    lo = absorb * p0_norm
    powers = [p]
    norms = [p0_norm]
    indices, cs, sinrs = [], [], []
    status, crossing = "completed", None
    for n in range(int(steps)):
        if policy.kind == "iid_uniform":
            i = rng.below(len(uset))
        elif policy.kind == "cyclic":
            i = policy.word[n % len(policy.word)]
        else:
            i = greedy_adversarial_choice(uset, p, policy.norm)
        c = schedule.value(n)
        if gains is not None:
            sinrs.append(sinr(p, gains[i]))
        with np.errstate(over="ignore", invalid="ignore"):
            p = c * (uset.members[i] @ p)
        indices.append(i)
        cs.append(c)
        powers.append(p)
        nrm = float(np.abs(p).max())
        norms.append(nrm)
        if not math.isfinite(nrm) or nrm >= hi:
            status, crossing = "diverged", n + 1
            break
        if nrm <= lo:
            status, crossing = "absorbed", n + 1
            break
    return Trajectory(
        powers=np.array(powers),
        switch_indices=tuple(indices),
        c_values=tuple(cs),
        norms=np.array(norms),
        sinrs=tuple(sinrs) if gains is not None else None,
        status=status,
        crossing_step=crossing,
    )


def replay(uset: UpdateSet, traj: Trajectory) -> np.ndarray:
    """Recompute powers from the recorded switch indices and c values."""
    p = traj.powers[0]
    out = [p]
    for i, c in zip(traj.switch_indices, traj.c_values):
        with np.errstate(over="ignore", invalid="ignore"):
            p = c * (uset.members[i] @ p)
        out.append(p)
    return np.array(out)


def default_burn_in(steps: int) -> int:
    return max(5, steps // 4)


def fit_decay_rate(traj: Trajectory, burn_in: int | None = None) -> float:
    """``exp`` of the least-squares slope of ``log ||P(n)||_inf`` for n >= burn_in."""
    if burn_in is None:
        burn_in = default_burn_in(traj.steps)
    norms = traj.norms[burn_in:]
    if len(norms) < 2:
        raise ValueError(f"need at least 2 samples after burn-in {burn_in}, have {len(norms)}")
    if not np.isfinite(norms).all() or (norms <= 0).any():
        raise ValueError("cannot fit decay rate: zero or non-finite norms")
    n = np.arange(burn_in, burn_in + len(norms), dtype=float)
    slope = np.polyfit(n, np.log(norms), 1)[0]
    return math.exp(float(slope))


class Verdict(str, enum.Enum):
    CERTIFIED_BOUNDED = "certified_bounded"
    EMPIRICALLY_BOUNDED = "empirically_bounded"
    DIVERGED = "diverged"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class BoundednessVerdict:
    tag: Verdict
    decay_rate: float | None = None
    crossing_step: int | None = None
    crossing_trajectory: int | None = None
    c_verdict: CProductVerdict = CProductVerdict.BOUNDED
    certificate: StabilityCertificate | None = field(default=None, compare=False)


def verdict(
    uset: UpdateSet,
    schedule: CSchedule,
    estimate: JsrEstimate,
    trajectories,
    threshold: float = DIVERGE_FACTOR,
    horizon: int = 1000,
    certificate: StabilityCertificate | None = None,
) -> BoundednessVerdict:
    """Combine the JSR bracket, the c-product test and simulated runs.

    ``certified_bounded`` needs ``estimate.upper < 1`` and a bounded
    c-product. Otherwise a trajectory whose norm reached
    ``threshold * ||P(0)||`` gives ``diverged``, runs that all stayed below
    give ``empirically_bounded``, and no runs at all give ``inconclusive``.
    A lower bound above one never yields a verdict on its own.
    """
    if estimate.set_fingerprint and estimate.set_fingerprint != uset.fingerprint:
        raise ValueError("estimate was computed for a different update set")
    c_verdict = c_product_verdict(schedule, horizon)
    rates = []
    for traj in trajectories:
        try:
            rates.append(fit_decay_rate(traj))
        except ValueError:
            pass
    rate = max(rates) if rates else None
    if estimate.upper < 1.0 and c_verdict is CProductVerdict.BOUNDED:
        return BoundednessVerdict(
            Verdict.CERTIFIED_BOUNDED, rate, c_verdict=c_verdict, certificate=certificate
        )
    crossing, which = None, None
    for k, traj in enumerate(trajectories):
        limit = threshold * traj.norms[0]
        over = np.nonzero(~(traj.norms < limit))[0]
        if over.size and (crossing is None or over[0] < crossing):
            crossing, which = int(over[0]), k
    if crossing is not None:
        return BoundednessVerdict(Verdict.DIVERGED, rate, crossing, which, c_verdict)
    if len(trajectories) == 0:
        return BoundednessVerdict(Verdict.INCONCLUSIVE, None, c_verdict=c_verdict)
    return BoundednessVerdict(Verdict.EMPIRICALLY_BOUNDED, rate, c_verdict=c_verdict)
