"""Joint spectral radius brackets for finite matrix sets.

A word ``(i_{t-1}, ..., i_0)`` stands for the product
``M[i_{t-1}] @ ... @ M[i_0]``: the first index is the most recent factor.
"""

from __future__ import annotations

import hashlib
import heapq
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .matrix_core import MatrixError, NormKind, as_matrix, spectral_bracket

DEFAULT_BUDGET = 2_000_000
DEFAULT_DEPTH = 16
SEARCH_TOL = 1e-7
VERIFY_TOL = 1e-10
# candidates are compared in log space; closer than this counts as a tie
TIE_TOL = 1e-9
# relative outward rounding applied to every reported upper bound
UPPER_SLACK = 1e-12


class BudgetExceeded(UserWarning):
    """The product budget capped the search; results are flagged inconclusive."""


class CertificateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class UpdateSet:
    """Finite alphabet of equally sized update matrices."""

    members: tuple
    labels: tuple = ()

    def __post_init__(self):
        if len(self.members) == 0:
            raise MatrixError("update set must have at least one member")
        members = tuple(as_matrix(mat, f"member {i}") for i, mat in enumerate(self.members))
        dims = {mat.shape[0] for mat in members}
        if len(dims) != 1:
            raise MatrixError(f"update set members have different dimensions {sorted(dims)}")
        labels = tuple(self.labels) or tuple(f"B{i}" for i in range(len(members)))
        if len(labels) != len(members):
            raise ValueError("labels must match members one to one")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "labels", labels)
        stacked = np.ascontiguousarray(np.stack(members))
        stacked.flags.writeable = False
        object.__setattr__(self, "_stacked", stacked)

    @classmethod
    def of(cls, *matrices, labels=()):
        return cls(tuple(matrices), tuple(labels))

    @property
    def dim(self) -> int:
        return self.members[0].shape[0]

    def __len__(self):
        return len(self.members)

    def __eq__(self, other):
        if not isinstance(other, UpdateSet):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self._stacked, other._stacked)

    __hash__ = None

    @property
    def stacked(self) -> np.ndarray:
        return self._stacked

    @property
    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.asarray(self._stacked.shape, dtype=np.int64).tobytes())
        h.update(self._stacked.tobytes())
        return h.hexdigest()[:16]

    def product(self, word) -> np.ndarray:
        """The matrix product for ``word`` (most recent factor first)."""
        out = np.eye(self.dim)
        for i in word:
            out = out @ self.members[i]
        return out

    def log_product(self, word) -> tuple[np.ndarray, float]:
        """``(N, L)`` with ``product(word) == exp(L) * N`` and max|N| = 1."""
        self._check_word(word)
        out = np.eye(self.dim)
        log_scale = 0.0
        for i in word:
            out = out @ self.members[i]
            s = float(np.abs(out).max())
            if s == 0.0:
                return np.zeros_like(out), -math.inf
            out /= s
            log_scale += math.log(s)
        return out, log_scale

    def _check_word(self, word):
        if len(word) == 0:
            raise ValueError("word must be nonempty")
        for i in word:
            if not 0 <= i < len(self.members):
                raise ValueError(f"word index {i} out of range for {len(self.members)} members")


@dataclass(frozen=True)
class JsrEstimate:
    lower: float
    upper: float
    witness: tuple
    depth_explored: int
    products_evaluated: int
    norm_used: NormKind
    conclusive: bool = True
    set_fingerprint: str = field(default="", compare=False)

    @property
    def gap(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class StabilityCertificate:
    """``||any product of length t|| <= C * gamma**t`` for every t >= 1."""

    C: float
    gamma: float
    norm_used: NormKind
    depth: int

    def __post_init__(self):
        if not self.C >= 1.0:
            raise ValueError("C must be >= 1")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")

    def bound(self, t: int) -> float:
        return self.C * self.gamma**t


def word_growth(uset: UpdateSet, word, tol: float = VERIFY_TOL) -> float:
    """``rho(product(word)) ** (1/len(word))`` evaluated without overflow.

    Uses the lower end of the spectral-radius bracket, so the value is a
    valid lower bound for the joint spectral radius.
    """
    n_mat, log_scale = uset.log_product(word)
    if log_scale == -math.inf:
        return 0.0
    rho = kernels.spectral_radius(n_mat, tol, 64)[1]
    if rho <= 0.0:
        return 0.0
    return math.exp((log_scale + math.log(rho)) / len(word))


def scale_set(uset: UpdateSet, c: float) -> UpdateSet:
    if not (math.isfinite(c) and c > 0):
        raise ValueError(f"scale factor must be positive and finite, got {c!r}")
    return UpdateSet(tuple(m * float(c) for m in uset.members), uset.labels)


def _products_up_to(n: int, depth: int) -> int:
    return sum(n**t for t in range(1, depth + 1))


def feasible_depth(n: int, depth: int, budget: int) -> int:
    """Largest ``d <= depth`` whose full word tree fits in ``budget`` products."""
    d = 1
    while d < depth and _products_up_to(n, d + 1) <= budget:
        d += 1
    return d


def _round_up(x: float) -> float:
    return x * (1.0 + UPPER_SLACK) if x > 0 else x


def brute_force_bounds(
    uset: UpdateSet, depth: int = DEFAULT_DEPTH, norm=NormKind.INF, budget: int = DEFAULT_BUDGET
) -> JsrEstimate:
    """Exhaustive bracket from all products of length ``<= depth``.

    ``lower`` is the best averaged spectral radius over every word up to
    ``depth``; ``upper`` is the largest averaged norm over words of length
    exactly ``depth``. If the word tree exceeds ``budget`` the search runs
    at the deepest affordable level and the result is marked inconclusive.
    """
    if int(depth) != depth or depth < 1:
        raise ValueError("depth must be a positive integer")
    norm = NormKind.parse(norm)
    n = len(uset)
    d = feasible_depth(n, int(depth), budget)
    conclusive = d == depth
    if not conclusive:
        warnings.warn(
            f"depth {depth} needs {_products_up_to(n, depth)} products (budget {budget}); "
            f"searched depth {d}",
            BudgetExceeded,
            stacklevel=2,
        )
    best, witness, max_log_norm, count = kernels.enumerate_words(
        uset.stacked, d, norm.code, SEARCH_TOL, VERIFY_TOL, TIE_TOL
    )
    lower = word_growth(uset, witness)
    upper = 0.0 if max_log_norm == -math.inf else _round_up(math.exp(max_log_norm / d))
    return JsrEstimate(
        lower=min(lower, upper),
        upper=upper,
        witness=tuple(int(i) for i in witness),
        depth_explored=d,
        products_evaluated=int(count),
        norm_used=norm,
        conclusive=conclusive,
        set_fingerprint=uset.fingerprint,
    )


def gripenberg_estimate(
    uset: UpdateSet, delta: float, norm=NormKind.INF, budget: int = DEFAULT_BUDGET
) -> JsrEstimate:
    """Branch-and-bound bracket with ``upper - lower <= delta`` on success.

    Best-first search over the word tree. Every node carries
    ``v(w) = min over prefixes p of ||P_p||^(1/|p|)``; the leaves of the
    explored tree cover every infinite word, so the largest ``v`` among
    leaves bounds the joint spectral radius from above. Nodes with
    ``v <= lower + delta`` are not expanded. The lower bound is the best
    averaged spectral radius seen at any node.

    A singleton set reduces to the spectral radius of its member.
    """
    return _gripenberg(uset, delta, norm, budget)[0]


def gripenberg_certificate(
    uset: UpdateSet, delta: float, norm=NormKind.INF, budget: int = DEFAULT_BUDGET
) -> tuple[JsrEstimate, StabilityCertificate | None]:
    """:func:`gripenberg_estimate` plus a certificate with ``gamma = upper``.

    The certificate is read off the search tree. Every infinite word has a
    prefix ``q`` with ``||P_q|| <= gamma**|q|`` inside the explored tree,
    so a product splits into such blocks and a remainder that is an
    expanded node. Hence ``C`` is the largest ``||P_w|| / gamma**|w|`` over
    expanded nodes ``w`` (and at least 1). Returns ``None`` for the
    certificate when ``upper >= 1``; a singleton set falls back to
    :func:`certificate_from_upper`.
    """
    est, expanded = _gripenberg(uset, delta, norm, budget)
    if not 0.0 < est.upper < 1.0:
        return est, None
    if expanded is None:
        try:
            return est, certificate_from_upper(uset, est.upper, est.norm_used, budget=budget)
        except CertificateError:
            return est, None
    lengths, log_norms = expanded
    log_gamma = math.log(est.upper)
    excess = max(0.0, float(np.max(log_norms - lengths * log_gamma)))
    cert = StabilityCertificate(
        C=_round_up(math.exp(excess)), gamma=est.upper, norm_used=est.norm_used, depth=est.depth_explored
    )
    return est, cert


def _gripenberg(uset, delta, norm, budget):
    if not delta > 0:
        raise ValueError("delta must be positive")
    norm = NormKind.parse(norm)
    n = len(uset)
    if n == 1:
        return _singleton_estimate(uset, delta, norm), None

    stacked = uset.stacked
    state = {"best": -math.inf, "witness": None}

    def offer(word, log_rho_hi, n_mat, log_scale):
        t = len(word)
        best, witness = state["best"], state["witness"]
        if log_scale == -math.inf:
            val = -math.inf
        elif witness is not None and log_rho_hi / t < best - TIE_TOL:
            return
        else:
            rho = kernels.spectral_radius(n_mat, VERIFY_TOL, 64)[0]
            val = (log_scale + math.log(rho)) / t if rho > 0 else -math.inf
        if (
            witness is None
            or val > best + TIE_TOL
            or (val >= best - TIE_TOL and (t, word) < (len(witness), witness))
        ):
            state["best"] = val
            state["witness"] = word

    def lower_value():
        return math.exp(state["best"]) if state["best"] > -math.inf else 0.0

    # (length, log norm) of every expanded node, the root included
    exp_lengths = [0]
    exp_logs = [0.0]

    # root: the identity, whose children are the members themselves
    children, child_logs, log_norms, log_rho_his = kernels.expand(
        np.eye(uset.dim), 0.0, stacked, norm.code, SEARCH_TOL
    )
    evaluated = n
    heap = []
    pruned_max = -math.inf
    depth_explored = 1
    for j in range(n):
        offer((j,), log_rho_his[j], children[j], child_logs[j])
    prune_at = math.log(lower_value() + delta)
    for j in range(n):
        v = log_norms[j]
        if v <= prune_at:
            pruned_max = max(pruned_max, v)
        else:
            heapq.heappush(heap, (-v, 1, (j,), children[j], child_logs[j], log_norms[j]))

    conclusive = True
    while True:
        top = -heap[0][0] if heap else -math.inf
        upper_log = max(top, pruned_max)
        upper = 0.0 if upper_log == -math.inf else math.exp(upper_log)
        if upper - lower_value() <= delta:
            break
        if evaluated + n > budget:
            conclusive = False
            break
        neg_v, t, word, n_mat, log_scale, log_norm = heapq.heappop(heap)
        v = -neg_v
        prune_at = math.log(lower_value() + delta)
        if v <= prune_at:
            pruned_max = max(pruned_max, v)
            continue
        children, child_logs, log_norms, log_rho_his = kernels.expand(
            n_mat, log_scale, stacked, norm.code, SEARCH_TOL
        )
        evaluated += n
        exp_lengths.append(t)
        exp_logs.append(log_norm)
        depth_explored = max(depth_explored, t + 1)
        for j in range(n):
            offer(word + (j,), log_rho_his[j], children[j], child_logs[j])
        prune_at = math.log(lower_value() + delta)
        for j in range(n):
            child_v = min(v, log_norms[j] / (t + 1))
            if child_v <= prune_at:
                pruned_max = max(pruned_max, child_v)
            else:
                heapq.heappush(
                    heap, (-child_v, t + 1, word + (j,), children[j], child_logs[j], log_norms[j])
                )

    upper = _round_up(upper)
    witness = state["witness"]
    lower = word_growth(uset, witness)
    est = JsrEstimate(
        lower=min(lower, upper),
        upper=upper,
        witness=witness,
        depth_explored=depth_explored,
        products_evaluated=evaluated,
        norm_used=norm,
        conclusive=conclusive,
        set_fingerprint=uset.fingerprint,
    )
    return est, (np.array(exp_lengths, dtype=float), np.array(exp_logs))


def _singleton_estimate(uset, delta, norm):
    lo, hi = spectral_bracket(uset.members[0], min(VERIFY_TOL, delta / 2))
    return JsrEstimate(
        lower=lo,
        upper=_round_up(hi),
        witness=(0,),
        depth_explored=1,
        products_evaluated=1,
        norm_used=norm,
        conclusive=True,
        set_fingerprint=uset.fingerprint,
    )


def certificate_from_upper(
    uset: UpdateSet,
    upper: float,
    norm=NormKind.INF,
    max_depth: int = DEFAULT_DEPTH,
    budget: int = DEFAULT_BUDGET,
) -> StabilityCertificate:
    """Turn an upper bound below one into explicit ``(C, gamma)``.

    Finds the smallest depth ``d`` at which every length-``d`` product has
    norm at most ``upper**d``; then ``gamma = upper`` and ``C`` is the
    largest ``||P|| / gamma**r`` over shorter products (at least 1).
    Splitting any product into blocks of ``d`` plus a shorter remainder
    gives ``||P_t|| <= C * gamma**t``.
    """
    if not 0.0 < upper < 1.0:
        raise CertificateError(f"upper bound must lie in (0, 1), got {upper!r}")
    norm = NormKind.parse(norm)
    d_max = feasible_depth(len(uset), max_depth, budget)
    logs = kernels.max_log_norms_by_length(uset.stacked, d_max, norm.code)
    log_gamma = math.log(upper)
    for d in range(1, d_max + 1):
        if logs[d - 1] <= d * log_gamma:
            ratios = [logs[r - 1] - r * log_gamma for r in range(1, d)]
            c = max([1.0] + [math.exp(x) for x in ratios if x > -math.inf])
            return StabilityCertificate(C=c, gamma=upper, norm_used=norm, depth=d)
    raise CertificateError(
        f"no depth up to {d_max} has all product norms within upper**d for upper={upper:.12g}"
    )


def instability_witness(uset: UpdateSet, depth: int = DEFAULT_DEPTH, budget: int = DEFAULT_BUDGET):
    """A word whose averaged spectral radius exceeds one, or ``None``.

    ``None`` does not certify stability. When the budget caps the depth a
    :class:`BudgetExceeded` warning is issued.
    """
    est = brute_force_bounds(uset, depth, NormKind.INF, budget)
    if est.lower > 1.0 + VERIFY_TOL:
        return est.witness
    return None
