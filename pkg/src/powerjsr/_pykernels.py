"""Pure-Python (numpy) implementations of the hot numerical kernels.

This module is the reference fallback for :mod:`powerjsr._ckernels`. Both
expose the same functions with the same signatures and algorithms; the
compiled one is selected at import time when available.

Products are carried as ``(N, L)`` pairs meaning ``exp(L) * N`` where ``N``
has unit max-abs entry, so long words never overflow.
"""

import math

import numpy as np

NORM_ONE = 0
NORM_INF = 1
NORM_TWO = 2
NORM_FRO = 3

_EPS = float(np.finfo(float).eps)
# components of the power-iteration vector below this (relative) size are
# dropped before forming the Collatz-Wielandt lower bound
_SUPPORT_CUTOFF = 1e-30
TWO_NORM_TOL = 1e-13

BACKEND = "python"


def spectral_radius(a, tol, max_squarings=64):
    """Spectral radius with a bracket.

    Returns ``(estimate, lo, hi, converged)``. For nonnegative input the
    bracket comes from Collatz-Wielandt ratios of the shifted matrix
    ``a/r + I`` evaluated on its repeatedly squared powers; otherwise it
    falls back to Gelfand's formula on ``a^(2^j)``.
    """
    a = np.asarray(a, dtype=float)
    m = a.shape[0]
    if m == 1:
        v = abs(float(a[0, 0]))
        return v, v, v, True
    if (a >= 0).all():
        return _sr_nonneg(a, tol, max_squarings)
    return _sr_gelfand(a, tol, max_squarings)


def _sr_nonneg(a, tol, max_squarings):
    m = a.shape[0]
    r = float(a.sum(axis=1).max())
    if r == 0.0:
        return 0.0, 0.0, 0.0, True
    b = a / r
    b[np.diag_indices(m)] += 1.0
    p = b.copy()
    tol_eff = max(tol / r, 64.0 * _EPS)
    lo, hi = 1.0, 2.0
    for _ in range(max_squarings):
        x = p.sum(axis=1)
        x = x / x.max()
        y = b @ x
        pos = x > 0.0
        hi = min(hi, float((y[pos] / x[pos]).max()))
        xs = np.where(x > _SUPPORT_CUTOFF, x, 0.0)
        ys = b @ xs
        sup = xs > 0.0
        lo = max(lo, float((ys[sup] / xs[sup]).min()))
        if hi - lo <= tol_eff:
            break
        p = p @ p
        p = p / p.max()
    else:
        return r * (0.5 * (lo + hi) - 1.0), r * (lo - 1.0), r * (hi - 1.0), False
    return r * (0.5 * (lo + hi) - 1.0), r * (lo - 1.0), r * (hi - 1.0), True


def _sr_gelfand(a, tol, max_squarings):
    mx = float(np.abs(a).max())
    if mx == 0.0:
        return 0.0, 0.0, 0.0, True
    n = a / mx
    log_scale = math.log(mx)
    k = 1.0
    prev = math.inf
    est = math.inf
    for _ in range(max_squarings):
        est = math.exp((log_scale + math.log(math.sqrt(float((n * n).sum())))) / k)
        diff = abs(prev - est)
        if diff <= tol / 8.0:
            return est, max(0.0, est - 2.0 * diff), est, True
        prev = est
        n = n @ n
        s = float(np.abs(n).max())
        if s == 0.0:
            return 0.0, 0.0, 0.0, True
        n /= s
        log_scale = 2.0 * log_scale + math.log(s)
        k *= 2.0
    return est, 0.0, est, False


def norm(a, kind):
    a = np.asarray(a, dtype=float)
    if kind == NORM_ONE:
        return float(np.abs(a).sum(axis=0).max())
    if kind == NORM_INF:
        return float(np.abs(a).sum(axis=1).max())
    if kind == NORM_FRO:
        return float(math.sqrt(float((a * a).sum())))
    if kind == NORM_TWO:
        mx = float(np.abs(a).max())
        if mx == 0.0:
            return 0.0
        s = a / mx
        # hi end of the bracket keeps this an upper bound
        _, _, hi, _ = spectral_radius(s.T @ s, TWO_NORM_TOL)
        return mx * math.sqrt(hi)
    raise ValueError(f"unknown norm kind {kind!r}")


def _log(x):
    return math.log(x) if x > 0.0 else -math.inf


def _normalize(p):
    s = float(np.abs(p).max())
    if s == 0.0:
        return p, -math.inf
    return p / s, math.log(s)


def power_log_norm(a, k, kind):
    """``log ||a^k||`` by binary exponentiation on normalized factors."""
    base, base_log = _normalize(np.asarray(a, dtype=float).copy())
    if base_log == -math.inf:
        return -math.inf
    acc = None
    acc_log = 0.0
    while True:
        if k & 1:
            if acc is None:
                acc, acc_log = base.copy(), base_log
            else:
                acc, s = _normalize(acc @ base)
                acc_log += s + base_log
                if acc_log == -math.inf:
                    return -math.inf
        k >>= 1
        if not k:
            break
        base, s = _normalize(base @ base)
        base_log = 2.0 * base_log + s
        if base_log == -math.inf:
            return -math.inf
    return acc_log + _log(norm(acc, kind))


def expand(parent, parent_log, members, kind, tol):
    """Right-multiply one normalized product by every member.

    Returns ``(children, child_logs, log_norms, log_rho_his)`` where child
    ``j`` represents ``exp(child_logs[j]) * children[j]``; the last two
    arrays hold the (unaveraged) log norm and the log of the upper end of a
    ``tol``-wide spectral radius bracket.
    """
    n = members.shape[0]
    m = members.shape[1]
    children = np.empty((n, m, m))
    child_logs = np.empty(n)
    log_norms = np.empty(n)
    log_rhos = np.empty(n)
    for j in range(n):
        c, s = _normalize(parent @ members[j])
        children[j] = c
        L = parent_log + s
        child_logs[j] = L
        if L == -math.inf:
            log_norms[j] = -math.inf
            log_rhos[j] = -math.inf
            continue
        log_norms[j] = L + _log(norm(c, kind))
        log_rhos[j] = L + _log(spectral_radius(c, tol)[2])
    return children, child_logs, log_norms, log_rhos


def _normalized_members(members):
    normed = np.empty_like(members)
    logs = np.empty(members.shape[0])
    for i in range(members.shape[0]):
        normed[i], logs[i] = _normalize(members[i])
    return normed, logs


def enumerate_words(members, depth, kind, tol, refine_tol, tie_tol):
    """Depth-first walk over every word of length 1..depth.

    Returns ``(best, witness, max_log_norm, count)``: ``best`` is the
    largest averaged log spectral radius (ties within ``tie_tol`` go to the
    shorter, then lexicographically smaller word), ``max_log_norm`` is the
    largest log norm among words of length exactly ``depth``.

    Spectral radii are screened at ``tol``; a word whose bracket reaches the
    current best is re-evaluated at ``refine_tol`` before comparing.
    """
    members = np.ascontiguousarray(members, dtype=float)
    n = members.shape[0]
    normed, logs = _normalized_members(members)
    state = {"best": -math.inf, "witness": None, "max_log_norm": -math.inf, "count": 0}
    word = []

    def visit(p, L):
        t = len(word)
        state["count"] += 1
        best, witness = state["best"], state["witness"]
        if L == -math.inf:
            val = -math.inf
        else:
            _, _, hi, _ = spectral_radius(p, tol)
            if witness is not None and (L + _log(hi)) / t < best - tie_tol:
                val = -math.inf
            else:
                val = (L + _log(spectral_radius(p, refine_tol)[0])) / t
        if (
            witness is None
            or val > best + tie_tol
            or (val >= best - tie_tol and (t, word) < (len(witness), list(witness)))
        ):
            state["best"] = val
            state["witness"] = tuple(word)
        if t == depth:
            if L != -math.inf:
                state["max_log_norm"] = max(state["max_log_norm"], L + _log(norm(p, kind)))
            return
        for j in range(n):
            c, s = _normalize(p @ normed[j])
            word.append(j)
            visit(c, L + s + logs[j])
            word.pop()

    for first in range(n):
        word.append(first)
        visit(normed[first], logs[first])
        word.pop()
    return state["best"], state["witness"], state["max_log_norm"], state["count"]


def max_log_norms_by_length(members, depth, kind):
    """Largest ``log ||P||`` over words of each length ``1..depth``."""
    members = np.ascontiguousarray(members, dtype=float)
    n = members.shape[0]
    normed, logs = _normalized_members(members)
    out = np.full(depth, -math.inf)

    def visit(p, L, t):
        if L != -math.inf:
            out[t - 1] = max(out[t - 1], L + _log(norm(p, kind)))
        if t == depth:
            return
        for j in range(n):
            c, s = _normalize(p @ normed[j])
            visit(c, L + s + logs[j], t + 1)

    for i in range(n):
        visit(normed[i], logs[i], 1)
    return out
