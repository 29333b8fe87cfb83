# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Same API and algorithms as ``_pykernels``."""

import numpy as np

from libc.math cimport fabs, log, exp, sqrt, INFINITY
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

NORM_ONE = 0
NORM_INF = 1
NORM_TWO = 2
NORM_FRO = 3

TWO_NORM_TOL = 1e-13
BACKEND = "cython"

cdef double _EPS = 2.220446049250313e-16
cdef double _SUPPORT_CUTOFF = 1e-30
cdef double TWO_NORM_TOL_C = 1e-13


cdef inline void _matmul(const double* a, const double* b, double* out, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double aik
    for i in range(m * m):
        out[i] = 0.0
    for i in range(m):
        for k in range(m):
            aik = a[i * m + k]
            if aik != 0.0:
                for j in range(m):
                    out[i * m + j] += aik * b[k * m + j]


cdef inline double _normalize(double* p, Py_ssize_t size) noexcept nogil:
    """Divide by the max-abs entry in place; return its log (-inf if zero)."""
    cdef Py_ssize_t i
    cdef double s = 0.0, v
    for i in range(size):
        v = fabs(p[i])
        if v > s:
            s = v
    if s == 0.0:
        return -INFINITY
    for i in range(size):
        p[i] /= s
    return log(s)


cdef inline double _log(double x) noexcept nogil:
    if x > 0.0:
        return log(x)
    return -INFINITY


# workspace: 4*m*m + 4*m doubles
cdef double _sr_nonneg(const double* a, Py_ssize_t m, double tol, int maxsq,
                       double* lo_out, double* hi_out, int* conv, double* ws) noexcept nogil:
    cdef double* b = ws
    cdef double* p = ws + m * m
    cdef double* t = ws + 2 * m * m
    cdef double* x = ws + 3 * m * m
    cdef double* y = x + m
    cdef double* xs = y + m
    cdef double* ys = xs + m
    cdef Py_ssize_t i, j, it
    cdef double r = 0.0, rs, xmax, ratio, lo = 1.0, hi = 2.0, cur_hi, cur_lo, tol_eff
    cdef int have_lo
    for i in range(m):
        rs = 0.0
        for j in range(m):
            rs += a[i * m + j]
        if rs > r:
            r = rs
    if r == 0.0:
        lo_out[0] = 0.0
        hi_out[0] = 0.0
        conv[0] = 1
        return 0.0
    for i in range(m * m):
        b[i] = a[i] / r
    for i in range(m):
        b[i * m + i] += 1.0
    memcpy(p, b, m * m * sizeof(double))
    tol_eff = tol / r
    if tol_eff < 64.0 * _EPS:
        tol_eff = 64.0 * _EPS
    conv[0] = 0
    for it in range(maxsq):
        xmax = 0.0
        for i in range(m):
            rs = 0.0
            for j in range(m):
                rs += p[i * m + j]
            x[i] = rs
            if rs > xmax:
                xmax = rs
        for i in range(m):
            x[i] /= xmax
            xs[i] = x[i] if x[i] > _SUPPORT_CUTOFF else 0.0
        for i in range(m):
            y[i] = 0.0
            ys[i] = 0.0
            for j in range(m):
                y[i] += b[i * m + j] * x[j]
                ys[i] += b[i * m + j] * xs[j]
        cur_hi = -INFINITY
        cur_lo = INFINITY
        have_lo = 0
        for i in range(m):
            if x[i] > 0.0:
                ratio = y[i] / x[i]
                if ratio > cur_hi:
                    cur_hi = ratio
            if xs[i] > 0.0:
                ratio = ys[i] / xs[i]
                if ratio < cur_lo:
                    cur_lo = ratio
                have_lo = 1
        if cur_hi < hi:
            hi = cur_hi
        if have_lo and cur_lo > lo:
            lo = cur_lo
        if hi - lo <= tol_eff:
            conv[0] = 1
            break
        _matmul(p, p, t, m)
        xmax = 0.0
        for i in range(m * m):
            if t[i] > xmax:
                xmax = t[i]
        for i in range(m * m):
            p[i] = t[i] / xmax
    lo_out[0] = r * (lo - 1.0)
    hi_out[0] = r * (hi - 1.0)
    return r * (0.5 * (lo + hi) - 1.0)


cdef double _sr_gelfand(const double* a, Py_ssize_t m, double tol, int maxsq,
                        double* lo_out, double* hi_out, int* conv, double* ws) noexcept nogil:
    cdef double* n = ws
    cdef double* t = ws + m * m
    cdef Py_ssize_t i, it
    cdef double mx = 0.0, log_scale, k = 1.0, prev = INFINITY, est = INFINITY, f, diff, s
    for i in range(m * m):
        if fabs(a[i]) > mx:
            mx = fabs(a[i])
    conv[0] = 1
    if mx == 0.0:
        lo_out[0] = 0.0
        hi_out[0] = 0.0
        return 0.0
    for i in range(m * m):
        n[i] = a[i] / mx
    log_scale = log(mx)
    for it in range(maxsq):
        f = 0.0
        for i in range(m * m):
            f += n[i] * n[i]
        est = exp((log_scale + log(sqrt(f))) / k)
        diff = fabs(prev - est)
        if diff <= tol / 8.0:
            lo_out[0] = est - 2.0 * diff if est > 2.0 * diff else 0.0
            hi_out[0] = est
            return est
        prev = est
        _matmul(n, n, t, m)
        s = _normalize(t, m * m)
        if s == -INFINITY:
            lo_out[0] = 0.0
            hi_out[0] = 0.0
            return 0.0
        memcpy(n, t, m * m * sizeof(double))
        log_scale = 2.0 * log_scale + s
        k *= 2.0
    conv[0] = 0
    lo_out[0] = 0.0
    hi_out[0] = est
    return est


cdef double _sr(const double* a, Py_ssize_t m, double tol, int maxsq,
                double* lo, double* hi, int* conv, double* ws) noexcept nogil:
    cdef Py_ssize_t i
    cdef double v
    if m == 1:
        v = fabs(a[0])
        lo[0] = v
        hi[0] = v
        conv[0] = 1
        return v
    for i in range(m * m):
        if a[i] < 0.0:
            return _sr_gelfand(a, m, tol, maxsq, lo, hi, conv, ws)
    return _sr_nonneg(a, m, tol, maxsq, lo, hi, conv, ws)


cdef inline Py_ssize_t _ws_size(Py_ssize_t m) noexcept nogil:
    # norm(two) needs m*m for a^T a plus the spectral-radius workspace
    return 5 * m * m + 4 * m


cdef double _norm(const double* a, Py_ssize_t m, int kind, double* ws) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double best = 0.0, acc, mx, lo, hi
    cdef int conv
    cdef double* s
    if kind == 0:
        for j in range(m):
            acc = 0.0
            for i in range(m):
                acc += fabs(a[i * m + j])
            if acc > best:
                best = acc
        return best
    if kind == 1:
        for i in range(m):
            acc = 0.0
            for j in range(m):
                acc += fabs(a[i * m + j])
            if acc > best:
                best = acc
        return best
    if kind == 3:
        acc = 0.0
        for i in range(m * m):
            acc += a[i] * a[i]
        return sqrt(acc)
    # two-norm: sqrt(rho(s^T s)) with s = a / max|a|
    mx = 0.0
    for i in range(m * m):
        if fabs(a[i]) > mx:
            mx = fabs(a[i])
    if mx == 0.0:
        return 0.0
    s = ws + 4 * m * m + 4 * m
    for i in range(m):
        for j in range(m):
            acc = 0.0
            for k in range(m):
                acc += a[k * m + i] * a[k * m + j]
            s[i * m + j] = acc / (mx * mx)
    _sr(s, m, TWO_NORM_TOL_C, 64, &lo, &hi, &conv, ws)
    return mx * sqrt(hi)



def spectral_radius(a, double tol, int max_squarings=64):
    cdef const double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t m = av.shape[0]
    cdef double lo, hi, est
    cdef int conv
    cdef double* ws = <double*> malloc(_ws_size(m) * sizeof(double))
    if ws == NULL:
        raise MemoryError()
    try:
        with nogil:
            est = _sr(&av[0, 0], m, tol, max_squarings, &lo, &hi, &conv, ws)
    finally:
        free(ws)
    return est, lo, hi, bool(conv)


def norm(a, int kind):
    if kind < 0 or kind > 3:
        raise ValueError(f"unknown norm kind {kind!r}")
    cdef const double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t m = av.shape[0]
    cdef double out
    cdef double* ws = <double*> malloc(_ws_size(m) * sizeof(double))
    if ws == NULL:
        raise MemoryError()
    try:
        with nogil:
            out = _norm(&av[0, 0], m, kind, ws)
    finally:
        free(ws)
    return out


def power_log_norm(a, long long k, int kind):
    """``log ||a^k||`` by binary exponentiation on normalized factors."""
    cdef const double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t m = av.shape[0]
    cdef Py_ssize_t mm = m * m
    cdef double* buf = <double*> malloc((3 * mm + _ws_size(m)) * sizeof(double))
    cdef double* base = buf
    cdef double* acc = buf + mm
    cdef double* tmp = buf + 2 * mm
    cdef double* ws = buf + 3 * mm
    cdef double base_log, acc_log = 0.0, s, result
    cdef int have_acc = 0
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            memcpy(base, &av[0, 0], mm * sizeof(double))
            base_log = _normalize(base, mm)
            result = -INFINITY
            if base_log != -INFINITY:
                while True:
                    if k & 1:
                        if not have_acc:
                            memcpy(acc, base, mm * sizeof(double))
                            acc_log = base_log
                            have_acc = 1
                        else:
                            _matmul(acc, base, tmp, m)
                            s = _normalize(tmp, mm)
                            memcpy(acc, tmp, mm * sizeof(double))
                            acc_log += s + base_log
                            if acc_log == -INFINITY:
                                break
                    k >>= 1
                    if k == 0:
                        result = acc_log + _log(_norm(acc, m, kind, ws))
                        break
                    _matmul(base, base, tmp, m)
                    s = _normalize(tmp, mm)
                    memcpy(base, tmp, mm * sizeof(double))
                    base_log = 2.0 * base_log + s
                    if base_log == -INFINITY:
                        break
    finally:
        free(buf)
    return result


def expand(parent, double parent_log, members, int kind, double tol):
    cdef const double[:, ::1] pv = np.ascontiguousarray(parent, dtype=np.float64)
    cdef const double[:, :, ::1] mv = np.ascontiguousarray(members, dtype=np.float64)
    cdef Py_ssize_t n = mv.shape[0], m = mv.shape[1], mm = m * m, j
    children_arr = np.empty((n, m, m))
    child_logs_arr = np.empty(n)
    log_norms_arr = np.empty(n)
    log_rhos_arr = np.empty(n)
    cdef double[:, :, ::1] ch = children_arr
    cdef double[::1] cl = child_logs_arr
    cdef double[::1] ln = log_norms_arr
    cdef double[::1] lr = log_rhos_arr
    cdef double L, lo, hi
    cdef int conv
    cdef double* ws = <double*> malloc(_ws_size(m) * sizeof(double))
    if ws == NULL:
        raise MemoryError()
    try:
        with nogil:
            for j in range(n):
                _matmul(&pv[0, 0], &mv[j, 0, 0], &ch[j, 0, 0], m)
                L = parent_log + _normalize(&ch[j, 0, 0], mm)
                cl[j] = L
                if L == -INFINITY:
                    ln[j] = -INFINITY
                    lr[j] = -INFINITY
                    continue
                ln[j] = L + _log(_norm(&ch[j, 0, 0], m, kind, ws))
                _sr(&ch[j, 0, 0], m, tol, 64, &lo, &hi, &conv, ws)
                lr[j] = L + _log(hi)
    finally:
        free(ws)
    return children_arr, child_logs_arr, log_norms_arr, log_rhos_arr


cdef int _word_less(int* a, Py_ssize_t la, int* b, Py_ssize_t lb) noexcept nogil:
    cdef Py_ssize_t i
    if la != lb:
        return la < lb
    for i in range(la):
        if a[i] != b[i]:
            return a[i] < b[i]
    return 0


def enumerate_words(members, int depth, int kind, double tol, double refine_tol, double tie_tol):
    cdef const double[:, :, ::1] mv = np.ascontiguousarray(members, dtype=np.float64)
    cdef Py_ssize_t n = mv.shape[0], m = mv.shape[1], mm = m * m
    cdef Py_ssize_t i, t
    cdef double* normed = <double*> malloc(n * mm * sizeof(double))
    cdef double* logs = <double*> malloc(n * sizeof(double))
    cdef double* prods = <double*> malloc((depth + 1) * mm * sizeof(double))
    cdef double* plogs = <double*> malloc((depth + 1) * sizeof(double))
    cdef int* word = <int*> malloc((depth + 1) * sizeof(int))
    cdef int* best_word = <int*> malloc((depth + 1) * sizeof(int))
    cdef double* ws = <double*> malloc(_ws_size(m) * sizeof(double))
    cdef Py_ssize_t best_len = 0
    cdef double best = -INFINITY, max_log_norm = -INFINITY, val, L, lo, hi, nv
    cdef long long count = 0
    cdef int conv, j
    cdef double* cur
    if (normed == NULL or logs == NULL or prods == NULL or plogs == NULL
            or word == NULL or best_word == NULL or ws == NULL):
        free(normed); free(logs); free(prods); free(plogs); free(word); free(best_word); free(ws)
        raise MemoryError()
    try:
        with nogil:
            for i in range(n):
                memcpy(normed + i * mm, &mv[i, 0, 0], mm * sizeof(double))
                logs[i] = _normalize(normed + i * mm, mm)
            # iterative DFS: word[0..t-1] is the current word, prods[t-1] its product
            t = 1
            word[0] = 0
            memcpy(prods, normed, mm * sizeof(double))
            plogs[0] = logs[0]
            while True:
                # visit node of length t
                count += 1
                cur = prods + (t - 1) * mm
                L = plogs[t - 1]
                if L == -INFINITY:
                    val = -INFINITY
                else:
                    _sr(cur, m, tol, 64, &lo, &hi, &conv, ws)
                    if best_len > 0 and (L + _log(hi)) / t < best - tie_tol:
                        val = -INFINITY
                    else:
                        val = (L + _log(_sr(cur, m, refine_tol, 64, &lo, &hi, &conv, ws))) / t
                if (best_len == 0 or val > best + tie_tol
                        or (val >= best - tie_tol and _word_less(word, t, best_word, best_len))):
                    best = val
                    best_len = t
                    memcpy(best_word, word, t * sizeof(int))
                if t < depth:
                    # descend to first child
                    _matmul(cur, normed, prods + t * mm, m)
                    plogs[t] = L + _normalize(prods + t * mm, mm) + logs[0]
                    word[t] = 0
                    t += 1
                    continue
                if L != -INFINITY:
                    nv = L + _log(_norm(cur, m, kind, ws))
                    if nv > max_log_norm:
                        max_log_norm = nv
                # advance to next sibling, climbing as needed
                while t > 0 and word[t - 1] == n - 1:
                    t -= 1
                if t == 0:
                    break
                word[t - 1] += 1
                j = word[t - 1]
                if t == 1:
                    memcpy(prods, normed + j * mm, mm * sizeof(double))
                    plogs[0] = logs[j]
                else:
                    _matmul(prods + (t - 2) * mm, normed + j * mm, prods + (t - 1) * mm, m)
                    plogs[t - 1] = plogs[t - 2] + _normalize(prods + (t - 1) * mm, mm) + logs[j]
        witness = tuple(best_word[i] for i in range(best_len))
    finally:
        free(normed); free(logs); free(prods); free(plogs); free(word); free(best_word); free(ws)
    return best, witness, max_log_norm, count


def max_log_norms_by_length(members, int depth, int kind):
    cdef const double[:, :, ::1] mv = np.ascontiguousarray(members, dtype=np.float64)
    cdef Py_ssize_t n = mv.shape[0], m = mv.shape[1], mm = m * m
    cdef Py_ssize_t i, t
    out_arr = np.full(depth, -np.inf)
    cdef double[::1] out = out_arr
    cdef double* normed = <double*> malloc(n * mm * sizeof(double))
    cdef double* logs = <double*> malloc(n * sizeof(double))
    cdef double* prods = <double*> malloc((depth + 1) * mm * sizeof(double))
    cdef double* plogs = <double*> malloc((depth + 1) * sizeof(double))
    cdef int* word = <int*> malloc((depth + 1) * sizeof(int))
    cdef double* ws = <double*> malloc(_ws_size(m) * sizeof(double))
    cdef double L, nv
    cdef int j
    cdef double* cur
    if normed == NULL or logs == NULL or prods == NULL or plogs == NULL or word == NULL or ws == NULL:
        free(normed); free(logs); free(prods); free(plogs); free(word); free(ws)
        raise MemoryError()
    try:
        with nogil:
            for i in range(n):
                memcpy(normed + i * mm, &mv[i, 0, 0], mm * sizeof(double))
                logs[i] = _normalize(normed + i * mm, mm)
            t = 1
            word[0] = 0
            memcpy(prods, normed, mm * sizeof(double))
            plogs[0] = logs[0]
            while True:
                cur = prods + (t - 1) * mm
                L = plogs[t - 1]
                if L != -INFINITY:
                    nv = L + _log(_norm(cur, m, kind, ws))
                    if nv > out[t - 1]:
                        out[t - 1] = nv
                if t < depth:
                    _matmul(cur, normed, prods + t * mm, m)
                    plogs[t] = L + _normalize(prods + t * mm, mm) + logs[0]
                    word[t] = 0
                    t += 1
                    continue
                while t > 0 and word[t - 1] == n - 1:
                    t -= 1
                if t == 0:
                    break
                word[t - 1] += 1
                j = word[t - 1]
                if t == 1:
                    memcpy(prods, normed + j * mm, mm * sizeof(double))
                    plogs[0] = logs[j]
                else:
                    _matmul(prods + (t - 2) * mm, normed + j * mm, prods + (t - 1) * mm, m)
                    plogs[t - 1] = plogs[t - 2] + _normalize(prods + (t - 1) * mm, mm) + logs[j]
    finally:
        free(normed); free(logs); free(prods); free(plogs); free(word); free(ws)
    return out_arr
