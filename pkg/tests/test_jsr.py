import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from powerjsr.jsr import (
    BudgetExceeded,
    CertificateError,
    UpdateSet,
    brute_force_bounds,
    certificate_from_upper,
    feasible_depth,
    gripenberg_certificate,
    gripenberg_estimate,
    instability_witness,
    scale_set,
    word_growth,
)
from powerjsr.matrix_core import MatrixError, NormKind, spectral_radius

from .conftest import GOLDEN, PHI, all_words, oracle_norm, oracle_product, oracle_rho

GOLD = UpdateSet(GOLDEN)


def oracle_brackets(mats, depth, kind="inf"):
    """Exhaustive lower/upper with numpy eigvals and norms."""
    lower = 0.0
    for t in range(1, depth + 1):
        for w in all_words(len(mats), t):
            lower = max(lower, oracle_rho(oracle_product(mats, w)) ** (1 / t))
    upper = max(oracle_norm(oracle_product(mats, w), kind) for w in all_words(len(mats), depth))
    return lower, upper ** (1 / depth)


def small_sets(max_members=3, m=3, lo=0.0, hi=2.0):
    mat = arrays(np.float64, (m, m), elements=st.floats(lo, hi, allow_subnormal=False))
    return st.lists(mat, min_size=1, max_size=max_members).map(tuple)


# ---- UpdateSet ---------------------------------------------------------------


def test_update_set_basics():
    s = UpdateSet.of(*GOLDEN)
    assert len(s) == 2 and s.dim == 2 and s.labels == ("B0", "B1")
    np.testing.assert_array_equal(s.product((0, 1)), [[2, 1], [1, 1]])
    n_mat, log_scale = s.log_product((0, 1))
    np.testing.assert_allclose(math.exp(log_scale) * n_mat, [[2, 1], [1, 1]])
    assert s == UpdateSet(GOLDEN)
    assert s.fingerprint == UpdateSet(GOLDEN).fingerprint
    assert s.fingerprint != scale_set(s, 2).fingerprint


def test_update_set_rejects():
    with pytest.raises(MatrixError):
        UpdateSet(())
    with pytest.raises(MatrixError, match="dimensions"):
        UpdateSet.of(np.eye(2), np.eye(3))
    with pytest.raises(ValueError, match="labels"):
        UpdateSet.of(np.eye(2), labels=("a", "b"))
    with pytest.raises(ValueError, match="out of range"):
        GOLD.log_product((0, 2))


def test_log_product_no_overflow():
    s = UpdateSet.of(np.eye(2) * 1e100)
    n_mat, log_scale = s.log_product((0,) * 50)
    assert log_scale == pytest.approx(5000 * math.log(10))
    assert word_growth(s, (0,) * 50) == pytest.approx(1e100)


# ---- brute force -------------------------------------------------------------


def test_brute_force_examples():
    est = brute_force_bounds(UpdateSet.of(np.diag([0.5, 0.5])), depth=3)
    assert est.lower == pytest.approx(0.5) and est.upper == pytest.approx(0.5)

    est = brute_force_bounds(GOLD, depth=2)
    assert est.lower >= math.sqrt((3 + math.sqrt(5)) / 2) - 1e-9
    assert est.products_evaluated == 6
    assert est.witness == (0, 1)

    est = brute_force_bounds(UpdateSet.of(np.zeros((2, 2)), np.eye(2)), depth=2)
    assert est.lower == pytest.approx(1.0) and est.upper == pytest.approx(1.0)
    assert est.witness == (1,)


def test_brute_force_golden_depth_12():
    est = brute_force_bounds(GOLD, depth=12)
    assert est.conclusive
    assert est.lower >= 1.617
    assert est.lower == pytest.approx(PHI, abs=1e-9)
    assert est.lower <= PHI <= est.upper


def test_brute_force_budget_caps_depth():
    with pytest.warns(BudgetExceeded):
        est = brute_force_bounds(GOLD, depth=16, budget=1000)
    assert not est.conclusive
    assert est.depth_explored == feasible_depth(2, 16, 1000) == 8


@given(small_sets(), st.integers(1, 4), st.sampled_from(list(NormKind)))
def test_brute_force_matches_oracle(mats, depth, kind):
    est = brute_force_bounds(UpdateSet(mats), depth, kind)
    lo, hi = oracle_brackets(mats, depth, kind.value)
    assert est.lower == pytest.approx(lo, rel=1e-7, abs=1e-9)
    assert est.upper == pytest.approx(hi, rel=1e-9, abs=1e-12)
    assert est.upper >= hi * (1 - 1e-13)


@given(small_sets(), st.integers(1, 4))
def test_bracket_valid_and_lower_monotone(mats, depth):
    s = UpdateSet(mats)
    a = brute_force_bounds(s, depth)
    b = brute_force_bounds(s, depth + 1)
    assert a.lower <= a.upper
    assert b.lower >= a.lower - 1e-12


@given(small_sets(max_members=3), st.randoms(use_true_random=False))
def test_permutation_invariance(mats, rnd):
    order = list(range(len(mats)))
    rnd.shuffle(order)
    s = UpdateSet(mats)
    p = UpdateSet(tuple(mats[i] for i in order))
    a, b = brute_force_bounds(s, 4), brute_force_bounds(p, 4)
    assert a.lower == pytest.approx(b.lower, rel=1e-9, abs=1e-12)
    assert a.upper == pytest.approx(b.upper, rel=1e-12, abs=1e-300)
    # the permuted witness maps back to a word of the same growth
    back = tuple(order[i] for i in b.witness)
    assert word_growth(s, back) == pytest.approx(a.lower, rel=1e-9, abs=1e-12)


# ---- gripenberg --------------------------------------------------------------


def test_gripenberg_examples():
    est = gripenberg_estimate(GOLD, delta=0.01)
    assert est.conclusive and est.gap <= 0.01
    assert est.lower <= PHI <= est.upper

    est = gripenberg_estimate(UpdateSet.of(0.5 * np.eye(2), 0.25 * np.eye(2)), delta=1e-6)
    assert est.lower == pytest.approx(0.5, abs=1e-6) and est.upper == pytest.approx(0.5, abs=1e-6)
    assert est.witness == (0,)


@pytest.mark.parametrize("kind", list(NormKind))
def test_gripenberg_each_norm(kind):
    est = gripenberg_estimate(GOLD, delta=1e-3, norm=kind)
    assert est.norm_used is kind
    assert est.lower <= PHI + 1e-12 <= est.upper + 1e-12
    assert est.gap <= 1e-3


def test_gripenberg_budget_flag():
    est = gripenberg_estimate(GOLD, delta=1e-9, budget=200)
    assert not est.conclusive
    assert est.lower <= PHI <= est.upper


def test_gripenberg_rejects_bad_delta():
    with pytest.raises(ValueError):
        gripenberg_estimate(GOLD, delta=0)


@given(arrays(np.float64, (3, 3), elements=st.floats(0, 5, allow_subnormal=False)))
def test_singleton_reduction(a):
    rho = oracle_rho(a)
    slack = 1e-9 * max(1.0, rho)
    g = gripenberg_estimate(UpdateSet.of(a), delta=1e-6)
    assert g.gap <= 1e-6 + slack
    assert g.lower - slack <= rho <= g.upper + slack
    b = brute_force_bounds(UpdateSet.of(a), depth=6)
    assert b.lower - slack <= rho <= b.upper + slack


@given(small_sets(max_members=3, m=2, hi=1.5))
def test_gripenberg_within_depth_one_bracket(mats):
    s = UpdateSet(mats)
    g = gripenberg_estimate(s, delta=1e-2, budget=20_000)
    d1 = brute_force_bounds(s, depth=1)
    assert g.lower >= d1.lower - 1e-9
    assert g.upper <= d1.upper * (1 + 1e-9) + 1e-300
    assert g.lower <= g.upper


@given(small_sets(max_members=3, m=2, hi=1.5), st.floats(0.1, 10))
def test_homogeneity(mats, c):
    s = UpdateSet(mats)
    a = brute_force_bounds(s, 4)
    b = brute_force_bounds(scale_set(s, c), 4)
    assert b.lower == pytest.approx(c * a.lower, rel=1e-7, abs=1e-12)
    assert b.upper == pytest.approx(c * a.upper, rel=1e-9, abs=1e-12)
    ga = gripenberg_estimate(s, delta=1e-3, budget=20_000)
    gb = gripenberg_estimate(scale_set(s, c), delta=c * 1e-3, budget=20_000)
    if ga.conclusive and gb.conclusive:
        assert gb.lower <= c * ga.upper * (1 + 1e-9) + 1e-12
        assert gb.upper >= c * ga.lower * (1 - 1e-9) - 1e-12
    if c * a.lower > 1 + 1e-6:
        w = instability_witness(scale_set(s, c), depth=4)
        assert w is not None
        assert word_growth(s, w) == pytest.approx(a.lower, rel=1e-6)


# ---- certificates ------------------------------------------------------------


def test_certificate_examples():
    cert = certificate_from_upper(UpdateSet.of(0.5 * np.eye(2)), 0.5, norm="two")
    assert cert.gamma == 0.5 and cert.C == 1.0

    s = UpdateSet.of(np.diag([0.9, 0.0]), np.diag([0.0, 0.9]))
    cert = certificate_from_upper(s, 0.9)
    assert cert.gamma == 0.9 and cert.C == 1.0


def test_certificate_golden_half_exhaustive():
    s = scale_set(GOLD, 0.5)
    est = brute_force_bounds(s, depth=8)
    cert = certificate_from_upper(s, est.upper, max_depth=8)
    assert cert.C >= 1 and cert.gamma == est.upper < 1
    mats = [np.asarray(m) for m in s.members]
    for t in range(1, 15):
        worst = max(oracle_norm(oracle_product(mats, w), "inf") for w in all_words(2, t))
        assert worst <= cert.bound(t) * (1 + 1e-12)
    rng = np.random.default_rng(0)
    for t in range(15, 33):
        for _ in range(200):
            w = rng.integers(0, 2, size=t)
            assert oracle_norm(oracle_product(mats, w), "inf") <= cert.bound(t) * (1 + 1e-12)


@given(small_sets(max_members=3, m=2, hi=1.0), st.sampled_from(list(NormKind)))
def test_certificate_soundness(mats, kind):
    s = UpdateSet(mats)
    est = gripenberg_estimate(s, delta=1e-2, norm=kind, budget=20_000)
    if not 0 < est.upper < 1:
        return
    try:
        cert = certificate_from_upper(s, est.upper, kind, max_depth=10)
    except CertificateError:
        return
    for t in range(1, 11):
        worst = max(oracle_norm(oracle_product(mats, w), kind.value) for w in all_words(len(mats), t))
        assert worst <= cert.bound(t) * (1 + 1e-9) + 1e-300


@given(small_sets(max_members=3, m=2, hi=1.0), st.sampled_from(list(NormKind)))
def test_tree_certificate_soundness(mats, kind):
    s = UpdateSet(mats)
    est, cert = gripenberg_certificate(s, delta=1e-2, norm=kind, budget=20_000)
    if cert is None:
        assert est.upper >= 1 or len(mats) == 1
        return
    assert cert.gamma == est.upper and cert.C >= 1
    for t in range(1, 11):
        worst = max(oracle_norm(oracle_product(mats, w), kind.value) for w in all_words(len(mats), t))
        assert worst <= cert.bound(t) * (1 + 1e-9) + 1e-300


def test_tree_certificate_golden_half():
    s = scale_set(GOLD, 0.5)
    est, cert = gripenberg_certificate(s, delta=1e-4, norm="two")
    assert cert.gamma == est.upper < PHI / 2 + 1e-4 + 1e-9
    mats = [np.asarray(m) for m in s.members]
    for t in range(1, 13):
        worst = max(oracle_norm(oracle_product(mats, w), "two") for w in all_words(2, t))
        assert worst <= cert.bound(t) * (1 + 1e-12)
    assert gripenberg_certificate(GOLD, delta=0.01)[1] is None


def test_certificate_refuses():
    with pytest.raises(CertificateError):
        certificate_from_upper(GOLD, 1.2)
    with pytest.raises(CertificateError, match="no depth"):
        certificate_from_upper(GOLD, 0.5, max_depth=4)


# ---- witness -----------------------------------------------------------------


def test_instability_witness_examples():
    assert instability_witness(UpdateSet.of(2 * np.eye(2))) == (0,)
    w = instability_witness(GOLD, depth=8)
    assert set(w) == {0, 1}
    assert spectral_radius(GOLD.product(w)) ** (1 / len(w)) > 1
    assert instability_witness(UpdateSet.of(0.1 * np.eye(2), 0.2 * np.eye(2))) is None


def test_instability_witness_budget_warns():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        instability_witness(GOLD, depth=20, budget=100)
    assert any(issubclass(w.category, BudgetExceeded) for w in caught)


def test_scale_set_examples():
    s = UpdateSet.of(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert scale_set(s, 1) == s
    np.testing.assert_array_equal(scale_set(s, 0.5).members[0], [[0, 0.5], [0.5, 0]])
    with pytest.raises(ValueError):
        scale_set(s, 0)
