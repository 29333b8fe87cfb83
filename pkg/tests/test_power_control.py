import math
import pickle

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from powerjsr.jsr import UpdateSet, brute_force_bounds, gripenberg_estimate
from powerjsr.matrix_core import MatrixError, spectral_radius
from powerjsr.power_control import (
    UNBOUNDED,
    CProductVerdict,
    CSchedule,
    DegenerateInputError,
    GainMatrix,
    Scheme,
    build_A,
    build_update_set,
    build_Z,
    c_product_verdict,
    dba_step,
    dpc_step,
    sinr,
)

G1 = [[1, 0.1], [0.2, 1]]
A1 = np.array([[0, 0.1], [0.2, 0]])


def gains(m=3, zero_ok=True):
    """Valid gain matrices: positive diagonal, nonnegative off-diagonal."""
    lo = 0.0 if zero_ok else 0.01
    off = arrays(np.float64, (m, m), elements=st.floats(lo, 5, allow_subnormal=False))
    diag = arrays(np.float64, (m,), elements=st.floats(0.1, 10, allow_subnormal=False))
    return st.tuples(off, diag).map(lambda t: t[0] - np.diag(np.diag(t[0])) + np.diag(t[1]))


def powers(m=3, lo=0.01):
    return arrays(np.float64, (m,), elements=st.floats(lo, 100, allow_subnormal=False))


# ---- examples ----------------------------------------------------------------


def test_build_A_examples():
    np.testing.assert_allclose(build_A(G1), A1)
    np.testing.assert_allclose(build_A([[2, 1], [1, 4]]), [[0, 0.5], [0.25, 0]])
    np.testing.assert_array_equal(build_A(np.diag([3.0, 5.0])), np.zeros((2, 2)))
    np.testing.assert_allclose(build_Z(G1), A1 + np.eye(2))


def test_gain_matrix_errors_name_index():
    with pytest.raises(MatrixError, match=r"gain\[1\]\[1\] must be > 0"):
        GainMatrix([[1, 0], [0, 0]])
    with pytest.raises(MatrixError, match=r"gain\[0\]\[1\] must be >= 0"):
        GainMatrix([[1, -1], [0, 1]])
    with pytest.raises(MatrixError, match="square"):
        GainMatrix([[1, 2]])
    with pytest.raises(MatrixError, match="finite"):
        GainMatrix([[math.inf]])


def test_sinr_examples():
    assert sinr([1, 1], G1) == pytest.approx((10, 5))
    assert sinr([2, 2], G1) == pytest.approx((10, 5))
    assert sinr([1, 1], np.eye(2)) == (UNBOUNDED, UNBOUNDED)
    with pytest.raises(DegenerateInputError):
        sinr([0, 0], G1)
    # silent link that also sees no interference
    with pytest.raises(DegenerateInputError, match="link 0"):
        sinr([0, 1], np.eye(2))
    with pytest.raises(ValueError):
        sinr([1, -1], G1)


def test_unbounded_marker():
    assert repr(UNBOUNDED) == "UNBOUNDED" and str(UNBOUNDED) == "inf"
    assert pickle.loads(pickle.dumps(UNBOUNDED)) is UNBOUNDED
    assert not isinstance(UNBOUNDED, float)


def test_single_mobile_degenerate_limit():
    assert sinr([1.0], [[2.0]]) == (UNBOUNDED,)
    np.testing.assert_array_equal(dpc_step([1.0], build_A([[2.0]]), 1.0), [0.0])


def test_dpc_examples():
    np.testing.assert_allclose(dpc_step([1, 1], A1, 1), [0.1, 0.2])
    np.testing.assert_array_equal(dpc_step([1, 1], np.zeros((2, 2)), 1), [0, 0])
    np.testing.assert_allclose(dpc_step([1, 1], A1, 2), [0.2, 0.4])
    with pytest.raises(ValueError):
        dpc_step([1, 1], A1, 0)


def test_dba_examples():
    np.testing.assert_allclose(dba_step([1, 1], np.zeros((2, 2)), 0.5), [0.5, 0.5])
    np.testing.assert_allclose(dba_step([1, 1], A1, 1), [1.1, 1.2])


def test_build_update_set_examples():
    s = build_update_set([G1], CSchedule.constant(1), "DPC")
    assert s == UpdateSet((A1,), ("c*A0",))
    s = build_update_set([np.eye(2)], CSchedule.constant(0.5), Scheme.DBA)
    np.testing.assert_allclose(s.members[0], 0.5 * np.eye(2))
    G2 = [[1, 0.3], [0.1, 1]]
    s = build_update_set([G1, G2], CSchedule.constant(0.9), "dpc")
    np.testing.assert_allclose(s.members[0], 0.9 * build_A(G1))
    np.testing.assert_allclose(s.members[1], 0.9 * build_A(G2))
    assert s.labels == ("c*A0", "c*A1")
    with pytest.raises(MatrixError, match="dimensions"):
        build_update_set([G1, np.eye(3)], CSchedule.constant(1), "DPC")
    with pytest.raises(ValueError, match="scheme"):
        build_update_set([G1], CSchedule.constant(1), "XYZ")


def test_c_product_examples():
    assert c_product_verdict(CSchedule.constant(1)) is CProductVerdict.BOUNDED
    assert c_product_verdict(CSchedule.constant(1.1)) is CProductVerdict.UNBOUNDED
    assert c_product_verdict(CSchedule.explicit([1.1, 0.9]), horizon=100) is CProductVerdict.BOUNDED
    assert c_product_verdict(CSchedule.geometric(5, 0.5)) is CProductVerdict.BOUNDED
    assert c_product_verdict(CSchedule.geometric(0.5, 1.01)) is CProductVerdict.UNBOUNDED
    assert c_product_verdict(CSchedule.explicit([1.01, 1.0]), horizon=100) is CProductVerdict.INCONCLUSIVE


def test_c_schedule_values():
    assert CSchedule.explicit([1, 2, 3]).take(5) == [1, 2, 3, 1, 2]
    assert CSchedule.geometric(1, 0.5).take(3) == [1, 0.5, 0.25]
    assert CSchedule.explicit([0.5, 2]).envelope(10) == 2
    with pytest.raises(ValueError):
        CSchedule.explicit([1, -1])
    with pytest.raises(ValueError):
        CSchedule.constant(0)
    with pytest.raises(ValueError):
        CSchedule("random")


# ---- properties --------------------------------------------------------------


def _same_sinr(a, b):
    assert len(a) == len(b)
    for x, y in zip(a, b):
        if x is UNBOUNDED or y is UNBOUNDED:
            assert x is y
        else:
            assert x == pytest.approx(y, rel=1e-12)


@given(gains(), powers(), st.floats(1e-3, 1e3))
def test_sinr_scale_invariance(g, p, alpha):
    _same_sinr(sinr(alpha * p, g), sinr(p, g))


@given(gains(), st.integers(0, 2), st.floats(1e-3, 1e3))
def test_build_A_row_scaling_invariance(g, row, lam):
    scaled = g.copy()
    scaled[row, :] *= lam
    np.testing.assert_allclose(build_A(scaled), build_A(g), rtol=1e-12, atol=0)


@given(gains(zero_ok=False), powers(), st.floats(0.01, 10))
def test_dpc_component_matrix_equivalence(g, p, c):
    gam = sinr(p, g)
    by_matrix = dpc_step(p, build_A(g), c)
    by_component = np.array([c * p[i] / gam[i] for i in range(len(p))])
    np.testing.assert_allclose(by_matrix, by_component, rtol=1e-12)


@given(gains(), powers(lo=0.0), st.floats(0.01, 10))
def test_steps_preserve_nonnegativity(g, p, c):
    a = build_A(g)
    assert (dpc_step(p, a, c) >= 0).all()
    assert (dba_step(p, a, c) >= 0).all()


@given(gains(), powers(), powers(), st.floats(0.01, 10))
def test_steps_are_linear(g, p1, p2, c):
    a = build_A(g)
    for step in (dpc_step, dba_step):
        np.testing.assert_allclose(step(p1 + p2, a, c), step(p1, a, c) + step(p2, a, c), rtol=1e-12)


@given(gains())
def test_dba_spectral_floor(g):
    assert spectral_radius(build_Z(g)) >= 1.0 - 1e-12


@given(st.lists(gains(2), min_size=1, max_size=3), st.floats(1.0, 2.0))
def test_dba_estimator_floor(gs, c):
    s = build_update_set(gs, CSchedule.constant(c), "DBA")
    assert brute_force_bounds(s, depth=3).lower >= 1.0 - 1e-12
    assert gripenberg_estimate(s, delta=1e-2, budget=20_000).lower >= 1.0 - 1e-12
