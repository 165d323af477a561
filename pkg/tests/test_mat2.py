import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from cdkernels.mat2 import (
    I2,
    J,
    SingularMatrixError,
    SpherePoint,
    chordal_distance,
    det2,
    expm_tracefree,
    inv2,
    j_defect,
    mobius_apply,
)

finite = st.floats(-50, 50, allow_nan=False)
cplx = st.builds(complex, finite, finite)
small = st.builds(complex, st.floats(-3, 3), st.floats(-3, 3))


def _mat(entries):
    return np.array(entries, dtype=complex).reshape(2, 2)


unimodular = st.lists(small, min_size=3, max_size=3).filter(lambda v: abs(v[0]) > 0.1).map(
    lambda v: _mat([v[0], v[1], v[2], (1 + v[1] * v[2]) / v[0]])
)


def test_sphere_point_normalization():
    p = SpherePoint.from_pair(2j, 2j)
    q = SpherePoint.from_complex(1.0)
    assert p == q
    assert abs(abs(p.v1) ** 2 + abs(p.v2) ** 2 - 1) < 1e-15


def test_infinity_roundtrip():
    inf = SpherePoint.infinity()
    assert inf.is_infinite
    assert cmath.isinf(inf.to_complex())
    assert SpherePoint.from_complex(complex(math.inf, 0)) == inf
    assert repr(inf) == "SpherePoint(inf)"


def test_zero_pair_rejected():
    with pytest.raises(ValueError):
        SpherePoint.from_pair(0, 0)


def test_chordal_known_values():
    assert chordal_distance(0, SpherePoint.infinity()) == pytest.approx(2.0)
    # 2|a - b| / sqrt((1+|a|^2)(1+|b|^2))
    assert chordal_distance(0, 1) == pytest.approx(2 / math.sqrt(2))
    assert chordal_distance(1j, -1j) == pytest.approx(2.0)


@given(cplx, cplx)
def test_chordal_matches_formula(a, b):
    ref = 2 * abs(a - b) / math.sqrt((1 + abs(a) ** 2) * (1 + abs(b) ** 2))
    assert chordal_distance(a, b) == pytest.approx(min(ref, 2.0), abs=1e-12)


@given(cplx, cplx, cplx)
def test_chordal_metric_axioms(a, b, c):
    dab, dba = chordal_distance(a, b), chordal_distance(b, a)
    assert dab == pytest.approx(dba, abs=1e-15)
    assert 0 <= dab <= 2
    assert dab <= chordal_distance(a, c) + chordal_distance(c, b) + 1e-12


@given(unimodular, unimodular, small)
def test_mobius_composition(m1, m2, w):
    lhs = mobius_apply(m1 @ m2, w)
    rhs = mobius_apply(m1, mobius_apply(m2, w))
    assert chordal_distance(lhs, rhs) < 1e-8


def test_mobius_infinity_maps_to_ratio():
    m = _mat([2, 1, 4, 3])
    assert mobius_apply(m, SpherePoint.infinity()).to_complex() == pytest.approx(0.5)


def test_mobius_singular():
    with pytest.raises(SingularMatrixError):
        mobius_apply(_mat([1, 2, 2, 4]), 1.0)


@given(st.lists(small, min_size=3, max_size=3))
def test_expm_tracefree_matches_scipy(v):
    g = _mat([v[0], v[1], v[2], -v[0]])
    assert np.allclose(expm_tracefree(g), expm(g), rtol=1e-11, atol=1e-11)


def test_expm_nilpotent_exact():
    g = _mat([0, 5, 0, 0])
    assert np.array_equal(expm_tracefree(g), I2 + g)


@given(unimodular)
def test_inverse(m):
    assert np.allclose(inv2(m) @ m, I2, atol=1e-9)
    assert det2(m) == pytest.approx(1, abs=1e-9)


def test_j_defect_real_unimodular_is_zero():
    t = np.array([[2.0, 3.0], [1.0, 2.0]])
    d, ev = j_defect(t)
    assert np.allclose(d, 0)
    assert np.allclose(ev, 0)


def test_j_defect_rotation_upper_half_plane():
    # exp(z j / 2) with Im z > 0 is j-contractive: the defect is negative definite
    t = expm_tracefree(0.5 * (1 + 2j) * J)
    _, ev = j_defect(t)
    assert np.all(ev < 0)
