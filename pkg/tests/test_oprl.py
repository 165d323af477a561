import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdkernels.errors import HorizonError, KernelOverflowError
from cdkernels.mat2 import inv2
from cdkernels.oprl import (
    JacobiParams,
    cd_kernel,
    eval_polys,
    gauss_quadrature,
    interp_M,
    jacobi_from_id,
    jacobi_transfer,
    jacobi_zeros,
    scalar_cd_kernel,
    tau_scale,
    transfer_matrix,
    zeros_near,
)

FREE = JacobiParams.free()
point = st.builds(complex, st.floats(-3, 3), st.floats(-1.5, 1.5))
index = st.integers(1, 200)
seed = st.integers(0, 10**6)


def test_free_polys_are_chebyshev_second_kind():
    theta = 0.7
    pp = eval_polys(FREE, 30, 2 * math.cos(theta))
    ref = [math.sin((n + 1) * theta) / math.sin(theta) for n in range(31)]
    assert np.allclose(pp.p.real, ref, atol=1e-12)
    # second-kind solutions: q_n = p_{n-1} for the free model, q_0 = 0
    assert pp.q[0] == 0
    assert np.allclose(pp.q[1:].real, ref[:-1], atol=1e-12)


def test_chebyshev_first_kind():
    theta = 1.1
    pp = eval_polys(JacobiParams.chebyshev(), 20, math.cos(theta))
    ref = [1.0] + [math.sqrt(2) * math.cos(n * theta) for n in range(1, 21)]
    assert np.allclose(pp.p.real, ref, atol=1e-12)


def test_transfer_zero_is_identity():
    assert np.array_equal(transfer_matrix(FREE, 0, 0.3), np.eye(2))


@given(seed, index, point)
def test_transfer_unimodular(s, n, z):
    t = jacobi_transfer(JacobiParams.random_bounded(s), n, z)
    d = t[0, 0] * t[1, 1] - t[0, 1] * t[1, 0]
    scale = abs(t[0, 0] * t[1, 1]) + abs(t[0, 1] * t[1, 0])
    assert abs(d - 1) <= 1e-12 * max(1.0, scale)


@given(seed, index, point, point)
def test_sum_equals_jform(s, n, z, w):
    if abs(w.conjugate() - z) < 1e-3:
        return
    params = JacobiParams.random_bounded(s)
    a = cd_kernel(params, n, z, w, "sum")
    b = cd_kernel(params, n, z, w, "jform")
    assert np.max(np.abs(a - b)) <= 1e-9 * np.max(np.abs(a))


@given(index, point, point)
def test_kernel_hermitian(n, z, w):
    a = cd_kernel(FREE, n, z, w)
    b = cd_kernel(FREE, n, w, z)
    assert np.allclose(a, b.conj().T, rtol=1e-12, atol=1e-12)


def test_kernel_linear_interpolation():
    k3 = cd_kernel(FREE, 3, 0.4, -0.2)
    k4 = cd_kernel(FREE, 4, 0.4, -0.2)
    assert np.allclose(cd_kernel(FREE, 3.25, 0.4, -0.2), 0.75 * k3 + 0.25 * k4)


def test_kernel_frozen_values():
    # free model at 0: p_j(0) = 1, 0, -1, 0, ...; q_j(0) = 0, 1, 0, -1, ...
    k = cd_kernel(FREE, 10, 0.0, 0.0)
    assert np.allclose(k, [[5, 0], [0, 5]])
    assert tau_scale(FREE, 0.0, 10) == pytest.approx(10)
    assert scalar_cd_kernel(FREE, 1, 5.0, -3.0) == 1


def test_jform_mode_errors():
    with pytest.raises(ValueError):
        cd_kernel(FREE, 3.5, 0.1, 0.2, "jform")
    with pytest.raises(ValueError, match="diagonal"):
        cd_kernel(FREE, 3, 0.5, 0.5, "jform")
    with pytest.raises(ValueError):
        cd_kernel(FREE, 3, 0.5, 0.5, "bogus")
    assert np.allclose(cd_kernel(FREE, 3, 0.5, 0.5, "auto"), cd_kernel(FREE, 3, 0.5, 0.5))


def test_interp_m_matches_transfer_ratio():
    xi, z = 0.3, 0.7 + 0.4j
    ratio = inv2(jacobi_transfer(FREE, 12, xi)) @ jacobi_transfer(FREE, 12, z)
    assert np.allclose(interp_M(FREE, 12, xi, z), ratio, atol=1e-12)


def test_free_zeros():
    n = 50
    ref = np.sort(2 * np.cos(np.arange(1, n + 1) * math.pi / (n + 1)))
    assert np.allclose(jacobi_zeros(FREE, n), ref, atol=1e-12)


def test_zeros_near_labels():
    near = zeros_near(FREE, 9, 0.0, 2)
    lab = near.labeled()
    # p_9 has a zero at 0 itself, which takes label 0
    assert lab[0] == pytest.approx(0.0, abs=1e-12)
    assert lab[-1] < 0 < lab[1]
    assert not near.truncated
    assert zeros_near(FREE, 2, 0.0, 3).truncated


def test_gauss_quadrature_moments():
    nodes, weights = gauss_quadrature(FREE, 20)
    assert weights.sum() == pytest.approx(1.0)
    # semicircle moments: m2 = 1, m4 = 2, m6 = 5 (Catalan numbers)
    for k, c in ((2, 1), (4, 2), (6, 5)):
        assert np.dot(weights, nodes**k) == pytest.approx(c)


def test_from_discrete_lanczos():
    params = JacobiParams.from_discrete([0.0, 1.0], [0.5, 0.5])
    assert params.horizon == 1
    assert params.b(1) == pytest.approx(0.5)
    assert params.a(1) == pytest.approx(0.5)
    with pytest.raises(HorizonError):
        params.arrays(2)
    with pytest.raises(ValueError):
        JacobiParams.from_discrete([0.0, 0.0], [0.5, 0.5])


def test_random_bounded_is_index_stable():
    p1, p2 = JacobiParams.random_bounded(3), JacobiParams.random_bounded(3)
    p1.arrays(5000)
    assert p1.a(4000) == p2.a(4000)
    assert p1.b(17) == p2.b(17)
    assert 0.5 <= p1.a(10) <= 1.5


def test_overflow_guard():
    with pytest.raises(KernelOverflowError):
        eval_polys(FREE, 2000, 50j)


def test_model_ids():
    assert jacobi_from_id("free-jacobi").model_id == "free-jacobi"
    assert jacobi_from_id("constant:2,0.5").a(3) == 2
    assert jacobi_from_id("free-b1:1.5").b(1) == 1.5
    assert jacobi_from_id("discrete:0,1,3").horizon == 2
    with pytest.raises(KeyError):
        jacobi_from_id("nope")
    with pytest.raises(ValueError):
        jacobi_from_id("constant:x,y")


def test_kernel_positive_on_real_axis():
    k = cd_kernel(JacobiParams.random_bounded(11), 40, 0.2, 0.2)
    assert np.all(np.linalg.eigvalsh(k) > 0)
