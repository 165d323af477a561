import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.linalg import expm

from cdkernels.errors import IntegrationError, ReparametrizationError
from cdkernels.mat2 import J, SpherePoint
from cdkernels.oprl import JacobiParams, cd_kernel, interp_M
from cdkernels.cansys import (
    HamiltonianSystem,
    Segment,
    cansys_kernel,
    gauge_pdb,
    integrate_transfer,
    jacobi_embedding,
    kernel_jform,
    rescale_family,
    ring_objects,
    ring_system,
    schrodinger_solutions,
    schrodinger_system,
    system_from_config,
    trace_reparam,
    triangular_shift,
)
from cdkernels.weyl import m_from_transfer

FREE = JacobiParams.free()
small = st.builds(complex, st.floats(-2, 2), st.floats(-1, 1))
upper_eta = st.builds(complex, st.floats(-3, 3), st.floats(0.05, 3))


def rotating(tol=1e-11):
    return system_from_config({
        "segments": [{"length": None, "kind": "rotating", "params": {"amplitude": 0.3, "frequency": 1.3}}],
        "tol": tol,
    })


def test_segment_validation():
    with pytest.raises(ValueError):
        Segment(0.0, np.eye(2))
    with pytest.raises(ValueError, match="symmetric"):
        Segment(1.0, [[1, 1], [0, 1]])
    with pytest.raises(ValueError, match="semidefinite"):
        Segment(1.0, [[1, 0], [0, -1]])
    assert Segment(1.0, [[1, 0], [0, 0]]).is_nilpotent
    assert not Segment(1.0, np.eye(2)).is_nilpotent


def test_constant_segments_exact():
    a = np.array([[0.7, 0.2], [0.2, 0.3]])
    b = np.array([[0.1, -0.4], [-0.4, 0.5]])
    system = HamiltonianSystem([Segment(1.5, a, b), Segment(math.inf, np.eye(2) / 2)], horizon=10)
    z = 0.4 + 0.3j
    g1, g2 = J @ (z * a - b), J @ (z * np.eye(2) / 2)
    ref = expm(g2 * 2.0) @ expm(g1 * 1.5)
    assert np.allclose(integrate_transfer(system, 3.5, z), ref, rtol=1e-12, atol=1e-12)


def test_smooth_transfer_unimodular():
    rep = integrate_transfer(rotating(), 6.0, 0.7 + 0.5j, report=True)
    assert rep.det_drift < 1e-9
    assert rep.error_estimate < 1e-8


@given(small, small)
@settings(max_examples=10)
def test_smooth_kernel_matches_jform(z, w):
    if abs(w.conjugate() - z) < 1e-2:
        return
    system = rotating()
    k = cansys_kernel(system, 2.5, z, w)
    ref = kernel_jform(system, 2.5, z, w)
    assert np.allclose(k, ref, rtol=1e-8, atol=1e-8)


@given(upper_eta)
def test_ring_hamiltonian(eta):
    ring = ring_objects(eta)
    assert np.trace(ring.H) == pytest.approx(1)
    assert np.linalg.det(ring.H) >= -1e-15
    # det H = h^2: the solution rotates at speed h
    assert np.linalg.det(ring.H) == pytest.approx(ring.h**2, abs=1e-12)


def test_ring_frozen_values():
    ring = ring_objects(1j)
    assert np.allclose(ring.H, np.eye(2) / 2)
    assert ring.h == pytest.approx(0.5)
    assert np.allclose(ring_objects(0).H, [[1, 0], [0, 0]])
    assert np.allclose(ring_objects(SpherePoint.infinity()).H, [[0, 0], [0, 1]])
    with pytest.raises(ValueError):
        ring_objects(-1j)


@given(upper_eta, small, small, st.floats(0.1, 3))
@settings(max_examples=25)
def test_ring_closed_forms(eta, z, w, t):
    ring = ring_objects(eta)
    system = ring_system(eta)
    assert np.allclose(integrate_transfer(system, t, z), ring.M(z, t), rtol=1e-10, atol=1e-10)
    assert np.allclose(cansys_kernel(system, t, z, w), ring.K(z, w, t), rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("eta", [1j, 1 + 2j, -0.5 + 0.3j])
def test_ring_system_m_is_eta(eta):
    mv = m_from_transfer(ring_system(eta), 0.5 + 1j, 1e-10)
    assert mv.value == pytest.approx(eta, abs=1e-9)


def test_triangular_shift_moves_m():
    eta, a = 1 + 2j, 0.75
    shifted = triangular_shift(ring_system(eta), a)
    assert m_from_transfer(shifted, 1j, 1e-10).value == pytest.approx(eta - a, abs=1e-9)
    assert triangular_shift(eta, a) == eta - a
    assert triangular_shift(SpherePoint.infinity(), a).is_infinite


@pytest.mark.parametrize("L", [7, 7.4, 12])
def test_jacobi_embedding_kernel(L):
    xi = 0.3
    system = jacobi_embedding(FREE, xi, 12)
    z, w = 0.2 + 0.1j, -0.5 + 0.4j
    assert np.allclose(cansys_kernel(system, L, z, w), cd_kernel(FREE, L, xi + z, xi + w), atol=1e-11)
    if float(L).is_integer():
        assert np.allclose(integrate_transfer(system, L, z), interp_M(FREE, L, xi, xi + z), atol=1e-11)


def test_gauge_solution_and_hamiltonian():
    system = schrodinger_system(0.0, horizon=200)
    gauged = gauge_pdb(system, 1.0)
    z = 0.4 + 0.2j
    assert np.allclose(integrate_transfer(gauged.system, 3.0, z), gauged.M(3.0, z), atol=1e-9)
    h = gauged.H(2.0)
    assert np.allclose(h, h.T) and np.linalg.eigvalsh(h)[0] > -1e-12


def test_trace_reparam():
    base = HamiltonianSystem(
        [Segment(2.0, np.diag([2.0, 1.0])), Segment(math.inf, lambda x: (1 + 0.5 * math.sin(x)) * np.eye(2))],
        horizon=50,
    )
    tr = trace_reparam(base)
    assert tr.a(2.0) == pytest.approx(6.0)
    x = 5.0
    ref = 6.0 + quad(lambda s: 2 * (1 + 0.5 * math.sin(s)), 2.0, x)[0]
    assert tr.a(x) == pytest.approx(ref, rel=1e-12)
    assert tr.a_inv(ref) == pytest.approx(x, abs=1e-12)
    assert np.trace(tr.system.A(8.0)) == pytest.approx(1.0)
    # same transfer matrix at corresponding positions
    z = 0.3 + 0.4j
    assert np.allclose(
        integrate_transfer(tr.system, tr.a(x), z), integrate_transfer(base, x, z), atol=1e-8
    )


def test_trace_reparam_errors():
    with pytest.raises(ReparametrizationError):
        trace_reparam(HamiltonianSystem([Segment(1.0, np.zeros((2, 2)))]))
    with pytest.raises(ValueError):
        trace_reparam(schrodinger_system(0.0))


def test_rescale_family_solution():
    system = rotating()
    r = 3.0
    scaled = rescale_family(system, r)
    z = 0.5 + 0.5j
    assert np.allclose(integrate_transfer(scaled, 1.2, z), integrate_transfer(system, r * 1.2, z / r), atol=1e-9)
    with pytest.raises(ValueError):
        rescale_family(system, 0.5)
    assert rescale_family(system, 1) is system


def test_schrodinger_solutions_closed_form():
    system = schrodinger_system(0.0)
    z = 2.0 + 0.5j
    k = cmath.sqrt(z)
    for x in (0.5, math.pi / 2, 3.0):
        phi, theta = schrodinger_solutions(system, x, z)
        assert phi == pytest.approx(cmath.sin(k * x) / k, abs=1e-12)
        assert theta == pytest.approx(cmath.cos(k * x), abs=1e-12)
    assert schrodinger_solutions(system, math.pi / 2, 1.0)[0] == pytest.approx(1.0)


def test_schrodinger_kernel_frozen():
    # K_L(1,1) = int_0^L sin^2 x dx = L/2 - sin(2L)/4
    system = schrodinger_system(0.0)
    L = 10.0
    assert cansys_kernel(system, L, 1.0, 1.0)[0, 0].real == pytest.approx(L / 2 - math.sin(2 * L) / 4)


def test_schrodinger_potential_callable():
    # constant potential given as a callable must match the constant segment
    z = 1.5 + 0.2j
    a = schrodinger_system(0.5, beta=0.3)
    b = schrodinger_system(lambda x: 0.5, beta=0.3, tol=1e-12)
    assert np.allclose(integrate_transfer(a, 2.0, z), integrate_transfer(b, 2.0, z), atol=1e-9)
    with pytest.raises(ValueError):
        schrodinger_system(0.0, beta=4.0)


def test_integration_error_on_rough_coefficients():
    rough = HamiltonianSystem(
        [Segment(math.inf, lambda x: np.diag([1 + 0.9 * math.copysign(1, math.sin(4000 * x)), 1.0]))],
        tol=1e-14,
    )
    with pytest.raises(IntegrationError):
        integrate_transfer(rough, 0.01, 5.0 + 1j)


def test_config_errors():
    with pytest.raises(ValueError):
        system_from_config({"segments": [{"length": 1, "kind": "mystery"}]})
