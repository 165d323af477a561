import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdkernels.errors import DomainError, StallError
from cdkernels.oprl import JacobiParams, jacobi_transfer
from cdkernels.weyl import (
    JacobiSystem,
    LOG_PERIODIC_COUPLING,
    ModelM,
    boundary_limit,
    discrete_model,
    free_jacobi_m,
    get_model,
    list_models,
    m_from_transfer,
    mixture,
    point_mass_mass,
    sector_probe,
    weyl_disk,
    weyl_disk_three_point,
)

GOLDEN = (math.sqrt(5) - 1) / 2
FREE = JacobiParams.free()
upper = st.builds(complex, st.floats(-4, 4), st.floats(0.05, 4))


def test_free_m_frozen():
    assert free_jacobi_m(1j) == pytest.approx(1j * GOLDEN, abs=1e-15)
    # m(z) = (-z + sqrt(z^2 - 4))/2 at z = 3i: (-3 + sqrt(13)) i / 2
    assert free_jacobi_m(3j) == pytest.approx(1j * (math.sqrt(13) - 3) / 2, abs=1e-15)


@given(upper)
def test_free_m_solves_quadratic(z):
    m = free_jacobi_m(z)
    assert abs(m * m + z * m + 1) < 1e-10
    assert m.imag > 0


def test_stieltjes_asymptotics_large_z():
    z = 1e8j
    assert free_jacobi_m(z) * z == pytest.approx(-1, rel=1e-12)


def test_discrete_model_value():
    m = discrete_model([0.0, 1.0])
    assert m(1j) == pytest.approx(0.5 / (-1j) + 0.5 / (1 - 1j))


def test_m_domain():
    with pytest.raises(DomainError):
        get_model("free-jacobi")(0.5)


def test_bad_model_rejected():
    with pytest.raises(ValueError):
        ModelM("bad", lambda z: -1j)
    with pytest.raises(KeyError):
        get_model("unknown")


def test_mixture_and_listing():
    m = mixture([(1.0, get_model("free-jacobi")), (1.0, discrete_model([0.0]))])
    z = 0.3 + 1j
    assert m(z) == pytest.approx(0.5 * free_jacobi_m(z) + 0.5 / (0 - z))
    assert "log-periodic" in list_models()


def test_weyl_disk_identity_is_half_plane():
    disk = weyl_disk(np.eye(2))
    assert disk.half_plane
    assert disk.contains(1j)
    assert not disk.contains(-1j)


def test_weyl_disk_rejects():
    with pytest.raises(ValueError, match="unimodular"):
        weyl_disk(2 * np.eye(2))
    with pytest.raises(ValueError, match="monotonic"):
        weyl_disk(jacobi_transfer(FREE, 5, -1j))


@given(st.integers(1, 40), upper)
def test_disk_contains_m_and_matches_three_point(n, z):
    t = jacobi_transfer(FREE, n, z)
    disk = weyl_disk(t)
    assert disk.contains(free_jacobi_m(z), slack=1e-9)
    if disk.radius > 1e-4:
        ref = weyl_disk_three_point(t)
        assert abs(ref.center - disk.center) < 1e-7 * max(1, abs(disk.center))
        assert ref.radius == pytest.approx(disk.radius, rel=1e-7)


def test_disks_nested():
    z = 0.4 + 0.2j
    radii = [weyl_disk(jacobi_transfer(FREE, n, z)).radius for n in range(1, 30)]
    assert all(r1 <= r0 * (1 + 1e-12) for r0, r1 in zip(radii, radii[1:]))


def test_m_from_transfer_free():
    mv = m_from_transfer(JacobiSystem(FREE), 1j, 1e-10)
    assert abs(mv.value - 1j * GOLDEN) <= mv.radius
    assert mv.radius < 1e-10


def test_stall_on_finite_horizon():
    params = JacobiParams.from_sequences([1.0] * 5, [0.0] * 5)
    with pytest.raises(StallError) as info:
        m_from_transfer(JacobiSystem(params, horizon=5), 1j, 1e-10)
    assert info.value.last_radius > 1e-10


def test_m_from_transfer_domain():
    with pytest.raises(DomainError):
        m_from_transfer(JacobiSystem(FREE), 0.5, 1e-8)


def test_boundary_free_bulk():
    lim = boundary_limit(get_model("free-jacobi"), 0.0)
    assert lim.converged
    assert lim.eta.to_complex() == pytest.approx(1j, abs=1e-6)
    assert lim.f_mu == pytest.approx(1 / math.pi, abs=1e-6)
    assert not lim.boundary_real


def test_boundary_free_outside_spectrum():
    lim = boundary_limit(get_model("free-jacobi"), 3.0)
    assert lim.converged and lim.boundary_real
    assert lim.f_mu == 0.0
    assert lim.eta.to_complex().real == pytest.approx((-3 + math.sqrt(5)) / 2, abs=1e-6)


def test_boundary_chebyshev_density():
    lim = boundary_limit(get_model("chebyshev"), 0.5)
    assert lim.f_mu == pytest.approx(1 / (math.pi * math.sqrt(0.75)), rel=1e-6)


def test_sector_probe_agrees():
    rays = sector_probe(get_model("free-jacobi"), 0.5)
    vals = [r.eta.to_complex() for r in rays]
    assert all(r.converged for r in rays)
    assert max(abs(v - vals[0]) for v in vals) < 1e-6


def test_log_periodic_fails_to_converge():
    model = get_model("log-periodic")
    lim = boundary_limit(model, 0.0)
    assert not lim.converged
    assert lim.eta is None and math.isnan(lim.f_mu)
    assert lim.amplitude > 0.1
    # |m| is pinned: log|m| = -c Re(sin(log(-iz))) stays within [-c, c] on the imaginary axis
    for y in (1e-3, 1e-6, 1e-9):
        assert abs(math.log(abs(model(1j * y)))) <= LOG_PERIODIC_COUPLING + 1e-12


def test_schedule_validation():
    with pytest.raises(ValueError):
        boundary_limit(get_model("free-jacobi"), 0.0, schedule=[0.1, 0.2, 0.05, 0.01])


def test_point_masses():
    assert point_mass_mass(get_model("discrete:0,1,2"), 1.0) == pytest.approx(1 / 3, abs=1e-9)
    assert point_mass_mass(get_model("free-jacobi"), 0.0) < 1e-9
    # b_1 = 2 gives an atom at b + 1/b = 2.5 with mass 1 - 1/b^2 = 3/4
    assert point_mass_mass(get_model("free-b1:2"), 2.5) == pytest.approx(0.75, abs=1e-8)


@pytest.mark.slow
def test_schrodinger_free_m():
    model = get_model("schrodinger-free")
    for z in (1 + 1j, -2 + 0.5j, 4j):
        assert model(z) == pytest.approx(1j * cmath.sqrt(z), abs=1e-9)
