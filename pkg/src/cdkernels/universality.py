"""Rescaled kernel limits against the sinc and ring kernels, and related diagnostics."""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Optional, Protocol, Sequence

import numpy as np

from ._backend import kernels
from .cansys import HamiltonianSystem, cansys_kernel, integrate_transfer, ring_objects
from .errors import ScaleError
from .mat2 import SpherePoint, chordal_distance, inv2
from .oprl import JacobiParams, cd_kernel_pairs, interp_M, scalar_cd_kernel, zeros_near
from .tables import KernelTable

__all__ = [
    "KernelProvider",
    "JacobiProvider",
    "CanonicalProvider",
    "UniversalityReport",
    "EquivalenceReport",
    "ClockResult",
    "default_points",
    "default_grid",
    "grid_from_points",
    "sinc_target",
    "rescaled_scalar",
    "rescaled_matrix",
    "universality_report",
    "equivalence_report",
    "clock_spacing",
    "subordinacy_ratio",
    "scale_experiment",
    "SCALE_THRESHOLD",
]

SCALE_THRESHOLD = 1e-8
ETA_MISMATCH = 0.05
DECAY_FLOOR = 1e-12


# --- kernel sources ---------------------------------------------------------


class KernelProvider(Protocol):
    model_id: str

    def kernels(self, L: float, zs: Sequence[complex], ws: Sequence[complex]) -> np.ndarray: ...

    def M(self, L: float, xi: float, z: complex) -> np.ndarray: ...


@dataclass
class JacobiProvider:
    """Matrix CD kernels of Jacobi parameters (compiled recurrence when available)."""

    params: JacobiParams
    jobs: int = 1

    @property
    def model_id(self) -> str:
        return self.params.model_id

    def kernels(self, L, zs, ws):
        zs, ws = np.asarray(zs, dtype=complex), np.asarray(ws, dtype=complex)
        if self.jobs <= 1 or len(zs) < 2 * self.jobs:
            return cd_kernel_pairs(self.params, L, zs, ws)
        self.params.arrays(int(math.floor(L)))  # fill the cache before fanning out
        chunks = np.array_split(np.arange(len(zs)), self.jobs)
        with ThreadPoolExecutor(self.jobs) as pool:
            parts = list(pool.map(lambda idx: cd_kernel_pairs(self.params, L, zs[idx], ws[idx]), chunks))
        return np.concatenate(parts)

    def M(self, L, xi, z):
        return interp_M(self.params, L, xi, xi + complex(z))


@dataclass
class CanonicalProvider:
    """Kernels and solutions of a canonical system; ``M`` is the gauge ``T(L,xi)^-1 T(L,xi+z)``."""

    system: HamiltonianSystem
    jobs: int = 1

    @property
    def model_id(self) -> str:
        return self.system.model_id

    def kernels(self, L, zs, ws):
        pairs = list(zip(zs, ws))
        work = lambda zw: cansys_kernel(self.system, L, zw[0], zw[1])
        if self.jobs <= 1:
            return np.array([work(p) for p in pairs])
        with ThreadPoolExecutor(self.jobs) as pool:
            return np.array(list(pool.map(work, pairs)))

    def M(self, L, xi, z):
        t_xi = integrate_transfer(self.system, L, xi)
        return inv2(t_xi) @ integrate_transfer(self.system, L, xi + complex(z))


# --- grids ------------------------------------------------------------------


def default_points() -> list[complex]:
    """``-2, -1.5, ..., 2`` on the real axis and the corners ``+-2 +- i``."""
    pts = [complex(-2 + k / 2, 0.0) for k in range(9)]
    pts += [complex(x, y) for x in (-2.0, 2.0) for y in (-1.0, 1.0)]
    return pts


def grid_from_points(points: Sequence[complex]) -> list[tuple[complex, complex]]:
    return [(complex(z), complex(w)) for z in points for w in points]


def default_grid() -> list[tuple[complex, complex]]:
    return grid_from_points(default_points())


def _sinc(u: complex) -> complex:
    if abs(u) < 1e-4:
        u2 = u * u
        return 1 - u2 / 6 + u2 * u2 / 120
    return cmath.sin(u) / u


def sinc_target(z: complex, w: complex) -> complex:
    """``sin(pi (conj(w) - z)) / (pi (conj(w) - z))``, equal to 1 on the diagonal."""
    return _sinc(math.pi * (complex(w).conjugate() - complex(z)))


# --- rescaled kernels -------------------------------------------------------


def _diag_kernel(provider: KernelProvider, L: float, xi: float) -> np.ndarray:
    return provider.kernels(L, [complex(xi)], [complex(xi)])[0]


def rescaled_scalar(
    provider: KernelProvider,
    xi: float,
    f: float,
    L: float,
    grid: Optional[Sequence[tuple[complex, complex]]] = None,
    threshold: float = SCALE_THRESHOLD,
) -> KernelTable:
    """``K_L(xi + z/(f K), xi + w/(f K)) / K`` with ``K = K_L(xi, xi)``.

    ``meta["sup_error"]`` is the largest distance to the sinc kernel.
    """
    if not f > 0:
        raise ValueError("f must be positive")
    grid = default_grid() if grid is None else list(grid)
    k0 = float(_diag_kernel(provider, L, xi)[0, 0].real)
    if not k0 > threshold:
        raise ScaleError(f"scale not yet developed: K_L(xi, xi) = {k0:.3g}")
    s = 1.0 / (f * k0)
    zs = np.array([xi + z * s for z, _ in grid])
    ws = np.array([xi + w * s for _, w in grid])
    vals = provider.kernels(L, zs, ws)[:, 0, 0] / k0
    for i, (z, w) in enumerate(grid):
        if z == 0 and w == 0:
            vals[i] = 1.0  # the base point itself, exact by construction
    errs = [abs(v - sinc_target(z, w)) for v, (z, w) in zip(vals, grid)]
    return KernelTable(
        xi=float(xi),
        scale=k0,
        index=float(L),
        grid=grid,
        values=vals,
        model_id=provider.model_id,
        meta={"target": "sinc", "f": float(f), "sup_error": float(max(errs))},
    )


def _resolve_eta(eta, model_id: Optional[str], xi: float) -> tuple[SpherePoint, dict]:
    info: dict[str, Any] = {}
    estimated = None
    if model_id is not None:
        from .weyl import boundary_limit, get_model

        try:
            limit = boundary_limit(get_model(model_id), xi)
        except KeyError:
            limit = None
        if limit is not None and limit.converged:
            estimated = limit.eta
            info["eta_estimated"] = repr(limit.eta)
    if eta is None:
        if estimated is None:
            raise ValueError("eta must be supplied when no converged boundary value is available")
        info["eta_source"] = "boundary_limit"
        return estimated, info
    point = eta if isinstance(eta, SpherePoint) else SpherePoint.from_complex(eta)
    info["eta_source"] = "supplied"
    if estimated is not None:
        info["eta_mismatch"] = chordal_distance(point, estimated) > ETA_MISMATCH
    return point, info


def rescaled_matrix(
    provider: KernelProvider,
    xi: float,
    L: float,
    grid: Optional[Sequence[tuple[complex, complex]]] = None,
    eta=None,
    model_id: Optional[str] = None,
    threshold: float = SCALE_THRESHOLD,
) -> KernelTable:
    """``K_L(xi + z/tau, xi + w/tau) / tau`` with ``tau`` the trace at ``(xi, xi)``.

    Compared entrywise with the ring kernel of ``eta``; ``eta`` defaults to
    the boundary value of ``model_id`` at ``xi``.
    """
    grid = default_grid() if grid is None else list(grid)
    k0 = _diag_kernel(provider, L, xi)
    tau = float((k0[0, 0] + k0[1, 1]).real)
    if not tau > threshold:
        raise ScaleError(f"scale not yet developed: tau = {tau:.3g}")
    point, info = _resolve_eta(eta, model_id if model_id is not None else None, xi)
    ring = ring_objects(point)
    zs = np.array([xi + z / tau for z, _ in grid])
    ws = np.array([xi + w / tau for _, w in grid])
    vals = provider.kernels(L, zs, ws) / tau
    errs = [np.max(np.abs(v - ring.K(z, w))) for v, (z, w) in zip(vals, grid)]
    meta = {"target": f"ring({point!r})", "sup_error": float(max(errs))}
    meta.update(info)
    return KernelTable(
        xi=float(xi), scale=tau, index=float(L), grid=grid, values=vals,
        model_id=provider.model_id, meta=meta,
    )


@dataclass(frozen=True)
class UniversalityReport:
    model_id: str
    xi: float
    indices: list[float]
    sup_errors: list[float]
    target: str
    grid: str
    converged: bool
    decay_ratio: float
    threshold: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def universality_report(
    provider: KernelProvider,
    xi: float,
    indices: Sequence[float],
    kind: str = "scalar",
    f: Optional[float] = None,
    eta=None,
    grid=None,
    grid_label: str = "default",
    threshold: Optional[float] = None,
    model_id: Optional[str] = None,
) -> tuple[UniversalityReport, list[KernelTable]]:
    """Run the rescaled comparison at each index; ``converged`` means the last error is below ``threshold``."""
    tables = []
    for L in indices:
        if kind == "scalar":
            tables.append(rescaled_scalar(provider, xi, f, L, grid))
        elif kind == "matrix":
            tables.append(rescaled_matrix(provider, xi, L, grid, eta=eta, model_id=model_id))
        else:
            raise ValueError(f"unknown universality kind {kind!r}")
    errs = [t.meta["sup_error"] for t in tables]
    ratio = errs[-1] / errs[0] if errs[0] > 0 else (0.0 if errs[-1] == 0 else math.inf)
    converged = threshold is None or errs[-1] < threshold
    report = UniversalityReport(
        model_id=provider.model_id,
        xi=float(xi),
        indices=[float(L) for L in indices],
        sup_errors=errs,
        target=tables[0].meta["target"],
        grid=grid_label,
        converged=bool(converged),
        decay_ratio=float(ratio),
        threshold=threshold,
    )
    return report, tables


# --- equivalence diagnostics ------------------------------------------------


@dataclass
class EquivalenceReport:
    """Distances for the three equivalent conditions at each index.

    ``hamiltonian``: ``K_L(xi,xi)/tau`` to the ring Hamiltonian;
    ``solution``: ``T(L,xi)^-1 T(L,xi+z/tau)`` to the ring solution;
    ``kernel``: the rescaled matrix kernel to the ring kernel.
    """

    model_id: str
    xi: float
    eta: str
    eta_real: bool
    indices: list[float]
    hamiltonian: list[float] = field(default_factory=list)
    solution: list[float] = field(default_factory=list)
    kernel: list[float] = field(default_factory=list)

    @staticmethod
    def _decays(values: Sequence[float]) -> bool:
        return values[-1] < values[0] / 3 or values[-1] <= DECAY_FLOOR

    @property
    def decay_together(self) -> bool:
        return all(self._decays(v) for v in (self.hamiltonian, self.solution, self.kernel))

    def max_distance(self) -> float:
        return max(self.hamiltonian + self.solution + self.kernel)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["decay_together"] = self.decay_together
        return out


def equivalence_report(
    provider: KernelProvider,
    xi: float,
    indices: Sequence[float],
    eta=None,
    model_id: Optional[str] = None,
    grid=None,
    points: Optional[Sequence[complex]] = None,
) -> EquivalenceReport:
    point, _ = _resolve_eta(eta, model_id, xi)
    ring = ring_objects(point)
    points = default_points() if points is None else list(points)
    report = EquivalenceReport(
        provider.model_id, float(xi), repr(point), point.is_real_or_infinite(1e-12),
        [float(L) for L in indices],
    )
    for L in indices:
        k0 = _diag_kernel(provider, L, xi)
        tau = float((k0[0, 0] + k0[1, 1]).real)
        report.hamiltonian.append(float(np.max(np.abs(k0 / tau - ring.H))))
        report.solution.append(
            max(float(np.max(np.abs(provider.M(L, xi, z / tau) - ring.M(z)))) for z in points)
        )
        table = rescaled_matrix(provider, xi, L, grid, eta=point)
        report.kernel.append(table.meta["sup_error"])
    return report


# --- zeros, subordinacy, scale ----------------------------------------------


@dataclass(frozen=True)
class ClockResult:
    xi: float
    n: int
    f: float
    K: float
    gaps: dict[int, float]
    zeros: dict[int, float]

    def max_deviation(self) -> float:
        return max(abs(g - 1) for g in self.gaps.values())


def clock_spacing(
    params: JacobiParams, xi: float, n: int, j_range: int, f: Optional[float] = None
) -> ClockResult:
    """``f K_n(xi,xi) (x_{j+1} - x_j)`` for ``-j_range <= j <= j_range``.

    Zeros are labeled ``x_{-1} < xi <= x_0``.  ``f`` defaults to the
    boundary density of the model registered under ``params.model_id``.
    """
    if f is None:
        from .weyl import boundary_limit, get_model

        limit = boundary_limit(get_model(params.model_id), xi)
        if not limit.converged or not limit.f_mu > 0:
            raise ValueError("f is not available from the boundary behaviour; supply it")
        f = limit.f_mu
    near = zeros_near(params, n, xi, j_range + 2)
    labels = near.labeled()
    needed = range(-j_range, j_range + 2)
    if any(j not in labels for j in needed):
        raise ValueError(f"not enough zeros of p_{n} on both sides of {xi}")
    k = float(scalar_cd_kernel(params, n, xi, xi).real)
    gaps = {j: f * k * (labels[j + 1] - labels[j]) for j in range(-j_range, j_range + 1)}
    return ClockResult(float(xi), n, float(f), k, gaps, {j: labels[j] for j in needed})


def subordinacy_ratio(params: JacobiParams, xi: float, n: int) -> float:
    """``sum_{j<n} p_j(xi)^2 / sum_{j<n} (p_j(xi)^2 + q_j(xi)^2)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    a, b = params.arrays(n)
    return float(kernels.subordinacy_sums(a, b, n, float(xi)))


def scale_experiment(params: JacobiParams, xi: float, ns: Sequence[int]) -> list[tuple[int, float]]:
    """Raw ``(n, K_n(xi,xi)/n)`` table; no limit is asserted."""
    return [(int(n), float(scalar_cd_kernel(params, n, xi, xi).real) / n) for n in ns]
