"""Spacelike graphs in a GRW spacetime ``I x_f F`` with metric ``-dt^2 + f(t)^2 g``.

For ``u: F -> I`` the graph ``{(u(p), p)}`` carries the induced metric
``g_u = -du (x) du + f(u)^2 g``, which is Riemannian exactly when
``|Du| < f(u)``. The unit normal is taken in the time orientation of
``-d/dt``, so that ``cosh(theta) = <N, d/dt> = f(u) / sqrt(f(u)^2 - |Du|^2)``.

Sign conventions: ``A = -nabla N`` and ``H = -trace(A)/2``, which give
``A = (f'/f) Id`` and ``H = -f'/f`` on the slice ``t = t0``.

Ambient Christoffel symbols used by :func:`shape_operator` (fiber indices
i, j, k; ``Gamma`` are those of g)::

    Gamma^t_{ij} = f f' g_ij
    Gamma^k_{tj} = Gamma^k_{jt} = (f'/f) delta^k_j
    Gamma^k_{ij} = Gamma_F^k_{ij}
    Gamma^t_{tt} = Gamma^t_{ti} = Gamma^k_{tt} = 0

They follow from ``nabla_X xi = f' X`` for ``xi = f d/dt``: the t-component of
``nabla_i d_j`` is ``f f' g_ij`` and ``nabla_{d_j} d/dt = (f'/f) d_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import fibermesh as fm
from .warp import WarpingFunction

NOISE_FLOOR = 1e-10


class NotSpacelike(ValueError):
    def __init__(self, node, slack):
        self.node = node
        self.slack = slack
        super().__init__(
            f"graph is not spacelike: f(u)^2 - |Du|^2 = {slack:.3e} at node {node}"
        )


def _values(mesh, u):
    if hasattr(u, "sample"):
        return np.asarray(u.sample(mesh), dtype=float), u
    if callable(u):
        return np.asarray(u(mesh), dtype=float), u
    arr = np.array(u, dtype=float)
    return np.broadcast_to(arr, mesh.shape).copy(), None


class SpacelikeGraph:
    """Validated spacelike graph with cached first-order quantities.

    Parameters
    ----------
    wf : WarpingFunction
    mesh : FiberMesh
    u : array_like, callable or field recipe
        Height function. Analytic sources (callables of the mesh or objects
        with ``sample(mesh)``) are kept so that refinement studies can
        resample them exactly.
    """

    def __init__(self, wf: WarpingFunction, mesh: fm.FiberMesh, u):
        self.wf = wf
        self.mesh = mesh
        self.u, self.source = _values(mesh, u)
        if not np.all(np.isfinite(self.u)):
            raise ValueError("height function has non-finite values")
        vals = wf.eval(self.u)  # raises DomainError
        self.f = vals.f
        self.f_prime = vals.f_prime
        self.f_second = vals.f_second
        self.logf_second = vals.logf_second

        self.du = np.stack(fm.partials(mesh, self.u))
        self.Du = fm.gradient(mesh, self.u)
        self.gradnorm2 = self.du[0] * self.Du[0] + self.du[1] * self.Du[1]
        self.slack = self.f**2 - self.gradnorm2
        if not np.all(self.slack > 0):
            node = np.unravel_index(np.argmin(self.slack), mesh.shape)
            raise NotSpacelike(tuple(int(i) for i in node), float(self.slack[node]))

        g = mesh.metric
        f2 = self.f**2
        self.induced = fm.Metric(
            f2 * g.m11 - self.du[0] ** 2,
            f2 * g.m12 - self.du[0] * self.du[1],
            f2 * g.m22 - self.du[1] ** 2,
        )
        root = np.sqrt(self.slack)
        self.cosh_theta = self.f / root
        self.speed = np.sqrt(self.gradnorm2) / self.f
        # Gradient of t = u with respect to g_u (not the fiber gradient Du).
        j11, j12, j22 = self.induced.inverse()
        self.grad_t = np.stack([
            j11 * self.du[0] + j12 * self.du[1],
            j12 * self.du[0] + j22 * self.du[1],
        ])
        self.grad_t_norm2 = self.du[0] * self.grad_t[0] + self.du[1] * self.grad_t[1]

    @property
    def max_speed(self) -> float:
        """lambda = max |v|, the largest relative speed of the normal observers."""
        return float(self.speed.max())

    @property
    def sinh2_theta(self):
        return self.gradnorm2 / self.slack

    @cached_property
    def H(self) -> np.ndarray:
        return mean_curvature(self)

    @cached_property
    def shape_op(self) -> ShapeOperator:
        return shape_operator(self)

    @cached_property
    def K(self) -> np.ndarray:
        return intrinsic_curvature(self)

    def laplacian(self, phi) -> np.ndarray:
        """Laplace-Beltrami operator of the induced metric."""
        return fm.laplace_beltrami(self.mesh, phi, self.induced)

    def integrate(self, phi) -> float:
        return fm.integrate(self.mesh, phi, self.induced)

    @property
    def area(self) -> float:
        return self.integrate(1.0)


def make_graph(wf: WarpingFunction, mesh: fm.FiberMesh, u) -> SpacelikeGraph:
    return SpacelikeGraph(wf, mesh, u)


def mean_curvature(graph: SpacelikeGraph) -> np.ndarray:
    """Nonlinear mean curvature operator H(u), divergence taken in the fiber metric.

    ``H(u) = -div(Du / (2 f sqrt(f^2 - |Du|^2)))
             - f' / (2 sqrt(f^2 - |Du|^2)) * (2 + |Du|^2 / f^2)``
    """
    f, fp = graph.f, graph.f_prime
    root = np.sqrt(graph.slack)
    flux = graph.Du / (2.0 * f * root)
    return -fm.divergence(graph.mesh, flux) - fp / (2.0 * root) * (2.0 + graph.gradnorm2 / f**2)


@dataclass(frozen=True, eq=False)
class ShapeOperator:
    A: np.ndarray  # A[i, j] = A^i_j, shape (2, 2, n0, n1)
    II: np.ndarray
    trace_A2: np.ndarray
    H_from_A: np.ndarray


def shape_operator(graph: SpacelikeGraph) -> ShapeOperator:
    """Second fundamental form from the warped-product Christoffel symbols.

    ``II_ij = <N, nabla_{d_i X} d_j X>
           = f/sqrt(slack) * (Hess_g(u)_ij + f f' g_ij - 2 (f'/f) u_i u_j)``
    and ``A = g_u^{-1} II``.
    """
    mesh = graph.mesh
    f, fp = graph.f, graph.f_prime
    du = graph.du
    hess = np.empty((2, 2) + mesh.shape)
    hess[0, 0] = mesh.d0(du[0], -1)
    hess[0, 1] = hess[1, 0] = mesh.d1(du[0])
    hess[1, 1] = mesh.d1(du[1])
    if mesh.kind != "torus":
        G = mesh.christoffel()
        hess -= np.einsum("kij...,k...->ij...", G, du)
    g = mesh.metric
    gij = [[g.m11, g.m12], [g.m12, g.m22]]
    scale = f / np.sqrt(graph.slack)
    II = np.empty_like(hess)
    for i in range(2):
        for j in range(2):
            II[i, j] = scale * (hess[i, j] + f * fp * gij[i][j] - 2.0 * (fp / f) * du[i] * du[j])
    j11, j12, j22 = graph.induced.inverse()
    ginv = [[j11, j12], [j12, j22]]
    A = np.empty_like(II)
    for i in range(2):
        for j in range(2):
            A[i, j] = ginv[i][0] * II[0, j] + ginv[i][1] * II[1, j]
    trace_A2 = A[0, 0] ** 2 + 2.0 * A[0, 1] * A[1, 0] + A[1, 1] ** 2
    return ShapeOperator(A, II, trace_A2, -0.5 * (A[0, 0] + A[1, 1]))


def intrinsic_curvature(graph: SpacelikeGraph) -> np.ndarray:
    """Gauss curvature K of the induced metric (Brioschi formula)."""
    return fm.gauss_curvature(graph.mesh, graph.induced)


# -- identities ---------------------------------------------------------------

IDENTITIES = ("laplacian_t", "laplacian_f", "laplacian_logf", "gauss_K2")
CROSS_CHECK = "H_cross"


def identity_terms(graph: SpacelikeGraph) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Left- and right-hand sides of the four surface identities.

    ``laplacian_t``    Lap t = -(f'/f)(2 + |grad t|^2) - 2 H cosh
    ``laplacian_f``    Lap f(t) = -2 f'^2/f + f (log f)'' |grad t|^2 - 2 f' H cosh
    ``laplacian_logf`` Lap log f(t) = -(f'/f + H cosh)^2 + (H^2 - f'^2/f^2) cosh^2
                                      + (log f)'' |grad t|^2
    ``gauss_K2``       K = f'^2/f^2 + (K_F/f^2 - (log f)'') |grad t|^2 + K_F/f^2
                           - 2 H^2 + trace(A^2)/2

    Laplacians are taken in the induced metric, ``cosh`` is ``<N, d/dt>``,
    ``|grad t|^2`` is measured with ``g_u`` and ``trace(A^2)`` comes from
    :func:`shape_operator`.
    """
    f, fp, l2 = graph.f, graph.f_prime, graph.logf_second
    H, c, gt2 = graph.H, graph.cosh_theta, graph.grad_t_norm2
    ratio = fp / f
    KF = graph.mesh.gauss_curvature
    return {
        "laplacian_t": (
            graph.laplacian(graph.u),
            -ratio * (2.0 + gt2) - 2.0 * H * c,
        ),
        "laplacian_f": (
            graph.laplacian(f),
            -2.0 * fp**2 / f + f * l2 * gt2 - 2.0 * fp * H * c,
        ),
        "laplacian_logf": (
            graph.laplacian(np.log(f)),
            laplacian3_rhs(graph),
        ),
        "gauss_K2": (
            graph.K,
            ratio**2 + (KF / f**2 - l2) * gt2 + KF / f**2 - 2.0 * H**2
            + 0.5 * graph.shape_op.trace_A2,
        ),
    }


def laplacian3_rhs(graph: SpacelikeGraph) -> np.ndarray:
    """Right-hand side of the Lap log f(t) identity; each term is sign-definite
    under (log f)'' <= 0 and H^2 <= f'^2/f^2."""
    ratio = graph.f_prime / graph.f
    H, c = graph.H, graph.cosh_theta
    return (-(ratio + H * c) ** 2
            + (H**2 - ratio**2) * c**2
            + graph.logf_second * graph.grad_t_norm2)


def _region_mask(mesh, polar_cap):
    if mesh.kind != "sphere" or not polar_cap:
        return np.ones(mesh.shape, dtype=bool)
    th, _ = mesh.coords()
    return (th >= polar_cap) & (th <= math.pi - polar_cap)


@dataclass
class ResidualRecord:
    name: str
    level: int
    resolution: tuple[int, int]
    spacing: float
    max_abs_residual: float
    l2_residual: float
    max_abs_interior: float

    def to_dict(self):
        return {
            "name": self.name,
            "level": self.level,
            "resolution": list(self.resolution),
            "spacing": self.spacing,
            "max_abs_residual": self.max_abs_residual,
            "l2_residual": self.l2_residual,
            "max_abs_interior": self.max_abs_interior,
        }


def fit_order(spacings, errors, floor=NOISE_FLOOR):
    """Least-squares slope of log(error) against log(spacing).

    Returns ``"exact"`` when every error sits at the noise floor and ``None``
    with fewer than three levels.
    """
    errors = np.asarray(errors, dtype=float)
    if np.all(errors <= floor):
        return "exact"
    if len(errors) < 3:
        return None
    if np.any(errors <= 0):
        return None
    slope, _ = np.polyfit(np.log(spacings), np.log(errors), 1)
    return float(slope)


@dataclass
class ResidualReport:
    records: list[ResidualRecord] = field(default_factory=list)
    prolongation: str = "analytic"
    polar_cap: float = 0.0

    def names(self):
        seen = []
        for r in self.records:
            if r.name not in seen:
                seen.append(r.name)
        return seen

    def series(self, name, key="max_abs_residual"):
        recs = sorted((r for r in self.records if r.name == name), key=lambda r: r.level)
        return [r.spacing for r in recs], [getattr(r, key) for r in recs]

    @property
    def levels(self) -> int:
        return len({r.level for r in self.records})

    def orders(self, key="max_abs_residual") -> dict:
        out = {}
        for name in self.names():
            h, e = self.series(name, key)
            out[name] = fit_order(h, e) if len(h) >= 3 or np.all(np.asarray(e) <= NOISE_FLOOR) else None
        return out

    def to_dict(self) -> dict:
        return {
            "prolongation": self.prolongation,
            "polar_cap": self.polar_cap,
            "levels": self.levels,
            "records": [r.to_dict() for r in self.records],
            "orders": self.orders(),
            "orders_interior": self.orders("max_abs_interior"),
        }


def _record_graph(report, graph, level, polar_cap):
    mesh = graph.mesh
    mask = _region_mask(mesh, polar_cap)
    cell = mesh.cell_area
    pairs = dict(identity_terms(graph))
    pairs[CROSS_CHECK] = (graph.shape_op.H_from_A, graph.H)
    for name, (lhs, rhs) in pairs.items():
        res = np.broadcast_to(lhs - rhs, mesh.shape)
        report.records.append(ResidualRecord(
            name=name,
            level=level,
            resolution=mesh.shape,
            spacing=mesh.spacing,
            max_abs_residual=float(np.max(np.abs(res))),
            l2_residual=math.sqrt(float(np.sum(res**2)) * cell),
            max_abs_interior=float(np.max(np.abs(res[mask]))),
        ))


def identity_residuals(graph: SpacelikeGraph, levels: int = 1,
                       polar_cap: float | None = None) -> ResidualReport:
    """Residuals of the four identities (plus the H cross-check) under refinement.

    Level 0 is ``graph`` itself; each further level doubles the resolution.
    Analytic height functions are resampled exactly, arrays are interpolated
    and the report is marked ``prolongation="interpolated"``. ``polar_cap``
    (sphere only) excludes latitudes within that angle of either pole from the
    ``max_abs_interior`` norm; default pi/8 on the sphere.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if polar_cap is None:
        polar_cap = math.pi / 8 if graph.mesh.kind == "sphere" else 0.0
    report = ResidualReport(polar_cap=polar_cap)
    source = graph.source if graph.source is not None else graph.u
    current = graph
    for level in range(levels):
        if level:
            mesh, vals, exact = fm.refine(current.mesh, source)
            if not exact:
                report.prolongation = "interpolated"
                source = vals
            current = SpacelikeGraph(graph.wf, mesh, source if exact else vals)
        _record_graph(report, current, level, polar_cap)
    return report


# -- perfect fluid energy -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EnergyReport:
    rho: np.ndarray
    E_S: float
    bound_rhs: float
    bound_holds: bool
    curvature_energy_margin: float
    ncc_margin: float
    tilde_max_residual: float

    def to_dict(self) -> dict:
        return {
            "E_S": self.E_S,
            "bound_rhs": self.bound_rhs,
            "bound_holds": self.bound_holds,
            "curvature_energy_margin": self.curvature_energy_margin,
            "ncc_margin": self.ncc_margin,
            "ncc_holds": self.ncc_margin >= -1e-9,
            "tilde_max_residual": self.tilde_max_residual,
            "rho_min": float(np.min(self.rho)),
            "rho_max": float(np.max(self.rho)),
        }


def energy_report(graph: SpacelikeGraph, rtol: float = 1e-3) -> EnergyReport:
    """Perfect-fluid energy density and the total-energy bound on the graph.

    ``8 pi rho = K_F/f^2 + f'^2/f^2`` at t = u; ``E_S`` integrates rho against
    the induced area form and ``bound_rhs = chi/2 + (1/8pi) int f'^2/f^2 dS``.
    The bound is only guaranteed when NCC holds and H^2 <= f'^2/f^2, so the
    pointwise NCC margin on the graph and the max of H^2 - f'^2/f^2 are
    reported alongside. ``bound_holds`` allows a relative slack ``rtol`` for
    quadrature error.
    """
    mesh = graph.mesh
    f, fp = graph.f, graph.f_prime
    KF = mesh.gauss_curvature
    ratio2 = (fp / f) ** 2
    rho = (KF / f**2 + ratio2) / (8.0 * math.pi)
    rho = np.broadcast_to(rho, mesh.shape)
    E_S = graph.integrate(rho)
    bound = 0.5 * mesh.euler_characteristic + graph.integrate(ratio2) / (8.0 * math.pi)
    holds = E_S <= bound + rtol * max(1.0, abs(bound))
    margin = float(np.min(graph.K - (8.0 * math.pi * rho - graph.H**2)))
    ncc = float(np.min(KF / f**2 - graph.logf_second))
    tilde = float(np.max(graph.H**2 - ratio2))
    return EnergyReport(np.array(rho), E_S, bound, bool(holds), margin, ncc, tilde)
