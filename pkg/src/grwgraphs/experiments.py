"""Numerical experiments on spacelike graphs.

* :func:`solve_slice` drives a graph towards ``H(u) = -f'(u)/f(u)``, whose only
  solutions on a compact fiber under ``(log f)'' <= 0`` are constants.
* :func:`violation_scan` evaluates ``max(H^2 - f'^2/f^2)`` over families of
  non-constant graphs; it should never be clearly negative.
* :func:`superharmonic_check`, :func:`cmc_bracket` and
  :func:`convergence_study` probe the intermediate statements.

Test fields are described by :class:`FieldRecipe` objects, which are analytic
so refinement studies resample them exactly.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import fibermesh as fm
from .conditions import inequality_classify
from .graphgeom import (NotSpacelike, ResidualReport, SpacelikeGraph, identity_residuals,
                        laplacian3_rhs)
from .warp import DomainError, IntervalSpec, WarpingFunction, log_concavity_margin

VIOLATION_EPS_128 = 1e-3


class SafeguardBreach(RuntimeError):
    pass


class NonConvergence(RuntimeError):
    def __init__(self, result):
        self.result = result
        super().__init__(
            f"no convergence after {result.iterations} iterations "
            f"(residual {result.residual_inf:.3e})"
        )


class PreconditionError(ValueError):
    pass


# -- field recipes --------------------------------------------------------------

@dataclass(frozen=True)
class FieldRecipe:
    """Base class; subclasses implement :meth:`perturbation`."""

    t0: float

    kind = "base"

    def perturbation(self, mesh: fm.FiberMesh) -> np.ndarray:
        raise NotImplementedError

    def sample(self, mesh: fm.FiberMesh) -> np.ndarray:
        return self.t0 + self.perturbation(mesh)

    @property
    def is_constant(self) -> bool:
        return getattr(self, "amplitude", 0.0) == 0.0

    def to_config(self) -> dict:
        cfg = {"kind": self.kind}
        cfg.update({k: (list(v) if isinstance(v, tuple) else v)
                    for k, v in self.__dict__.items()})
        return cfg

    def rescaled(self, factor: float) -> FieldRecipe:
        return self if self.is_constant else replace(self, amplitude=self.amplitude * factor)

    def realize(self, wf: WarpingFunction, mesh: fm.FiberMesh,
                safeguard: float = 0.9) -> tuple[FieldRecipe, SpacelikeGraph]:
        """Shrink the amplitude until the graph is spacelike with speed <= safeguard."""
        recipe = self
        for _ in range(60):
            try:
                graph = SpacelikeGraph(wf, mesh, recipe)
            except NotSpacelike:
                recipe = recipe.rescaled(0.5)
                continue
            if graph.max_speed <= safeguard:
                return recipe, graph
            recipe = recipe.rescaled(0.95 * safeguard / graph.max_speed)
        raise SafeguardBreach(f"could not rescale {self} below speed {safeguard}")


@dataclass(frozen=True)
class Constant(FieldRecipe):
    kind = "Constant"

    def perturbation(self, mesh):
        return np.zeros(mesh.shape)


@dataclass(frozen=True)
class SingleMode(FieldRecipe):
    """``t0 + amplitude * mode``.

    On the torus the mode is ``sin(2 pi (k1 x / Lx + k2 y / Ly))``. On the
    sphere it is ``T_k1(cos theta) Re((x + i y)^k2)``, i.e.
    ``cos(k1 theta) sin(theta)^k2 cos(k2 phi)``, which is smooth at the poles.
    """

    amplitude: float = 0.1
    wavevector: tuple[int, int] = (1, 0)
    kind = "SingleMode"

    def perturbation(self, mesh):
        k1, k2 = self.wavevector
        X0, X1 = mesh.coords()
        if mesh.kind == "torus":
            Lx, Ly = mesh.size
            return self.amplitude * np.sin(2 * math.pi * (k1 * X0 / Lx + k2 * X1 / Ly))
        return (self.amplitude * np.cos(k1 * X0) * np.sin(X0) ** k2 * np.cos(k2 * X1))


@dataclass(frozen=True)
class RandomBandLimited(FieldRecipe):
    """Seeded random smooth field with ``|u - t0| <= amplitude``.

    Torus: trigonometric sum over wavenumbers ``|k1|, |k2| <= max_mode``.
    Sphere: polynomial of degree ``<= max_mode`` in the embedding coordinates.
    Coefficients are normalised by their absolute sum.
    """

    amplitude: float = 0.1
    max_mode: int = 4
    seed: int = 0
    kind = "RandomBandLimited"

    def perturbation(self, mesh):
        rng = np.random.default_rng(self.seed)
        if mesh.kind == "torus":
            X0, X1 = mesh.coords()
            Lx, Ly = mesh.size
            M = self.max_mode
            out = np.zeros(mesh.shape)
            total = 0.0
            for k1 in range(0, M + 1):
                for k2 in range(-M, M + 1):
                    if k1 == 0 and k2 <= 0:
                        continue
                    a, b = rng.normal(size=2)
                    phase = 2 * math.pi * (k1 * X0 / Lx + k2 * X1 / Ly)
                    out += a * np.cos(phase) + b * np.sin(phase)
                    total += abs(a) + abs(b)
            return self.amplitude * out / total
        X, Y, Z = (c / mesh.size[0] for c in mesh.embedding())
        out = np.zeros(mesh.shape)
        total = 0.0
        for deg in range(1, self.max_mode + 1):
            for a in range(deg + 1):
                for b in range(deg + 1 - a):
                    c = rng.normal()
                    out += c * X**a * Y**b * Z ** (deg - a - b)
                    total += abs(c)
        return self.amplitude * out / total


RECIPES = {cls.kind: cls for cls in (Constant, SingleMode, RandomBandLimited)}


def recipe_from_config(cfg: dict) -> FieldRecipe:
    cfg = dict(cfg)
    cls = RECIPES[cfg.pop("kind")]
    if "wavevector" in cfg:
        cfg["wavevector"] = tuple(int(k) for k in cfg["wavevector"])
    return cls(**cfg)


# -- slice solver ---------------------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 500
    residual_tolerance: float = 1e-9
    damping: float = 1.0
    pseudo_time_step: float = 20.0
    spacelike_safeguard: float = 0.9

    def __post_init__(self):
        if self.max_iterations <= 0 or self.residual_tolerance <= 0 or self.pseudo_time_step <= 0:
            raise ValueError("solver parameters must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if not 0 < self.spacelike_safeguard < 1:
            raise ValueError("spacelike_safeguard must lie in (0, 1)")

    def to_config(self) -> dict:
        return dict(self.__dict__)


@dataclass(eq=False)
class SolveResult:
    final: SpacelikeGraph
    iterations: int
    history: list[dict]
    oscillation: float
    residual_inf: float
    converged: bool
    recipe: FieldRecipe | None = None

    def history_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["iteration", "residual_inf", "oscillation", "max_speed"]
        w.writerow(cols)
        for row in self.history:
            w.writerow([row[c] for c in cols])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"iterations": self.iterations, "oscillation": self.oscillation,
                "residual_inf": self.residual_inf, "converged": self.converged,
                "final_mean": float(self.final.u.mean())}


def slice_residual(graph: SpacelikeGraph) -> np.ndarray:
    """``R(u) = H(u) + f'(u)/f(u)``, zero exactly on slices."""
    return graph.H + graph.f_prime / graph.f


class _Preconditioner:
    """Factorisation of ``I/tau - L/(2 f^2)`` with L the fiber Laplacian.

    This is the linearisation of R about the slice at height ``t``; the
    pseudo-time shift also pins the otherwise free constant mode. The
    factorisation is reused until ``f(t)^2`` or ``tau`` drift noticeably.
    """

    def __init__(self, wf, mesh):
        self.L = fm.laplacian_matrix(mesh).tocsc()
        self.eye = sp.identity(mesh.nodes, format="csc")
        self.wf = wf
        self.key = None
        self.lu = None

    def solve(self, rhs, t, tau):
        f2 = float(self.wf.f(t)) ** 2
        if (self.key is None or abs(f2 / self.key[0] - 1.0) > 1e-3
                or not 0.5 <= tau / self.key[1] <= 2.0):
            self.key = (f2, tau)
            self.lu = splu((self.eye / tau - self.L / (2.0 * f2)).tocsc())
        return self.lu.solve(rhs.ravel()).reshape(rhs.shape)


MAX_TIME_STEP_GROWTH = 1e3


def solve_slice(wf: WarpingFunction, mesh: fm.FiberMesh, initial: FieldRecipe,
                cfg: SolverConfig | None = None, window: IntervalSpec | None = None,
                raise_on_failure: bool = True) -> SolveResult:
    """Pseudo-transient continuation for ``H(u) = -f'(u)/f(u)``.

    Each step solves ``(I/tau - L/(2 f^2)) delta = -R(u)`` and sets
    ``u <- u + damping * delta``. The pseudo time step grows as the residual
    falls, ``tau = pseudo_time_step * |R_0| / |R|`` (switched evolution
    relaxation), so the last steps approach Newton steps. A step that leaves the domain, loses
    spacelikeness or exceeds the speed safeguard is halved, at most ten
    times. Iteration stops once ``max |R| < residual_tolerance``.
    """
    cfg = cfg or SolverConfig()
    recipe, graph = initial.realize(wf, mesh, cfg.spacelike_safeguard)
    if window is not None:
        concave = log_concavity_margin(wf, window).holds
    else:
        concave = bool(np.max(wf.d2logf(graph.u)) <= 1e-9)
    if not concave:
        warnings.warn("(log f)'' > 0 somewhere on the solver window; constants "
                      "need not be the only solutions", stacklevel=2)
    if window is not None:
        window = IntervalSpec.parse(window)

    pre = _Preconditioner(wf, mesh)
    history = []

    def record(it, g, R):
        history.append({
            "iteration": it,
            "residual_inf": float(np.max(np.abs(R))),
            "oscillation": float(g.u.max() - g.u.min()),
            "max_speed": g.max_speed,
        })

    R = slice_residual(graph)
    record(0, graph, R)
    it = 0
    while history[-1]["residual_inf"] >= cfg.residual_tolerance and it < cfg.max_iterations:
        it += 1
        growth = min(history[0]["residual_inf"] / history[-1]["residual_inf"],
                     MAX_TIME_STEP_GROWTH)
        tau = cfg.pseudo_time_step * growth
        step = cfg.damping * pre.solve(-R, float(graph.u.mean()), tau)
        for _ in range(11):
            trial = graph.u + step
            try:
                if window is not None and not (window.contains(trial.min())
                                               and window.contains(trial.max())):
                    raise DomainError("iterate left the window")
                candidate = SpacelikeGraph(wf, mesh, trial)
            except (DomainError, NotSpacelike):
                step = 0.5 * step
                continue
            if candidate.max_speed <= cfg.spacelike_safeguard:
                break
            step = 0.5 * step
        else:
            raise SafeguardBreach(f"step rejected repeatedly at iteration {it}")
        assert candidate.max_speed <= cfg.spacelike_safeguard
        graph = candidate
        R = slice_residual(graph)
        record(it, graph, R)

    res = history[-1]["residual_inf"]
    result = SolveResult(graph, it, history, float(graph.u.max() - graph.u.min()), res,
                         res < cfg.residual_tolerance, recipe)
    if not result.converged and raise_on_failure:
        raise NonConvergence(result)
    return result


# -- inequality scans -----------------------------------------------------------

def violation_tolerance(mesh: fm.FiberMesh) -> float:
    """eps(h): 1e-3 at spacing 2 pi / 128, shrinking like h^2."""
    return VIOLATION_EPS_128 * (mesh.spacing / (2 * math.pi / 128)) ** 2


@dataclass
class ScanResult:
    per_field: list[dict]
    min_over_fields: float
    eps: float

    @property
    def within_floor(self) -> bool:
        return self.min_over_fields > -self.eps

    def to_dict(self) -> dict:
        return {"per_field": self.per_field, "min_over_fields": self.min_over_fields,
                "eps": self.eps, "within_floor": self.within_floor,
                "note": "compact fiber only; evidence for the compact case"}


def violation_scan(wf: WarpingFunction, mesh: fm.FiberMesh, recipes,
                   safeguard: float = 0.9) -> ScanResult:
    """Largest value of ``H^2 - f'^2/f^2`` on each non-constant test graph."""
    rows = []
    for recipe in recipes:
        if recipe.is_constant:
            raise ValueError(f"constant recipe {recipe} has no violation to scan")
        used, graph = recipe.realize(wf, mesh, safeguard)
        cls = inequality_classify(graph)
        rows.append({"recipe": used.to_config(), "max_residual": cls.max_residual,
                     "verdict": cls.verdict.value})
    if not rows:
        raise ValueError("no recipes given")
    return ScanResult(rows, min(r["max_residual"] for r in rows), violation_tolerance(mesh))


def superharmonic_tolerance(mesh: fm.FiberMesh, c: float = 1.0) -> float:
    return c * mesh.spacing**2


@dataclass
class SuperharmonicResult:
    holds_pointwise: bool
    max_laplacian: float
    via_identity: float
    max_disagreement: float
    tol: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def superharmonic_check(graph: SpacelikeGraph, tol: float | None = None,
                        inequality_tol: float = 1e-9) -> SuperharmonicResult:
    """``Lap log f(u) <= 0`` directly and through the log f identity.

    Requires ``H^2 <= f'^2/f^2`` (within ``inequality_tol``) and
    ``(log f)'' <= 0`` on the range of u; otherwise raises PreconditionError.
    """
    cls = inequality_classify(graph, inequality_tol)
    if not cls.satisfies:
        raise PreconditionError(
            f"H^2 <= f'^2/f^2 fails (max residual {cls.max_residual:.3e})")
    if np.max(graph.logf_second) > 1e-12:
        raise PreconditionError("(log f)'' > 0 on the range of u")
    tol = superharmonic_tolerance(graph.mesh) if tol is None else tol
    direct = graph.laplacian(np.log(graph.f))
    via = np.broadcast_to(laplacian3_rhs(graph), graph.mesh.shape)
    mx_d, mx_v = float(direct.max()), float(via.max())
    return SuperharmonicResult(mx_d <= tol and mx_v <= tol, mx_d, mx_v,
                               float(np.max(np.abs(direct - via))), tol)


@dataclass
class CMCBracket:
    H_min: float
    H_max: float
    H_mean: float
    bracket: tuple[float, float]
    inverted: bool
    consistent: bool

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["bracket"] = list(self.bracket)
        return d


def cmc_bracket(graph: SpacelikeGraph, tol: float = 1e-9) -> CMCBracket:
    """Bracket ``[-f'/f at argmax F(u), -f'/f at argmin F(u)]``, F a primitive of f.

    A constant mean curvature H0 would have to lie in this interval. When it
    is inverted (lo > hi, the generic case under log-concavity) no CMC value
    fits, so consistency is checked against the interval spanned by the two
    endpoints.
    """
    prim = graph.wf.primitive(graph.u)
    ratio = graph.f_prime / graph.f
    kmax, kmin = np.argmax(prim), np.argmin(prim)
    lo, hi = float(-ratio.flat[kmax]), float(-ratio.flat[kmin])
    H = graph.H
    mean = graph.integrate(H) / graph.area
    a, b = min(lo, hi), max(lo, hi)
    ok = a - tol <= mean <= b + tol
    if float(H.max() - H.min()) <= tol:
        ok = ok and a - tol <= float(H.mean()) <= b + tol
    return CMCBracket(float(H.min()), float(H.max()), mean, (lo, hi), lo > hi + tol, bool(ok))


def convergence_study(wf: WarpingFunction, mesh0: fm.FiberMesh, recipe: FieldRecipe,
                      levels: int = 3, safeguard: float = 0.9,
                      polar_cap: float | None = None) -> ResidualReport:
    """Identity residuals of ``recipe`` over ``levels`` successive refinements."""
    if levels < 3:
        raise ValueError("a convergence study needs at least 3 levels")
    _, graph = recipe.realize(wf, mesh0, safeguard)
    return identity_residuals(graph, levels, polar_cap)
