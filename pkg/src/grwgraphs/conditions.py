"""Energy conditions of the spacetime and the mean-curvature inequality for graphs.

All spacetime conditions are evaluated on a sample grid of heights t (and, for
the ubiquitous condition, of timelike directions) with the fiber curvature
entering as a constant ``Kf``. Verdicts report the sampled minimum of the
defining quantity; they are evidence on the grid, never a statement about the
continuum.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .graphgeom import SpacelikeGraph
from .warp import DEFAULT_WINDOW, IntervalSpec, WarpingFunction, sample_grid

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class ConditionVerdict:
    name: str
    holds: bool
    margin: float
    worst_point: dict
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"condition": self.name, "holds": self.holds, "margin": self.margin,
               "worst": self.worst_point}
        out.update(self.details)
        return out


def _grid(wf, window, samples):
    return sample_grid(wf, window, samples, DEFAULT_WINDOW)


def ncc_margin(wf: WarpingFunction, Kf: float, window: IntervalSpec | None = None,
               samples: int = 401, tol: float = DEFAULT_TOL) -> ConditionVerdict:
    """Null convergence condition: ``Kf/f^2 - (log f)'' >= 0``."""
    t = _grid(wf, window, samples)
    q = Kf / wf.f(t) ** 2 - wf.d2logf(t)
    k = int(np.argmin(q))
    return ConditionVerdict("NCC", bool(q[k] >= -tol), float(q[k]), {"t": float(t[k])})


def tcc_check(wf: WarpingFunction, Kf: float, window: IntervalSpec | None = None,
              samples: int = 401, tol: float = DEFAULT_TOL) -> ConditionVerdict:
    """Timelike convergence condition: ``f'' <= 0`` and ``Kf >= f f'' - f'^2``."""
    t = _grid(wf, window, samples)
    f, fp, fpp = wf.f(t), wf.df(t), wf.d2f(t)
    concave = -np.asarray(fpp + 0.0 * t)
    ricci = Kf - (f * fpp - fp**2)
    k1, k2 = int(np.argmin(concave)), int(np.argmin(ricci))
    m1, m2 = float(concave[k1]), float(ricci[k2])
    worst = {"t": float(t[k1] if m1 <= m2 else t[k2])}
    return ConditionVerdict(
        "TCC", m1 >= -tol and m2 >= -tol, min(m1, m2), worst,
        {"min_minus_f_second": m1, "min_fiber_ricci_margin": m2},
    )


def ricci_timelike(wf: WarpingFunction, Kf: float, t, s):
    """Ambient Ricci curvature on the unit timelike vector ``cosh s d/dt + sinh s E``.

    ``E`` is a unit fiber direction; from the warped-product Ricci formula::

        Ric(Z, Z) = sinh^2 s (Kf/f^2 + f''/f + f'^2/f^2) - 2 (f''/f) cosh^2 s
    """
    f, fp, fpp = wf.f(t), wf.df(t), wf.d2f(t)
    return (np.sinh(s) ** 2 * (Kf / f**2 + fpp / f + (fp / f) ** 2)
            - 2.0 * fpp / f * np.cosh(s) ** 2)


def ubiquitous_check(wf: WarpingFunction, Kf: float, window: IntervalSpec | None = None,
                     samples: int = 401, directions: int = 16,
                     tol: float = DEFAULT_TOL) -> ConditionVerdict:
    """Sampled ubiquitous energy condition ``Ric(Z, Z) > 0`` for timelike Z.

    Directions are ``s`` on a uniform grid over [0, 3]. The null limit
    ``s -> inf`` (the NCC quantity) must also be >= -tol, since a positive
    timelike Ricci curvature forces a non-negative null limit. The necessary
    condition ``f'' < 0`` is reported separately.
    """
    if directions < 8:
        raise ValueError("need at least 8 directions")
    t = _grid(wf, window, samples)
    s = np.linspace(0.0, 3.0, directions)
    T, S = np.meshgrid(t, s, indexing="ij")
    ric = ricci_timelike(wf, Kf, T, S)
    i, j = np.unravel_index(int(np.argmin(ric)), ric.shape)
    margin = float(ric[i, j])
    null = Kf / wf.f(t) ** 2 - wf.d2logf(t)
    necessary = bool(np.all(wf.d2f(t) + 0.0 * t < 0))
    holds = margin > tol and float(np.min(null)) >= -tol
    return ConditionVerdict(
        "Ubiquitous", holds, margin, {"t": float(t[i]), "s": float(s[j])},
        {"f_second_negative": necessary, "null_limit_margin": float(np.min(null)),
         "sampled": True},
    )


def log_concavity_verdict(wf: WarpingFunction, window: IntervalSpec | None = None,
                          samples: int = 401, tol: float = DEFAULT_TOL) -> ConditionVerdict:
    t = _grid(wf, window, samples)
    q = -np.asarray(wf.d2logf(t) + 0.0 * t)
    k = int(np.argmin(q))
    return ConditionVerdict("LogConcavity", bool(q[k] >= -tol), float(q[k]), {"t": float(t[k])})


class Verdict(str, enum.Enum):
    SATISFIES_TILDE = "SatisfiesTilde"
    SATISFIES_STRICT = "SatisfiesStrict"
    VIOLATES = "Violates"


@dataclass(frozen=True, eq=False)
class InequalityClassification:
    residual: np.ndarray
    verdict: Verdict
    max_residual: float
    min_residual: float
    worst_node: tuple

    @property
    def satisfies(self) -> bool:
        return self.verdict is not Verdict.VIOLATES

    def to_dict(self) -> dict:
        return {"verdict": self.verdict.value, "max_residual": self.max_residual,
                "min_residual": self.min_residual, "worst_node": list(self.worst_node)}


def inequality_classify(graph: SpacelikeGraph, tol: float = DEFAULT_TOL) -> InequalityClassification:
    """Classify ``H(u)^2 <= f'(u)^2/f(u)^2`` node by node."""
    residual = graph.H**2 - (graph.f_prime / graph.f) ** 2
    k = np.unravel_index(int(np.argmax(residual)), residual.shape)
    mx, mn = float(residual[k]), float(residual.min())
    if mx < -tol:
        verdict = Verdict.SATISFIES_STRICT
    elif mx <= tol:
        verdict = Verdict.SATISFIES_TILDE
    else:
        verdict = Verdict.VIOLATES
    return InequalityClassification(residual, verdict, mx, mn, tuple(int(i) for i in k))


@dataclass(frozen=True)
class ConstantCurvature:
    is_constant: bool
    cbar: float | None
    sign_note: str
    spread: float

    def to_dict(self) -> dict:
        return {"is_constant": self.is_constant, "cbar": self.cbar,
                "sign_note": self.sign_note, "spread": self.spread}


def constant_curvature_classify(wf: WarpingFunction, c: float,
                                window: IntervalSpec | None = None, samples: int = 401,
                                tol: float = 1e-10) -> ConstantCurvature:
    """Check ``f''/f = (c + f'^2)/f^2 = cbar`` for a t-independent cbar.

    For a fiber of constant curvature c this is the condition for the
    spacetime to have constant sectional curvature cbar. Non-product models
    with cbar <= 0 must have c < 0; ``sign_note`` records whether that holds.
    """
    t = _grid(wf, window, samples)
    f, fp, fpp = wf.f(t), wf.df(t), wf.d2f(t)
    q1 = np.asarray(fpp / f + 0.0 * t)
    q2 = np.asarray((c + fp**2) / f**2 + 0.0 * t)
    both = np.concatenate([q1, q2])
    spread = float(both.max() - both.min())
    if spread > tol:
        return ConstantCurvature(False, None, "not constant curvature", spread)
    cbar = float(np.mean(both))
    if np.all(fp == 0):
        note = "f constant: product spacetime, sign relation not applicable"
    elif cbar <= 0:
        note = "consistent: cbar <= 0 and c < 0" if c < 0 else "inconsistent: cbar <= 0 but c >= 0"
    else:
        note = "cbar > 0: no sign constraint on c"
    return ConstantCurvature(True, cbar, note, spread)


def all_conditions(wf: WarpingFunction, Kf: float, window: IntervalSpec | None = None,
                   samples: int = 401, directions: int = 16,
                   tol: float = DEFAULT_TOL) -> dict[str, ConditionVerdict]:
    return {
        "NCC": ncc_margin(wf, Kf, window, samples, tol),
        "TCC": tcc_check(wf, Kf, window, samples, tol),
        "Ubiquitous": ubiquitous_check(wf, Kf, window, samples, directions, tol),
        "LogConcavity": log_concavity_verdict(wf, window, samples, tol),
    }


def implication_failures(verdicts: dict[str, ConditionVerdict], Kf: float) -> list[str]:
    """Logical relations between the conditions that are violated by ``verdicts``.

    TCC implies NCC; ubiquitous implies TCC; with Kf >= 0 log-concavity implies
    NCC; with Kf <= 0 NCC implies log-concavity.
    """
    v = {k: verdicts[k].holds for k in verdicts}
    failures = []
    if v["TCC"] and not v["NCC"]:
        failures.append("TCC holds but NCC fails")
    if v["Ubiquitous"] and not v["TCC"]:
        failures.append("Ubiquitous holds but TCC fails")
    if Kf >= 0 and v["LogConcavity"] and not v["NCC"]:
        failures.append("(log f)'' <= 0 with K_F >= 0 but NCC fails")
    if Kf <= 0 and v["NCC"] and not v["LogConcavity"]:
        failures.append("NCC with K_F <= 0 but (log f)'' > 0")
    return failures

