"""Warping functions f: I -> (0, inf) with closed-form derivatives.

Five families are supported: ``Constant``, ``Exponential``, ``Cosh``,
``PowerLaw`` and ``Affine``. Every quantity (f, f', f'', (log f)'' and a
primitive) is evaluated in closed form so that identity checks downstream are
not polluted by numerical differentiation.

Primitive constants of integration are fixed per family:

=============  =====================  ==================
family         primitive              normalisation
=============  =====================  ==================
Constant(c)    c t                    F(0) = 0
Exponential    e^t - 1                F(0) = 0
Cosh           sinh t                 F(0) = 0
PowerLaw(k)    (t^(k+1) - 1)/(k+1)    F(1) = 0 (log t for k = -1)
Affine(m, q)   m t^2/2 + q t          F(0) = 0
=============  =====================  ==================
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

DEFAULT_WINDOW = (-5.0, 5.0)


class DomainError(ValueError):
    """Raised when a warping function is evaluated outside its interval."""


def _parse_endpoint(value):
    if isinstance(value, str):
        value = value.strip().lower()
        if value in ("inf", "+inf", "infinity"):
            return math.inf
        if value in ("-inf", "-infinity"):
            return -math.inf
    return float(value)


def _dump_endpoint(value):
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


@dataclass(frozen=True)
class IntervalSpec:
    """Open interval ``]lower, upper[`` of the real line (endpoints may be infinite)."""

    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        lo, hi = _parse_endpoint(self.lower), _parse_endpoint(self.upper)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if math.isnan(lo) or math.isnan(hi) or not lo < hi:
            raise ValueError(f"empty interval ]{lo}, {hi}[")

    @classmethod
    def parse(cls, spec) -> IntervalSpec:
        if isinstance(spec, IntervalSpec):
            return spec
        lo, hi = spec
        return cls(lo, hi)

    def to_list(self) -> list:
        return [_dump_endpoint(self.lower), _dump_endpoint(self.upper)]

    def contains(self, t) -> bool:
        t = np.asarray(t, dtype=float)
        return bool(np.all((t > self.lower) & (t < self.upper)))

    def intersect(self, other: IntervalSpec) -> IntervalSpec:
        return IntervalSpec(max(self.lower, other.lower), min(self.upper, other.upper))

    def is_subset_of(self, other: IntervalSpec) -> bool:
        return self.lower >= other.lower and self.upper <= other.upper

    def finite_window(self, window=DEFAULT_WINDOW) -> tuple[float, float]:
        """Replace infinite endpoints by the corresponding ``window`` endpoint."""
        lo = self.lower if math.isfinite(self.lower) else max(window[0], self.lower)
        hi = self.upper if math.isfinite(self.upper) else min(window[1], self.upper)
        if not math.isfinite(lo):
            lo = min(window[0], hi - (window[1] - window[0]))
        if not math.isfinite(hi):
            hi = max(window[1], lo + (window[1] - window[0]))
        if not lo < hi:
            raise ValueError(f"empty effective window [{lo}, {hi}] for {self}")
        return lo, hi

    def __str__(self):
        return f"]{self.lower:g}, {self.upper:g}["


class WarpValues(NamedTuple):
    f: float
    f_prime: float
    f_second: float
    logf_second: float
    primitive: float


class WarpingFunction:
    """Base class; use one of the concrete families (frozen dataclasses)."""

    domain: IntervalSpec
    family = "abstract"

    # Subclasses implement the raw closed forms on numpy arrays.
    def _f(self, t):
        raise NotImplementedError

    def _df(self, t):
        raise NotImplementedError

    def _d2f(self, t):
        raise NotImplementedError

    def _d2logf(self, t):
        raise NotImplementedError

    def _primitive(self, t):
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def __post_init__(self):
        if not isinstance(self.domain, IntervalSpec):
            object.__setattr__(self, "domain", IntervalSpec.parse(self.domain))

    def _check(self, t):
        arr = np.asarray(t, dtype=float)
        inside = (arr > self.domain.lower) & (arr < self.domain.upper)
        if not np.all(inside):
            bad = arr[~inside] if arr.ndim else arr
            first = float(np.ravel(bad)[0])
            raise DomainError(
                f"t = {first!r} is outside the domain {self.domain} of {self.describe()}"
            )
        return arr

    def f(self, t):
        return self._f(self._check(t))

    def df(self, t):
        return self._df(self._check(t))

    def d2f(self, t):
        return self._d2f(self._check(t))

    def d2logf(self, t):
        return self._d2logf(self._check(t))

    def primitive(self, t):
        return self._primitive(self._check(t))

    def ratio(self, t):
        """f'/f, the (negated) mean curvature of the slice at height t."""
        t = self._check(t)
        return self._df(t) / self._f(t)

    def eval(self, t) -> WarpValues:
        t = self._check(t)
        return WarpValues(
            self._f(t), self._df(t), self._d2f(t), self._d2logf(t), self._primitive(t)
        )

    def describe(self) -> str:
        args = ", ".join(f"{k}={v:g}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"

    def to_config(self) -> dict:
        return {"family": self.family, "params": self.params(), "domain": self.domain.to_list()}


def _as_float(t):
    return t if isinstance(t, np.ndarray) and t.ndim else float(t)


@dataclass(frozen=True)
class Constant(WarpingFunction):
    c: float = 1.0
    domain: IntervalSpec = IntervalSpec()

    family = "constant"

    def __post_init__(self):
        super().__post_init__()
        if not self.c > 0:
            raise ValueError(f"constant warping requires c > 0, got {self.c}")

    def _f(self, t):
        return _as_float(self.c + 0.0 * t)

    def _df(self, t):
        return _as_float(0.0 * t)

    _d2f = _df
    _d2logf = _df

    def _primitive(self, t):
        return _as_float(self.c * t)

    def params(self):
        return {"c": self.c}


@dataclass(frozen=True)
class Exponential(WarpingFunction):
    domain: IntervalSpec = IntervalSpec()

    family = "exp"

    def _f(self, t):
        return _as_float(np.exp(t))

    _df = _f
    _d2f = _f

    def _d2logf(self, t):
        return _as_float(0.0 * t)

    def _primitive(self, t):
        return _as_float(np.expm1(t))


@dataclass(frozen=True)
class Cosh(WarpingFunction):
    domain: IntervalSpec = IntervalSpec()

    family = "cosh"

    def _f(self, t):
        return _as_float(np.cosh(t))

    def _df(self, t):
        return _as_float(np.sinh(t))

    _d2f = _f

    def _d2logf(self, t):
        # (log cosh)'' = sech^2; written as 1/cosh^2 so that K/f^2 - (log f)''
        # cancels exactly for the unit sphere fiber.
        return _as_float(1.0 / np.cosh(t) ** 2)

    _primitive = _df


@dataclass(frozen=True)
class PowerLaw(WarpingFunction):
    k: float = 1.0
    domain: IntervalSpec = IntervalSpec(0.0, math.inf)

    family = "powerlaw"

    def __post_init__(self):
        super().__post_init__()
        if self.domain.lower < 0:
            raise ValueError("power-law warping is only defined on a subset of ]0, inf[")

    def _f(self, t):
        return _as_float(np.power(t, self.k))

    def _df(self, t):
        return _as_float(self.k * np.power(t, self.k - 1.0))

    def _d2f(self, t):
        return _as_float(self.k * (self.k - 1.0) * np.power(t, self.k - 2.0))

    def _d2logf(self, t):
        return _as_float(-self.k / np.square(t))

    def _primitive(self, t):
        if self.k == -1.0:
            return _as_float(np.log(t))
        return _as_float((np.power(t, self.k + 1.0) - 1.0) / (self.k + 1.0))

    def params(self):
        return {"k": self.k}


@dataclass(frozen=True)
class Affine(WarpingFunction):
    m: float = 1.0
    q: float = 0.0
    domain: IntervalSpec = IntervalSpec()

    family = "affine"

    def __post_init__(self):
        super().__post_init__()
        # Restrict the domain to where m t + q > 0.
        if self.m > 0:
            positive = IntervalSpec(-self.q / self.m, math.inf)
        elif self.m < 0:
            positive = IntervalSpec(-math.inf, -self.q / self.m)
        elif self.q > 0:
            positive = IntervalSpec()
        else:
            raise ValueError(f"affine warping {self.m} t + {self.q} is never positive")
        object.__setattr__(self, "domain", self.domain.intersect(positive))

    def _f(self, t):
        return _as_float(self.m * t + self.q)

    def _df(self, t):
        return _as_float(self.m + 0.0 * t)

    def _d2f(self, t):
        return _as_float(0.0 * t)

    def _d2logf(self, t):
        return _as_float(-self.m**2 / np.square(self.m * t + self.q))

    def _primitive(self, t):
        return _as_float(0.5 * self.m * np.square(t) + self.q * t)

    def params(self):
        return {"m": self.m, "q": self.q}


FAMILIES = {
    "constant": Constant,
    "exp": Exponential,
    "cosh": Cosh,
    "powerlaw": PowerLaw,
    "affine": Affine,
}


def from_config(cfg: dict) -> WarpingFunction:
    """Build a warping function from ``{"family", "params", "domain"}``."""
    try:
        cls = FAMILIES[cfg["family"]]
    except KeyError:
        raise ValueError(
            f"unknown warping family {cfg.get('family')!r}; expected one of {sorted(FAMILIES)}"
        ) from None
    kwargs = dict(cfg.get("params") or {})
    if "domain" in cfg and cfg["domain"] is not None:
        kwargs["domain"] = IntervalSpec.parse(cfg["domain"])
    return cls(**kwargs)


def evaluate(wf: WarpingFunction, t: float) -> WarpValues:
    return wf.eval(t)


def sample_grid(wf: WarpingFunction, interval: IntervalSpec | None, samples: int,
                window=DEFAULT_WINDOW) -> np.ndarray:
    """Closed sample grid over ``interval`` (default: the whole domain).

    Infinite endpoints are truncated to ``window``; points not strictly inside
    the domain of ``wf`` are dropped.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    interval = wf.domain if interval is None else IntervalSpec.parse(interval)
    if not interval.is_subset_of(wf.domain):
        raise DomainError(f"window {interval} is not contained in the domain {wf.domain}")
    lo, hi = interval.finite_window(window)
    t = np.linspace(lo, hi, samples)
    t = t[(t > wf.domain.lower) & (t < wf.domain.upper)]
    if t.size == 0:
        raise ValueError(f"empty effective interval [{lo}, {hi}]")
    return t


@dataclass(frozen=True)
class LogConcavity:
    min_of_minus_logf_second: float
    holds: bool
    window: tuple[float, float]


def log_concavity_margin(wf: WarpingFunction, interval: IntervalSpec | None = None,
                         samples: int = 401, tol: float = 1e-9,
                         window=DEFAULT_WINDOW) -> LogConcavity:
    """Minimum of -(log f)'' over a sample grid; ``holds`` iff it is >= -tol."""
    t = sample_grid(wf, interval, samples, window)
    margin = float(np.min(-np.asarray(wf.d2logf(t))))
    return LogConcavity(margin, margin >= -tol, (float(t[0]), float(t[-1])))


def inf_ratio_alpha(wf: WarpingFunction, interval: IntervalSpec | None = None,
                    samples: int = 401, window=DEFAULT_WINDOW) -> float:
    """Window minimum of f'^2/f^2.

    This is the minimum over the sample grid only; on unbounded intervals it is
    not a certified infimum.
    """
    t = sample_grid(wf, interval, samples, window)
    return float(np.min(np.square(wf.ratio(t))))
