"""Prior densities over (shape, scale) of the product form pi_sh * pi_sc.

Four kinds are supported: flat (scale-invariant sigma^-1), mdi
(sigma^-1 exp(-(gamma+1))), jeffreys (sigma^-1 ((1+gamma) sqrt(1+2 gamma))^-1),
and data_dependent (a proper shape density times a named base density
rescaled by a plug-in scale estimate). All are treated as unnormalized;
truncation of the shape support is a hard restriction, not a
renormalization, since posteriors normalize implicitly.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from .gpd import GAMMA_LOWER, GpdParams

__all__ = [
    "PriorSpec",
    "ClauseResult",
    "ValidationReport",
    "log_prior",
    "validate_prior",
    "PRIOR_KINDS",
    "BASE_FAMILIES",
]

PRIOR_KINDS = ("flat", "mdi", "jeffreys", "data_dependent")
BASE_FAMILIES = ("gamma", "lognormal")


@dataclass(frozen=True)
class PriorSpec:
    """Prior configuration.

    shape_support is the interval (lo, hi] of admissible shapes; lo must be
    >= -1/2. For kind="data_dependent", shape_params are the (shape, rate)
    of a gamma density shifted to start at -1/2, base_family names the
    scale base density ("gamma" with (shape, scale) or "lognormal" with
    (mu, sigma) parameters), and sigma_hat is the plug-in scale estimate.
    """

    kind: str
    shape_support: tuple[float, float] = (GAMMA_LOWER, math.inf)
    shape_params: tuple[float, float] = (2.0, 2.0)
    base_family: str | None = None
    base_params: tuple[float, float] | None = None
    sigma_hat: float | None = None

    def __post_init__(self):
        if self.kind not in PRIOR_KINDS:
            raise ValueError(f"unknown prior kind {self.kind!r}; expected one of {PRIOR_KINDS}")
        lo, hi = self.shape_support
        if lo < GAMMA_LOWER or not lo < hi:
            raise ValueError(f"shape_support must be an interval with lower bound >= -1/2, got {self.shape_support}")
        if self.kind == "data_dependent":
            if self.sigma_hat is None or not self.sigma_hat > 0.0:
                raise ValueError("data_dependent prior requires sigma_hat > 0")
            fam = self.base_family or "gamma"
            if fam not in BASE_FAMILIES:
                raise ValueError(f"unknown base family {fam!r}; expected one of {BASE_FAMILIES}")
            object.__setattr__(self, "base_family", fam)
            if self.base_params is None:
                object.__setattr__(self, "base_params", (2.0, 1.0))
            a, b = self.shape_params
            if a <= 0.0 or b <= 0.0:
                raise ValueError("shape_params must be positive")


def _log_shape_density(spec: PriorSpec, gamma) -> np.ndarray:
    """log pi_sh(gamma) before support truncation, elementwise."""
    g = np.asarray(gamma, dtype=float)
    if spec.kind == "flat":
        return np.zeros_like(g)
    if spec.kind == "mdi":
        return -(g + 1.0)
    if spec.kind == "jeffreys":
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(g > GAMMA_LOWER, -np.log1p(g) - 0.5 * np.log1p(2.0 * g), -np.inf)
    a, rate = spec.shape_params
    with np.errstate(divide="ignore", invalid="ignore"):
        return stats.gamma.logpdf(g - GAMMA_LOWER, a, scale=1.0 / rate)


def _log_scale_density(spec: PriorSpec, sigma) -> np.ndarray:
    """log pi_sc(sigma), elementwise; -inf for sigma <= 0."""
    s = np.asarray(sigma, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if spec.kind != "data_dependent":
            return np.where(s > 0.0, -np.log(np.where(s > 0.0, s, 1.0)), -np.inf)
        sh = spec.sigma_hat
        x = s / sh
        if spec.base_family == "gamma":
            a, scale = spec.base_params
            lp = stats.gamma.logpdf(x, a, scale=scale)
        else:
            mu, sd = spec.base_params
            lp = stats.lognorm.logpdf(x, sd, scale=math.exp(mu))
        return lp - math.log(sh)


def log_prior(spec: PriorSpec, theta) -> float:
    """Unnormalized log prior density at theta = (gamma, sigma).

    Accepts GpdParams or a plain (gamma, sigma) pair; returns -inf outside
    the shape support or for sigma <= 0 rather than raising, so samplers
    can probe infeasible proposals safely.
    """
    if isinstance(theta, GpdParams):
        g, s = theta.gamma, theta.sigma
    else:
        g, s = float(theta[0]), float(theta[1])
    lo, hi = spec.shape_support
    if not (lo < g <= hi) or not s > 0.0 or not math.isfinite(g):
        return -math.inf
    return float(_log_shape_density(spec, g)) + float(_log_scale_density(spec, s))


@dataclass(frozen=True)
class ClauseResult:
    name: str
    passed: bool
    value: float | None = None
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    clauses: tuple[ClauseResult, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.clauses)

    @property
    def failing(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.clauses if not c.passed)

    def __getitem__(self, name: str) -> ClauseResult:
        for c in self.clauses:
            if c.name == name:
                return c
        raise KeyError(name)


def _quad_or_inf(fn, lo: float, hi: float) -> float:
    """Adaptive quadrature that maps divergence to +inf instead of warnings."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(fn, lo, hi, limit=400)
        except integrate.IntegrationWarning:
            return math.inf
    if not math.isfinite(val) or val > 1e12:
        return math.inf
    return val


def validate_prior(spec: PriorSpec, wasserstein_order: float | None = None) -> ValidationReport:
    """Check the machine-checkable admissibility clauses of a prior.

    Always checked: the shape density integrates near the lower boundary
    -1/2 and is bounded on the positive half of its support. When a
    Wasserstein order v >= 1 is given, additionally: the shape support must
    lie inside (-1/2, 1/v) and the tail-moment integral
    integral_B (1 - gamma*v)^(-1/v) pi_sh(gamma) d gamma must be finite.

    Scale-side conditions involve the unknown true scale function and are
    not checkable from the prior object alone; they are out of scope here.
    """
    lo, hi = spec.shape_support
    clauses: list[ClauseResult] = []

    def sh(g):
        return math.exp(float(_log_shape_density(spec, g)))

    left_hi = min(hi, 0.0)
    if lo < left_hi:
        val = _quad_or_inf(sh, lo, left_hi)
        clauses.append(
            ClauseResult("left_integrable", math.isfinite(val), val, f"integral of pi_sh over ({lo}, {left_hi})")
        )
    else:
        clauses.append(ClauseResult("left_integrable", True, 0.0, "support excludes (-1/2, 0)"))

    right_lo = max(lo, 0.0)
    right_hi = min(hi, right_lo + 50.0)
    if right_lo < right_hi:
        grid = np.linspace(right_lo + 1e-9, right_hi, 2001)
        sup = float(np.exp(_log_shape_density(spec, grid)).max())
        clauses.append(ClauseResult("bounded_right", math.isfinite(sup) and sup < 1e12, sup, "sup of pi_sh on the positive side"))
    else:
        clauses.append(ClauseResult("bounded_right", True, 0.0, "support excludes gamma > 0"))

    if wasserstein_order is not None:
        v = float(wasserstein_order)
        if v < 1.0:
            raise ValueError("wasserstein_order must be >= 1")
        inside = lo >= GAMMA_LOWER and hi <= 1.0 / v
        clauses.append(
            ClauseResult(
                "support_in_moment_range",
                inside,
                None,
                f"need shape_support within (-1/2, {1.0 / v}), got ({lo}, {hi}]",
            )
        )
        if inside:

            def moment(g):
                t = 1.0 - g * v
                if t <= 0.0:
                    return 1e300  # divergent endpoint; forces the finiteness check to fail
                return t ** (-1.0 / v) * sh(g)

            val = _quad_or_inf(moment, lo, hi)
            clauses.append(ClauseResult("moment_integral", math.isfinite(val), val, "integral of (1-gamma v)^(-1/v) pi_sh"))
        else:
            clauses.append(ClauseResult("moment_integral", False, None, "not evaluated: support check failed"))

    return ValidationReport(tuple(clauses))
