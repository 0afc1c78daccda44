"""Generalized Pareto distribution machinery.

CDF, quantile, and log-density of the two-parameter GP family
``H(z) = 1 - (1 + gamma*z/sigma)^(-1/gamma)`` (``1 - exp(-z/sigma)`` at
gamma=0), the summed loglikelihood over threshold excesses, the per
observation Fisher information matrix, and maximum-likelihood fitting.

The shape is restricted to gamma > -1/2 throughout, where the Fisher
information exists and ML estimation is regular.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

__all__ = [
    "GpdParams",
    "FisherMatrix",
    "FitResult",
    "FitError",
    "GAMMA_LOWER",
    "gpd_cdf",
    "gpd_quantile",
    "gpd_logpdf",
    "loglik_sum",
    "loglik_grad",
    "fisher_info",
    "fit_mle",
]

GAMMA_LOWER = -0.5

# Branch point for series evaluation of gamma-near-zero expressions.
_SMALL = 1e-8


@dataclass(frozen=True)
class GpdParams:
    """Shape/scale pair (gamma, sigma) with gamma > -1/2 and sigma > 0."""

    gamma: float
    sigma: float

    def __post_init__(self):
        g = float(self.gamma)
        s = float(self.sigma)
        if not math.isfinite(g) or g <= GAMMA_LOWER:
            raise ValueError(f"gamma must be finite and > -1/2, got {self.gamma}")
        if not math.isfinite(s) or s <= 0.0:
            raise ValueError(f"sigma must be finite and > 0, got {self.sigma}")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "sigma", s)

    @property
    def endpoint(self) -> float:
        """Upper support endpoint: -sigma/gamma for gamma < 0, else +inf."""
        if self.gamma < 0.0:
            return -self.sigma / self.gamma
        return math.inf


@dataclass(frozen=True)
class FisherMatrix:
    """Per-observation information matrix at a given (gamma, sigma)."""

    entries: np.ndarray
    gamma: float
    sigma: float

    @property
    def determinant(self) -> float:
        e = self.entries
        return float(e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0])


class FitError(RuntimeError):
    """ML fit did not reach the stationarity tolerance.

    Carries the best iterate found so far in ``best`` (a FitResult).
    """

    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class FitResult:
    """ML estimate with a convergence report."""

    params: GpdParams
    loglik: float
    grad_norm: float
    n_iter: int
    converged: bool


# ---------------------------------------------------------------------------
# vectorized unit-scale kernels (w = z / sigma)
# ---------------------------------------------------------------------------

def _cdf_unit(gamma: float, w):
    """H_gamma(w) for w = z/sigma, elementwise; handles both tails exactly."""
    w = np.asarray(w, dtype=float)
    u = gamma * w
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # exponent -log(1+u)/gamma, series w*(1 - u/2) when |u| is tiny
        arg = np.where(np.abs(u) < _SMALL, w * (1.0 - 0.5 * u), np.log1p(u) / (gamma if gamma != 0.0 else 1.0))
        out = -np.expm1(-arg)
    out = np.where(w <= 0.0, 0.0, out)
    if gamma < 0.0:
        out = np.where(u <= -1.0, 1.0, out)  # beyond the finite endpoint
    return out


def _logpdf_unit(gamma: float, w):
    """log density of H_gamma at w, minus the -log(sigma) term."""
    w = np.asarray(w, dtype=float)
    u = gamma * w
    with np.errstate(divide="ignore", invalid="ignore"):
        series = -(w + gamma * (w - 0.5 * w * w))
        direct = -(1.0 + 1.0 / gamma) * np.log1p(u) if gamma != 0.0 else series
        out = np.where(np.abs(u) < _SMALL, series, direct)
    bad = (w < 0.0) | (1.0 + u <= 0.0)
    return np.where(bad, -np.inf, out)


def _quantile_unit(gamma: float, p):
    """H_gamma^{-1}(p) on [0,1]; p=1 maps to the (possibly infinite) endpoint."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        ell = -np.log1p(-p)
        if gamma == 0.0:
            out = ell
        else:
            out = np.expm1(gamma * ell) / gamma
    return out


def _check_theta(theta: GpdParams) -> GpdParams:
    if not isinstance(theta, GpdParams):
        theta = GpdParams(*theta)
    return theta


def _maybe_scalar(x, scalar_in):
    return float(x) if scalar_in else x


def gpd_cdf(theta: GpdParams, z):
    """GP distribution function H_theta(z); 0 for z <= 0, 1 past the endpoint."""
    theta = _check_theta(theta)
    scalar = np.isscalar(z)
    out = _cdf_unit(theta.gamma, np.asarray(z, dtype=float) / theta.sigma)
    return _maybe_scalar(out, scalar)


def gpd_quantile(theta: GpdParams, p):
    """Inverse of gpd_cdf. p may be 1 (returns the endpoint, +inf for gamma >= 0)."""
    theta = _check_theta(theta)
    scalar = np.isscalar(p)
    parr = np.asarray(p, dtype=float)
    if np.any((parr < 0.0) | (parr > 1.0) | ~np.isfinite(parr)):
        raise ValueError("quantile level must lie in [0, 1]")
    out = theta.sigma * _quantile_unit(theta.gamma, parr)
    return _maybe_scalar(out, scalar)


def gpd_logpdf(theta: GpdParams, z):
    """Log density of H_theta at z; -inf off the support [0, endpoint)."""
    theta = _check_theta(theta)
    scalar = np.isscalar(z)
    w = np.asarray(z, dtype=float) / theta.sigma
    out = _logpdf_unit(theta.gamma, w) - math.log(theta.sigma)
    return _maybe_scalar(out, scalar)


def loglik_sum(theta: GpdParams, excesses) -> float:
    """Summed log likelihood of the excesses; -inf if any point is off support."""
    theta = _check_theta(theta)
    z = np.asarray(excesses, dtype=float)
    if z.size == 0:
        raise ValueError("excesses must be nonempty")
    return _loglik_raw(theta.gamma, theta.sigma, z)


def _loglik_raw(gamma: float, sigma: float, z: np.ndarray) -> float:
    """Fast path used inside optimizers/samplers; assumes z validated."""
    if sigma <= 0.0 or gamma <= GAMMA_LOWER:
        return -math.inf
    w = z / sigma
    u = gamma * w
    if w.min() < 0.0:
        return -math.inf
    if gamma < 0.0 and u.min() <= -1.0:
        return -math.inf
    total = _logpdf_unit(gamma, w).sum()
    return float(total) - z.size * math.log(sigma)


# stable helpers for score/Hessian terms ------------------------------------

def _eta(x):
    """(log1p(x) - x/(1+x)) / x^2, series-protected near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    xs = np.where(small, 0.0, x)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (np.log1p(xs) - xs / (1.0 + xs)) / (xs * xs)
    ser = 0.5 + x * (-2.0 / 3.0 + x * (0.75 + x * (-0.8 + x * (5.0 / 6.0))))
    return np.where(small, ser, direct)


def _zeta(x):
    """((1+x)^-2 - 2*eta(x)) / x, series-protected near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    op = 1.0 + xs
    with np.errstate(divide="ignore", over="ignore"):
        direct = (1.0 / (op * op) - 2.0 * _eta(xs)) / xs
    ser = -2.0 / 3.0 + x * (1.5 + x * (-2.4 + x * (10.0 / 3.0 + x * (-30.0 / 7.0))))
    return np.where(small, ser, direct)


def loglik_grad(theta: GpdParams, excesses) -> np.ndarray:
    """Analytic gradient of loglik_sum with respect to (gamma, sigma)."""
    theta = _check_theta(theta)
    z = np.asarray(excesses, dtype=float)
    if z.size == 0:
        raise ValueError("excesses must be nonempty")
    g, s = theta.gamma, theta.sigma
    w = z / s
    x = g * w
    if w.min() < 0.0 or (g < 0.0 and x.min() <= -1.0):
        raise ValueError("some excesses lie outside the support at theta")
    m = w / (1.0 + x)
    # d/dgamma: w^2*eta(x) - w/(1+x); d/dsigma: (-1 + (1+gamma)*m)/sigma
    dg = float(np.sum(w * w * _eta(x) - m))
    ds = float(np.sum(-1.0 / s + (1.0 + g) * m / s))
    return np.array([dg, ds])


def _hessian_terms(gamma: float, w: np.ndarray, x: np.ndarray):
    """Second partials of the unit-observation log density, elementwise.

    Returns (d2_gg, d2_gs*sigma, d2_ss*sigma^2) without the scale factors,
    using cancellation-free expressions valid down to gamma = 0.
    """
    op = 1.0 + x
    m = w / op
    d2_gg = w ** 3 * _zeta(x) + m * m
    d2_gs = m - (1.0 + gamma) * m * m
    d2_ss = 1.0 - 2.0 * (1.0 + gamma) * m + gamma * (1.0 + gamma) * m * m
    return d2_gg, d2_gs, d2_ss


def _loglik_hess(theta: GpdParams, z: np.ndarray) -> np.ndarray:
    g, s = theta.gamma, theta.sigma
    w = z / s
    x = g * w
    d2_gg, d2_gs, d2_ss = _hessian_terms(g, w, x)
    return np.array(
        [
            [float(np.sum(d2_gg)), float(np.sum(d2_gs)) / s],
            [float(np.sum(d2_gs)) / s, float(np.sum(d2_ss)) / (s * s)],
        ]
    )


# ---------------------------------------------------------------------------
# Fisher information
# ---------------------------------------------------------------------------

def _fisher_integrand(v: float, gamma: float, sigma: float, which: int) -> float:
    """-d2 log density at the quantile point z(v), as a function of v in (0,1)."""
    s = -math.log(v)
    u = gamma * s
    if u > 500.0:
        # asymptotic forms; exp(u) would overflow long before this matters
        if which == 0:
            val = (3.0 - 2.0 * u) / gamma ** 3 + 1.0 / gamma ** 2
        elif which == 1:
            val = -1.0 / (gamma * gamma * sigma)
        else:
            val = -1.0 / (gamma * sigma * sigma)
        return -val
    x = math.expm1(u)
    w = s if gamma == 0.0 else x / gamma
    op = math.exp(u)  # 1 + x, exactly
    m = w / op
    if which == 0:
        val = w ** 3 * float(_zeta(x)) + m * m
    elif which == 1:
        val = (m - (1.0 + gamma) * m * m) / sigma
    else:
        val = (1.0 - 2.0 * (1.0 + gamma) * m + gamma * (1.0 + gamma) * m * m) / (sigma * sigma)
    return -val


def fisher_info(theta: GpdParams) -> FisherMatrix:
    """Per-observation Fisher information by adaptive quadrature over v in (0,1).

    The integrand is the negated parameter Hessian of the log density
    evaluated along the quantile path z(v) = sigma*((v^-gamma)-1)/gamma.
    Absolute tolerance 1e-8 per entry.
    """
    theta = _check_theta(theta)
    entries = np.empty((2, 2))
    for which, (i, j) in enumerate(((0, 0), (0, 1), (1, 1))):
        val, _ = integrate.quad(
            _fisher_integrand,
            0.0,
            1.0,
            args=(theta.gamma, theta.sigma, which),
            epsabs=1e-10,
            epsrel=1e-10,
            limit=200,
        )
        entries[i, j] = val
        entries[j, i] = val
    return FisherMatrix(entries=entries, gamma=theta.gamma, sigma=theta.sigma)


# ---------------------------------------------------------------------------
# maximum likelihood
# ---------------------------------------------------------------------------

def _pwm_init(z: np.ndarray) -> tuple[float, float]:
    """Probability-weighted-moment starting point (gamma, sigma)."""
    k = z.size
    zs = np.sort(z)
    b0 = zs.mean()
    b1 = float(np.sum(zs * (k - np.arange(1, k + 1))) / (k * (k - 1.0)))
    denom = b0 - 2.0 * b1
    if denom <= 0.0 or b0 <= 0.0:
        return 0.1, max(b0, 1e-12)
    gamma = 2.0 - b0 / denom
    sigma = 2.0 * b0 * b1 / denom
    gamma = min(max(gamma, -0.45), 4.0)
    if not (sigma > 0.0) or not math.isfinite(sigma):
        sigma = b0
    return gamma, sigma


_RESTART_STEPS = ((0.0, 0.0), (0.2, 0.3), (-0.2, -0.3), (0.2, -0.3), (-0.2, 0.3))


def fit_mle(excesses, grad_tol: float = 1e-5, max_iter: int = 400) -> FitResult:
    """Maximize the GP loglikelihood over (gamma, log sigma).

    Nelder-Mead from a PWM start plus four fixed perturbations, then Newton
    refinement with the analytic gradient until the gradient norm falls
    well below grad_tol. Raises FitError (carrying the best iterate) when
    the tolerance is not reached within max_iter refinement steps.
    """
    z = np.asarray(excesses, dtype=float)
    if z.size < 5:
        raise ValueError("need at least 5 excesses to fit")
    if z.min() < 0.0:
        raise ValueError("excesses must be nonnegative")
    if np.ptp(z) == 0.0:
        raise ValueError("excesses must not all be equal")

    def neg(xvec):
        return -_loglik_raw(xvec[0], math.exp(xvec[1]), z)

    g0, s0 = _pwm_init(z)
    pwm_obj = -neg((g0, math.log(s0)))
    best = None
    for dg, dt in _RESTART_STEPS:
        start = np.array([g0 + dg, math.log(s0) + dt])
        if not np.isfinite(neg(start)):
            continue
        res = optimize.minimize(
            neg,
            start,
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": max(max_iter, 50)},
        )
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise ValueError("no feasible starting point for the optimizer")

    gamma, t = best.x
    n_iter = 0
    inner_tol = grad_tol / 100.0
    grad = _grad_in_chain_coords(gamma, t, z)
    while float(np.linalg.norm(grad)) > inner_tol and n_iter < max_iter:
        theta = GpdParams(gamma, math.exp(t))
        hess = _loglik_hess(theta, z)
        # chain rule to (gamma, log sigma)
        s = theta.sigma
        h = np.array(
            [
                [hess[0, 0], hess[0, 1] * s],
                [hess[0, 1] * s, hess[1, 1] * s * s + grad[1]],
            ]
        )
        try:
            step = np.linalg.solve(h, -grad)
        except np.linalg.LinAlgError:
            step = grad / max(1.0, float(np.linalg.norm(grad)))
        scale = 1.0
        cur = -neg((gamma, t))
        while scale > 1e-10:
            cand = (gamma + scale * step[0], t + scale * step[1])
            if cand[0] > GAMMA_LOWER and -neg(cand) >= cur - 1e-12:
                break
            scale *= 0.5
        gamma += scale * step[0]
        t += scale * step[1]
        grad = _grad_in_chain_coords(gamma, t, z)
        n_iter += 1

    gnorm = float(np.linalg.norm(grad))
    params = GpdParams(gamma, math.exp(t))
    ll = _loglik_raw(params.gamma, params.sigma, z)
    result = FitResult(params=params, loglik=ll, grad_norm=gnorm, n_iter=n_iter, converged=gnorm <= grad_tol)
    if gnorm > grad_tol:
        raise FitError(f"gradient norm {gnorm:.2e} above tolerance after {n_iter} steps", result)
    if ll < pwm_obj - 1e-9:
        raise FitError("optimizer ended below the PWM start", result)
    return result


def _grad_in_chain_coords(gamma: float, t: float, z: np.ndarray) -> np.ndarray:
    if gamma <= GAMMA_LOWER:
        return np.array([np.inf, np.inf])
    sigma = math.exp(t)
    if not np.isfinite(_loglik_raw(gamma, sigma, z)):
        return np.array([np.inf, np.inf])
    g = loglik_grad(GpdParams(gamma, sigma), z)
    return np.array([g[0], g[1] * sigma])
