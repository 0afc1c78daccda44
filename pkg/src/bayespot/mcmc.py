"""Adaptive Gaussian random-walk Metropolis-Hastings for the excess posterior.

The chain moves in (gamma, log sigma) coordinates; the log-sigma Jacobian is
added internally so run_chain targets the user's density in (gamma, sigma)
space. During burn-in the proposal is a Gaussian whose 2x2 covariance is
re-estimated from the chain history every adapt_window iterations and whose
global scale follows a Robbins-Monro recursion (gain 1/m) toward the target
acceptance rate; both are frozen when burn-in ends, so the recorded draws
come from a fixed-kernel Markov chain. Everything is deterministic given the
seed.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .excess import ExcessData
from .gpd import FitError, GpdParams, _loglik_raw, _pwm_init, fit_mle
from .priors import PriorSpec, log_prior

__all__ = [
    "McmcConfig",
    "PosteriorDraws",
    "ChainInitError",
    "McmcDiagnostics",
    "run_chain",
    "diagnostics",
    "effective_sample_size",
    "pot_log_posterior",
    "sample_pot_posterior",
]

# Deterministic probe lattice used when no feasible start is supplied.
_PROBE_GAMMAS = (0.0, 0.1, -0.1, 0.25, 0.5, -0.25, 1.0, 2.0, -0.4, 0.75)
_PROBE_LOG_SIGMAS = (0.0, 1.0, -1.0, 2.0, -2.0, 3.0, -3.0, 4.0, -4.0, 5.0)


class ChainInitError(RuntimeError):
    """No finite-log-posterior starting point could be found."""


@dataclass(frozen=True)
class McmcConfig:
    """Chain length and adaptation settings.

    iterations counts total steps including burn_in; the recorded sample has
    iterations - burn_in draws.
    """

    iterations: int = 25_000
    burn_in: int = 5_000
    target_acceptance: float = 0.234
    seed: int = 0
    init: GpdParams | None = None
    adapt_window: int = 200

    def __post_init__(self):
        if not (0 <= self.burn_in < self.iterations):
            raise ValueError("need 0 <= burn_in < iterations")
        if not (0.0 < self.target_acceptance < 1.0):
            raise ValueError("target_acceptance must lie in (0, 1)")
        if self.adapt_window < 10:
            raise ValueError("adapt_window must be at least 10")


@dataclass(frozen=True)
class PosteriorDraws:
    """Post burn-in draws of (gamma, sigma) plus chain metadata."""

    gamma: np.ndarray
    sigma: np.ndarray
    acceptance_rate: float
    ess: np.ndarray
    seed: int
    log_post_trace: np.ndarray

    def __len__(self) -> int:
        return self.gamma.size

    def theta(self, i: int) -> GpdParams:
        return GpdParams(float(self.gamma[i]), float(self.sigma[i]))

    @property
    def draws(self) -> tuple[GpdParams, ...]:
        return tuple(GpdParams(g, s) for g, s in zip(self.gamma, self.sigma))

    def to_csv(self, path) -> None:
        """Write draws as CSV with columns gamma, sigma, log_post."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["gamma", "sigma", "log_post"])
            for g, s, lp in zip(self.gamma, self.sigma, self.log_post_trace):
                writer.writerow([repr(float(g)), repr(float(s)), repr(float(lp))])


def _find_start(log_posterior, init: GpdParams | None):
    """Feasible (gamma, log sigma) start, probing a fixed lattice if needed."""
    if init is not None:
        u = (init.gamma, math.log(init.sigma))
        f = log_posterior((init.gamma, init.sigma))
        if math.isfinite(f):
            return np.array(u), f
    for t in _PROBE_LOG_SIGMAS:
        for g in _PROBE_GAMMAS:
            f = log_posterior((g, math.exp(t)))
            if math.isfinite(f):
                return np.array([g, t]), f
    raise ChainInitError("no finite-log-posterior starting point among 100 probes")


def run_chain(log_posterior, config: McmcConfig) -> PosteriorDraws:
    """Sample the density exp(log_posterior(theta)) over theta=(gamma, sigma).

    log_posterior may return -inf to mark infeasible points; such proposals
    are rejected. Returns the post burn-in sample.
    """
    rng = np.random.default_rng(config.seed)
    u, f_cur = _find_start(log_posterior, config.init)
    # target in chain coordinates includes the sigma -> log sigma Jacobian
    f_cur = f_cur + u[1]

    n_total = config.iterations
    burn = config.burn_in
    n_keep = n_total - burn

    chol = np.linalg.cholesky(np.diag([1e-4, 1e-4]))
    log_scale = math.log(2.38 / math.sqrt(2.0))
    rm_step = 0  # restarts at each covariance re-estimation

    history = np.empty((burn, 2))
    kept = np.empty((n_keep, 2))
    log_post = np.empty(n_keep)
    accepted_post = 0

    for m in range(n_total):
        xi = rng.standard_normal(2)
        u_prop = u + math.exp(log_scale) * (chol @ xi)
        g_prop = u_prop[0]
        s_prop = math.exp(u_prop[1])
        f_prop = log_posterior((g_prop, s_prop))
        if math.isfinite(f_prop):
            f_prop = f_prop + u_prop[1]
            log_ratio = f_prop - f_cur
            alpha = 1.0 if log_ratio >= 0.0 else math.exp(log_ratio)
        else:
            alpha = 0.0
        if rng.uniform() < alpha:
            u = u_prop
            f_cur = f_prop
            if m >= burn:
                accepted_post += 1

        if m < burn:
            history[m] = u
            rm_step += 1
            log_scale += (alpha - config.target_acceptance) / rm_step
            if (m + 1) % config.adapt_window == 0:
                # drop the older half of the history as transient
                emp = np.cov(history[(m + 1) // 2 : m + 1].T) + 1e-12 * np.eye(2)
                try:
                    chol = np.linalg.cholesky(emp)
                    rm_step = 0  # fresh covariance, fresh scaling problem
                except np.linalg.LinAlgError:
                    pass
        else:
            i = m - burn
            kept[i] = u
            log_post[i] = f_cur - u[1]  # report the user's density, not the chain's

    gammas = kept[:, 0].copy()
    sigmas = np.exp(kept[:, 1])
    ess = np.array([effective_sample_size(gammas), effective_sample_size(sigmas)])
    return PosteriorDraws(
        gamma=gammas,
        sigma=sigmas,
        acceptance_rate=accepted_post / max(n_keep, 1),
        ess=ess,
        seed=config.seed,
        log_post_trace=log_post,
    )


def effective_sample_size(x) -> float:
    """Initial-positive-sequence ESS; 1.0 for a constant (degenerate) chain."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        return 1.0
    xc = x - x.mean()
    if np.max(np.abs(xc)) == 0.0:
        return 1.0
    m = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, m)
    acov = np.fft.irfft(f * np.conj(f), m)[:n] / n
    rho = acov / acov[0]
    # sum adjacent-pair autocorrelations while the pair sums stay positive
    tau = 0.0
    t = 0
    while t + 1 < n:
        pair = rho[t] + rho[t + 1]
        if pair <= 0.0:
            break
        tau += 2.0 * pair
        t += 2
    tau = max(tau - 1.0, 1.0)
    return float(min(n / tau, float(n)))


@dataclass(frozen=True)
class McmcDiagnostics:
    """Summary of a finished chain."""

    n_draws: int
    acceptance_rate: float
    ess: np.ndarray
    mean: np.ndarray
    sd: np.ndarray
    log_post_range: tuple[float, float, float]  # min, median, max


def diagnostics(draws: PosteriorDraws) -> McmcDiagnostics:
    """Acceptance, per-coordinate ESS, and moment/trace summaries."""
    if len(draws) < 100:
        raise ValueError(f"need at least 100 draws, got {len(draws)}")
    both = np.column_stack([draws.gamma, draws.sigma])
    lp = draws.log_post_trace
    return McmcDiagnostics(
        n_draws=len(draws),
        acceptance_rate=draws.acceptance_rate,
        ess=draws.ess.copy(),
        mean=both.mean(axis=0),
        sd=both.std(axis=0, ddof=1),
        log_post_range=(float(lp.min()), float(np.median(lp)), float(lp.max())),
    )


def pot_log_posterior(data: ExcessData, prior: PriorSpec):
    """Log posterior kernel for GP excesses: loglik(theta) + log prior(theta)."""
    z = np.asarray(data.excesses, dtype=float)

    def logpost(theta) -> float:
        g, s = float(theta[0]), float(theta[1])
        lp = log_prior(prior, (g, s))
        if not math.isfinite(lp):
            return -math.inf
        ll = _loglik_raw(g, s, z)
        if not math.isfinite(ll):
            return -math.inf
        return ll + lp

    return logpost


def sample_pot_posterior(data: ExcessData, prior: PriorSpec, config: McmcConfig | None = None) -> PosteriorDraws:
    """Run the adaptive chain on the excess posterior.

    Unless the config pins an init, the chain starts from the ML estimate
    when the fit converges and from the probability-weighted-moment
    estimate otherwise.
    """
    if config is None:
        config = McmcConfig()
    if config.init is None:
        z = np.asarray(data.excesses, dtype=float)
        try:
            start = fit_mle(z).params
        except (FitError, ValueError):
            g0, s0 = _pwm_init(z)
            start = GpdParams(max(g0, -0.49), s0)
        config = McmcConfig(
            iterations=config.iterations,
            burn_in=config.burn_in,
            target_acceptance=config.target_acceptance,
            seed=config.seed,
            init=start,
            adapt_window=config.adapt_window,
        )
    return run_chain(pot_log_posterior(data, prior), config)
