"""Dirichlet-process inference for covariate effects in the tail.

The concomitant covariates of the top-k observations are modeled as draws
from an unknown law P* with a DP prior of mass tau_total on a named base
measure; conjugacy gives the posterior DP(tau + k * empirical). Pointwise
tail-scaling ("scedasis") posteriors divide the Beta set-marginal of a
small ball at x by the plug-in covariate-mass estimate of the same ball.
Functional draws use stick breaking with a lumped remainder, and feed a
KS-type bootstrap test of "no covariate effect in the tail".
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.stats import qmc

from .excess import ExcessData

__all__ = [
    "UniformBase",
    "ProductBetaBase",
    "DpPosterior",
    "ScedasisPosterior",
    "DiscreteMeasure",
    "KsTestReport",
    "dp_posterior",
    "knn_radius",
    "scedasis_posterior",
    "sample_dp_functional",
    "ks_covariate_test",
]

_QMC_LOG2_NODES = 13  # deterministic Sobol nodes for d>1 ball masses


def _as_point(x, d: int) -> np.ndarray:
    pt = np.atleast_1d(np.asarray(x, dtype=float))
    if pt.shape != (d,):
        raise ValueError(f"expected a point of dimension {d}, got shape {pt.shape}")
    return pt


class UniformBase:
    """Uniform probability measure on [0,1]^d."""

    def __init__(self, d: int = 1):
        if d < 1:
            raise ValueError("dimension must be >= 1")
        self.d = d

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(size=(size, self.d))

    def rect_mass(self, lo, hi) -> float:
        lo = np.clip(_as_point(lo, self.d), 0.0, 1.0)
        hi = np.clip(_as_point(hi, self.d), 0.0, 1.0)
        return float(np.prod(np.maximum(hi - lo, 0.0)))

    def _density(self, pts: np.ndarray) -> np.ndarray:
        return np.ones(pts.shape[0])

    def ball_mass(self, center, radius: float) -> float:
        return _ball_mass(self, center, radius)


class ProductBetaBase:
    """Product of independent Beta(a_j, b_j) coordinates on [0,1]^d."""

    def __init__(self, params):
        params = [(float(a), float(b)) for a, b in params]
        if not params:
            raise ValueError("need at least one (a, b) pair")
        if any(a <= 0.0 or b <= 0.0 for a, b in params):
            raise ValueError("Beta parameters must be positive")
        self.params = params
        self.d = len(params)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        cols = [rng.beta(a, b, size=size) for a, b in self.params]
        return np.column_stack(cols)

    def rect_mass(self, lo, hi) -> float:
        lo = np.clip(_as_point(lo, self.d), 0.0, 1.0)
        hi = np.clip(_as_point(hi, self.d), 0.0, 1.0)
        mass = 1.0
        for j, (a, b) in enumerate(self.params):
            mass *= max(stats.beta.cdf(hi[j], a, b) - stats.beta.cdf(lo[j], a, b), 0.0)
        return float(mass)

    def _density(self, pts: np.ndarray) -> np.ndarray:
        dens = np.ones(pts.shape[0])
        for j, (a, b) in enumerate(self.params):
            dens *= stats.beta.pdf(pts[:, j], a, b)
        return dens

    def ball_mass(self, center, radius: float) -> float:
        return _ball_mass(self, center, radius)


def _ball_mass(base, center, radius: float) -> float:
    """Mass of the Euclidean ball B(center, radius) clipped to [0,1]^d.

    Exact in d=1 (an interval); deterministic quasi-Monte Carlo otherwise.
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    c = _as_point(center, base.d)
    if base.d == 1:
        return base.rect_mass(c - radius, c + radius)
    lo = np.clip(c - radius, 0.0, 1.0)
    hi = np.clip(c + radius, 0.0, 1.0)
    widths = hi - lo
    vol = float(np.prod(widths))
    if vol == 0.0:
        return 0.0
    sob = qmc.Sobol(base.d, scramble=False).random(2**_QMC_LOG2_NODES)
    pts = lo + sob * widths
    inside = np.sum((pts - c) ** 2, axis=1) <= radius**2
    return float(np.mean(base._density(pts) * inside) * vol)


@dataclass(frozen=True)
class DpPosterior:
    """DP(tau_total * tau_base + sum of unit atom masses)."""

    tau_total: float
    tau_base: object
    atoms: np.ndarray
    k: int

    def __post_init__(self):
        if not self.tau_total > 0.0:
            raise ValueError("tau_total must be positive")
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        if self.k == 0:
            atoms = atoms.reshape(0, self.tau_base.d)
        if atoms.shape[0] != self.k:
            raise ValueError(f"expected {self.k} atoms, got {atoms.shape[0]}")
        if atoms.size and (atoms.min() < 0.0 or atoms.max() > 1.0):
            raise ValueError("atoms must lie in [0,1]^d")
        object.__setattr__(self, "atoms", atoms)

    @property
    def total_mass(self) -> float:
        return self.tau_total + self.k

    def ball_alpha(self, x, radius: float) -> float:
        """Posterior DP parameter mass of B(x, radius): tau(B) + #atoms in B."""
        x = _as_point(x, self.tau_base.d)
        base = self.tau_total * self.tau_base.ball_mass(x, radius)
        if self.k:
            inside = np.sum((self.atoms - x) ** 2, axis=1) <= radius**2
            base += float(np.sum(inside))
        return base

    def rect_alpha(self, lo, hi) -> float:
        lo = _as_point(lo, self.tau_base.d)
        hi = _as_point(hi, self.tau_base.d)
        base = self.tau_total * self.tau_base.rect_mass(lo, hi)
        if self.k:
            inside = np.all((self.atoms >= lo) & (self.atoms <= hi), axis=1)
            base += float(np.sum(inside))
        return base

    def marginal_beta(self, alpha_set: float) -> tuple[float, float]:
        """Beta parameters of the set-marginal P*(B) given alpha(B)."""
        return alpha_set, self.total_mass - alpha_set


def dp_posterior(tau_total: float, tau_base, concomitants) -> DpPosterior:
    """Posterior DP parameter from prior mass and the concomitant points."""
    atoms = np.atleast_2d(np.asarray(concomitants, dtype=float))
    if atoms.size == 0:
        raise ValueError("concomitants must be nonempty; the posterior needs at least one atom")
    if atoms.shape[1] != tau_base.d:
        raise ValueError(f"concomitant dimension {atoms.shape[1]} != base dimension {tau_base.d}")
    return DpPosterior(tau_total=float(tau_total), tau_base=tau_base, atoms=atoms, k=atoms.shape[0])


def knn_radius(x, X_all, K: int) -> float:
    """K-th smallest Euclidean distance from x to the rows of X_all."""
    X = np.atleast_2d(np.asarray(X_all, dtype=float))
    if X.shape[0] == 1 and X.shape[1] > 1 and np.ndim(X_all) == 1:
        X = X.T  # a flat vector is n scalar points, not one n-dim point
    n = X.shape[0]
    if not (1 <= K <= n):
        raise ValueError(f"need 1 <= K <= n = {n}, got K={K}")
    pt = _as_point(x, X.shape[1])
    dist = np.sqrt(np.sum((X - pt) ** 2, axis=1))
    return float(np.partition(dist, K - 1)[K - 1])


@dataclass(frozen=True)
class ScedasisPosterior:
    """Posterior of the tail-scaling factor c(x) at one covariate point.

    A draw of c(x) is Beta(beta_a, beta_b) / p_hat; beta_b == 0 is the
    boundary case "all mass in the ball", treated as a point mass at 1
    before the division.
    """

    x: np.ndarray
    ball_radius: float
    beta_a: float
    beta_b: float
    p_hat: float
    method: str

    def __post_init__(self):
        if not (0.0 < self.p_hat <= 1.0):
            raise ValueError("p_hat must lie in (0, 1]")
        if self.beta_a <= 0.0 or self.beta_b < 0.0:
            raise ValueError("need beta_a > 0 and beta_b >= 0")

    @property
    def mean(self) -> float:
        return self.beta_a / (self.beta_a + self.beta_b) / self.p_hat

    @property
    def sd(self) -> float:
        a, b = self.beta_a, self.beta_b
        var = a * b / ((a + b) ** 2 * (a + b + 1.0))
        return math.sqrt(var) / self.p_hat

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.beta_b == 0.0:
            return np.full(size, 1.0 / self.p_hat)
        return rng.beta(self.beta_a, self.beta_b, size=size) / self.p_hat


def scedasis_posterior(dp: DpPosterior, x, method: str, X_all, *, bw: float | None = None, K: int | None = None) -> ScedasisPosterior:
    """Pointwise c(x) posterior from a kernel ball (radius bw) or KNN ball.

    beta_a counts posterior DP mass inside B(x, r); p_hat is the fraction
    of all n covariates inside the same ball. Raises when the ball carries
    no covariate mass or no base mass.
    """
    X = np.atleast_2d(np.asarray(X_all, dtype=float))
    if X.shape[0] == 1 and np.ndim(X_all) == 1:
        X = X.T
    d = dp.tau_base.d
    if X.shape[1] != d:
        raise ValueError(f"covariate dimension {X.shape[1]} != base dimension {d}")
    pt = _as_point(x, d)
    if method == "kernel":
        if bw is None or bw <= 0.0:
            raise ValueError("kernel method needs bw > 0")
        radius = float(bw)
    elif method == "knn":
        if K is None:
            raise ValueError("knn method needs K")
        radius = knn_radius(pt, X, K)
    else:
        raise ValueError(f"unknown method {method!r}; expected 'kernel' or 'knn'")

    if dp.tau_base.ball_mass(pt, radius) <= 0.0:
        raise ValueError(f"ball B({pt}, {radius}) has zero base mass")
    n = X.shape[0]
    n_in = int(np.sum(np.sum((X - pt) ** 2, axis=1) <= radius**2))
    if n_in == 0:
        raise ValueError(f"no covariate mass in B(x={pt}, r={radius}); cannot normalize c(x)")
    alpha = dp.ball_alpha(pt, radius)
    beta_a, beta_b = dp.marginal_beta(alpha)
    return ScedasisPosterior(
        x=pt,
        ball_radius=radius,
        beta_a=beta_a,
        beta_b=max(beta_b, 0.0),
        p_hat=n_in / n,
        method=method,
    )


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure on [0,1]^d."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float)
        if pts.shape[0] != w.size:
            raise ValueError("points and weights must align")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def mass_rect(self, lo, hi) -> float:
        lo = _as_point(lo, self.points.shape[1])
        hi = _as_point(hi, self.points.shape[1])
        inside = np.all((self.points >= lo) & (self.points <= hi), axis=1)
        return float(self.weights[inside].sum())

    def cdf(self, ts) -> np.ndarray:
        """P((-inf, t]) for scalar support; vectorized over t."""
        if self.points.shape[1] != 1:
            raise ValueError("cdf is defined for scalar covariates; use mass_rect")
        order = np.argsort(self.points[:, 0], kind="stable")
        sp = self.points[order, 0]
        cw = np.cumsum(self.weights[order])
        idx = np.searchsorted(sp, np.asarray(ts, dtype=float), side="right")
        return np.where(idx > 0, cw[np.maximum(idx - 1, 0)], 0.0)


def sample_dp_functional(dp: DpPosterior, truncation: int = 500, seed=None) -> DiscreteMeasure:
    """One draw of P* from the posterior DP, as a discrete measure.

    Atom weights and the continuous-part weight are jointly
    Dirichlet(1,...,1, tau_total); the continuous part is realized by
    stick breaking from DP(tau_total * tau_base) truncated after
    `truncation` sticks, with the remaining stick mass lumped onto one
    extra draw from the base. Total mass is renormalized to exactly 1.
    """
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    rng = np.random.default_rng(seed)
    base = dp.tau_base
    if dp.k:
        parts = rng.dirichlet(np.concatenate([np.ones(dp.k), [dp.tau_total]]))
        atom_w = parts[: dp.k]
        w0 = parts[dp.k]
    else:
        atom_w = np.empty(0)
        w0 = 1.0
    sticks = rng.beta(1.0, dp.tau_total, size=truncation)
    tail = np.concatenate([[1.0], np.cumprod(1.0 - sticks)])
    stick_w = w0 * sticks * tail[:-1]
    lump = w0 * tail[-1]
    locs = base.sample(rng, truncation + 1)
    points = np.vstack([dp.atoms, locs]) if dp.k else locs
    weights = np.concatenate([atom_w, stick_w, [lump]])
    weights = weights / weights.sum()
    return DiscreteMeasure(points=points, weights=weights)


@dataclass(frozen=True)
class KsTestReport:
    """Outcome of the DP-bootstrap covariate-effect test."""

    statistic: float
    critical_value: float
    reject: bool
    alpha: float
    n_draws: int
    seed: int | None
    n: int
    k: int
    tau_total: float


def _ecdf_at(sorted_vals: np.ndarray, ts: np.ndarray) -> np.ndarray:
    return np.searchsorted(sorted_vals, ts, side="right") / sorted_vals.size


def _sup_rect_diff(points_a, weights_a, points_b, weights_b, anchors) -> float:
    """sup over anchors of |A((-inf, t]) - B((-inf, t])| for d>1 rectangles."""
    sup = 0.0
    for t in anchors:
        in_a = np.all(points_a <= t, axis=1)
        in_b = np.all(points_b <= t, axis=1)
        sup = max(sup, abs(float(weights_a[in_a].sum()) - float(weights_b[in_b].sum())))
    return sup


def ks_covariate_test(
    data: ExcessData,
    X_all,
    tau_total: float = 5.0,
    tau_base=None,
    M: int = 1000,
    alpha: float = 0.05,
    seed=None,
    truncation: int = 500,
) -> KsTestReport:
    """Bootstrap KS test of constant tail scaling over the covariate.

    The statistic is S = sqrt(k) * sup_t |G*_n(t) - G_n(t)| with G*_n the
    concomitant CDF and G_n the full-covariate CDF, the sup running over
    all n covariate values. The null reference draws M functional samples
    P*_m from the posterior DP and computes S_m = sqrt(k) * sup |G*_m -
    G*_n|; the critical value is the empirical (1-alpha) quantile of the
    S_m (midpoint convention).
    """
    if data.concomitants is None:
        raise ValueError("data must carry concomitant covariates")
    if M < 100:
        raise ValueError("need M >= 100 bootstrap draws")
    X = np.atleast_2d(np.asarray(X_all, dtype=float))
    if X.shape[0] == 1 and np.ndim(X_all) == 1:
        X = X.T
    n, d = X.shape
    conc = data.concomitants
    k = data.k
    if tau_base is None:
        tau_base = UniformBase(d)
    dp = dp_posterior(tau_total, tau_base, conc)
    rng = np.random.default_rng(seed)
    sqrt_k = math.sqrt(k)

    if d == 1:
        xs = np.sort(X[:, 0])
        cs = np.sort(conc[:, 0])
        gn = _ecdf_at(xs, xs)
        gstar = _ecdf_at(cs, xs)
        stat = sqrt_k * float(np.max(np.abs(gstar - gn)))
        sims = np.empty(M)
        for m in range(M):
            draw = sample_dp_functional(dp, truncation=truncation, seed=rng)
            pts = np.sort(draw.points[:, 0], kind="stable")
            eval_pts = pts  # all jump points of both step functions
            gm = draw.cdf(eval_pts)
            ge = _ecdf_at(cs, eval_pts)
            sims[m] = sqrt_k * float(np.max(np.abs(gm - ge)))
    else:
        anchors = X
        stat = sqrt_k * _sup_rect_diff(
            conc, np.full(k, 1.0 / k), X, np.full(n, 1.0 / n), anchors
        )
        sims = np.empty(M)
        conc_w = np.full(k, 1.0 / k)
        for m in range(M):
            draw = sample_dp_functional(dp, truncation=truncation, seed=rng)
            sims[m] = sqrt_k * _sup_rect_diff(draw.points, draw.weights, conc, conc_w, anchors)

    crit = float(np.quantile(sims, 1.0 - alpha, method="midpoint"))
    return KsTestReport(
        statistic=stat,
        critical_value=crit,
        reject=bool(stat > crit),
        alpha=alpha,
        n_draws=M,
        seed=seed if isinstance(seed, int) else None,
        n=n,
        k=k,
        tau_total=float(tau_total),
    )
