"""Tests for posterior summaries, intervals, extreme quantiles, prediction."""
import math

import numpy as np
import pytest

from bayespot import GpdParams, gpd_quantile
from bayespot.excess import ExcessData, extract_excesses
from bayespot.mcmc import McmcConfig, PosteriorDraws, sample_pot_posterior
from bayespot.posterior import (
    CredibleInterval,
    credible_interval,
    extreme_quantile_draws,
    predictive_cdf,
    predictive_quantile,
    summarize,
    wasserstein,
)
from bayespot.priors import PriorSpec


def _dummy_data(threshold=2.0, n=1000, k=100):
    return ExcessData(threshold=threshold, excesses=np.zeros(k), n=n, k=k)


def _fake_draws(gamma, sigma):
    gamma = np.asarray(gamma, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    return PosteriorDraws(
        gamma=gamma,
        sigma=sigma,
        acceptance_rate=0.25,
        ess=np.array([float(gamma.size)] * 2),
        seed=0,
        log_post_trace=np.zeros(gamma.size),
    )


# ---------------------------------------------------------------- summarize

def test_summarize_constant():
    s = summarize([3.0] * 7)
    assert s.mean == 3.0
    assert s.sd == 0.0
    assert s.quantile(0.5) == 3.0


def test_summarize_median_midpoint():
    assert summarize([1.0, 2.0, 3.0, 4.0]).quantile(0.5) == 2.5


def test_summarize_seeded_normal():
    x = np.random.default_rng(123).normal(loc=1.5, size=100_000)
    s = summarize(x)
    assert abs(s.mean - 1.5) < 0.02
    assert abs(s.sd - 1.0) < 0.02


def test_summarize_posterior_draws_gives_both_coordinates():
    d = _fake_draws([0.1, 0.2, 0.3], [1.0, 2.0, 3.0])
    out = summarize(d)
    assert out["gamma"].mean == pytest.approx(0.2)
    assert out["sigma"].mean == pytest.approx(2.0)


def test_summarize_empty_errors():
    with pytest.raises(ValueError):
        summarize([])


# ------------------------------------------------------- credible intervals

def test_asymmetric_interval_pinned():
    ci = credible_interval(np.arange(1.0, 101.0), 0.9, "asymmetric")
    assert (ci.lower, ci.upper) == (5.5, 95.5)
    assert ci.level == 0.9


def test_symmetric_interval_normal_draws():
    x = np.random.default_rng(4).normal(size=100_000)
    ci = credible_interval(x, 0.95, "symmetric")
    assert ci.lower == pytest.approx(-1.9599640, abs=0.02)
    assert ci.upper == pytest.approx(1.9599640, abs=0.02)


def test_degenerate_interval_zero_width():
    x = np.full(150, 2.5)
    for kind in ("asymmetric", "symmetric"):
        ci = credible_interval(x, 0.9, kind)
        assert ci.width == 0.0
        assert ci.contains(2.5)


def test_interval_validation():
    with pytest.raises(ValueError):
        credible_interval(np.arange(50.0), 0.9)  # too few
    with pytest.raises(ValueError):
        credible_interval(np.arange(200.0), 1.5)
    with pytest.raises(ValueError):
        credible_interval(np.arange(200.0), 0.9, "hpd")
    with pytest.raises(ValueError):
        CredibleInterval(lower=2.0, upper=1.0, level=0.9, type="asymmetric")


# ------------------------------------------------------- extreme quantiles

def test_extreme_quantile_pinned_examples():
    data = _dummy_data()
    q0 = extreme_quantile_draws(GpdParams(0.0, 1.0), data, 0.001)
    assert q0[0] == pytest.approx(2.0 + math.log(100.0), abs=1e-12)
    q1 = extreme_quantile_draws(GpdParams(1.0, 1.0), data, 0.001)
    assert q1[0] == pytest.approx(101.0, abs=1e-10)


def test_extreme_quantile_level_domain():
    data = _dummy_data()
    with pytest.raises(ValueError):
        extreme_quantile_draws(GpdParams(0.0, 1.0), data, 0.1)  # = k/n
    with pytest.raises(ValueError):
        extreme_quantile_draws(GpdParams(0.0, 1.0), data, 0.2)
    with pytest.raises(ValueError):
        extreme_quantile_draws(GpdParams(0.0, 1.0), data, 0.0)


def test_extreme_quantile_monotone_in_parameters():
    data = _dummy_data()
    gammas = np.linspace(-0.4, 2.0, 41)
    qs = extreme_quantile_draws([GpdParams(g, 1.0) for g in gammas], data, 0.001)
    assert np.all(np.diff(qs) > 0.0)
    sigmas = np.linspace(0.1, 5.0, 41)
    qs = extreme_quantile_draws([GpdParams(0.5, s) for s in sigmas], data, 0.001)
    assert np.all(np.diff(qs) > 0.0)


def test_extreme_quantile_frechet_domain_recovery():
    # unit-Frechet-like tail with shape 1: F(x) = exp(-1/x)
    rng = np.random.default_rng(3)
    x = 1.0 / (-np.log(rng.uniform(size=2000)))
    data = extract_excesses(x, k=150)
    post = sample_pot_posterior(
        data, PriorSpec("flat"), McmcConfig(iterations=6_000, burn_in=2_000, seed=3)
    )
    q = extreme_quantile_draws(post, data, 0.001)
    truth = 1.0 / (-math.log(0.999))
    assert abs(q.mean() - truth) / truth < 0.25


# ---------------------------------------------------------------- predictive

def test_predictive_cdf_pinned_examples():
    data = _dummy_data()
    one = predictive_cdf([GpdParams(0.0, 1.0)], data)
    assert one(3.0) == pytest.approx(1.0 - math.exp(-1.0), abs=1e-12)
    two = predictive_cdf([GpdParams(0.0, 1.0), GpdParams(1.0, 1.0)], data)
    assert two(3.0) == pytest.approx((1.0 - math.exp(-1.0) + 0.5) / 2.0, abs=1e-12)
    assert two(2.0) == 0.0
    assert two(-5.0) == 0.0


def test_predictive_requires_enough_chain_draws():
    data = _dummy_data()
    short = _fake_draws(np.full(50, 0.1), np.ones(50))
    with pytest.raises(ValueError):
        predictive_cdf(short, data)
    ok = _fake_draws(np.full(100, 0.1), np.ones(100))
    predictive_cdf(ok, data)


def test_predictive_cdf_nondecreasing_and_capped():
    rng = np.random.default_rng(17)
    gs = np.clip(rng.normal(0.0, 0.3, 400), -0.45, None)  # mixed signs: finite endpoints occur
    ss = rng.lognormal(0.0, 0.3, 400)
    pred = predictive_cdf([GpdParams(g, s) for g, s in zip(gs, ss)], _dummy_data())
    y = np.linspace(1.0, 60.0, 1000)
    vals = pred(y)
    assert np.all(np.diff(vals) >= -1e-14)
    assert vals[0] == 0.0
    assert vals[-1] <= 1.0


def test_predictive_quantile_inversion():
    data = _dummy_data()
    one = predictive_cdf([GpdParams(0.0, 1.0)], data)
    assert predictive_quantile(one, math.exp(-1.0)) == pytest.approx(3.0, abs=1e-8)
    with pytest.raises(ValueError):
        predictive_quantile(one, 0.0)
    with pytest.raises(ValueError):
        predictive_quantile(one, 1.0)


def test_predictive_quantile_monotone_in_level():
    rng = np.random.default_rng(5)
    pred = predictive_cdf(
        [GpdParams(g, s) for g, s in zip(rng.normal(0.4, 0.1, 200), rng.lognormal(0, 0.2, 200))],
        _dummy_data(),
    )
    levels = [0.2, 0.1, 0.05, 0.01, 0.001]
    qs = [predictive_quantile(pred, p) for p in levels]
    assert all(a <= b for a, b in zip(qs, qs[1:]))


def test_predictive_quantile_dense_grid_oracle():
    rng = np.random.default_rng(7)
    gs = rng.normal(0.3, 0.1, 300)
    ss = rng.lognormal(0.0, 0.2, 300)
    pred = predictive_cdf([GpdParams(g, s) for g, s in zip(gs, ss)], _dummy_data())
    q = predictive_quantile(pred, 0.05)
    coarse = np.linspace(2.0, 60.0, 20001)
    i = int(np.searchsorted(pred(coarse), 0.95))
    fine = np.linspace(coarse[i - 1], coarse[i], 200001)
    oracle = fine[int(np.searchsorted(pred(fine), 0.95))]
    assert q == pytest.approx(oracle, abs=1e-6)


# ---------------------------------------------------------------- wasserstein

def test_wasserstein_self_distance_zero():
    x = np.random.default_rng(1).exponential(size=2000)
    assert wasserstein(x, x) == 0.0
    assert wasserstein(x, x, v=2.0) == 0.0


def test_wasserstein_point_masses():
    assert wasserstein(np.full(10, 3.0), np.full(7, 5.5)) == pytest.approx(2.5, abs=1e-14)


def test_wasserstein_exponential_pair_closed_form():
    # quantile gap between Exp(1) and Exp(2) integrates to 1/2
    x = np.random.default_rng(11).exponential(1.0, size=100_000)
    y = np.random.default_rng(12).exponential(0.5, size=100_000)
    assert wasserstein(x, y, 1.0) == pytest.approx(0.5, abs=0.02)


def test_wasserstein_scaling_identity():
    x = np.random.default_rng(13).exponential(1.0, size=5_000)
    y = np.random.default_rng(14).exponential(0.5, size=5_000)
    w = wasserstein(x, y)
    a = 4.0
    assert wasserstein(x / a, y / a) == pytest.approx(w / a, rel=1e-12)


def test_wasserstein_accepts_quantile_callable():
    x = np.random.default_rng(15).exponential(1.0, size=100_000)
    q_exp = lambda p: -np.log1p(-np.asarray(p))
    assert wasserstein(x, q_exp) < 0.05


def test_wasserstein_order_and_input_validation():
    x = np.arange(10.0)
    with pytest.raises(ValueError):
        wasserstein(x, x, v=0.5)
    with pytest.raises(ValueError):
        wasserstein(x, np.array([]))
    # order-2 distance dominates order-1 for the same pair
    y = x + np.random.default_rng(2).normal(size=10)
    assert wasserstein(x, y, 2.0) >= wasserstein(x, y, 1.0) - 1e-12
