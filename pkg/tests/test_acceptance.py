"""Acceptance gate: one test per release criterion.

Run with `pytest -v tests/test_acceptance.py` to get one pass/fail line per
criterion; each test also prints a `[criterion N]` verdict line with the
measured numbers. Tolerance bands are frozen here on purpose: loosening one
to make a red criterion pass defeats the gate.

Budget note: criteria 4 and 7 run Monte Carlo studies with full MCMC chains
per replication and together take a few minutes; everything else is seconds.
"""
import math
from pathlib import Path

import numpy as np
import pytest

from bayespot import (
    GpdParams,
    fisher_info,
    fit_mle,
    gpd_cdf,
    gpd_logpdf,
    gpd_quantile,
)
from bayespot.cli import ingest_csv
from bayespot.conditional import (
    ConditionalDraws,
    conditional_predictive_cdf,
    conditional_quantile_draws,
)
from bayespot.excess import ExcessData, extract_excesses
from bayespot.mcmc import McmcConfig, sample_pot_posterior
from bayespot.posterior import extreme_quantile_draws, predictive_cdf, wasserstein
from bayespot.priors import PriorSpec, log_prior
from bayespot.scedasis import (
    UniformBase,
    dp_posterior,
    knn_radius,
    ks_covariate_test,
    sample_dp_functional,
)
from bayespot.simlab import (
    ConditionalModel,
    MarginalModel,
    coverage_experiment,
    power_experiment,
    predictive_consistency_experiment,
    rmirse_experiment,
)

SP500_PATH = Path(__file__).resolve().parents[1] / "data" / "sp500_returns.csv"


def _gate(number: int, name: str, checks) -> None:
    ok = all(flag for _, flag in checks)
    detail = "; ".join(label for label, _ in checks)
    verdict = "PASS" if ok else "FAIL"
    print(f"[criterion {number}] {name}: {verdict} ({detail})")
    failed = [label for label, flag in checks if not flag]
    assert not failed, f"criterion {number} failed: {failed}"


# ---------------------------------------------------------------------------
# criterion 1: exactness suite


def _theta_and_excesses():
    # mixed shape draws including exact zeros, paired with a fixed data block
    rng = np.random.default_rng(7)
    g = np.clip(rng.normal(0.3, 0.4, size=500), -0.45, None)
    g[::50] = 0.0
    s = rng.lognormal(0.0, 0.5, size=500)
    data = ExcessData(threshold=3.0, excesses=np.linspace(5.0, 0.01, 60), n=4000, k=60)
    return np.column_stack([g, s]), data


def test_criterion_1_exactness_suite():
    checks = []

    # distribution/quantile roundtrips at 1e-12 across both shape branches
    p = np.linspace(1e-9, 1.0 - 1e-9, 101)
    worst = 0.0
    for gamma in [-0.45, -0.3, 0.0, 0.3, 1.0, 3.0]:
        for sigma in [0.01, 1.0, 100.0]:
            theta = GpdParams(gamma, sigma)
            z = gpd_quantile(theta, p)
            worst = max(worst, float(np.max(np.abs(gpd_cdf(theta, z) - p))))
    checks.append((f"roundtrip={worst:.2e}", worst < 1e-12))

    # log-density continuity across the zero-shape branch switch
    jump = 0.0
    for z in [0.1, 1.0, 5.0, 40.0]:
        base = gpd_logpdf(GpdParams(0.0, 1.3), z)
        for eps in (1e-9, -1e-9):
            jump = max(jump, abs(float(gpd_logpdf(GpdParams(eps, 1.3), z) - base)))
    checks.append((f"branch_jump={jump:.2e}", jump < 1e-6))

    # information determinant identity and its tie to the jeffreys prior
    fisher_ok = True
    jeffreys_ok = True
    flat, jeff = PriorSpec("flat"), PriorSpec("jeffreys")
    for gamma in [-0.4, -0.1, 0.0, 0.3, 1.0, 2.0]:
        for sigma in [0.5, 1.0, 3.0]:
            theta = GpdParams(gamma, sigma)
            det = fisher_info(theta).determinant
            closed = sigma**-2 * (1.0 + gamma) ** -2 / (1.0 + 2.0 * gamma)
            fisher_ok &= abs(det / closed - 1.0) < 1e-5
            ratio = math.exp(log_prior(jeff, theta) - log_prior(flat, theta))
            jeffreys_ok &= abs(ratio / (math.sqrt(det) * sigma) - 1.0) < 1e-5
    checks.append(("fisher_identity", fisher_ok))
    checks.append(("jeffreys_tie", jeffreys_ok))

    # unit tail ratio must reduce the conditional module to the marginal one
    theta, data = _theta_and_excesses()
    cd = ConditionalDraws(theta, np.ones(500), data.threshold, data.n, data.k, 0.5)
    q_same = np.array_equal(
        conditional_quantile_draws(cd, 1e-4), extreme_quantile_draws(theta, data, 1e-4)
    )
    ys = np.concatenate([np.linspace(3.0, 80.0, 4001), [2.0, 3.0, 1e6]])
    p_same = np.array_equal(
        conditional_predictive_cdf(cd)(ys), predictive_cdf(theta, data)(ys)
    )
    checks.append(("quantile_reduction_bitwise", q_same))
    checks.append(("predictive_reduction_bitwise", p_same))

    # covariate test statistic invariant under strictly monotone transforms
    rng = np.random.default_rng(17)
    X = rng.uniform(size=2000)
    y = (1.0 - rng.uniform(size=2000)) ** -0.5
    s_raw = ks_covariate_test(
        extract_excesses(y, 200, X=X), X, tau_total=5.0, M=100, seed=11
    ).statistic
    s_cubed = ks_covariate_test(
        extract_excesses(y, 200, X=X**3), X**3, tau_total=5.0, M=100, seed=11
    ).statistic
    inv = abs(s_raw - s_cubed)
    checks.append((f"ks_invariance={inv:.2e}", inv < 1e-12))

    _gate(1, "exactness suite", checks)


# ---------------------------------------------------------------------------
# criterion 2: oracle equivalence


def test_criterion_2_oracle_equivalence():
    checks = []

    # maximizer against a brute-force 400x400 profile grid on seeded data
    rng = np.random.default_rng(2024)
    z = gpd_quantile(GpdParams(0.25, 1.0), rng.uniform(size=200))
    fit = fit_mle(z)
    gammas = np.linspace(-0.45, 2.0, 400)
    log_sigmas = np.linspace(-3.0, 3.0, 400)
    sig = np.exp(log_sigmas)
    best = (-math.inf, math.nan, math.nan)
    for g in gammas:
        u = g * z[None, :] / sig[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            if g == 0.0:
                row = -(z[None, :] / sig[:, None])
            else:
                row = -(1.0 + 1.0 / g) * np.log1p(u)
            ll = row.sum(axis=1) - z.size * np.log(sig)
        if g < 0.0:
            ll = np.where(np.any(u <= -1.0, axis=1), -math.inf, ll)
        j = int(np.nanargmax(ll))
        if ll[j] > best[0]:
            best = (float(ll[j]), float(g), float(log_sigmas[j]))
    dg = float(gammas[1] - gammas[0])
    dls = float(log_sigmas[1] - log_sigmas[0])
    g_gap = abs(fit.params.gamma - best[1])
    s_gap = abs(math.log(fit.params.sigma) - best[2])
    checks.append((f"mle_gamma_gap={g_gap:.2e}<= {dg:.2e}", g_gap <= dg))
    checks.append((f"mle_logsigma_gap={s_gap:.2e}<= {dls:.2e}", s_gap <= dls))
    checks.append(("mle_loglik>=grid", fit.loglik >= best[0]))

    # neighbour radius equals the K-th sorted distance, bit for bit
    rng = np.random.default_rng(99)
    X = rng.uniform(size=5000)
    r = knn_radius(0.5, X, 750)
    checks.append(("knn_radius_exact", r == np.sort(np.abs(X - 0.5))[749]))

    # random-measure set marginals against the closed-form Beta moments
    dp = dp_posterior(5.0, UniformBase(1), np.array([[0.2], [0.8]]))
    rng = np.random.default_rng(5)
    masses = np.array(
        [sample_dp_functional(dp, seed=rng).mass_rect(0.0, 0.5) for _ in range(2000)]
    )
    mean_err = abs(masses.mean() / 0.5 - 1.0)
    var_err = abs(masses.var(ddof=1) / (1.0 / 32.0) - 1.0)
    checks.append((f"dp_mean_err={mean_err:.3f}", mean_err < 0.02))
    checks.append((f"dp_var_err={var_err:.3f}", var_err < 0.02))

    # distance between two exponentials against the closed form 1/2
    w = wasserstein(lambda u: -np.log1p(-u), lambda u: -np.log1p(-u) / 2.0)
    checks.append((f"w1_exp={w:.4f}", abs(w - 0.5) <= 0.02))

    _gate(2, "oracle equivalence", checks)


# ---------------------------------------------------------------------------
# criterion 3: posterior concentration in k


def _gamma_posterior_sd(k: int, seed: int) -> float:
    # exact generalized Pareto excesses, shape 0.25 and unit scale
    rng = np.random.default_rng(seed)
    z = MarginalModel("gpd", (0.25, 1.0)).quantile(rng.random(k))
    data = ExcessData(threshold=0.0, excesses=np.sort(z)[::-1], n=4 * k, k=k)
    draws = sample_pot_posterior(
        data,
        PriorSpec("flat"),
        McmcConfig(iterations=25000, burn_in=5000, seed=seed),
    )
    return float(draws.gamma.std(ddof=1))


def test_criterion_3_posterior_concentration():
    # quadrupling k should roughly halve the posterior sd of the shape
    ratio = _gamma_posterior_sd(250, 13) / _gamma_posterior_sd(1000, 63)
    _gate(
        3,
        "posterior concentration",
        [(f"sd_ratio_250_vs_1000={ratio:.3f}", 1.6 <= ratio <= 2.4)],
    )


# ---------------------------------------------------------------------------
# criterion 4: interval coverage


def test_criterion_4_interval_coverage():
    checks = []

    rep = coverage_experiment(
        MarginalModel("exponential"),
        n=2146,
        k=100,
        p=0.001,
        prior=PriorSpec("flat"),
        replications=300,
        seed=42,
    )
    g_cov = rep.summary["gamma_asymmetric"]
    q_cov = rep.summary["quantile_asymmetric"]
    checks.append((f"exp_gamma_cov={g_cov:.3f}", 0.90 <= g_cov <= 0.98))
    checks.append((f"exp_quantile_cov={q_cov:.3f}", 0.90 <= q_cov <= 0.98))

    sanity = coverage_experiment(
        MarginalModel("gpd", (0.25, 1.0)),
        n=4000,
        k=1000,
        p=0.001,
        prior=PriorSpec("flat"),
        replications=500,
        seed=7,
    )
    s_cov = sanity.summary["gamma_asymmetric"]
    checks.append((f"exact_gp_gamma_cov={s_cov:.3f}", 0.92 <= s_cov <= 0.97))

    _gate(4, "interval coverage", checks)


# ---------------------------------------------------------------------------
# criterion 5: covariate test significance and power


def test_criterion_5_test_significance_and_power():
    model = ConditionalModel("straight_line", beta=1.0)
    rep = power_experiment(
        model,
        [0.0, 1.0],
        n=2000,
        k=200,
        tau_total=5.0,
        M=500,
        replications=200,
        seed=77,
        alpha=0.05,
    )
    rate0 = rep.summary["beta=0"]
    rate1 = rep.summary["beta=1"]
    _gate(
        5,
        "test significance and power",
        [
            (f"null_rate={rate0:.3f}", 0.02 <= rate0 <= 0.09),
            (f"power_at_beta1={rate1:.3f}", rate1 >= rate0 + 0.15),
        ],
    )


# ---------------------------------------------------------------------------
# criterion 6: scedasis estimation accuracy anchor


def test_criterion_6_scedasis_rmirse_anchor():
    rep = rmirse_experiment(
        ConditionalModel("straight_line", beta=1.0),
        n=5000,
        k=400,
        replications=50,
        seed=20260814,
        K=750,
    )
    kernel = rep.summary["kernel"]
    gain = rep.summary["knn_vs_kernel_gain"]
    # the neighbour-based score is reported for comparison but not gated
    _gate(
        6,
        "scedasis rmirse anchor",
        [
            (f"kernel_rmirse={kernel:.4f}", 0.4 <= kernel <= 1.6),
            (f"knn_vs_kernel_gain={gain:+.3f} (reported only)", True),
        ],
    )


# ---------------------------------------------------------------------------
# criterion 7: predictive distance shrinks along an (n, k) ladder


_MARGINAL_MEDIANS = [4.6676907117351165, 0.706918676383387, 0.5294209913149703]
_CONDITIONAL_MEDIANS = [24.847783580368194, 4.025945271838928, 3.4199333339877684]


def test_criterion_7_predictive_wasserstein_consistency():
    checks = []

    rep = predictive_consistency_experiment(
        [(500, 22), (2000, 45), (8000, 90)], replications=30, seed=2024
    )
    meds = rep.summary["medians"]
    dec = meds[0] > meds[1] > meds[2]
    checks.append((f"marginal_medians={[round(m, 4) for m in meds]}", dec))
    checks.append(
        (
            "marginal_reproduced",
            np.allclose(meds, _MARGINAL_MEDIANS, rtol=1e-9, atol=0.0),
        )
    )

    cond = predictive_consistency_experiment(
        [(2000, 45), (8000, 89), (32000, 179)],
        replications=30,
        seed=515,
        conditional=True,
    )
    cmeds = cond.summary["medians"]
    cdec = cmeds[0] > cmeds[1] > cmeds[2]
    checks.append((f"conditional_medians={[round(m, 4) for m in cmeds]}", cdec))
    checks.append(
        (
            "conditional_reproduced",
            np.allclose(cmeds, _CONDITIONAL_MEDIANS, rtol=1e-9, atol=0.0),
        )
    )

    _gate(7, "predictive distance consistency", checks)


# ---------------------------------------------------------------------------
# criterion 8: index-series fixture (optional, needs the data file)


@pytest.mark.skipif(
    not SP500_PATH.exists(),
    reason="optional fixture: put daily negative log-returns (column 'y') "
    "at data/sp500_returns.csv to enable",
)
def test_criterion_8_index_series_fixture():
    y, _ = ingest_csv(SP500_PATH)
    n = y.size
    x = np.linspace(0.0, 1.0, n)  # trading days mapped to equal spacing

    data = extract_excesses(y, 210, X=x)
    draws = sample_pot_posterior(
        data,
        PriorSpec("flat"),
        McmcConfig(iterations=25000, burn_in=5000, seed=2026),
    )
    g_mean = float(draws.gamma.mean())

    report = ks_covariate_test(data, x, tau_total=5.0, M=1000, alpha=0.05, seed=2026)

    _gate(
        8,
        "index series fixture",
        [
            (f"gamma_mean={g_mean:.3f}", 0.20 <= g_mean <= 0.30),
            (f"test_statistic={report.statistic:.3f}", 3.2 <= report.statistic <= 4.0),
        ],
    )
