"""
Fitting a heavy tail and reading off extreme quantiles
======================================================

Simulate Pareto-like losses, keep the largest observations as excesses over
a high threshold, sample the excess-model posterior, and compare the
estimated 1-in-1000 quantile with the truth.
"""
import numpy as np

from bayespot import (
    MarginalModel,
    McmcConfig,
    PriorSpec,
    credible_interval,
    extract_excesses,
    extreme_quantile_draws,
    predictive_cdf,
    predictive_quantile,
    sample_pot_posterior,
    summarize,
)

# ------------------------------------------------------------------
# data: 5000 Pareto(2) draws, so the true tail index is 1/2
model = MarginalModel("pareto", (2.0,))
y = model.sample(5000, seed=11)
print(f"n = {y.size}, sample max = {y.max():.1f}")

# keep the top k = 350 observations; the threshold is the (k+1)-th largest
data = extract_excesses(y, k=350)
print(f"threshold = {data.threshold:.3f}, k = {data.k}")

# ------------------------------------------------------------------
# posterior sampling with a flat prior on (shape, log scale)
draws = sample_pot_posterior(
    data, PriorSpec("flat"), McmcConfig(iterations=20000, burn_in=5000, seed=1)
)
print(f"acceptance rate = {draws.acceptance_rate:.2f}")

summary = summarize(draws)
for name, s in summary.items():
    print(f"{name}: mean {s.mean:.3f}, sd {s.sd:.3f}, "
          f"median {s.quantile(0.5):.3f}")

ci = credible_interval(draws.gamma, 0.95, type="asymmetric")
print(f"95% interval for the shape: [{ci.lower:.3f}, {ci.upper:.3f}]")
print(f"true shape: 0.5, covered: {ci.contains(0.5)}")

# ------------------------------------------------------------------
# extreme quantile: exceeded once in a thousand observations
p = 0.001
q_draws = extreme_quantile_draws(draws, data, p)
q_ci = credible_interval(q_draws, 0.95, type="asymmetric")
truth = model.tail_quantile(p)
print(f"\nQ(1-p) at p = {p}:")
print(f"  posterior mean {q_draws.mean():.1f}, "
      f"interval [{q_ci.lower:.1f}, {q_ci.upper:.1f}]")
print(f"  true value     {truth:.1f}")

# ------------------------------------------------------------------
# posterior predictive: where will the next large observation land?
pred = predictive_cdf(draws, data)
for p_star in (0.1, 0.01, 0.001):
    level = predictive_quantile(pred, p_star)
    print(f"next-observation level exceeded with prob {p_star}: {level:.1f}")
