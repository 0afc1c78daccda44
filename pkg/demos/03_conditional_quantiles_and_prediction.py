"""
Extreme quantiles that depend on a covariate
============================================

Combine the excess-model posterior (tail shape and scale) with the scedasis
posterior (local exceedance frequency) to get conditional extreme quantiles
and a conditional predictive distribution at chosen covariate values.
"""
import numpy as np

from bayespot import (
    ConditionalModel,
    McmcConfig,
    PriorSpec,
    UniformBase,
    conditional_draws,
    conditional_predictive_cdf,
    conditional_quantile_draws,
    credible_interval,
    dp_posterior,
    extract_excesses,
    predictive_quantile,
    sample_pot_posterior,
    scedasis_posterior,
)

model = ConditionalModel("straight_line", beta=1.0)
x, y = model.sample(6000, seed=3)
data = extract_excesses(y, k=450, X=x)

draws = sample_pot_posterior(
    data, PriorSpec("flat"), McmcConfig(iterations=20000, burn_in=5000, seed=8)
)
dp = dp_posterior(5.0, UniformBase(1), data.concomitants)

# ------------------------------------------------------------------
# conditional 1-in-1000 quantile at three covariate values
p = 0.001
print("   x    posterior mean     95% interval          truth")
for i, gx in enumerate((0.25, 0.5, 0.75)):
    sced = scedasis_posterior(dp, gx, "kernel", x[:, None], bw=0.1)
    cd = conditional_draws(draws, sced, data, seed=100 + i)
    q = conditional_quantile_draws(cd, p)
    ci = credible_interval(q, 0.95, type="asymmetric")
    truth = model.true_conditional_tail(gx, p)
    print(f"  {gx:.2f}   {q.mean():10.1f}     "
          f"[{ci.lower:8.1f}, {ci.upper:8.1f}]   {truth:8.1f}")

# ------------------------------------------------------------------
# conditional predictive distribution at x = 0.75: an interval that a
# future observation at that covariate value falls in with 95% probability
sced = scedasis_posterior(dp, 0.75, "kernel", x[:, None], bw=0.1)
cd = conditional_draws(draws, sced, data, seed=42)
pred = conditional_predictive_cdf(cd)
lo = predictive_quantile(pred, 0.975)
hi = predictive_quantile(pred, 0.025)
print(f"\n95% predictive interval at x = 0.75: [{lo:.2f}, {hi:.2f}]")
print(f"P(next obs at x = 0.75 exceeds {hi:.2f}) = 0.025")
