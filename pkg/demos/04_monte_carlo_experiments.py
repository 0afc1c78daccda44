"""
Monte Carlo study drivers
=========================

Small, seeded versions of the built-in simulation experiments: interval
coverage, test power, scedasis estimation error, and predictive accuracy
along a growing-sample ladder. The full-size settings live in the
acceptance tests; these runs finish in about a minute.
"""
from bayespot import (
    ConditionalModel,
    MarginalModel,
    McmcConfig,
    PriorSpec,
    coverage_experiment,
    power_experiment,
    predictive_consistency_experiment,
    rmirse_experiment,
)

# ------------------------------------------------------------------
# 1. do 95% posterior intervals cover the truth about 95% of the time?
rep = coverage_experiment(
    MarginalModel("exponential"),
    n=2000,
    k=100,
    p=0.001,
    prior=PriorSpec("flat"),
    replications=60,
    seed=1,
    mcmc=McmcConfig(iterations=4000, burn_in=1000),
)
print("coverage (exponential data, 60 replications):")
for target in ("gamma", "quantile"):
    print(f"  {target}: {rep.summary[f'{target}_asymmetric']:.3f} asymmetric, "
          f"{rep.summary[f'{target}_symmetric']:.3f} symmetric")

# ------------------------------------------------------------------
# 2. rejection rate of the covariate test, with and without an effect
pw = power_experiment(
    ConditionalModel("straight_line", beta=1.0),
    [0.0, 0.5, 1.0],
    n=1000,
    k=100,
    tau_total=5.0,
    M=200,
    replications=100,
    seed=2,
)
print("\ncovariate test rejection rates (alpha = 0.05):")
for beta, rate, se in pw.rows:
    print(f"  effect size {beta:.1f}: {rate:.2f} (mc se {se:.3f})")

# ------------------------------------------------------------------
# 3. integrated error of the scedasis estimate, kernel vs neighbour balls
rm = rmirse_experiment(
    ConditionalModel("straight_line", beta=1.0),
    n=2000,
    k=160,
    replications=20,
    seed=3,
    bw=0.1,
    K=300,
    grid_size=50,
)
print(f"\nscedasis error: kernel {rm.summary['kernel']:.3f}, "
      f"knn {rm.summary['knn']:.3f} "
      f"(gain {rm.summary['knn_vs_kernel_gain']:+.1%})")

# ------------------------------------------------------------------
# 4. predictive distance to the true excess law shrinks as n and k grow
pc = predictive_consistency_experiment(
    [(500, 22), (2000, 45), (8000, 90)],
    replications=10,
    seed=4,
    mcmc=McmcConfig(iterations=4000, burn_in=1000),
)
print("\npredictive distance ladder (median scaled W1):")
for n, k, med in pc.rows:
    print(f"  n = {n:5d}, k = {k:3d}: {med:.3f}")
print(f"nonincreasing: {pc.summary['nonincreasing']}")
