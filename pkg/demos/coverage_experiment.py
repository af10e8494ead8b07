"""Monte Carlo coverage of LS and EM confidence ellipsoids.

Runs a small version of the first canonical experiment (two well-separated
components, unit error variances) and prints per-method, per-component
coverage frequencies and average ellipsoid areas.  Increase n and
replications to approach the nominal 95% level.
"""

from mixreg import experiment_config, run_monte_carlo

cfg = experiment_config(1, n=2000, replications=50, base_seed=7)

print(f"experiment 1: n={cfg.n}, {cfg.replications} replications, "
      f"alpha={cfg.alpha}")
summary = run_monte_carlo(cfg)

print(f"{'method':>6} {'component':>9} {'coverage':>9} {'avg area':>12}")
for method in ("LS", "EM"):
    for k in range(cfg.M):
        print(f"{method:>6} {k + 1:>9} "
              f"{summary.coverage[(method, k)]:>9.3f} "
              f"{summary.avg_volume[(method, k)]:>12.5f}")
print(f"failures: {summary.failures}")
