"""Acceptance gate: one test per criterion, one [PASS]/[FAIL] line each.

The Monte Carlo criteria (5-8) share cached experiment runs; the full
module takes roughly 15 minutes on one core.
"""

import math
import time

import numpy as np
import pytest

from mixreg.ellipsoid import Ellipsoid, chi2_quantile, volume
from mixreg.emfit import EmConfig, em_fit, pilot_estimates
from mixreg.likelihood import empirical_info, log_likelihood, score
from mixreg.lsfit import ls_fit
from mixreg.mixweights import minimax_weights
from mixreg.model import MixtureSample, TauVector, flatten, unflatten
from mixreg.simlab import experiment_config, gen_concentrations, gen_sample, run_monte_carlo

from conftest import draw_sample, random_params

RESULTS = []


def report(num, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}"
    RESULTS.append(line)
    print(line, flush=True)
    assert ok, line


BASE_SEED = 20260826


@pytest.fixture(scope="module")
def exp1_1e4():
    cfg = experiment_config(1, n=10_000, replications=1000, base_seed=BASE_SEED)
    return run_monte_carlo(cfg)


@pytest.fixture(scope="module")
def exp1_1e5():
    cfg = experiment_config(1, n=100_000, replications=500, base_seed=BASE_SEED)
    return run_monte_carlo(cfg)


def test_criterion_1_weight_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for trial in range(50):
        M = int(rng.integers(2, 5))
        P = gen_concentrations(200, M, rng)
        for k in range(M):
            a = minimax_weights(P, k).a
            avg = P.T @ a / 200.0
            target = np.zeros(M)
            target[k] = 1.0
            worst = max(worst, np.abs(avg - target).max())
    dt = time.perf_counter() - t0
    report(1, worst < 1e-10 and dt < 1.0,
           f"weight identity max deviation {worst:.2e} (limit 1e-10), {dt:.2f}s")


def test_criterion_2_single_component_degeneration():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    n, d = 500, 2
    X = rng.normal(size=(n, d)) + [1.0, -2.0]
    Y = X @ np.array([0.5, 2.0]) + 0.7 * rng.normal(size=n)
    s = MixtureSample(Y=Y, X=X, P=np.ones((n, 1)))

    fit = ls_fit(s, 0)
    ols = np.linalg.lstsq(X, Y, rcond=None)[0]
    resid = Y - X @ ols
    V_ols = (resid @ resid / n) * np.linalg.inv(X.T @ X / n)
    ls_err = max(np.abs(fit.bhat - ols).max(), np.abs(fit.Vhat - V_ols).max())

    res = em_fit(s, pilot_estimates(s), EmConfig())
    p = unflatten(res.tau)[0]
    C = X - X.mean(axis=0)
    em_err = max(
        np.abs(p.b - ols).max(),
        np.abs(p.mu - X.mean(axis=0)).max(),
        np.abs(p.Sigma - C.T @ C / n).max(),
        abs(p.sigma2 - resid @ resid / n),
    )
    dt = time.perf_counter() - t0
    report(2, ls_err < 1e-10 and em_err < 1e-10 and res.iters <= 2 and dt < 1.0,
           f"OLS/covariance deviation {ls_err:.2e}, EM MLE deviation {em_err:.2e} "
           f"in {res.iters} iterations (limits 1e-10, 2 iters), {dt:.2f}s")


def test_criterion_3_gradient_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(20):
        params = random_params(rng, d=2, M=2)
        s = draw_sample(rng, 200, params)
        tau = flatten(params, s.dims)
        g = score(s, tau)
        v = tau.values
        fd = np.empty_like(g)
        for i in range(v.size):
            h = 1e-6 * (1.0 + abs(v[i]))
            vp, vm = v.copy(), v.copy()
            vp[i] += h
            vm[i] -= h
            fd[i] = (
                log_likelihood(s, TauVector(tau.dims, vp))
                - log_likelihood(s, TauVector(tau.dims, vm))
            ) / (2.0 * h)
        rel = np.abs(g - fd) / np.maximum(np.abs(fd), 1.0)
        worst = max(worst, rel.max())
    dt = time.perf_counter() - t0
    report(3, worst < 1e-5 and dt < 10.0,
           f"analytic vs finite-difference score, worst per-coordinate "
           f"relative error {worst:.2e} (limit 1e-5), {dt:.1f}s")


def test_criterion_4_em_ascent():
    t0 = time.perf_counter()
    from mixreg.errors import SingularDesign

    cfg = experiment_config(1, n=1000)
    worst_drop = 0.0
    fits = 0
    r = 0
    while fits < 100 and r < 120:
        s = gen_sample(cfg, np.random.default_rng(4000 + r))
        r += 1
        try:
            tau0 = pilot_estimates(s)
        except SingularDesign:
            # indefinite weighted moment matrix at this n: no pilot, no fit
            continue
        res = em_fit(s, tau0, EmConfig(max_iters=200))
        fits += 1
        trace = np.asarray(res.loglik_trace)
        drops = np.diff(trace) / np.maximum(1.0, np.abs(trace[:-1]))
        worst_drop = min(worst_drop, drops.min())
    dt = time.perf_counter() - t0
    report(4, fits == 100 and worst_drop >= -1e-8 and dt < 60.0,
           f"log-likelihood trace worst relative decrease {worst_drop:.2e} "
           f"over {fits} fits (slack 1e-8), {dt:.0f}s")


def test_criterion_5_experiment1_coverage(exp1_1e4):
    c = exp1_1e4.coverage
    em_ok = 0.93 <= c[("EM", 0)] <= 0.97 and 0.93 <= c[("EM", 1)] <= 0.97
    ls_ok = 0.93 <= c[("LS", 0)] <= 1.00 and 0.92 <= c[("LS", 1)] <= 0.98
    report(5, em_ok and ls_ok,
           f"coverage at n=1e4/1000 reps: EM {c[('EM', 0)]:.3f}/{c[('EM', 1)]:.3f} "
           f"(window [0.93,0.97]), LS {c[('LS', 0)]:.3f}/{c[('LS', 1)]:.3f} "
           f"(windows [0.93,1.00] / [0.92,0.98])")


def test_criterion_6_em_volume_scaling(exp1_1e4, exp1_1e5):
    v4 = np.mean([exp1_1e4.avg_volume[("EM", k)] for k in range(2)])
    v5 = np.mean([exp1_1e5.avg_volume[("EM", k)] for k in range(2)])
    ratio = v4 / v5
    report(6, 8.0 <= ratio <= 12.0,
           f"EM volume ratio n=1e4 / n=1e5 = {ratio:.2f} (window [8,12]); "
           f"volumes {v4:.6f} / {v5:.6f}")


def test_criterion_7_experiment3_coverage():
    cfg = experiment_config(3, n=10_000, replications=1000, base_seed=BASE_SEED)
    c = run_monte_carlo(cfg).coverage
    vals = {key: c[key] for key in c}
    ok = all(0.92 <= v <= 0.98 for v in vals.values())
    pretty = ", ".join(f"{m}{k + 1}={v:.3f}" for (m, k), v in sorted(vals.items()))
    report(7, ok, f"coverage at n=1e4/1000 reps: {pretty} (window [0.92,0.98])")


def test_criterion_8_heavy_tail_degradation():
    cfg = experiment_config(4, n=100_000, replications=300, base_seed=BASE_SEED)
    c = run_monte_carlo(cfg).coverage
    ok = (
        c[("EM", 0)] < c[("LS", 0)]
        and c[("EM", 1)] < c[("LS", 1)]
        and c[("EM", 0)] <= 0.94
    )
    report(8, ok,
           f"heavy-tail errors at n=1e5/300 reps: EM {c[('EM', 0)]:.3f}/{c[('EM', 1)]:.3f} "
           f"vs LS {c[('LS', 0)]:.3f}/{c[('LS', 1)]:.3f} "
           f"(need EM < LS both, EM k=1 <= 0.94)")


def test_criterion_9_chi2_quantiles():
    err2 = abs(chi2_quantile(2, 0.95) - (-2.0 * math.log(0.05)))
    # squared 97.5% normal quantile via erf inversion (bisection, oracle)
    lo, hi = 0.0, 10.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if math.erf(mid / math.sqrt(2.0)) < 0.95:
            lo = mid
        else:
            hi = mid
    err1 = abs(chi2_quantile(1, 0.95) - lo * lo)
    report(9, err2 < 1e-9 and err1 < 1e-6,
           f"Q(2,0.95) deviation {err2:.1e} (limit 1e-9), "
           f"Q(1,0.95) vs squared normal quantile deviation {err1:.1e} (limit 1e-6)")


def test_criterion_10_volume_hit_or_miss():
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(10):
        A = rng.normal(size=(2, 2))
        shape = A @ A.T + 0.5 * np.eye(2)
        e = Ellipsoid(center=rng.normal(size=2), shape=shape,
                      threshold=rng.uniform(0.5, 6.0), kind="LS")
        half = np.sqrt(e.threshold / np.linalg.eigvalsh(shape).min())
        pts = rng.uniform(-half, half, size=(2_000_000, 2))
        inside = np.einsum("ji,il,jl->j", pts, shape, pts) <= e.threshold
        mc = inside.mean() * (2.0 * half) ** 2
        worst = max(worst, abs(volume(e) - mc) / mc)
    report(10, worst < 0.01,
           f"closed-form vs hit-or-miss volume, worst relative error {worst:.4f} "
           f"(limit 0.01) on 10 random 2-d ellipsoids")


def test_criterion_11_information_scaling():
    norms = {}
    for n in (1000, 10_000, 100_000):
        cfg = experiment_config(1, n=n)
        s = gen_sample(cfg, np.random.default_rng(1100 + n))
        res = em_fit(s, pilot_estimates(s), EmConfig())
        info = empirical_info(s, res.tau)
        norms[n] = np.linalg.norm(info.I, 2) / n
    vals = np.array(list(norms.values()))
    factor = vals.max() / vals.min()
    report(11, factor < 2.0,
           f"||info(n)||/n spread factor {factor:.2f} across n=1e3,1e4,1e5 (limit 2)")
