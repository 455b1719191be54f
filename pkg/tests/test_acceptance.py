"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``. The lines are written
straight to the terminal so they show even when the test passes.
"""
import math
import time

import numpy as np
import pytest

from dapretrain import oracle
from dapretrain.autoencoder import CorruptionModel, NetworkShape, batch_grads
from dapretrain.dda import plan_subdas, run_distributed
from dapretrain.dda.speedup import hardware_workers
from dapretrain.harness.checks import golden_suite, gradient_suite
from dapretrain.harness.data import gen_synthetic
from dapretrain.harness.experiments import parity_summary, run_experiment
from dapretrain.rsg import LipschitzEstimate, StepSchedule, expected_gradient_curve
from dapretrain.rsg.bounds import expected_gradient_bound
from dapretrain.rsg.lipschitz import estimate_lipschitz
from dapretrain.rsg.schedules import curvature
from dapretrain.streams import stream

SEEDS = [0, 1, 2, 3, 4]


@pytest.fixture
def report(capsys):
    """Print the verdict line, then assert it (and the runtime budget)."""
    def _report(name, ok, detail, elapsed, budget):
        in_time = elapsed < budget
        verdict = "PASS" if ok and in_time else "FAIL"
        with capsys.disabled():
            print(f"\n{verdict} {name}: {detail} [{elapsed:.1f}s, budget {budget:g}s]")
        assert ok, detail
        assert in_time, f"took {elapsed:.1f}s, budget {budget}s"
    return _report


def test_c1_gradient_finite_differences(report):
    t0 = time.perf_counter()
    res = gradient_suite(instances=100, seed=0, tol=1e-6)[0]
    report("C1 gradient vs finite differences", res.ok, res.detail, time.perf_counter() - t0, 10)


def test_c2_unbiased_and_variance(report):
    t0 = time.perf_counter()
    draws = 100_000
    worst_z, worst_var, fails = 0.0, 0.0, []
    for seed in range(20):
        rng = stream(seed, 2)
        d_v, d_h = int(rng.integers(2, 7)), int(rng.integers(1, 5))
        zeta = float(rng.choice([0.1, 0.3, 0.5, 0.7]))
        X = rng.random((50, d_v))
        model = CorruptionModel(zeta)
        W = rng.uniform(-1.0, 1.0, (d_h, d_v))
        x = X[0]
        keep = rng.random((draws, d_v)) >= zeta
        Gs = batch_grads(W, np.broadcast_to(x, keep.shape), np.where(keep, x, 0.0))
        exact = oracle.expected_grad_bruteforce(W, x, model)
        se = Gs.std(axis=0, ddof=1) / math.sqrt(draws)
        dev = np.abs(Gs.mean(axis=0) - exact)
        z = float(np.max(dev / np.where(se > 0, se, np.inf)))
        lip = estimate_lipschitz(X, model, NetworkShape(d_v, d_h), 500, stream(seed, 3))
        var_ratio = float(np.sum(Gs.var(axis=0, ddof=1))) / (d_h * d_v * lip.L ** 2)
        if not (np.all(dev <= 3 * se) and var_ratio <= 1.0):
            fails.append(seed)
        worst_z, worst_var = max(worst_z, z), max(worst_var, var_ratio)
    report("C2 unbiasedness and variance bound", not fails,
           f"20 instances, max deviation {worst_z:.2f} SE (<= 3), max Var(G)/(d_h d_v L^2) {worst_var:.4f} "
           f"(<= 1), failing seeds {fails}", time.perf_counter() - t0, 60)


def test_c3_golden_values(report):
    t0 = time.perf_counter()
    res = golden_suite()
    bad = [r.line() for r in res if not r.ok]
    report("C3 closed-form golden values", not bad, f"{len(res)} values checked, mismatches {bad}",
           time.perf_counter() - t0, 1)


def _c4_instances():
    rng = stream(4, 4)
    for _ in range(10):
        shape = NetworkShape(int(rng.integers(1, 9)), int(rng.integers(1, 9)))
        lip = LipschitzEstimate(float(rng.uniform(0.2, 3.0)), float(rng.uniform(0.2, 3.0)))
        D_f = float(rng.uniform(0.1, 5.0))
        g0 = float(rng.uniform(0.05, 0.95)) / curvature(lip, shape)
        yield shape, lip, D_f, g0


def test_c4a_bound_monotone(report):
    t0 = time.perf_counter()
    worst = -np.inf
    for p in (0.6, 0.75, 1.0):
        for shape, lip, D_f, g0 in _c4_instances():
            curve = expected_gradient_curve(StepSchedule.polynomial(g0, p), 10_000, lip, D_f, shape)
            # largest relative rise between consecutive horizons
            worst = max(worst, float(np.max(np.diff(curve) / curve[1:])))
    report("C4a bound nonincreasing in N", worst <= 1e-12,
           f"30 (p, instance) pairs, N = 1..1e4, largest relative step {worst:.3g} (float slack 1e-12)",
           time.perf_counter() - t0, 10)


def test_c4b_bound_vanishes(report):
    t0 = time.perf_counter()
    worst = 0.0
    for p in (0.6, 0.75, 1.0):
        for shape, lip, D_f, g0 in _c4_instances():
            sched = StepSchedule.polynomial(g0, p)
            ratio = (expected_gradient_bound(sched, 10 ** 6, lip, D_f, shape)
                     / expected_gradient_bound(sched, 10 ** 2, lip, D_f, shape))
            worst = max(worst, ratio)
    report("C4b bound(1e6) < 0.01 bound(1e2)", worst < 0.01,
           f"largest ratio {worst:.4f} over 30 (p, instance) pairs", time.perf_counter() - t0, 10)


def test_c5_decay_trend(report):
    t0 = time.perf_counter()
    cfg = dict(n=5000, dv=64, dh=16, zeta=0.3, rho=0.2, bias=True, schedule="optimal", D_values=[1.0],
               n_values=[1000, 20000], seeds=SEEDS, window=100)
    recs, _ = run_experiment("grad_vs_N", cfg)
    raw = {(r.seed, r.x_value): r.grad_raw for r in recs}
    ratios = [raw[s, 20000] / raw[s, 1000] for s in SEEDS]
    med = float(np.median(ratios))
    report("C5 gradient decays with N", med <= 0.5,
           f"median trailing ratio N=2e4 / N=1e3 = {med:.3f} (<= 0.5), per seed {np.round(ratios, 3).tolist()}",
           time.perf_counter() - t0, 300)


def test_c6_shape_trend(report):
    t0 = time.perf_counter()
    cfg = dict(N=10_000, dh_values=[8], dv_values=[16, 32, 64], seeds=SEEDS, schedule="optimal", D=1.0)
    recs, _ = run_experiment("grad_vs_shape", cfg)
    good = 0
    for s in SEEDS:
        vals = [r.grad_norm for r in recs if r.seed == s]
        good += bool(np.all(np.diff(vals) >= 0))
    report("C6 gradient grows with d_v", good >= 4, f"nondecreasing in {good}/5 seeds (>= 4)",
           time.perf_counter() - t0, 300)


def test_c7a_parallel_bit_identical(report):
    t0 = time.perf_counter()
    X = gen_synthetic(300, 16, 0.2, seed=7, bias=True).instances
    shape = NetworkShape(17, 8, True)
    sched = StepSchedule.constant(0.05)
    same = 0
    for seed in range(10):
        tau = (0.25, 0.5)[seed % 2]
        plan = plan_subdas(shape, 0.8, tau, M=2, rng=seed)
        kw = dict(seed=seed, init_seed=seed, warm_start=20)
        a = run_distributed(plan, X, sched, 150, execution="sequential", **kw)
        b = run_distributed(plan, X, sched, 150, execution="parallel", workers=plan.B, **kw)
        same += bool(np.array_equal(a.W, b.W))
    report("C7a sequential equals parallel", same == 10, f"bit-identical on {same}/10 plans",
           time.perf_counter() - t0, 300)


def test_c7b_distributed_trend(report):
    t0 = time.perf_counter()
    cfg = dict(dv=16, dh=8, zeta=0.5, N=10_000, B_values=[1, 4], M=1, seeds=SEEDS, relaxed=True)
    recs, _ = run_experiment("grad_vs_B", cfg)
    raw = {(r.seed, r.x_value): r.grad_raw for r in recs}
    good = sum(raw[s, 4] <= raw[s, 1] for s in SEEDS)
    pairs = [(round(raw[s, 1], 4), round(raw[s, 4], 4)) for s in SEEDS]
    report("C7b B=4 trailing gradient <= B=1", good >= 4,
           f"{good}/5 seeds (>= 4), (B=1, B=4) per seed {pairs}", time.perf_counter() - t0, 300)


def test_c8_speedup(report):
    t0 = time.perf_counter()
    workers = hardware_workers()
    recs, _ = run_experiment("speedup", dict(B_values=[1, 4]))
    ratio = next(r.grad_raw for r in recs if r.x_value == 4)
    report("C8 speed-up at B=4", workers >= 4 and ratio > 1.5,
           f"ratio {ratio:.2f} (> 1.5) with {workers} hardware workers (needs >= 4)",
           time.perf_counter() - t0, 600)


def test_c9_generalization_parity(report):
    t0 = time.perf_counter()
    recs, _ = run_experiment("generalization_parity", dict(dv=32, B_values=[2, 4], splits=10))
    summary = parity_summary(recs)
    ok = all(0.9 <= mean <= 1.1 for _, mean, _, _ in summary)
    detail = ", ".join(f"B={B}: mean {mean:.3f} sd {sd:.3f} over {k}" for B, mean, sd, k in summary)
    report("C9 held-out error parity", ok, f"{detail} (within [0.9, 1.1])", time.perf_counter() - t0, 300)
