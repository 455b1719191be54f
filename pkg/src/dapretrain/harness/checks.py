"""Self-checks for the gradient oracle and the closed-form calculators."""
import math
from dataclasses import dataclass

import numpy as np

from .. import oracle
from ..autoencoder import (
    CorruptionModel,
    NetworkShape,
    apply_mask,
    batch_grads,
    corruption_mask,
    grad,
    loss,
)
from ..dda import dda_bounds, dda_sample_size, min_subda_count, subda_corruption
from ..rsg import (
    LipschitzEstimate,
    StepSchedule,
    convergence_bound,
    fold_count,
    make_stopping_distribution,
    min_sample_size,
    optimal_constant_step,
    sample_size,
)
from ..streams import stream


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.ok else 'FAIL'} {self.name}: {self.detail}"


def fd_relative_error(W, pair, h=1e-6):
    """Max relative error of the analytic gradient against central differences."""
    G = grad(W, pair)
    F = np.empty_like(W)
    for idx in np.ndindex(W.shape):
        Wp, Wm = W.copy(), W.copy()
        Wp[idx] += h
        Wm[idx] -= h
        F[idx] = (loss(Wp, pair) - loss(Wm, pair)) / (2.0 * h)
    scale = np.maximum(np.maximum(np.abs(G), np.abs(F)), 1e-3)
    return float(np.max(np.abs(G - F) / scale))


def random_instance(rng, max_dim=8, zetas=(0.0, 0.3, 0.7)):
    d_v = int(rng.integers(1, max_dim + 1))
    d_h = int(rng.integers(1, max_dim + 1))
    zeta = float(zetas[rng.integers(len(zetas))])
    W = rng.uniform(-1.0, 1.0, (d_h, d_v))
    x = rng.random(d_v)
    mask = corruption_mask(d_v, zeta, False, rng)
    return W, apply_mask(x, mask), zeta


def gradient_suite(instances=100, seed=0, tol=1e-6):
    rng = stream(seed, 41)
    worst = max(fd_relative_error(*random_instance(rng)[:2]) for _ in range(instances))
    return [CheckResult("finite-difference gradient", worst <= tol,
                        f"max relative error {worst:.3g} over {instances} instances (tol {tol:g})")]


def oracle_suite(draws=20000, seed=0):
    """Monte Carlo mean of G against the enumerated expectation, in standard errors."""
    rng = stream(seed, 42)
    out = []
    for d_v, d_h, zeta, bias in ((4, 3, 0.3, False), (5, 2, 0.5, True), (6, 4, 0.7, False)):
        model = CorruptionModel(zeta, bias)
        W = rng.uniform(-1.0, 1.0, (d_h, d_v))
        x = rng.random(d_v)
        if bias:
            x[-1] = 1.0
        exact = oracle.expected_grad_bruteforce(W, x, model)
        keep = rng.random((draws, d_v)) >= zeta
        if bias:
            keep[:, -1] = True
        Gs = batch_grads(W, np.broadcast_to(x, keep.shape), np.where(keep, x, 0.0))
        se = Gs.std(axis=0, ddof=1) / math.sqrt(draws)
        z = np.abs(Gs.mean(axis=0) - exact) / np.maximum(se, 1e-15)
        # Bonferroni-style allowance over the entries
        ok = bool(np.all(z <= 4.5))
        out.append(CheckResult(f"unbiased gradient d_v={d_v} d_h={d_h} zeta={zeta}", ok,
                               f"max |mean - exact| = {z.max():.2f} standard errors"))
    return out


def golden_suite():
    one = LipschitzEstimate(1.0, 1.0)
    s16 = NetworkShape(4, 4)
    res = []

    def add(name, got, want, tol):
        res.append(CheckResult(name, abs(got - want) <= tol, f"{got!r} (expected {want!r} +/- {tol:g})"))

    dist = make_stopping_distribution(StepSchedule.constant(0.01), 50, one, s16)
    res.append(CheckResult("constant steps give uniform stopping", bool(np.all(dist.probabilities == 1.0 / 50)),
                           "exact equality"))
    two = make_stopping_distribution(StepSchedule.sequence([0.5, 0.25]), 2, one, NetworkShape(1, 1))
    add("stopping probabilities P(1)", float(two.probabilities[0]), 0.63158, 1e-5)
    add("stopping probabilities P(2)", float(two.probabilities[1]), 0.36842, 1e-5)
    add("optimal constant step", optimal_constant_step(1.0, 100, s16), 0.0125, 1e-12)
    add("convergence bound", convergence_bound(1.0, 1.0, one, 100, s16), 1.6, 1e-12)
    add("fold count", fold_count(4.0, 0.05), 5, 0)
    s2000 = NetworkShape(100, 20)
    add("minimum sample size", min_sample_size(0.05, 1e3, s2000), 35778, 0)
    big = sample_size(8.39, 0.05, 0.05, 1e3, s2000).S
    add("sample size at r=8.39 (relative to 3e5)", big / 3e5, 1.0, 0.02)
    add("distributed bound", dda_bounds(1.0, 1.0, one, 100, 4, 0.5, s16)[1], 0.59460, 1e-5)
    add("distributed sample size", dda_sample_size(4.0, 0.05, 0.05, 1e3, 0.5, s2000)[1], 50597, 0)
    add("sub-network corruption", subda_corruption(0.5, 0.75), 1.0 / 3.0, 1e-15)
    add("coverage count", min_subda_count(0.5, 0.01), 7, 0)
    return res


SUITES = {"gradient": gradient_suite, "oracle": oracle_suite, "golden": golden_suite}


def run_checks(names=None):
    results = []
    for name in names or SUITES:
        results.extend(SUITES[name]())
    return results
