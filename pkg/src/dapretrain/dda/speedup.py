"""Wall-clock speed-up of parallel sub-network training over a single RSG."""
import os
import time
from dataclasses import dataclass

import numpy as np

from ..autoencoder import CorruptionModel, init_weights
from ..rsg.runner import sgd_trace
from ..streams import stream
from .planning import plan_subdas
from .training import make_executor, run_distributed


@dataclass(frozen=True)
class SpeedupRow:
    B: int
    workers: int
    seconds: float
    ratio: float


def hardware_workers():
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def measure_speedup(X, shape, zeta, schedule, N, Bs, seed=0, backend="process", repeats=1):
    """Time one meta-iteration of ``B`` parallel sub-networks, ``N`` steps each.

    The ``B = 1`` row is the baseline itself: a plain ``N``-step RSG on the
    whole network, so its ratio is 1 by definition. Other rows use ``B``
    workers, one sub-network per worker; worker start-up is excluded, data
    and parameter transfer are not. Each timing is the best of ``repeats``.
    """
    X = np.asarray(X, dtype=np.float64)
    W0 = init_weights(shape, stream(seed, 9))
    model = CorruptionModel(zeta, shape.bias)

    def baseline():
        W = W0.copy()
        t0 = time.perf_counter()
        sgd_trace(W, X, model.zeta, model.bias, schedule.steps(N, shape), stream(seed, 1, 0, 0))
        return time.perf_counter() - t0

    base = min(baseline() for _ in range(repeats))
    rows = []
    for B in Bs:
        if B == 1:
            rows.append(SpeedupRow(1, 1, base, 1.0))
            continue
        plan = plan_subdas(shape, zeta, 1.0 / B, rng=seed, relaxed=True)
        with make_executor(X, plan.B, backend) as ex:
            # spin every worker up before timing
            list(ex.map(_noop, range(plan.B)))
            best = np.inf
            for _ in range(repeats):
                t0 = time.perf_counter()
                run_distributed(plan, X, schedule, N, execution="parallel", seed=seed, w0=W0,
                                warm_start=0, executor=ex)
                best = min(best, time.perf_counter() - t0)
        rows.append(SpeedupRow(B, plan.B, best, base / best))
    return rows


def _noop(i):
    return i
