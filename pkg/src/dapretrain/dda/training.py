"""Synchronous training of sub-networks against a central parameter store."""
import time
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import oracle
from ..autoencoder import CorruptionModel, init_weights
from ..errors import DomainError, PlanError
from ..rsg.runner import LastIterate, sgd_trace
from ..streams import child, stream


class ParameterStore:
    """Holds the shared W and arbitrates sub-network access.

    A round (one meta-iteration) grants one lease per sub-network. With
    ``exclusive`` leases, data columns may not overlap. Own columns are read
    live, the bias column always from the snapshot taken when the round
    opened; commits overwrite it, so after the barrier it holds the value of
    the last lease committed.
    """

    def __init__(self, W, bias=False):
        self.W = np.array(W, dtype=np.float64)
        self.bias = bias
        self._snapshot = None
        self._leases = None
        self._pending = None

    def open_round(self, subsets, exclusive):
        if self._leases is not None:
            raise PlanError("previous round was not closed")
        data_cols = [c[:-1] if self.bias else c for c in subsets]
        if exclusive:
            seen = set()
            for cols in data_cols:
                if seen.intersection(cols):
                    raise PlanError("parallel execution needs disjoint sub-networks")
                seen.update(cols)
        self._snapshot = self.W.copy()
        self._leases = [np.asarray(c, dtype=np.int64) for c in subsets]
        self._pending = set(range(len(subsets)))
        return list(range(len(subsets)))

    def read(self, lease):
        cols = self._leases[lease]
        # C order keeps the BLAS summation order identical to a full-network run
        block = np.ascontiguousarray(self.W[:, cols])
        if self.bias:
            block[:, -1] = self._snapshot[:, -1]
        return block

    def commit(self, lease, block):
        if lease not in self._pending:
            raise PlanError(f"lease {lease} is not open")
        self.W[:, self._leases[lease]] = block
        self._pending.discard(lease)

    def close_round(self):
        if self._pending:
            raise PlanError(f"leases {sorted(self._pending)} never committed")
        self._leases = self._snapshot = self._pending = None


@dataclass
class BlockResult:
    W: np.ndarray
    gsq: np.ndarray
    tail: list
    seconds: float


@dataclass
class DistributedResult:
    W: np.ndarray
    histories: dict
    meta_seconds: list
    block_seconds: dict
    warm_history: np.ndarray = field(default_factory=lambda: np.empty(0))
    tail: list = field(default_factory=list)
    oracle_grad_history: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def seconds(self):
        return float(sum(self.meta_seconds))


def block_stream(seed, m, b):
    return stream(seed, 1, m, b)


def train_block(W_block, X_block, q, bias, gammas, rng, stopping=LastIterate(), tail=0):
    """One sub-network RSG; returns the RSG output and its trace."""
    t0 = time.perf_counter()
    trace = sgd_trace(W_block, X_block, q, bias, gammas, rng, stopping, tail=tail)
    return BlockResult(trace.W_stop, trace.gsq, trace.tail, time.perf_counter() - t0)


_WORKER_X = None


def _init_worker(X):
    global _WORKER_X
    _WORKER_X = X


def _remote_block(W_block, cols, q, bias, gammas, seed, m, b, stopping, tail):
    X_block = np.ascontiguousarray(_WORKER_X[:, cols])
    return train_block(W_block, X_block, q, bias, gammas, block_stream(seed, m, b), stopping, tail)


def make_executor(X, workers, backend="process"):
    if backend == "process":
        return ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(X,))
    if backend == "thread":
        _init_worker(X)
        return ThreadPoolExecutor(max_workers=workers)
    raise DomainError(f"unknown backend {backend!r}")


def run_distributed(
    plan,
    X,
    schedule,
    n_per_subda,
    execution="sequential",
    workers=None,
    seed=0,
    w0=None,
    init_seed=0,
    warm_start=200,
    stopping=LastIterate(),
    oracle_window=0,
    oracle_draws=1,
    backend="process",
    executor=None,
):
    """Train ``plan.B`` sub-networks per meta-iteration, ``plan.M`` times.

    Sub-network ``b`` of meta-iteration ``m`` runs an RSG of ``n_per_subda``
    steps on its own columns of W with corruption ``plan.q``, drawing from
    ``block_stream(seed, m, b)``; it ignores the frozen remaining columns.
    ``sequential`` chains sub-networks through the store; ``parallel``
    submits a whole round at once to ``workers`` processes (or threads) and
    requires a disjoint plan. Commits are applied in sub-network order in both
    modes, so disjoint plans give identical results.

    ``warm_start`` full-network steps (with corruption ``plan.zeta``) precede
    the first meta-iteration. ``oracle_window`` > 0 records the objective's
    gradient norm over the last that many updates of the final sub-network.
    """
    X = np.asarray(X, dtype=np.float64)
    shape = plan.shape
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] != shape.d_v:
        raise DomainError(f"dataset of shape {X.shape} does not fit a network with d_v={shape.d_v}")
    if execution not in ("sequential", "parallel"):
        raise DomainError(f"execution must be 'sequential' or 'parallel', got {execution!r}")
    parallel = execution == "parallel"
    if parallel and not plan.disjoint:
        raise PlanError("parallel execution requires a disjoint_partition plan")

    W = np.array(w0, dtype=np.float64, order="C") if w0 is not None else init_weights(shape, stream(init_seed))
    warm = np.empty(0)
    if warm_start:
        trace = sgd_trace(W, X, plan.zeta, shape.bias, schedule.steps(warm_start, shape), stream(seed, 0))
        warm = trace.gsq

    store = ParameterStore(W, shape.bias)
    histories, block_seconds, meta_seconds = {}, {}, []
    final_tail, last_key = [], (plan.M - 1, plan.B - 1)
    own_executor = parallel and executor is None
    if own_executor:
        executor = make_executor(X, workers or plan.B, backend)
    try:
        for m in range(plan.M):
            subsets = plan.meta_subsets[m]
            t0 = time.perf_counter()
            leases = store.open_round(subsets, exclusive=parallel)
            jobs = []
            for b in leases:
                cols = list(subsets[b])
                gammas = schedule.steps(n_per_subda, plan.sub_shape(m, b))
                tail = oracle_window if (m, b) == last_key else 0
                if parallel:
                    jobs.append(executor.submit(
                        _remote_block, store.read(b), cols, plan.q, shape.bias, gammas,
                        seed, m, b, stopping, tail,
                    ))
                else:
                    res = train_block(
                        store.read(b), np.ascontiguousarray(X[:, cols]), plan.q, shape.bias,
                        gammas, block_stream(seed, m, b), stopping, tail,
                    )
                    store.commit(b, res.W)
                    jobs.append(res)
            results = [j.result() for j in jobs] if parallel else jobs
            for b, res in zip(leases, results):
                if parallel:
                    store.commit(b, res.W)
                histories[(m, b)] = res.gsq
                block_seconds[(m, b)] = res.seconds
                if (m, b) == last_key:
                    final_tail = res.tail
            store.close_round()
            meta_seconds.append(time.perf_counter() - t0)
    finally:
        if own_executor:
            executor.shutdown()

    tail_W = []
    if final_tail:
        cols = list(plan.meta_subsets[-1][-1])
        for blk in final_tail:
            V = store.W.copy()
            V[:, cols] = blk
            tail_W.append(V)
    model = CorruptionModel(plan.zeta, shape.bias)
    ostream = child(stream(seed, 2), 1)
    oracle_hist = np.array(
        [oracle.grad_sq_norm(V, X, model, rng=child(ostream, 0), draws=oracle_draws) for V in tail_W]
    )
    return DistributedResult(
        W=store.W, histories=histories, meta_seconds=meta_seconds, block_seconds=block_seconds,
        warm_history=warm, tail=tail_W, oracle_grad_history=oracle_hist,
    )
