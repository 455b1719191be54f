"""The RSG training loop."""
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .. import oracle
from ..autoencoder import init_weights, sigmoid
from ..errors import DomainError, ScheduleError
from ..streams import as_generator, child, stream
from .schedules import (
    StoppingDistribution,
    check_steps_valid,
    curvature,
    sample_stopping_iteration,
)

_DRAW_CHUNK = 1024


@dataclass(frozen=True)
class SampledStop:
    """Return W^R with R drawn from ``dist`` before the first update."""

    dist: StoppingDistribution


@dataclass(frozen=True)
class MinGradTail:
    """Return the iterate with the smallest ||G||^2 among the last ``window``."""

    window: int


@dataclass(frozen=True)
class LastIterate:
    pass


@dataclass
class RSGRun:
    seed: object
    N: int
    R: int
    W_final: np.ndarray
    grad_norm_history: np.ndarray
    f_initial: float = float("nan")
    f_best: float = float("nan")
    oracle_grad_history: np.ndarray = field(default_factory=lambda: np.empty(0))
    reuse: float = float("nan")
    W_last: np.ndarray = None


@dataclass
class _Trace:
    W_end: np.ndarray
    W_stop: np.ndarray
    R: int
    gsq: np.ndarray
    tail: list
    used: np.ndarray


def _stop_index(stopping, N, rng):
    if isinstance(stopping, SampledStop):
        if stopping.dist.N != N:
            raise ScheduleError(f"stopping distribution covers {stopping.dist.N} iterations, run has {N}")
        return sample_stopping_iteration(stopping.dist, rng)
    if isinstance(stopping, MinGradTail):
        if not 1 <= stopping.window <= N:
            raise DomainError(f"tail window must be in [1, {N}], got {stopping.window}")
        return None
    if isinstance(stopping, LastIterate):
        return N
    raise DomainError(f"unknown stopping rule {stopping!r}")


def sgd_trace(W, X, zeta, bias, gammas, rng, stopping=LastIterate(), tail=0):
    """Run ``len(gammas)`` single-sample updates on ``W`` (modified in place).

    Per chunk of iterations the stream yields instance draws, then mask draws;
    the sub-network trainer relies on this exact consumption order.
    """
    N = gammas.shape[0]
    n, d = X.shape
    R = _stop_index(stopping, N, rng)
    min_window = stopping.window if isinstance(stopping, MinGradTail) else 0
    gsq = np.empty(N)
    used = np.zeros(n, dtype=bool)
    tail_snaps = deque(maxlen=tail) if tail else None
    W_stop = None
    best = np.inf
    outer, dot = np.outer, np.dot
    k = 0
    while k < N:
        m = min(_DRAW_CHUNK, N - k)
        idx = np.minimum((rng.random(m) * n).astype(np.int64), n - 1)
        keep = rng.random((m, d)) >= zeta
        if bias:
            keep[:, -1] = True
        Xs = X[idx]
        Xt = np.where(keep, Xs, 0.0)
        used[idx] = True
        for t in range(m):
            k += 1
            x = Xs[t]
            xt = Xt[t]
            h = sigmoid(dot(W, xt))
            y = sigmoid(dot(h, W))
            db = 2.0 * (y - x) * y * (1.0 - y)
            da = dot(W, db) * h * (1.0 - h)
            G = outer(h, db)
            G += outer(da, xt)
            g2 = float(np.vdot(G, G))
            gsq[k - 1] = g2
            if k == R:
                W_stop = W.copy()
            elif min_window and k > N - min_window and g2 < best:
                best = g2
                W_stop = W.copy()
            if tail_snaps is not None and k > N - tail:
                tail_snaps.append(W.copy())
            W -= gammas[k - 1] * G
    if min_window:
        R = N - min_window + 1 + int(np.argmin(gsq[N - min_window:]))
    return _Trace(W_end=W, W_stop=W_stop, R=R, gsq=gsq, tail=list(tail_snaps or []), used=used)


def rsg_run(
    X,
    model,
    shape,
    schedule,
    N,
    stopping=LastIterate(),
    init_seed=0,
    rng=0,
    w0=None,
    lip=None,
    oracle_window=0,
    oracle_draws=1,
):
    """Train a tied-weight DA with randomized stochastic gradients.

    ``X`` holds the data instances as rows (bias column included when
    ``shape.bias``). Each update draws one instance uniformly with
    replacement and one corruption mask. ``W^1`` comes from ``w0`` or a
    uniform initialisation seeded by ``init_seed``; updates and the stopping
    draw consume ``rng``.

    ``oracle_window`` > 0 also records the objective's gradient norm at the
    last that many iterates (exact when the mask space is enumerable, Monte
    Carlo with ``oracle_draws`` corruptions per instance otherwise).
    ``f_best`` is the lowest objective estimate among W^1, the returned
    iterate and the state after the final update.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DomainError("dataset must be a nonempty 2-D array")
    if X.shape[1] != shape.d_v:
        raise DomainError(f"dataset has {X.shape[1]} columns, network expects {shape.d_v}")
    N = int(N)
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    gammas = schedule.steps(N, shape)
    if lip is not None:
        check_steps_valid(gammas, curvature(lip, shape))
    elif np.any(gammas <= 0):
        raise ScheduleError("step sizes must be positive")
    rng = as_generator(rng)
    W = np.array(w0, dtype=np.float64, order="C") if w0 is not None else init_weights(shape, stream(init_seed))
    if W.shape != shape.matrix_shape:
        raise DomainError(f"initial W has shape {W.shape}, expected {shape.matrix_shape}")
    W1 = W.copy()
    trace = sgd_trace(W, X, model.zeta, model.bias, gammas, rng, stopping, tail=oracle_window)

    ostream = child(rng, 1 << 20)
    fx = lambda V: oracle.objective(V, X, model, rng=child(ostream, 0), draws=oracle_draws)
    f_initial = fx(W1)
    f_best = min(f_initial, fx(trace.W_stop), fx(trace.W_end))
    oracle_hist = np.array(
        [oracle.grad_sq_norm(V, X, model, rng=child(ostream, 1), draws=oracle_draws) for V in trace.tail]
    )
    return RSGRun(
        seed=init_seed,
        N=N,
        R=trace.R,
        W_final=trace.W_stop,
        grad_norm_history=trace.gsq,
        f_initial=f_initial,
        f_best=f_best,
        oracle_grad_history=oracle_hist,
        reuse=N / max(1, int(trace.used.sum())),
        W_last=trace.W_end,
    )
