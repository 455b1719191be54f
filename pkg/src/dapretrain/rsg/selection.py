"""Best-of-C selection over independent RSG runs."""
import numpy as np

from ..autoencoder import batch_grad
from ..errors import DimensionError, DomainError
from ..oracle import can_enumerate, full_gradient
from ..streams import as_generator


def _mc_scores(Ws, X, model, rng, draws):
    idx = np.minimum((rng.random(draws) * X.shape[0]).astype(np.int64), X.shape[0] - 1)
    Xs = X[idx]
    keep = rng.random(Xs.shape) >= model.zeta
    if model.bias:
        keep[:, -1] = True
    Xt = np.where(keep, Xs, 0.0)
    out = []
    for W in Ws:
        g = batch_grad(W, Xs, Xt)
        out.append(float(np.sum(g * g)))
    return out


def multi_fold_select(runs, X, model, exact=None, mc_draws=10_000, rng=0):
    """Pick the run whose returned iterate has the smallest ||grad f||^2.

    Scores are exact below the enumeration limit (unless ``exact`` is False)
    and otherwise Monte Carlo over ``mc_draws`` (instance, mask) pairs shared
    by all runs. Ties go to the lowest index. Returns
    ``(index, W, scores)``.
    """
    runs = list(runs)
    if not runs:
        raise DomainError("need at least one run")
    X = np.asarray(X, dtype=np.float64)
    Ws = [np.asarray(getattr(r, "W_final", r)) for r in runs]
    if any(W.shape != Ws[0].shape for W in Ws):
        raise DimensionError("runs do not share a network shape")
    if exact is None:
        exact = can_enumerate(X.shape[1], model.bias)
    if exact:
        scores = []
        for W in Ws:
            g = full_gradient(W, X, model, exact=True)
            scores.append(float(np.sum(g * g)))
    else:
        scores = _mc_scores(Ws, X, model, as_generator(rng), mc_draws)
    best = int(np.argmin(scores))
    return best, Ws[best], scores
