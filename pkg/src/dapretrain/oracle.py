"""Ground-truth expectations over the corruption process.

Exhaustive enumeration of corruption masks gives the exact conditional
expectation of the loss and gradient for a fixed clean input. The
dataset-level helpers average those over instances (exactly when the mask
space is small, by Monte Carlo otherwise) to obtain the objective and its
full gradient.
"""
import numpy as np

from .autoencoder import apply_mask, batch_grad, batch_loss, check_input, grad, loss
from .errors import DimensionError, DomainError, EnumerationLimitError

ENUMERATION_LIMIT = 20
# automatic exact mode also caps masks x instances
AUTO_EXACT_ROWS = 1 << 22
_CHUNK_ROWS = 1 << 16


def enumerate_masks(d_v, zeta, bias=False, limit=ENUMERATION_LIMIT):
    """All keep-masks of the corruptible coordinates with their probabilities.

    Masks of probability zero are dropped, so ``zeta`` in {0, 1} yields a
    single mask.
    """
    c = d_v - 1 if bias else d_v
    if c > limit:
        raise EnumerationLimitError(f"{c} corruptible coordinates exceed the limit of {limit}")
    codes = np.arange(1 << c, dtype=np.int64)
    keep = ((codes[:, None] >> np.arange(c)) & 1).astype(bool)
    n_keep = keep.sum(axis=1)
    prob = (1.0 - zeta) ** n_keep * zeta ** (c - n_keep)
    live = prob > 0.0
    keep, prob = keep[live], prob[live]
    if bias:
        keep = np.hstack([keep, np.ones((keep.shape[0], 1), dtype=bool)])
    return keep, prob


def _check(W, x):
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or x.shape[0] != W.shape[1]:
        raise DimensionError(f"W of shape {W.shape} does not match input of length {x.shape[0]}")
    return W


def _mask_chunks(keep, prob, rows_per_mask):
    step = max(1, _CHUNK_ROWS // max(1, rows_per_mask))
    for s in range(0, keep.shape[0], step):
        yield keep[s:s + step], prob[s:s + step]


def expected_loss_bruteforce(W, x, model):
    """Exact E[loss | x] by summing over every corruption mask."""
    x = check_input(x, model.bias)
    W = _check(W, x)
    keep, prob = enumerate_masks(x.shape[0], model.zeta, model.bias)
    if keep.shape[0] == 1:
        return loss(W, apply_mask(x, keep[0]))
    total = 0.0
    for k, p in _mask_chunks(keep, prob, 1):
        Xt = np.where(k, x, 0.0)
        total += float(p @ batch_loss(W, np.broadcast_to(x, Xt.shape), Xt))
    return total


def expected_grad_bruteforce(W, x, model):
    """Exact E[grad | x] by summing over every corruption mask."""
    x = check_input(x, model.bias)
    W = _check(W, x)
    keep, prob = enumerate_masks(x.shape[0], model.zeta, model.bias)
    if keep.shape[0] == 1:
        return grad(W, apply_mask(x, keep[0]))
    total = np.zeros_like(W)
    for k, p in _mask_chunks(keep, prob, 1):
        Xt = np.where(k, x, 0.0)
        total += batch_grad(W, np.broadcast_to(x, Xt.shape), Xt, weights=p)
    return total


def can_enumerate(d_v, bias, limit=ENUMERATION_LIMIT):
    return (d_v - 1 if bias else d_v) <= limit


def _auto_exact(X, model):
    c = X.shape[1] - 1 if model.bias else X.shape[1]
    return c <= ENUMERATION_LIMIT and (X.shape[0] << c) <= AUTO_EXACT_ROWS


def _exact_dataset(W, X, model, fn):
    n = X.shape[0]
    keep, prob = enumerate_masks(X.shape[1], model.zeta, model.bias)
    acc = None
    for k, p in _mask_chunks(keep, prob, n):
        Xt = (k[:, None, :] * X[None, :, :]).reshape(-1, X.shape[1])
        Xr = np.broadcast_to(X, (k.shape[0], n, X.shape[1])).reshape(-1, X.shape[1])
        w = np.repeat(p / n, n)
        part = fn(Xr, Xt, w)
        acc = part if acc is None else acc + part
    return acc


def _mc_rows(X, model, rng, draws):
    Xr = np.repeat(X, draws, axis=0)
    keep = rng.random(Xr.shape) >= model.zeta
    if model.bias:
        keep[:, -1] = True
    return Xr, np.where(keep, Xr, 0.0)


def full_gradient(W, X, model, rng=None, draws=1, exact=None):
    """Gradient of the objective averaged over the rows of ``X``.

    Exact (mask enumeration) when ``exact`` is True, or when it is None and
    masks x instances stays under ``AUTO_EXACT_ROWS``; otherwise a Monte
    Carlo estimate with ``draws`` corruptions per instance.
    """
    X = np.asarray(X, dtype=np.float64)
    if exact is None:
        exact = _auto_exact(X, model)
    if exact:
        return _exact_dataset(W, X, model, lambda Xr, Xt, w: batch_grad(W, Xr, Xt, weights=w))
    if rng is None:
        raise DomainError("a random stream is required for the Monte Carlo gradient")
    Xr, Xt = _mc_rows(X, model, rng, draws)
    return batch_grad(W, Xr, Xt)


def objective(W, X, model, rng=None, draws=1, exact=None):
    """The expected reconstruction loss averaged over the rows of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    if exact is None:
        exact = _auto_exact(X, model)
    if exact:
        return float(_exact_dataset(W, X, model, lambda Xr, Xt, w: w @ batch_loss(W, Xr, Xt)))
    if rng is None:
        raise DomainError("a random stream is required for the Monte Carlo objective")
    Xr, Xt = _mc_rows(X, model, rng, draws)
    return float(batch_loss(W, Xr, Xt).mean())


def grad_sq_norm(W, X, model, rng=None, draws=1, exact=None):
    g = full_gradient(W, X, model, rng=rng, draws=draws, exact=exact)
    return float(np.sum(g * g))
