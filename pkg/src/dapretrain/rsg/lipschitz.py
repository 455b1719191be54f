"""Empirical Lipschitz constants of the loss and of the full gradient."""
from dataclasses import dataclass

import numpy as np

from ..autoencoder import batch_grad, batch_loss
from ..errors import DomainError


@dataclass(frozen=True)
class LipschitzEstimate:
    L: float
    L_prime: float
    probes: int = 0

    def __post_init__(self):
        if not (self.L > 0 and self.L_prime > 0):
            raise DomainError(f"Lipschitz constants must be positive, got L={self.L}, L'={self.L_prime}")


_CHUNK = 256


def estimate_lipschitz(X, model, shape, probes, rng, radius=3.0, step=0.05, batch=32):
    """Max single-coordinate difference ratios over random probes.

    Each probe draws W uniformly from [-radius, radius], a coordinate (i, j)
    and an offset in [-step, step] for that coordinate. ``L`` is the largest
    ratio of loss differences on one corrupted sample; ``L_prime`` the largest
    ratio of differences in the (i, j) partial of a ``batch``-sample mean
    gradient, with the same samples at both points.

    Probes consume a fixed amount of ``rng`` each, so a run with more probes
    on the same stream sees a superset of the probes of a shorter run.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DomainError("dataset must be a nonempty 2-D array")
    if probes < 2:
        raise DomainError(f"need at least 2 probes, got {probes}")
    n, d_v = X.shape
    d_h = shape.d_h
    n_w = d_h * d_v
    # per probe: W, coordinate, offset, instance + mask, batch instances + masks
    width = n_w + 2 + (1 + d_v) * (1 + batch)
    L = L_prime = 0.0
    done = 0
    while done < probes:
        m = min(_CHUNK, probes - done)
        u = rng.random((m, width))
        for row in u:
            W = (2.0 * row[:n_w] - 1.0) * radius
            W = W.reshape(d_h, d_v)
            flat = min(int(row[n_w] * n_w), n_w - 1)
            i, j = divmod(flat, d_v)
            delta = (2.0 * row[n_w + 1] - 1.0) * step
            if delta == 0.0:
                continue
            W2 = W.copy()
            W2[i, j] += delta
            s = row[n_w + 2:].reshape(1 + batch, 1 + d_v)
            idx = np.minimum((s[:, 0] * n).astype(np.int64), n - 1)
            keep = s[:, 1:] >= model.zeta
            if model.bias:
                keep[:, -1] = True
            Xs = X[idx]
            Xt = np.where(keep, Xs, 0.0)
            l1 = batch_loss(W, Xs[:1], Xt[:1])[0]
            l2 = batch_loss(W2, Xs[:1], Xt[:1])[0]
            L = max(L, abs(l1 - l2) / abs(delta))
            g1 = batch_grad(W, Xs[1:], Xt[1:])[i, j]
            g2 = batch_grad(W2, Xs[1:], Xt[1:])[i, j]
            L_prime = max(L_prime, abs(g1 - g2) / abs(delta))
        done += m
    return LipschitzEstimate(L=L, L_prime=L_prime, probes=probes)
