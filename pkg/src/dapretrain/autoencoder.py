"""Tied-weight denoising autoencoder: corruption, reconstruction loss and its
analytic gradient.

The weight matrix ``W`` is a plain ``(d_h, d_v)`` float64 array. It encodes
with ``h = sigmoid(W @ x_tilde)`` and decodes with ``sigmoid(W.T @ h)``.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DimensionError, InputDomainError

sigmoid = expit


@dataclass(frozen=True)
class NetworkShape:
    """Visible/hidden layer sizes.

    ``d_v`` counts the appended bias coordinate when ``bias`` is set.
    """

    d_v: int
    d_h: int
    bias: bool = False

    def __post_init__(self):
        if int(self.d_v) < 1 or int(self.d_h) < 1:
            raise DimensionError(f"layer sizes must be >= 1, got d_v={self.d_v}, d_h={self.d_h}")
        if self.bias and self.d_v < 2:
            raise DimensionError("a bias-enabled network needs at least one data coordinate")

    @property
    def n_params(self):
        return self.d_v * self.d_h

    @property
    def n_corruptible(self):
        return self.d_v - 1 if self.bias else self.d_v

    @property
    def matrix_shape(self):
        return (self.d_h, self.d_v)


@dataclass(frozen=True)
class CorruptionModel:
    """Masking noise: each non-bias coordinate is zeroed with probability ``zeta``."""

    zeta: float
    bias: bool = False

    def __post_init__(self):
        if not (0.0 <= self.zeta <= 1.0):
            raise InputDomainError(f"zeta must lie in [0, 1], got {self.zeta}")


@dataclass(frozen=True)
class SamplePair:
    x: np.ndarray
    x_tilde: np.ndarray
    mask: np.ndarray


def init_weights(shape, rng):
    """Uniform on (-a, a) with a = sqrt(6 / (d_h + d_v))."""
    a = np.sqrt(6.0 / (shape.d_h + shape.d_v))
    return rng.uniform(-a, a, size=shape.matrix_shape)


def check_input(x, bias=False):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"expected a vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputDomainError("input has non-finite coordinates")
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise InputDomainError("input coordinates must lie in [0, 1]")
    if bias and x[-1] != 1.0:
        raise InputDomainError("bias coordinate must equal 1")
    return x


def corruption_mask(d_v, zeta, bias, rng):
    keep = rng.random(d_v) >= zeta
    if bias:
        keep[-1] = True
    return keep


def corrupt(x, model, rng):
    x = check_input(x, model.bias)
    mask = corruption_mask(x.shape[0], model.zeta, model.bias, rng)
    return SamplePair(x=x, x_tilde=np.where(mask, x, 0.0), mask=mask)


def apply_mask(x, mask):
    x = np.asarray(x, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    return SamplePair(x=x, x_tilde=np.where(mask, x, 0.0), mask=mask)


def _check_pair(W, pair):
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2:
        raise DimensionError(f"W must be a matrix, got shape {W.shape}")
    if pair.x.shape != (W.shape[1],) or pair.x_tilde.shape != (W.shape[1],):
        raise DimensionError(
            f"W has {W.shape[1]} visible columns but the pair has length {pair.x.shape[0]}"
        )
    return W


def reconstruct(W, x_tilde):
    return sigmoid(W.T @ sigmoid(W @ x_tilde))


def loss(W, pair):
    """Squared reconstruction error of the clean input from the corrupted one."""
    W = _check_pair(W, pair)
    r = pair.x - reconstruct(W, pair.x_tilde)
    return float(r @ r)


def _grad(W, x, xt):
    h = sigmoid(W @ xt)
    y = sigmoid(h @ W)
    db = 2.0 * (y - x) * y * (1.0 - y)
    da = (W @ db) * h * (1.0 - h)
    return np.outer(h, db) + np.outer(da, xt)


def grad(W, pair):
    """Gradient of :func:`loss` w.r.t. every entry of ``W``.

    Sums the decoder-path term ``outer(h, delta_b)`` and the encoder-path term
    ``outer(delta_a, x_tilde)`` since both sigmoids share ``W``.
    """
    W = _check_pair(W, pair)
    return _grad(W, pair.x, pair.x_tilde)


def batch_loss(W, X, Xt):
    """Per-row losses for stacked inputs ``X`` and corrupted inputs ``Xt``."""
    R = X - sigmoid(sigmoid(Xt @ W.T) @ W)
    return np.einsum("ij,ij->i", R, R)


def batch_grad(W, X, Xt, weights=None):
    """Weighted sum of per-row gradients (mean when ``weights`` is None)."""
    H = sigmoid(Xt @ W.T)
    Y = sigmoid(H @ W)
    DB = 2.0 * (Y - X) * Y * (1.0 - Y)
    DA = (DB @ W.T) * H * (1.0 - H)
    if weights is None:
        weights = np.full(X.shape[0], 1.0 / X.shape[0])
    else:
        weights = np.asarray(weights, dtype=np.float64)
    return (H * weights[:, None]).T @ DB + (DA * weights[:, None]).T @ Xt


def batch_grads(W, X, Xt):
    """Per-row gradients stacked as an ``(n, d_h, d_v)`` array."""
    H = sigmoid(Xt @ W.T)
    Y = sigmoid(H @ W)
    DB = 2.0 * (Y - X) * Y * (1.0 - Y)
    DA = (DB @ W.T) * H * (1.0 - H)
    return np.einsum("ni,nj->nij", H, DB) + np.einsum("ni,nj->nij", DA, Xt)
