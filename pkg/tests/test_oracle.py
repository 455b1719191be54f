import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dapretrain import oracle
from dapretrain.autoencoder import (
    CorruptionModel,
    NetworkShape,
    apply_mask,
    batch_grads,
    batch_loss,
    grad,
    loss,
)
from dapretrain.errors import DomainError, EnumerationLimitError
from dapretrain.rsg.lipschitz import estimate_lipschitz
from dapretrain.streams import stream


def naive_expected(W, x, zeta, fn):
    """Loop over every mask with itertools; independent of the vectorised oracle."""
    total = 0.0
    for keep in itertools.product([False, True], repeat=x.shape[0]):
        keep = np.array(keep)
        p = np.prod(np.where(keep, 1 - zeta, zeta))
        total = total + p * fn(W, apply_mask(x, keep))
    return total


def mc_grads(W, x, zeta, draws, rng, bias=False):
    keep = rng.random((draws, x.shape[0])) >= zeta
    if bias:
        keep[:, -1] = True
    return batch_grads(W, np.broadcast_to(x, keep.shape), np.where(keep, x, 0.0))


class TestEnumeration:
    def test_probabilities_sum_to_one(self):
        keep, prob = oracle.enumerate_masks(6, 0.3)
        assert keep.shape == (64, 6)
        assert prob.sum() == pytest.approx(1.0, abs=1e-14)

    def test_bias_column_always_kept(self):
        keep, _ = oracle.enumerate_masks(5, 0.4, bias=True)
        assert keep.shape == (16, 5)
        assert keep[:, -1].all()

    @pytest.mark.parametrize("zeta", [0.0, 1.0])
    def test_degenerate_zeta_single_mask(self, zeta):
        keep, prob = oracle.enumerate_masks(4, zeta)
        assert keep.shape[0] == 1 and prob[0] == 1.0

    def test_limit(self):
        with pytest.raises(EnumerationLimitError):
            oracle.enumerate_masks(21, 0.3)
        with pytest.raises(EnumerationLimitError):
            oracle.expected_loss_bruteforce(np.zeros((1, 21)), np.full(21, 0.5), CorruptionModel(0.3))
        # bias does not count toward the limit
        keep, _ = oracle.enumerate_masks(21, 0.0, bias=True)
        assert keep.shape == (1, 21)


class TestBruteforce:
    def setup_method(self):
        rng = stream(21)
        self.W = rng.normal(size=(3, 5))
        self.x = rng.random(5)

    def test_zero_corruption(self):
        m = CorruptionModel(0.0)
        p = apply_mask(self.x, np.ones(5, dtype=bool))
        assert oracle.expected_loss_bruteforce(self.W, self.x, m) == loss(self.W, p)
        np.testing.assert_array_equal(oracle.expected_grad_bruteforce(self.W, self.x, m), grad(self.W, p))

    def test_single_coordinate_half(self):
        W = np.array([[0.7], [-1.2]])
        x = np.array([0.6])
        want = 0.5 * loss(W, apply_mask(x, [True])) + 0.5 * loss(W, apply_mask(x, [False]))
        assert oracle.expected_loss_bruteforce(W, x, CorruptionModel(0.5)) == pytest.approx(want, rel=1e-15)

    @pytest.mark.parametrize("zeta", [0.1, 0.5, 0.85])
    def test_matches_naive_loop(self, zeta):
        m = CorruptionModel(zeta)
        assert oracle.expected_loss_bruteforce(self.W, self.x, m) == pytest.approx(
            naive_expected(self.W, self.x, zeta, loss), rel=1e-12)
        np.testing.assert_allclose(oracle.expected_grad_bruteforce(self.W, self.x, m),
                                   naive_expected(self.W, self.x, zeta, grad), rtol=1e-11, atol=1e-15)

    def test_grad_is_derivative_of_expected_loss(self):
        m = CorruptionModel(0.3)
        G = oracle.expected_grad_bruteforce(self.W, self.x, m)
        h = 1e-6
        F = np.empty_like(G)
        for idx in np.ndindex(G.shape):
            Wp, Wm = self.W.copy(), self.W.copy()
            Wp[idx] += h
            Wm[idx] -= h
            F[idx] = (oracle.expected_loss_bruteforce(Wp, self.x, m)
                      - oracle.expected_loss_bruteforce(Wm, self.x, m)) / (2 * h)
        assert np.max(np.abs(G - F) / np.maximum(np.abs(G), 1e-3)) < 1e-6

    def test_loss_monte_carlo_d8(self):
        rng = stream(22)
        W = rng.normal(size=(4, 8))
        x = rng.random(8)
        keep = rng.random((100_000, 8)) >= 0.3
        vals = batch_loss(W, np.broadcast_to(x, keep.shape), np.where(keep, x, 0.0))
        exact = oracle.expected_loss_bruteforce(W, x, CorruptionModel(0.3))
        assert abs(vals.mean() - exact) <= 3 * vals.std(ddof=1) / np.sqrt(vals.size)

    def test_grad_monte_carlo_unbiased(self):
        rng = stream(23)
        W = rng.normal(size=(3, 6))
        x = rng.random(6)
        Gs = mc_grads(W, x, 0.4, 100_000, rng)
        exact = oracle.expected_grad_bruteforce(W, x, CorruptionModel(0.4))
        se = Gs.std(axis=0, ddof=1) / np.sqrt(Gs.shape[0])
        assert np.all(np.abs(Gs.mean(axis=0) - exact) <= 3 * se)


class TestDataset:
    def setup_method(self):
        rng = stream(31)
        self.X = np.hstack([rng.random((12, 5)), np.ones((12, 1))])
        self.W = rng.normal(size=(3, 6))
        self.m = CorruptionModel(0.35, bias=True)

    def test_exact_is_mean_of_bruteforce(self):
        want_g = np.mean([oracle.expected_grad_bruteforce(self.W, x, self.m) for x in self.X], axis=0)
        want_f = np.mean([oracle.expected_loss_bruteforce(self.W, x, self.m) for x in self.X])
        np.testing.assert_allclose(oracle.full_gradient(self.W, self.X, self.m), want_g, rtol=1e-12, atol=1e-15)
        assert oracle.objective(self.W, self.X, self.m) == pytest.approx(want_f, rel=1e-12)
        assert oracle.grad_sq_norm(self.W, self.X, self.m) == pytest.approx(np.sum(want_g ** 2), rel=1e-12)

    def test_monte_carlo_close_to_exact(self):
        exact = oracle.full_gradient(self.W, self.X, self.m, exact=True)
        mc = oracle.full_gradient(self.W, self.X, self.m, rng=stream(1), draws=20_000, exact=False)
        np.testing.assert_allclose(mc, exact, atol=5e-3)

    def test_monte_carlo_needs_stream(self):
        with pytest.raises(DomainError):
            oracle.full_gradient(self.W, self.X, self.m, exact=False)


class TestVarianceBound:
    """Per-sample gradient variance stays below d_h d_v L^2."""

    @pytest.mark.parametrize("seed", range(5))
    def test_instances(self, seed):
        rng = stream(seed, 77)
        dv, dh = int(rng.integers(2, 7)), int(rng.integers(1, 5))
        X = rng.random((30, dv))
        model = CorruptionModel(float(rng.choice([0.1, 0.3, 0.6])))
        lip = estimate_lipschitz(X, model, NetworkShape(dv, dh), 500, stream(seed, 78))
        W = rng.uniform(-3, 3, (dh, dv))
        x = X[0]
        Gs = mc_grads(W, x, model.zeta, 10_000, rng)
        var = float(np.sum(Gs.var(axis=0)))
        assert var <= dh * dv * lip.L ** 2


@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
@settings(max_examples=30, deadline=None)
def test_expected_loss_between_extremes(seed, zeta):
    rng = stream(seed)
    W = rng.normal(size=(2, 4))
    x = rng.random(4)
    keep, _ = oracle.enumerate_masks(4, 0.5)
    vals = batch_loss(W, np.broadcast_to(x, keep.shape), np.where(keep, x, 0.0))
    e = oracle.expected_loss_bruteforce(W, x, CorruptionModel(zeta))
    assert vals.min() - 1e-12 <= e <= vals.max() + 1e-12
