import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from dapretrain.autoencoder import (
    CorruptionModel,
    NetworkShape,
    apply_mask,
    batch_grad,
    batch_grads,
    batch_loss,
    corrupt,
    grad,
    init_weights,
    loss,
    sigmoid,
)
from dapretrain.errors import DimensionError, InputDomainError
from dapretrain.harness.checks import fd_relative_error
from dapretrain.streams import stream


def pair_of(x):
    """Uncorrupted pair."""
    x = np.asarray(x, dtype=float)
    return apply_mask(x, np.ones(x.shape[0], dtype=bool))


class TestShapes:
    def test_sizes(self):
        s = NetworkShape(5, 3, bias=True)
        assert s.n_params == 15
        assert s.n_corruptible == 4
        assert s.matrix_shape == (3, 5)

    @pytest.mark.parametrize("dv,dh", [(0, 1), (1, 0), (-2, 3)])
    def test_rejects_empty_layers(self, dv, dh):
        with pytest.raises(DimensionError):
            NetworkShape(dv, dh)

    def test_bias_needs_a_data_coordinate(self):
        with pytest.raises(DimensionError):
            NetworkShape(1, 2, bias=True)

    @pytest.mark.parametrize("zeta", [-0.1, 1.1, float("nan")])
    def test_zeta_range(self, zeta):
        with pytest.raises(InputDomainError):
            CorruptionModel(zeta)

    def test_init_range(self):
        s = NetworkShape(10, 6)
        W = init_weights(s, stream(0))
        assert W.shape == (6, 10)
        assert np.all(np.abs(W) < np.sqrt(6 / 16))


class TestCorrupt:
    x = np.array([0.2, 0.7, 1.0])

    def test_zero_corruption_is_identity(self):
        p = corrupt(self.x, CorruptionModel(0.0, bias=True), stream(1))
        np.testing.assert_array_equal(p.x_tilde, self.x)

    def test_full_corruption_keeps_only_bias(self):
        p = corrupt(self.x, CorruptionModel(1.0, bias=True), stream(1))
        np.testing.assert_array_equal(p.x_tilde, [0.0, 0.0, 1.0])

    def test_zeroed_fraction(self):
        x = np.full(1000, 0.5)
        p = corrupt(x, CorruptionModel(0.3), stream(2))
        frac = 1.0 - p.mask.mean()
        assert 0.25 <= frac <= 0.35

    @pytest.mark.parametrize("bad", [[0.1, 1.5], [-0.1, 0.2], [np.nan, 0.5], [0.3, np.inf]])
    def test_input_domain(self, bad):
        with pytest.raises(InputDomainError):
            corrupt(np.array(bad), CorruptionModel(0.2), stream(0))

    def test_bias_must_be_one(self):
        with pytest.raises(InputDomainError):
            corrupt(np.array([0.3, 0.5]), CorruptionModel(0.2, bias=True), stream(0))

    @given(st.integers(0, 2**32 - 1), st.floats(0, 1), st.integers(2, 12))
    @settings(max_examples=60, deadline=None)
    def test_pair_invariants(self, seed, zeta, d):
        x = stream(seed).random(d)
        x[-1] = 1.0
        p = corrupt(x, CorruptionModel(zeta, bias=True), stream(seed, 1))
        assert p.mask[-1] and p.x_tilde[-1] == 1.0
        np.testing.assert_array_equal(p.x_tilde, np.where(p.mask, x, 0.0))


class TestLoss:
    def test_zero_weights_half_reconstruction(self):
        assert loss(np.zeros((2, 3)), pair_of(np.ones(3))) == pytest.approx(0.75, abs=1e-15)

    def test_exact_reconstruction(self):
        assert loss(np.zeros((5, 4)), pair_of(np.full(4, 0.5))) == 0.0

    def test_straight_line_reimplementation(self):
        W = stream(3).normal(size=(2, 3))
        x = np.array([1.0, 0.0, 1.0])
        # written out term by term
        h = [1 / (1 + np.exp(-sum(W[i, j] * x[j] for j in range(3)))) for i in range(2)]
        y = [1 / (1 + np.exp(-sum(W[i, j] * h[i] for i in range(2)))) for j in range(3)]
        want = sum((x[j] - y[j]) ** 2 for j in range(3))
        got = loss(W, pair_of(x))
        assert abs(got - want) <= 1e-12 * want

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            loss(np.zeros((2, 3)), pair_of(np.ones(4)))
        with pytest.raises(DimensionError):
            grad(np.zeros((2, 3)), pair_of(np.ones(2)))

    @given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(1, 8), st.floats(0.1, 50))
    @settings(max_examples=80, deadline=None)
    def test_range(self, seed, dv, dh, scale):
        rng = stream(seed)
        W = rng.normal(scale=scale, size=(dh, dv))
        x = rng.random(dv)
        p = apply_mask(x, rng.random(dv) > 0.5)
        val = loss(W, p)
        assert 0.0 <= val <= dv

    def test_sigmoid_stable(self):
        with np.errstate(all="raise"):
            s = sigmoid(np.array([-1e4, -745.0, 745.0, 1e4]))
        assert np.all((s >= 0) & (s <= 1))
        z = np.linspace(-30, 30, 121)
        s = sigmoid(z)
        assert np.all((s > 0) & (s < 1))
        assert sigmoid(0.0) == 0.5


class TestGrad:
    def test_zero_at_exact_reconstruction(self):
        x = np.full(4, 0.5)
        for keep in ([1, 1, 1, 1], [0, 1, 0, 1]):
            G = grad(np.zeros((3, 4)), apply_mask(x, np.array(keep, dtype=bool)))
            np.testing.assert_array_equal(G, 0.0)

    def test_finite_differences_3x4(self):
        rng = stream(11)
        W = rng.normal(size=(3, 4))
        x = rng.random(4)
        p = apply_mask(x, rng.random(4) > 0.3)
        assert fd_relative_error(W, p, h=1e-5) < 1e-6

    @given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(1, 8), st.sampled_from([0.0, 0.3, 0.7]))
    @settings(max_examples=40, deadline=None)
    def test_finite_differences_random(self, seed, dv, dh, zeta):
        rng = stream(seed)
        W = rng.uniform(-1, 1, (dh, dv))
        x = rng.random(dv)
        p = apply_mask(x, rng.random(dv) >= zeta)
        assert fd_relative_error(W, p) <= 1e-6

    @pytest.mark.parametrize("w,x0", [(0.3, 0.8), (-1.7, 0.25), (2.5, 1.0), (0.0, 0.1)])
    def test_scalar_case_symbolic(self, w, x0):
        ws, xs = sp.symbols("w x")
        sig = lambda z: 1 / (1 + sp.exp(-z))
        expr = (xs - sig(ws * sig(ws * xs))) ** 2
        want = float(sp.diff(expr, ws).subs({ws: w, xs: x0}).evalf(30))
        got = grad(np.array([[w]]), pair_of([x0]))[0, 0]
        assert got == pytest.approx(want, rel=1e-12, abs=1e-15)


class TestBatched:
    def test_batch_matches_single(self):
        rng = stream(5)
        W = rng.normal(size=(3, 6))
        X = rng.random((7, 6))
        Xt = np.where(rng.random((7, 6)) > 0.4, X, 0.0)
        singles = [apply_mask(X[i], Xt[i] != 0) for i in range(7)]
        np.testing.assert_allclose(batch_loss(W, X, Xt), [loss(W, p) for p in singles], rtol=1e-13)
        Gs = batch_grads(W, X, Xt)
        for i, p in enumerate(singles):
            np.testing.assert_allclose(Gs[i], grad(W, p), rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(batch_grad(W, X, Xt), Gs.mean(axis=0), rtol=1e-12, atol=1e-15)
        w = rng.random(7)
        np.testing.assert_allclose(batch_grad(W, X, Xt, w), np.tensordot(w, Gs, 1), rtol=1e-12, atol=1e-15)
