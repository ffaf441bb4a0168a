import math

import numpy as np
import pytest

from ssae import core
from ssae.core import (
    SsaeParams,
    cost,
    gradient,
    hidden_activation,
    reconstruct,
    round_code,
    shrink,
    shrink_mask,
)


def random_params(rng, n_visible, n_hidden, scale=0.4):
    return SsaeParams(
        w1=rng.uniform(-scale, scale, (n_hidden, n_visible)),
        b1=rng.uniform(-scale, scale, n_hidden),
        w2=rng.uniform(-scale, scale, (n_visible, n_hidden)),
        b2=rng.uniform(-scale, scale, n_visible),
    )


def zero_params(n_visible, n_hidden):
    return SsaeParams(
        w1=np.zeros((n_hidden, n_visible)),
        b1=np.zeros(n_hidden),
        w2=np.zeros((n_visible, n_hidden)),
        b2=np.zeros(n_visible),
    )


def reference_keep_topk(h, k):
    """Brute-force pruning reference: repeatedly keep the largest-magnitude
    entry not yet kept, scanning left to right so ties keep the lower index."""
    h = np.asarray(h, dtype=float)
    remaining = list(range(len(h)))
    kept = []
    for _ in range(k):
        best = remaining[0]
        for j in remaining[1:]:
            if abs(h[j]) > abs(h[best]):
                best = j
        kept.append(best)
        remaining.remove(best)
    out = np.zeros_like(h)
    for j in kept:
        out[j] = h[j]
    return out


def frozen_cost_fn(params0, D, gamma, k):
    """Independent cost for gradient checking: the pruning mask is frozen
    from the unperturbed forward pass and no rounding is applied."""
    D = np.asarray(D, dtype=float)
    T = D.shape[0]
    H0 = np.tanh(D @ params0.w1.T + params0.b1)
    mask = shrink_mask(H0, k)
    N, L = params0.n_visible, params0.n_hidden

    def f(vec):
        p = SsaeParams.from_vector(vec, N, L)
        H = np.tanh(D @ p.w1.T + p.b1)
        S = np.where(mask, H, 0.0)
        D_hat = np.tanh(S @ p.w2.T + p.b2)
        recon = 0.5 * np.sum((D_hat - D) ** 2) / T
        penalty = gamma * np.sum(np.log10(1.0 + H * H)) / T
        return recon + penalty

    return f


def central_differences(f, x0, step=1e-6):
    g = np.empty_like(x0)
    for i in range(x0.size):
        xp = x0.copy()
        xm = x0.copy()
        xp[i] += step
        xm[i] -= step
        g[i] = (f(xp) - f(xm)) / (2.0 * step)
    return g


class TestParams:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            SsaeParams(w1=np.zeros((3, 2)), b1=np.zeros(3),
                       w2=np.zeros((3, 2)), b2=np.zeros(2))
        with pytest.raises(ValueError):
            SsaeParams(w1=np.zeros((3, 2)), b1=np.zeros(2),
                       w2=np.zeros((2, 3)), b2=np.zeros(2))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            SsaeParams(w1=np.array([[np.nan]]), b1=np.zeros(1),
                       w2=np.zeros((1, 1)), b2=np.zeros(1))

    def test_vector_round_trip(self):
        rng = np.random.default_rng(0)
        p = random_params(rng, 4, 6)
        q = SsaeParams.from_vector(p.to_vector(), 4, 6)
        np.testing.assert_array_equal(q.w1, p.w1)
        np.testing.assert_array_equal(q.b1, p.b1)
        np.testing.assert_array_equal(q.w2, p.w2)
        np.testing.assert_array_equal(q.b2, p.b2)


class TestHiddenActivation:
    def test_zero_params_give_zero(self):
        p = zero_params(3, 5)
        np.testing.assert_array_equal(hidden_activation(p, np.array([0.3, -0.1, 0.9])),
                                      np.zeros(5))

    def test_scalar_value(self):
        p = SsaeParams(w1=np.array([[1.0]]), b1=np.zeros(1),
                       w2=np.zeros((1, 1)), b2=np.zeros(1))
        h = hidden_activation(p, np.array([0.5]))
        np.testing.assert_allclose(h, [0.46211715726000974], rtol=1e-12)

    def test_odd_symmetry_with_zero_bias(self):
        rng = np.random.default_rng(1)
        p = SsaeParams(w1=rng.normal(size=(6, 4)), b1=np.zeros(6),
                       w2=np.zeros((4, 6)), b2=np.zeros(4))
        d = rng.uniform(-1, 1, 4)
        np.testing.assert_allclose(hidden_activation(p, -d),
                                   -hidden_activation(p, d), atol=1e-15)

    def test_strictly_inside_unit_interval(self):
        rng = np.random.default_rng(2)
        p = random_params(rng, 5, 8, scale=3.0)
        h = hidden_activation(p, rng.uniform(-1, 1, (20, 5)))
        assert np.all(np.abs(h) < 1.0)

    def test_dimension_mismatch(self):
        p = zero_params(3, 5)
        with pytest.raises(ValueError):
            hidden_activation(p, np.zeros(4))


class TestShrink:
    def test_unambiguous_ordering(self):
        np.testing.assert_array_equal(shrink(np.array([0.5, -0.01, 0.3]), 2),
                                      [0.5, 0.0, 0.3])

    def test_k_equals_length_is_identity(self):
        rng = np.random.default_rng(3)
        h = rng.normal(size=9)
        np.testing.assert_array_equal(shrink(h, 9), h)

    def test_tie_keeps_lower_index(self):
        np.testing.assert_array_equal(shrink(np.array([0.2, -0.2, 0.1]), 1),
                                      [0.2, 0.0, 0.0])

    def test_matches_reference_on_random_vectors(self):
        rng = np.random.default_rng(4)
        for _ in range(300):
            L = int(rng.integers(1, 12))
            k = int(rng.integers(1, L + 1))
            h = rng.normal(size=L)
            if rng.random() < 0.3:  # inject magnitude ties
                i, j = rng.integers(0, L, 2)
                h[i] = h[j] * rng.choice([-1.0, 1.0])
            np.testing.assert_array_equal(shrink(h, k), reference_keep_topk(h, k))

    def test_idempotent(self):
        rng = np.random.default_rng(5)
        h = rng.normal(size=15)
        once = shrink(h, 4)
        np.testing.assert_array_equal(shrink(once, 4), once)

    def test_positive_scaling_equivariance(self):
        rng = np.random.default_rng(6)
        h = rng.normal(size=10)
        np.testing.assert_allclose(shrink(2.5 * h, 3), 2.5 * shrink(h, 3), rtol=1e-15)

    def test_sign_flip_equivariance(self):
        rng = np.random.default_rng(7)
        h = rng.normal(size=10)
        np.testing.assert_array_equal(shrink(-h, 3), -shrink(h, 3))

    def test_nonzero_budget(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            h = rng.normal(size=20)
            h[rng.random(20) < 0.4] = 0.0
            k = int(rng.integers(1, 21))
            assert np.count_nonzero(shrink(h, k)) <= k

    def test_kept_values_exact(self):
        rng = np.random.default_rng(9)
        h = rng.normal(size=12)
        out = shrink(h, 5)
        nz = out != 0
        np.testing.assert_array_equal(out[nz], h[nz])

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            shrink(np.zeros(3), 0)
        with pytest.raises(ValueError):
            shrink(np.zeros(3), 4)

    def test_batch_matches_per_row(self):
        rng = np.random.default_rng(10)
        H = rng.normal(size=(6, 7))
        batch = shrink(H, 3)
        for i in range(6):
            np.testing.assert_array_equal(batch[i], shrink(H[i], 3))


class TestRoundCode:
    def test_examples(self):
        np.testing.assert_array_equal(
            round_code(np.array([0.12345, 0.0, -0.9999])),
            [0.123, 0.0, -1.0],
        )
        np.testing.assert_array_equal(
            round_code(np.array([0.0004, 0.5, 0.0])), [0.0, 0.5, 0.0]
        )

    def test_halves_away_from_zero(self):
        np.testing.assert_array_equal(round_code(np.array([0.1235, -0.1235]), 3),
                                      [0.124, -0.124])

    def test_zero_places(self):
        rng = np.random.default_rng(11)
        s = rng.uniform(-0.999, 0.999, 50)
        out = round_code(s, 0)
        assert set(np.unique(out)) <= {-1.0, 0.0, 1.0}

    def test_nonzero_count_never_increases(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            s = shrink(rng.normal(scale=0.01, size=10), 4)
            assert np.count_nonzero(round_code(s)) <= np.count_nonzero(s)

    def test_negative_places_rejected(self):
        with pytest.raises(ValueError):
            round_code(np.zeros(2), -1)


class TestReconstruct:
    def test_zero_code_zero_bias(self):
        p = zero_params(4, 6)
        np.testing.assert_array_equal(reconstruct(p, np.zeros(6)), np.zeros(4))

    def test_scalar_value(self):
        p = SsaeParams(w1=np.zeros((1, 1)), b1=np.zeros(1),
                       w2=np.array([[2.0]]), b2=np.array([0.1]))
        np.testing.assert_allclose(reconstruct(p, np.array([0.3])),
                                   [0.6043677771171636], rtol=1e-12)

    def test_zero_params_for_any_code(self):
        p = zero_params(3, 5)
        rng = np.random.default_rng(13)
        np.testing.assert_array_equal(reconstruct(p, rng.normal(size=5)), np.zeros(3))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            reconstruct(zero_params(3, 5), np.zeros(4))


class TestCost:
    def test_zero_everything(self):
        p = zero_params(3, 4)
        assert cost(p, np.zeros((5, 3)), gamma=2.0, k=2) == 0.0

    def test_gamma_zero_is_pure_reconstruction(self):
        rng = np.random.default_rng(14)
        p = random_params(rng, 4, 6)
        D = rng.uniform(-1, 1, (7, 4))
        c = cost(p, D, gamma=0.0, k=3)
        H = np.tanh(D @ p.w1.T + p.b1)
        S = round_code(shrink(H, 3))
        D_hat = np.tanh(S @ p.w2.T + p.b2)
        np.testing.assert_allclose(c, 0.5 * np.sum((D_hat - D) ** 2) / 7, rtol=1e-12)

    def test_penalty_scalar_value(self):
        # One sample, one hidden unit, h = 0.5, perfect reconstruction of d = 0.
        p = SsaeParams(w1=np.zeros((1, 1)), b1=np.array([math.atanh(0.5)]),
                       w2=np.zeros((1, 1)), b2=np.zeros(1))
        c = cost(p, np.zeros((1, 1)), gamma=1.0, k=1)
        np.testing.assert_allclose(c, 0.09691001300805642, rtol=1e-10)

    def test_nonnegative(self):
        rng = np.random.default_rng(15)
        for _ in range(20):
            p = random_params(rng, 3, 5, scale=1.0)
            D = rng.uniform(-1, 1, (4, 3))
            assert cost(p, D, gamma=float(rng.uniform(0, 1)), k=2) >= 0.0

    def test_empty_batch_rejected(self):
        with pytest.raises(ValueError):
            cost(zero_params(3, 4), np.zeros((0, 3)), 0.1, 2)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            cost(zero_params(3, 4), np.zeros((5, 2)), 0.1, 2)


class TestGradient:
    def test_zero_data_zero_params(self):
        p = zero_params(3, 4)
        g = gradient(p, np.zeros((5, 3)), gamma=0.3, k=2)
        assert np.all(g.to_vector() == 0.0)

    def test_matches_finite_differences_full_mask(self):
        rng = np.random.default_rng(16)
        for _ in range(5):
            N, L, T = rng.integers(1, 8), rng.integers(1, 8), rng.integers(1, 6)
            p = random_params(rng, int(N), int(L), scale=0.3)
            D = rng.uniform(-0.9, 0.9, (int(T), int(N)))
            g = gradient(p, D, gamma=0.1, k=int(L), rounding_places=None).to_vector()
            fd = central_differences(frozen_cost_fn(p, D, 0.1, int(L)), p.to_vector())
            rel = np.abs(g - fd) / np.maximum(np.abs(fd), 1e-8)
            assert rel.max() <= 1e-5

    def test_matches_finite_differences_frozen_mask(self):
        rng = np.random.default_rng(17)
        for _ in range(5):
            N, L, T = int(rng.integers(2, 9)), int(rng.integers(3, 9)), int(rng.integers(1, 7))
            k = int(rng.integers(1, L))
            p = random_params(rng, N, L, scale=0.4)
            D = rng.uniform(-0.9, 0.9, (T, N))
            g = gradient(p, D, gamma=0.2, k=k, rounding_places=None).to_vector()
            fd = central_differences(frozen_cost_fn(p, D, 0.2, k), p.to_vector())
            rel = np.abs(g - fd) / np.maximum(np.abs(fd), 1e-8)
            assert rel.max() <= 1e-5

    def test_shapes_match_params(self):
        rng = np.random.default_rng(18)
        p = random_params(rng, 4, 7)
        g = gradient(p, rng.uniform(-1, 1, (3, 4)), 0.1, 3)
        assert g.w1.shape == p.w1.shape
        assert g.b1.shape == p.b1.shape
        assert g.w2.shape == p.w2.shape
        assert g.b2.shape == p.b2.shape
