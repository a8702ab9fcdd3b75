import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scvcnet import reference
from scvcnet.scvc import (KernelBank, ShapeError, activate, channel_pool, flatten, forward, ifpfi,
                          pair_maps, scvc, unflatten)


def rand_bank(rng, c, p, q, d):
    return KernelBank(rng.uniform(-1, 1, (c, p, q, d, d)), rng.uniform(-1, 1, c))


class TestScvcExamples:
    def test_d1_closed_form(self):
        out = scvc([1.0, 3.0], [5.0, 7.0], [[2.0]])
        np.testing.assert_array_equal(out, [[20.0, 28.0], [60.0, 84.0]])

    def test_d1_plain(self):
        out = scvc([1.0, 3.0], [5.0, 7.0], [[2.0]], cross_term="plain")
        np.testing.assert_array_equal(out, [[10.0, 14.0], [30.0, 42.0]])

    def test_d3_hand_computed(self):
        x, y = np.array([1.0, 2.0, 3.0]), np.array([4.0, 5.0])
        W = np.array([[0.0, 1.0, 0.0], [2.0, 3.0, 4.0], [0.0, 5.0, 0.0]])
        # row part: 2*x[a-1] + 4*x[a+1]; col part: 1*y[b-1] + 5*y[b+1]; cross: 9*x*y
        row = np.array([0 + 4 * 2, 2 * 1 + 4 * 3, 2 * 2 + 0])
        col = np.array([0 + 5 * 5, 1 * 4 + 0])
        expect = row[:, None] + col[None, :] + 9 * np.outer(x, y)
        np.testing.assert_allclose(scvc(x, y, W), expect, rtol=0, atol=1e-12)

    def test_stride_zeroes_skipped(self, rng):
        x, y, W = rng.normal(size=5), rng.normal(size=4), rng.normal(size=(3, 3))
        full, strided = scvc(x, y, W, 1), scvc(x, y, W, 2)
        np.testing.assert_array_equal(strided[::2, ::2], full[::2, ::2])
        strided[::2, ::2] = 0
        assert not strided.any()

    @pytest.mark.parametrize("W,s", [(np.ones((2, 2)), 1), (np.ones((3, 3)), 0),
                                     (np.ones((3, 2)), 1), (np.ones((3, 3)), 1.5)])
    def test_invalid(self, W, s):
        with pytest.raises(ValueError):
            scvc(np.ones(4), np.ones(4), W, s)


class TestScvcProperties:
    @pytest.mark.parametrize("d", [3, 5, 7])
    def test_only_cross_entries_matter(self, rng, d):
        h = d // 2
        x, y = rng.normal(size=8), rng.normal(size=6)
        W = rng.normal(size=(d, d))
        W2 = rng.normal(size=(d, d))
        W2[h, :], W2[:, h] = W[h, :], W[:, h]
        assert scvc(x, y, W).tobytes() == scvc(x, y, W2).tobytes()

    def test_zero_centre_is_additive(self, rng):
        W = rng.normal(size=(3, 3))
        W[1, 1] = 0.0
        x, y = rng.normal(size=6), rng.normal(size=6)
        out = scvc(x, y, W)
        row = scvc(x, np.zeros(6), W)[:, :1]
        col = scvc(np.zeros(6), y, W)[:1, :]
        np.testing.assert_allclose(out, row + col, atol=1e-12)

    def test_bilinear_scaling(self, rng):
        W = rng.normal(size=(3, 3))
        x, y = rng.normal(size=5), rng.normal(size=5)
        a = 2.5
        lhs = scvc(a * x, a * y, W)
        # linear parts scale by a, bilinear part by a**2
        g = W[1, 1] ** 2
        lin = scvc(x, y, W) - g * np.outer(x, y)
        np.testing.assert_allclose(lhs, a * lin + a * a * g * np.outer(x, y), atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 12), st.integers(1, 12), st.sampled_from([1, 3, 5]), st.integers(1, 3),
           st.integers(0, 2**32 - 1))
    def test_shape_and_oracle(self, m, n, d, s, seed):
        r = np.random.default_rng(seed)
        x, y, W = r.normal(size=m), r.normal(size=n), r.normal(size=(d, d))
        out = scvc(x, y, W, s)
        assert out.shape == (m, n)
        np.testing.assert_allclose(out, reference.scvc_literal(x, y, W, s), rtol=1e-10, atol=1e-12)


class TestIfpfi:
    def test_sum_of_pair_maps_plus_bias(self, rng):
        bank = rand_bank(rng, 3, 4, 5, 3)
        X, Y = rng.normal(size=(4, 6)), rng.normal(size=(5, 7))
        H = ifpfi(X, Y, bank)
        assert H.shape == (3, 6, 7)
        P = pair_maps(X, Y, bank)
        np.testing.assert_allclose(H, P.sum(axis=(1, 2)) + bank.b[:, None, None], atol=1e-12)

    @pytest.mark.parametrize("s", [1, 2, 3])
    def test_literal_oracle(self, rng, s):
        bank = rand_bank(rng, 2, 3, 3, 5)
        X, Y = rng.normal(size=(3, 7)), rng.normal(size=(3, 7))
        np.testing.assert_allclose(ifpfi(X, Y, bank, s),
                                   reference.ifpfi_literal(X, Y, bank.W, bank.b, s), rtol=1e-10)

    def test_bias_on_strided_positions(self, rng):
        bank = rand_bank(rng, 2, 2, 2, 3)
        H = ifpfi(np.zeros((2, 5)), np.zeros((2, 5)), bank, 2)
        np.testing.assert_array_equal(H, np.broadcast_to(bank.b[:, None, None], H.shape))

    def test_batch_equals_single(self, rng):
        bank = rand_bank(rng, 4, 3, 3, 3)
        X, Y = rng.normal(size=(5, 3, 6)), rng.normal(size=(5, 3, 6))
        batch = ifpfi(X, Y, bank)
        for i in range(5):
            np.testing.assert_allclose(batch[i], ifpfi(X[i], Y[i], bank), atol=1e-13)

    def test_frequency_permutation_invariance(self, rng):
        bank = rand_bank(rng, 2, 4, 3, 3)
        X, Y = rng.normal(size=(4, 5)), rng.normal(size=(3, 5))
        pi, pj = rng.permutation(4), rng.permutation(3)
        permuted = KernelBank(bank.W[:, pi][:, :, pj], bank.b)
        np.testing.assert_allclose(ifpfi(X[pi], Y[pj], permuted), ifpfi(X, Y, bank), atol=1e-12)

    def test_shape_mismatch(self, rng):
        bank = rand_bank(rng, 2, 4, 4, 3)
        with pytest.raises(ShapeError, match="4 x 4"):
            ifpfi(np.zeros((3, 5)), np.zeros((4, 5)), bank)


class TestForward:
    def test_sigmoid_extremes(self):
        out = activate(np.array([710.0, -710.0, 0.0, -1e308]))
        assert out[0] == 1.0 and out[2] == 0.5 and out[1] >= 0 and out[3] == 0.0
        assert np.all(np.isfinite(out))

    def test_flatten_row_major(self):
        Z = np.arange(12).reshape(3, 4)
        z = flatten(Z)
        assert z[2 * 4 + 1] == Z[2, 1]
        np.testing.assert_array_equal(unflatten(z, 3, 4), Z)

    def test_pool_rejects_empty(self):
        with pytest.raises(ShapeError):
            channel_pool(np.zeros((0, 2, 2)))

    def test_forward_oracle_and_range(self, rng):
        bank = rand_bank(rng, 3, 4, 4, 3)
        X, Y = rng.normal(size=(4, 5)), rng.normal(size=(4, 5))
        z = forward(X, Y, bank)
        assert z.shape == (25,)
        assert np.all((z > 0) & (z < 1))
        np.testing.assert_allclose(z, reference.forward_literal(X, Y, bank.W, bank.b, 1), rtol=1e-12)

    def test_bank_validation(self):
        with pytest.raises(ShapeError):
            KernelBank(np.zeros((2, 3, 3, 3)), np.zeros(2))
        with pytest.raises(ShapeError):
            KernelBank(np.zeros((2, 3, 3, 3, 3)), np.zeros(3))
        with pytest.raises(ValueError):
            KernelBank(np.zeros((2, 3, 3, 2, 2)), np.zeros(2))
