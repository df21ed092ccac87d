import numpy as np
import pytest
from hypothesis import given, strategies as st

from afdmtt.errors import DegenerateInputError, DimensionError, RankError
from afdmtt.tensor import (CPDFactors, TTCores, best_rank1, cpd_construct, evd, fold,
                           khatri_rao, pinv, rank_by_gap, svd, tt_svd,
                           tt_truncation_bound, unfold)

from oracles import cpd_triple_sum, khatri_rao_loop, unfold_loop


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


dims = st.integers(1, 6)
seeds = st.integers(0, 2 ** 32 - 1)


def random_cpd(rng, shape, P):
    return CPDFactors(crandn(rng, P), tuple(crandn(rng, d, P) for d in shape))


class TestUnfold:
    def test_row_zero_of_index_tensor(self):
        i, j, k = np.meshgrid(range(2), range(2), range(2), indexing="ij")
        t = (i + 2 * j + 4 * k).astype(float)
        np.testing.assert_array_equal(unfold(t, 1)[0], [0, 2, 4, 6])

    @pytest.mark.parametrize("mode", [1, 2, 3])
    def test_zeros(self, mode):
        t = np.zeros((2, 3, 4))
        m = unfold(t, mode)
        assert m.shape == (t.shape[mode - 1], 24 // t.shape[mode - 1])
        assert not m.any()

    def test_fold_round_trip_345(self):
        t = crandn(np.random.default_rng(0), 3, 4, 5)
        np.testing.assert_array_equal(fold(unfold(t, 2), 2, t.shape), t)

    @given(dims, dims, dims, st.sampled_from([1, 2, 3]), seeds)
    def test_round_trip_exact(self, d1, d2, d3, mode, seed):
        t = crandn(np.random.default_rng(seed), d1, d2, d3)
        np.testing.assert_array_equal(fold(unfold(t, mode), mode, t.shape), t)

    @given(dims, dims, dims, st.sampled_from([1, 2, 3]), seeds)
    def test_matches_index_arithmetic(self, d1, d2, d3, mode, seed):
        t = crandn(np.random.default_rng(seed), d1, d2, d3)
        np.testing.assert_array_equal(unfold(t, mode), unfold_loop(t, mode))

    def test_bad_mode(self):
        with pytest.raises(DimensionError):
            unfold(np.zeros((2, 2, 2)), 4)

    def test_cpd_unfolding_identity(self):
        rng = np.random.default_rng(1)
        f = random_cpd(rng, (3, 4, 5), 2)
        a1, a2, a3 = f.factors
        t = cpd_construct(f)
        np.testing.assert_allclose(unfold(t, 1),
                                   (a1 * f.weights) @ khatri_rao(a3, a2).T, atol=1e-12)


class TestKhatriRao:
    def test_identity(self):
        out = khatri_rao(np.eye(2), np.eye(2))
        np.testing.assert_array_equal(out[:, 0], [1, 0, 0, 0])
        np.testing.assert_array_equal(out[:, 1], [0, 0, 0, 1])

    def test_ones_times_vector(self):
        out = khatri_rao(np.ones((2, 1)), np.array([[1.0], [2.0]]))
        np.testing.assert_array_equal(out[:, 0], [1, 2, 1, 2])

    def test_random_against_loop(self):
        rng = np.random.default_rng(2)
        a, b = crandn(rng, 3, 2), crandn(rng, 4, 2)
        np.testing.assert_allclose(khatri_rao(a, b), khatri_rao_loop(a, b), atol=1e-14)

    @given(dims, dims, st.integers(1, 4), seeds)
    def test_columns_are_kronecker(self, da, db, P, seed):
        rng = np.random.default_rng(seed)
        a, b = crandn(rng, da, P), crandn(rng, db, P)
        out = khatri_rao(a, b)
        for r in range(P):
            np.testing.assert_allclose(out[:, r], np.kron(a[:, r], b[:, r]), atol=1e-13)

    def test_mismatched_columns(self):
        with pytest.raises(DimensionError):
            khatri_rao(np.ones((2, 2)), np.ones((2, 3)))


class TestCPDConstruct:
    def test_all_ones(self):
        f = CPDFactors(np.ones(1), (np.ones((2, 1)), np.ones((3, 1)), np.ones((4, 1))))
        np.testing.assert_array_equal(cpd_construct(f), np.ones((2, 3, 4)))

    def test_zero_weights(self):
        rng = np.random.default_rng(3)
        f = CPDFactors(np.zeros(3), tuple(crandn(rng, d, 3) for d in (2, 3, 4)))
        assert not cpd_construct(f).any()

    def test_random_against_triple_sum(self):
        rng = np.random.default_rng(4)
        f = random_cpd(rng, (4, 5, 6), 3)
        np.testing.assert_allclose(cpd_construct(f), cpd_triple_sum(f.weights, *f.factors),
                                   atol=1e-12)

    @given(dims, dims, dims, st.integers(1, 4), seeds)
    def test_property_triple_sum(self, d1, d2, d3, P, seed):
        f = random_cpd(np.random.default_rng(seed), (d1, d2, d3), P)
        np.testing.assert_allclose(cpd_construct(f), cpd_triple_sum(f.weights, *f.factors),
                                   atol=1e-12)

    def test_column_count_checked(self):
        with pytest.raises(DimensionError):
            CPDFactors(np.ones(2), (np.ones((2, 2)), np.ones((2, 3)), np.ones((2, 2))))


class TestTTSVD:
    def test_rank_one_exact(self):
        f = random_cpd(np.random.default_rng(5), (4, 5, 6), 1)
        t = cpd_construct(f)
        cores = tt_svd(t, 1)
        assert np.linalg.norm(cores.full() - t) <= 1e-12 * np.linalg.norm(t)

    def test_rank_three_8_9_10(self):
        t = cpd_construct(random_cpd(np.random.default_rng(6), (8, 9, 10), 3))
        cores = tt_svd(t, 3)
        assert cores.head.shape == (8, 3)
        assert cores.core.shape == (3, 9, 3)
        assert cores.tail.shape == (3, 10)
        assert np.linalg.norm(cores.full() - t) / np.linalg.norm(t) <= 1e-10

    @given(st.integers(2, 7), st.integers(2, 7), st.integers(2, 7), st.integers(1, 3), seeds)
    def test_noiseless_rank_p_reconstructs(self, d1, d2, d3, P, seed):
        P = min(P, d1, d3)
        t = cpd_construct(random_cpd(np.random.default_rng(seed), (d1, d2, d3), P))
        err = np.linalg.norm(tt_svd(t, P).full() - t) / np.linalg.norm(t)
        assert err <= 1e-10

    @given(st.integers(3, 7), st.integers(2, 6), st.integers(3, 7), st.integers(1, 3), seeds)
    def test_truncation_error_bound(self, d1, d2, d3, P, seed):
        rng = np.random.default_rng(seed)
        t = cpd_construct(random_cpd(rng, (d1, d2, d3), P)) + 0.1 * crandn(rng, d1, d2, d3)
        cores = tt_svd(t, P)
        err2 = np.linalg.norm(cores.full() - t) ** 2
        assert err2 <= tt_truncation_bound(cores) * (1 + 1e-9) + 1e-20

    def test_head_and_core_orthonormal(self):
        t = crandn(np.random.default_rng(7), 5, 4, 6)
        cores = tt_svd(t, 3)
        np.testing.assert_allclose(cores.head.conj().T @ cores.head, np.eye(3), atol=1e-12)
        c = cores.core.reshape(3 * 4, 3, order="F")
        np.testing.assert_allclose(c.conj().T @ c, np.eye(3), atol=1e-12)

    def test_rank_too_large(self):
        with pytest.raises(RankError):
            tt_svd(np.ones((2, 3, 4)), 3)

    def test_deterministic(self):
        t = crandn(np.random.default_rng(8), 4, 4, 4)
        a, b = tt_svd(t, 2), tt_svd(t.copy(), 2)
        np.testing.assert_array_equal(a.head, b.head)


class TestDecompositions:
    def test_best_rank1_outer(self):
        rng = np.random.default_rng(9)
        x, y = crandn(rng, 5), crandn(rng, 4)
        u, v = best_rank1(np.outer(x, y))
        assert u[0] == 1
        np.testing.assert_allclose(u, x / x[0], atol=1e-12)
        np.testing.assert_allclose(np.outer(u, v), np.outer(x, y), atol=1e-12)

    def test_best_rank1_identity_residual(self):
        m = np.eye(2)
        u, v = best_rank1(m)
        assert np.linalg.norm(m - np.outer(u, v)) ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_best_rank1_perturbed(self):
        rng = np.random.default_rng(10)
        x, y = crandn(rng, 6), crandn(rng, 5)
        u, v = best_rank1(np.outer(x, y) + 1e-6 * crandn(rng, 6, 5))

        def angle(p, q):
            c = abs(np.vdot(p, q)) / (np.linalg.norm(p) * np.linalg.norm(q))
            return np.arccos(min(c, 1.0))
        assert angle(u, x) < 1e-5
        assert angle(v, y) < 1e-5

    def test_best_rank1_zero(self):
        with pytest.raises(DegenerateInputError):
            best_rank1(np.zeros((3, 3)))

    def test_pinv_identity(self):
        np.testing.assert_allclose(pinv(np.eye(4)), np.eye(4))

    def test_pinv_vandermonde(self):
        z = np.exp(1j * np.array([0.3, 1.1, -2.0]))
        A = z[None, :] ** np.arange(8)[:, None]
        np.testing.assert_allclose(pinv(A) @ A, np.eye(3), atol=1e-10)

    @given(st.integers(1, 6), st.integers(1, 6), seeds)
    def test_moore_penrose(self, r, c, seed):
        A = crandn(np.random.default_rng(seed), r, c)
        X = pinv(A)
        for lhs, rhs in ((A @ X @ A, A), (X @ A @ X, X)):
            np.testing.assert_allclose(lhs, rhs, atol=1e-10)
        np.testing.assert_allclose(A @ X, (A @ X).conj().T, atol=1e-10)
        np.testing.assert_allclose(X @ A, (X @ A).conj().T, atol=1e-10)

    def test_evd_diag(self):
        vals, _ = evd(np.diag([2.0, 3.0]))
        assert sorted(vals.real) == [2.0, 3.0]

    def test_evd_non_square(self):
        with pytest.raises(DimensionError):
            evd(np.ones((2, 3)))

    def test_svd_phase_convention(self):
        u, s, vh = svd(crandn(np.random.default_rng(11), 5, 3))
        idx = np.argmax(np.abs(u), axis=0)
        lead = u[idx, np.arange(3)]
        np.testing.assert_allclose(lead.imag, 0, atol=1e-14)
        assert np.all(lead.real > 0)

    def test_rank_by_gap(self):
        assert rank_by_gap(np.array([10, 9, 8, 0.01, 0.009])) == 3

    def test_tt_cores_full_shape(self):
        c = TTCores(np.ones((2, 1)), np.ones((1, 3, 1)), np.ones((1, 4)))
        assert c.full().shape == (2, 3, 4)
