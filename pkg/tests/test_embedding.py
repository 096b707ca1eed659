import numpy as np
import pytest
import scipy.sparse as sp
from scipy.stats import norm

from graphsentry.embedding import (
    ase,
    mase_embed,
    omni_embed,
    omnibus_matrix,
    select_dim,
    singular_values,
    top_eigenpairs,
    _positions_from_subspace,
)


def random_symmetric(n, seed, hollow=False):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    a = 0.5 * (a + a.T)
    if hollow:
        np.fill_diagonal(a, 0.0)
    return a


class TestAse:
    def test_two_cycle_scaled(self):
        # eigenvalues +/-1 tie in magnitude; the algebraically larger (+1) wins
        x = ase(np.array([[0.0, 1.0], [1.0, 0.0]]), 1).matrix
        assert x.shape == (2, 1)
        np.testing.assert_allclose(x.ravel(), [0.7071067811865475] * 2, atol=1e-12)

    def test_rank_one_exact_recovery(self):
        rng = np.random.default_rng(3)
        v = rng.standard_normal(7)
        a = np.outer(v, v)
        x = ase(a, 1).matrix.ravel()
        # sign convention: largest-magnitude entry positive
        expected = v if v[np.abs(v).argmax()] > 0 else -v
        np.testing.assert_allclose(x, expected, atol=1e-10)

    def test_zero_matrix(self):
        x = ase(np.zeros((4, 4)), 1).matrix
        assert np.array_equal(x, np.zeros((4, 1)))

    def test_unscaled_columns_orthonormal(self):
        a = random_symmetric(10, 0)
        v = ase(a, 3, mode="unscaled").matrix
        np.testing.assert_allclose(v.T @ v, np.eye(3), atol=1e-10)

    def test_dimension_errors(self):
        a = random_symmetric(4, 0)
        with pytest.raises(ValueError):
            ase(a, 5)
        with pytest.raises(ValueError):
            ase(a, 0)

    def test_asymmetric_rejected(self):
        a = np.array([[0.0, 1.0], [0.5, 0.0]])
        with pytest.raises(ValueError, match="symmetric"):
            ase(a, 1)

    def test_bad_mode(self):
        with pytest.raises(ValueError, match="mode"):
            ase(np.zeros((2, 2)), 1, mode="other")

    def test_full_rank_psd_reconstruction(self):
        rng = np.random.default_rng(5)
        b = rng.standard_normal((6, 6))
        a = b @ b.T
        x = ase(a, 6).matrix
        np.testing.assert_allclose(x @ x.T, a, atol=1e-8)

    def test_best_rank_d_spectral_approximation(self):
        a = random_symmetric(9, 11)
        vals, vecs = np.linalg.eigh(a)
        order = np.argsort(-np.abs(vals))[:3]
        truth = vecs[:, order] @ np.diag(vals[order]) @ vecs[:, order].T
        x = ase(a, 3).matrix
        v = ase(a, 3, mode="unscaled").matrix
        lam, _ = top_eigenpairs(a, 3)
        approx = (v * lam) @ v.T
        np.testing.assert_allclose(approx, truth, atol=1e-9)
        # scaled gram matches the magnitude version
        np.testing.assert_allclose(x @ x.T, (v * np.abs(lam)) @ v.T, atol=1e-9)

    def test_eigenvalues_ordered_by_magnitude(self):
        a = np.diag([3.0, -5.0, 1.0, -0.5])
        lam, _ = top_eigenpairs(a, 4)
        assert list(lam) == [-5.0, 3.0, 1.0, -0.5]

    def test_determinism_bitwise(self):
        a = random_symmetric(40, 9)
        x1 = ase(a, 4).matrix
        x2 = ase(a, 4).matrix
        assert np.array_equal(x1, x2)

    def test_iterative_path_matches_dense(self):
        rng = np.random.default_rng(2)
        a = (rng.random((300, 300)) < 0.05).astype(float)
        a = np.triu(a, 1)
        a = a + a.T
        x_iter = ase(a, 3).matrix  # n=300 >= threshold, d small -> ARPACK
        vals, vecs = np.linalg.eigh(a)
        order = np.lexsort((-vals, -np.abs(vals)))[:3]
        truth = (vecs[:, order] * np.abs(vals[order])) @ vecs[:, order].T
        np.testing.assert_allclose(x_iter @ x_iter.T, truth, atol=1e-7)

    def test_iterative_path_deterministic(self):
        rng = np.random.default_rng(4)
        a = (rng.random((250, 250)) < 0.1).astype(float)
        a = np.triu(a, 1)
        a = a + a.T
        assert np.array_equal(ase(a, 2).matrix, ase(a, 2).matrix)

    def test_sparse_input_matches_dense(self):
        a = random_symmetric(30, 8, hollow=True)
        x_dense = ase(a, 3).matrix
        x_sparse = ase(sp.csr_array(a), 3).matrix
        np.testing.assert_allclose(x_sparse, x_dense, atol=1e-10)


class TestOmnibusMatrix:
    def test_identical_blocks(self):
        a = random_symmetric(4, 0)
        o = omnibus_matrix([a, a])
        np.testing.assert_array_equal(o, np.block([[a, a], [a, a]]))

    def test_pair_average_off_diagonal(self):
        a = np.array([[0.0, 1.0], [1.0, 0.0]])
        z = np.zeros((2, 2))
        o = omnibus_matrix([a, z])
        np.testing.assert_array_equal(o[:2, 2:], 0.5 * a)
        np.testing.assert_array_equal(o[2:, :2], 0.5 * a)

    def test_three_graph_averages(self):
        mats = [random_symmetric(3, s) for s in range(3)]
        o = omnibus_matrix(mats)
        np.testing.assert_array_equal(o[0:3, 6:9], 0.5 * (mats[0] + mats[2]))
        np.testing.assert_array_equal(o, o.T)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            omnibus_matrix([np.zeros((2, 2)), np.zeros((3, 3))])

    def test_needs_two_graphs(self):
        with pytest.raises(ValueError, match="at least 2"):
            omnibus_matrix([np.zeros((2, 2))])

    def test_sparse_matches_dense(self):
        mats = [random_symmetric(5, s, hollow=True) for s in range(3)]
        dense = omnibus_matrix(mats)
        sparse = omnibus_matrix([sp.csr_array(m) for m in mats])
        assert sp.issparse(sparse)
        np.testing.assert_allclose(sparse.toarray(), dense, atol=0)


class TestOmniEmbed:
    @pytest.mark.parametrize("n,m,seed", [(10, 2, 0), (30, 4, 1), (17, 3, 2)])
    def test_kronecker_oracle_identical_graphs(self, n, m, seed):
        # omnibus of M copies of A is J_M (x) A: blocks must reproduce ase(A, d)
        a = random_symmetric(n, seed, hollow=True)
        d = 3
        expected = ase(a, d).matrix
        res = omni_embed([a] * m, d)
        for pos in res.positions:
            np.testing.assert_allclose(pos.matrix, expected, atol=1e-8)

    def test_identical_pair_zero_difference(self):
        a = random_symmetric(12, 5, hollow=True)
        res = omni_embed([a, a], 2)
        diff = res.positions[1].matrix - res.positions[0].matrix
        assert np.abs(diff).max() < 1e-12

    def test_distinct_pair_positive_difference(self):
        rng = np.random.default_rng(7)
        a = (rng.random((12, 12)) < 0.4).astype(float)
        a = np.triu(a, 1); a = a + a.T
        b = (rng.random((12, 12)) < 0.4).astype(float)
        b = np.triu(b, 1); b = b + b.T
        assert np.abs(a - b).max() > 0
        res = omni_embed([a, b], 1)
        diff = res.positions[1].matrix - res.positions[0].matrix
        # oracle: dense eigensolver on the explicitly built omnibus matrix
        o = np.block([[a, 0.5 * (a + b)], [0.5 * (a + b), b]])
        vals, vecs = np.linalg.eigh(o)
        k = np.argmax(np.abs(vals))
        x = vecs[:, [k]] * np.sqrt(abs(vals[k]))
        oracle_diff = np.linalg.norm(x[12:] - x[:12])
        assert np.linalg.norm(diff) > 0
        np.testing.assert_allclose(np.linalg.norm(diff), oracle_diff, atol=1e-8)

    def test_block_times_recorded(self):
        a = random_symmetric(6, 1, hollow=True)
        res = omni_embed([a, a, a], 1, times=[5, 6, 7])
        assert [p.time for p in res.positions] == [5, 6, 7]


def one_hot_memberships(n, blocks, seed=None):
    reps = n // blocks
    z = np.zeros((n, blocks))
    for i in range(n):
        z[i, min(i // reps, blocks - 1)] = 1.0
    return z


class TestMaseEmbed:
    def test_single_graph_matches_ase_gram(self):
        a = random_symmetric(14, 3, hollow=True)
        res = mase_embed([a], d=3)
        x = res.positions[0].matrix
        y = ase(a, 3).matrix
        np.testing.assert_allclose(x @ x.T, y @ y.T, atol=1e-8)

    def test_identical_graphs_identical_outputs(self):
        a = random_symmetric(10, 4, hollow=True)
        res = mase_embed([a, a, a], d=2)
        for r in res.scores[1:]:
            np.testing.assert_array_equal(r, res.scores[0])
        for p in res.positions[1:]:
            np.testing.assert_array_equal(p.matrix, res.positions[0].matrix)

    def test_noiseless_cosie_recovery(self):
        # exact linear-algebra oracle on P matrices with shared one-hot memberships
        n, k = 40, 4
        z = one_hot_memberships(n, k)
        rng = np.random.default_rng(0)
        ps = []
        for _ in range(2):
            m = rng.standard_normal((k, k))
            b = m @ m.T + k * np.eye(k)  # positive definite, distinct
            ps.append(z @ b @ z.T)
        res = mase_embed(ps, d=k, d_joint=k)
        v = res.common_subspace
        # sin of largest principal angle between col(V) and col(Z); the sine
        # form is exact near zero where arccos loses half the precision
        qz, _ = np.linalg.qr(z)
        residual = v - qz @ (qz.T @ v)
        assert np.linalg.norm(residual, 2) < 1e-8
        for p_mat, r in zip(ps, res.scores):
            np.testing.assert_allclose(v @ r @ v.T, p_mat, atol=1e-8)

    def test_common_subspace_orthonormal(self):
        mats = [random_symmetric(12, s, hollow=True) for s in range(3)]
        res = mase_embed(mats, d=2, d_joint=3)
        v = res.common_subspace
        np.testing.assert_allclose(v.T @ v, np.eye(3), atol=1e-8)

    def test_scores_symmetric_and_positions_consistent(self):
        mats = [random_symmetric(11, s + 10, hollow=True) for s in range(2)]
        res = mase_embed(mats, d=2)
        for r, p in zip(res.scores, res.positions):
            np.testing.assert_allclose(r, r.T, atol=1e-10)
            vals, vecs = np.linalg.eigh(r)
            s_half = (vecs * np.sqrt(np.abs(vals))) @ vecs.T
            np.testing.assert_allclose(p.matrix, res.common_subspace @ s_half, atol=1e-10)

    def test_gram_invariant_under_subspace_rotation(self):
        mats = [random_symmetric(13, s + 20, hollow=True) for s in range(2)]
        res = mase_embed(mats, d=2, d_joint=2)
        rng = np.random.default_rng(1)
        q, _ = np.linalg.qr(rng.standard_normal((2, 2)))
        _, rotated = _positions_from_subspace(mats, res.common_subspace @ q, [0, 1])
        for p, pr in zip(res.positions, rotated):
            np.testing.assert_allclose(
                pr.matrix @ pr.matrix.T, p.matrix @ p.matrix.T, atol=1e-8
            )

    def test_dimension_validation(self):
        mats = [random_symmetric(6, 1)] * 2
        with pytest.raises(ValueError):
            mase_embed(mats, d=7)
        with pytest.raises(ValueError):
            mase_embed(mats, d=2, d_joint=7)  # d_joint > min(n, M*d) = 4... capped by n=6 -> 4
        with pytest.raises(ValueError):
            mase_embed([], d=1)

    def test_default_joint_dimension_equals_d(self):
        mats = [random_symmetric(8, s, hollow=True) for s in range(2)]
        res = mase_embed(mats, d=2)
        assert res.dim_joint == 2 and res.dim_individual == 2


class TestPermutationEquivariance:
    @pytest.mark.parametrize("seed", [0, 1])
    def test_ase_rows_permute(self, seed):
        a = random_symmetric(12, seed, hollow=True)
        rng = np.random.default_rng(seed + 100)
        perm = rng.permutation(12)
        p = np.eye(12)[perm]
        x = ase(a, 3).matrix
        xp = ase(p @ a @ p.T, 3).matrix
        np.testing.assert_allclose(xp @ xp.T, p @ (x @ x.T) @ p.T, atol=1e-8)

    def test_omni_rows_permute(self):
        mats = [random_symmetric(9, s, hollow=True) for s in range(2)]
        rng = np.random.default_rng(5)
        perm = rng.permutation(9)
        p = np.eye(9)[perm]
        res = omni_embed(mats, 2)
        res_p = omni_embed([p @ a @ p.T for a in mats], 2)
        for orig, permuted in zip(res.positions, res_p.positions):
            np.testing.assert_allclose(
                permuted.matrix @ permuted.matrix.T,
                p @ (orig.matrix @ orig.matrix.T) @ p.T,
                atol=1e-8,
            )

    def test_mase_rows_permute(self):
        mats = [random_symmetric(9, s + 30, hollow=True) for s in range(2)]
        rng = np.random.default_rng(6)
        perm = rng.permutation(9)
        p = np.eye(9)[perm]
        res = mase_embed(mats, 2)
        res_p = mase_embed([p @ a @ p.T for a in mats], 2)
        for orig, permuted in zip(res.positions, res_p.positions):
            np.testing.assert_allclose(
                permuted.matrix @ permuted.matrix.T,
                p @ (orig.matrix @ orig.matrix.T) @ p.T,
                atol=1e-8,
            )


def select_dim_oracle(values, max_rank=None):
    """Brute-force two-group Gaussian profile log-likelihood transcription."""
    values = np.asarray(values, dtype=float)
    p = len(values)
    best, best_ll = None, -np.inf
    limit = p - 1 if max_rank is None else min(max_rank, p - 1)
    for q in range(1, limit + 1):
        head, tail = values[:q], values[q:]
        var = (np.sum((head - head.mean()) ** 2) + np.sum((tail - tail.mean()) ** 2)) / p
        if var == 0:
            return q
        ll = norm.logpdf(head, head.mean(), np.sqrt(var)).sum()
        ll += norm.logpdf(tail, tail.mean(), np.sqrt(var)).sum()
        if ll > best_ll:
            best, best_ll = q, ll
    return best


class TestSelectDim:
    def test_clear_elbow_at_three(self):
        assert select_dim([10, 9.5, 9, 0.1, 0.09, 0.08]) == 3

    def test_all_equal_returns_one(self):
        assert select_dim([4.0, 4.0, 4.0, 4.0]) == 1

    def test_single_spike(self):
        assert select_dim([100, 1, 1, 1, 1]) == 1

    def test_too_short(self):
        with pytest.raises(ValueError, match="at least 3"):
            select_dim([5, 1])

    def test_not_descending(self):
        with pytest.raises(ValueError, match="descending"):
            select_dim([1, 2, 3])

    def test_max_rank_cap(self):
        values = [10, 9.5, 9, 0.1, 0.09, 0.08]
        assert select_dim(values, max_rank=2) <= 2

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_brute_force_oracle(self, seed):
        rng = np.random.default_rng(seed)
        signal = np.sort(rng.uniform(5, 20, size=rng.integers(1, 5)))[::-1]
        noise = np.sort(rng.uniform(0, 1, size=rng.integers(3, 10)))[::-1]
        values = np.concatenate([signal, noise])
        assert select_dim(values) == select_dim_oracle(values)
        assert select_dim(values, max_rank=3) == select_dim_oracle(values, max_rank=3)


class TestSingularValues:
    def test_matches_dense_svd(self):
        a = random_symmetric(12, 2, hollow=True)
        sv = singular_values(a)
        expected = np.linalg.svd(a, compute_uv=False)
        np.testing.assert_allclose(sv, expected, atol=1e-10)

    def test_truncation(self):
        a = random_symmetric(12, 3)
        assert singular_values(a, max_rank=5).shape == (5,)
