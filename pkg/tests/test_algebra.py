import numpy as np
import pytest

from acrsolve.algebra import (SingularBlockError, add, add_triple_product,
                              invert, matvec, multiply, rank_profile, scale)
from acrsolve.cluster import build_cluster_tree
from acrsolve.hodlr import (Tolerance, compress_dense, from_diagonal,
                            from_tridiagonal)

TOL = Tolerance(1e-12)


def frob(M):
    return np.linalg.norm(M)


def random_hodlr(n, leaf, seed, diag_shift=0.0):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n)) + diag_shift * np.eye(n)
    return compress_dense(M, build_cluster_tree(n, leaf), TOL), M


class TestMatvec:
    def test_identity(self):
        t = build_cluster_tree(16, 4)
        H = from_diagonal(np.ones(16), t)
        x = np.arange(16.0)
        np.testing.assert_array_equal(matvec(H, x), x)

    def test_diagonal(self):
        t = build_cluster_tree(10, 3)
        d = np.arange(1.0, 11.0)
        x = np.linspace(-1, 1, 10)
        np.testing.assert_allclose(matvec(from_diagonal(d, t), x), d * x)

    def test_against_dense_oracle(self):
        H, M = random_hodlr(64, 8, seed=2)
        rng = np.random.default_rng(3)
        x = rng.standard_normal(64)
        ref = M @ x
        assert np.linalg.norm(matvec(H, x) - ref) <= 1e-11 * np.linalg.norm(ref)

    def test_dimension_mismatch(self):
        H, _ = random_hodlr(16, 4, seed=1)
        with pytest.raises(ValueError):
            matvec(H, np.ones(8))


class TestAdd:
    def test_add_zero_keeps_ranks(self):
        H, M = random_hodlr(32, 8, seed=4)
        Z = from_diagonal(np.zeros(32), build_cluster_tree(32, 8))
        S = add(H, Z, TOL)
        assert S.max_rank() == H.max_rank()
        np.testing.assert_allclose(S.to_dense(), M, atol=1e-12)

    def test_add_negative_self_is_zero(self):
        H, _ = random_hodlr(32, 8, seed=5)
        S = add(H, scale(H, -1.0), TOL)
        assert S.max_rank() == 0
        assert frob(S.to_dense()) <= 1e-12

    def test_rank_two_pair_oracle(self):
        rng = np.random.default_rng(6)
        t = build_cluster_tree(32, 8)
        mats = []
        for _ in range(2):
            M = (rng.standard_normal((32, 2)) @ rng.standard_normal((2, 32))
                 + np.diag(rng.uniform(1, 2, 32)))
            mats.append(M)
        A = compress_dense(mats[0], t, TOL)
        B = compress_dense(mats[1], t, TOL)
        S = add(A, B, TOL)
        assert S.max_rank() <= 4
        ref = mats[0] + mats[1]
        assert frob(S.to_dense() - ref) <= 1e-11 * frob(ref)

    def test_tree_mismatch(self):
        A, _ = random_hodlr(32, 8, seed=7)
        B, _ = random_hodlr(32, 4, seed=8)
        with pytest.raises(ValueError):
            add(A, B, TOL)


class TestMultiply:
    def test_times_identity(self):
        H, M = random_hodlr(32, 8, seed=9)
        I = from_diagonal(np.ones(32), build_cluster_tree(32, 8))
        P = multiply(H, I, TOL)
        assert frob(P.to_dense() - M) <= 1e-11 * frob(M)

    def test_diagonal_times_diagonal_exact(self):
        t = build_cluster_tree(12, 3)
        d1, d2 = np.arange(1.0, 13.0), np.linspace(2, 3, 12)
        P = multiply(from_diagonal(d1, t), from_diagonal(d2, t), TOL)
        np.testing.assert_array_equal(P.to_dense(), np.diag(d1 * d2))

    def test_random_dense_oracle(self):
        A, M1 = random_hodlr(32, 8, seed=10)
        B, M2 = random_hodlr(32, 8, seed=11)
        P = multiply(A, B, TOL)
        ref = M1 @ M2
        assert frob(P.to_dense() - ref) <= 1e-10 * frob(ref)


class TestInvert:
    def test_identity(self):
        t = build_cluster_tree(16, 4)
        I = from_diagonal(np.ones(16), t)
        np.testing.assert_allclose(invert(I, TOL).to_dense(), np.eye(16),
                                   atol=1e-14)

    def test_diagonal(self):
        t = build_cluster_tree(16, 4)
        d = np.arange(1.0, 17.0)
        np.testing.assert_allclose(invert(from_diagonal(d, t), TOL).to_dense(),
                                   np.diag(1.0 / d), atol=1e-14)

    def test_shifted_laplacian(self):
        n = 32
        t = build_cluster_tree(n, 8)
        H = from_tridiagonal(-np.ones(n - 1), 3 * np.ones(n), -np.ones(n - 1), t)
        Hi = invert(H, Tolerance(1e-10))
        assert frob(Hi.to_dense() @ H.to_dense() - np.eye(n)) <= 1e-8

    def test_singular_leaf_reports_node(self):
        t = build_cluster_tree(8, 4)
        d = np.ones(8)
        d[6] = 0.0
        H = from_diagonal(d, t)
        with pytest.raises(SingularBlockError, match=r"\[4,8\)"):
            invert(H, TOL)

    def test_invert_twice_is_identity(self):
        H, M = random_hodlr(32, 8, seed=12, diag_shift=8.0)
        back = invert(invert(H, TOL), TOL)
        assert frob(back.to_dense() - M) <= 100 * TOL.eps * frob(M) + 1e-10


class TestAddTripleProduct:
    def setup_method(self):
        self.t = build_cluster_tree(16, 4)
        rng = np.random.default_rng(20)
        self.mats = [rng.standard_normal((16, 16)) + 8 * np.eye(16)
                     for _ in range(4)]
        self.h = [compress_dense(M, self.t, TOL) for M in self.mats]

    def test_zero_a_returns_s(self):
        Z = from_diagonal(np.zeros(16), self.t)
        out = add_triple_product(self.h[0], Z, self.h[2], self.h[3], 1, TOL)
        np.testing.assert_allclose(out.to_dense(), self.mats[0], atol=1e-10)

    def test_all_identity(self):
        I = from_diagonal(np.ones(16), self.t)
        Z = from_diagonal(np.zeros(16), self.t)
        out = add_triple_product(Z, I, I, I, 1, TOL)
        np.testing.assert_allclose(out.to_dense(), np.eye(16), atol=1e-12)

    def test_dense_oracle(self):
        S, A, B, C = self.mats
        Binv = invert(self.h[2], TOL)
        out = add_triple_product(self.h[0], self.h[1], Binv, self.h[3], -1, TOL)
        ref = S - A @ np.linalg.inv(B) @ C
        assert frob(out.to_dense() - ref) <= 1e-10 * frob(ref)

    def test_bad_sign(self):
        with pytest.raises(ValueError):
            add_triple_product(self.h[0], self.h[1], self.h[2], self.h[3], 2, TOL)


class TestProperties:
    def test_accuracy_improves_with_eps(self):
        rng = np.random.default_rng(30)
        M1 = rng.standard_normal((32, 32)) + 8 * np.eye(32)
        M2 = rng.standard_normal((32, 32)) + 8 * np.eye(32)
        t = build_cluster_tree(32, 8)
        errs = []
        for eps in (1e-2, 1e-6, 1e-10):
            tol = Tolerance(eps)
            A = compress_dense(M1, t, tol)
            B = compress_dense(M2, t, tol)
            P = multiply(A, B, tol)
            errs.append(frob(P.to_dense() - M1 @ M2))
        assert errs[0] >= errs[1] >= errs[2]

    def test_operations_leave_inputs_unmodified(self):
        A, M1 = random_hodlr(32, 8, seed=31, diag_shift=8.0)
        B, M2 = random_hodlr(32, 8, seed=32, diag_shift=8.0)
        before_a, before_b = A.to_dense(), B.to_dense()
        add(A, B, TOL)
        multiply(A, B, TOL)
        invert(A, TOL)
        matvec(A, np.ones(32))
        np.testing.assert_array_equal(A.to_dense(), before_a)
        np.testing.assert_array_equal(B.to_dense(), before_b)

    def test_rank_profile_shape(self):
        H, _ = random_hodlr(64, 8, seed=33)
        prof = rank_profile(H)
        assert len(prof.max_by_depth) == 3
        for mx, mean in zip(prof.max_by_depth, prof.mean_by_depth):
            assert mx >= mean >= 0
        assert prof.max_rank == H.max_rank()
