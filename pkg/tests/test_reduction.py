import numpy as np
import pytest

from acrsolve.algebra import SingularBlockError
from acrsolve.hodlr import Tolerance
from acrsolve.oracles import dense_lu_solve, relative_residual
from acrsolve.problems import (BlockTridiagSystem, Grid2D, assemble_full,
                               checkerboard_kappa, convdiff2d, helmholtz2d,
                               poisson2d)
from acrsolve.reduction import (EliminationRecord, acr_solve, backsubstitute,
                                dense_bcr_solve, expected_levels, lift_system,
                                reduce_level)

TOL = Tolerance(1e-12)


def random_system(m, n, seed, shift=6.0):
    """Diagonally dominant random block tridiagonal system."""
    rng = np.random.default_rng(seed)
    return BlockTridiagSystem(
        m, n,
        rng.standard_normal((m, n - 1)),
        rng.standard_normal((m, n)) + shift,
        rng.standard_normal((m, n - 1)),
        rng.standard_normal((m - 1, n)),
        rng.standard_normal((m - 1, n)),
        rng.standard_normal(m * n),
    )


def schur_of_even(sys_):
    """Independent oracle: Schur complement of the even-indexed blocks in
    the assembled matrix, plus the reduced right-hand side."""
    A = assemble_full(sys_).toarray()
    n = sys_.block_dim
    even = [i for i in range(sys_.n_blocks) if i % 2 == 0]
    odd = [i for i in range(sys_.n_blocks) if i % 2 == 1]
    ev = np.concatenate([np.arange(i * n, (i + 1) * n) for i in even])
    od = np.concatenate([np.arange(i * n, (i + 1) * n) for i in odd])
    Aee_inv = np.linalg.inv(A[np.ix_(ev, ev)])
    S = A[np.ix_(od, od)] - A[np.ix_(od, ev)] @ Aee_inv @ A[np.ix_(ev, od)]
    g = sys_.rhs[od] - A[np.ix_(od, ev)] @ (Aee_inv @ sys_.rhs[ev])
    return S, g


class TestLift:
    def test_reconstructs_full_matrix(self):
        sys_ = random_system(5, 8, seed=1)
        level = lift_system(sys_, leaf_size=4)
        np.testing.assert_allclose(level.to_dense(),
                                   assemble_full(sys_).toarray(), atol=1e-14)
        np.testing.assert_array_equal(level.rhs_vector(), sys_.rhs)

    def test_block_ranks(self):
        level = lift_system(poisson2d(Grid2D(8)), leaf_size=4)
        assert all(d.max_rank() <= 1 for d in level.D)
        assert all(e.max_rank() == 0 for e in level.E if e is not None)
        assert all(f.max_rank() == 0 for f in level.F if f is not None)
        assert level.E[0] is None and level.F[-1] is None

    def test_level_counter_starts_at_zero(self):
        assert lift_system(random_system(4, 4, seed=2), leaf_size=4).level == 0


class TestReduceLevel:
    @pytest.mark.parametrize("m", [4, 5, 6, 7])
    def test_matches_schur_oracle(self, m):
        sys_ = random_system(m, 8, seed=m)
        level = lift_system(sys_, leaf_size=4)
        reduced, _ = reduce_level(level, TOL)
        S, g = schur_of_even(sys_)
        assert reduced.n_blocks == m // 2
        assert reduced.level == 1
        ref = np.linalg.norm(S)
        assert np.linalg.norm(reduced.to_dense() - S) <= 1e-10 * ref
        np.testing.assert_allclose(reduced.rhs_vector(), g, atol=1e-10)

    def test_poisson_schur_oracle(self):
        sys_ = poisson2d(Grid2D(8))
        reduced, _ = reduce_level(lift_system(sys_, leaf_size=4), TOL)
        S, g = schur_of_even(sys_)
        assert (np.linalg.norm(reduced.to_dense() - S)
                <= 1e-10 * np.linalg.norm(S))

    def test_record_holds_even_data(self):
        sys_ = random_system(6, 4, seed=9)
        level = lift_system(sys_, leaf_size=4)
        _, entry = reduce_level(level, TOL)
        assert entry.even == [0, 2, 4]
        assert entry.odd == [1, 3, 5]
        assert len(entry.Dinv) == 3
        for idx, i in enumerate(entry.even):
            got = entry.Dinv[idx].to_dense()
            ref = np.linalg.inv(sys_.dense_block_d(i))
            assert np.linalg.norm(got - ref) <= 1e-10 * np.linalg.norm(ref)

    def test_single_block_rejected(self):
        level = lift_system(random_system(4, 4, seed=3), leaf_size=4)
        level.D, level.E, level.F, level.f = (level.D[:1], level.E[:1],
                                              level.F[:1], level.f[:1])
        with pytest.raises(ValueError):
            reduce_level(level, TOL)

    def test_inversion_order_is_validated(self):
        level = lift_system(random_system(6, 4, seed=4), leaf_size=4)
        with pytest.raises(ValueError):
            reduce_level(level, TOL, inversion_order=[0, 0, 1])

    def test_inversion_order_does_not_change_result(self):
        sys_ = random_system(7, 8, seed=5)
        a, _ = reduce_level(lift_system(sys_, leaf_size=4), TOL)
        b, _ = reduce_level(lift_system(sys_, leaf_size=4), TOL,
                            inversion_order=[3, 1, 0, 2])
        np.testing.assert_array_equal(a.to_dense(), b.to_dense())
        np.testing.assert_array_equal(a.rhs_vector(), b.rhs_vector())

    def test_singular_pivot_identifies_block(self):
        sys_ = random_system(4, 4, seed=6)
        sys_.D_diag[2] = 0.0
        sys_.D_sub[2] = 0.0
        sys_.D_sup[2] = 0.0
        level = lift_system(sys_, leaf_size=2)
        with pytest.raises(SingularBlockError, match="pivot block 2"):
            reduce_level(level, TOL)


class TestBacksubstitute:
    def test_empty_record_passthrough(self):
        segs = [np.arange(4.0), np.arange(4.0, 8.0)]
        np.testing.assert_array_equal(
            backsubstitute(EliminationRecord(), segs), np.arange(8.0))

    def test_one_level_recovers_dense_solution(self):
        sys_ = random_system(6, 6, seed=7)
        A = assemble_full(sys_).toarray()
        u_ref = dense_lu_solve(A, sys_.rhs)
        level = lift_system(sys_, leaf_size=3)
        reduced, entry = reduce_level(level, TOL)
        record = EliminationRecord(entries=[entry])
        u_odd = dense_lu_solve(reduced.to_dense(), reduced.rhs_vector())
        n = sys_.block_dim
        segs = [u_odd[i * n:(i + 1) * n] for i in range(reduced.n_blocks)]
        u = backsubstitute(record, segs)
        assert np.linalg.norm(u - u_ref) <= 1e-9 * np.linalg.norm(u_ref)

    def test_segment_count_mismatch(self):
        sys_ = random_system(6, 4, seed=8)
        _, entry = reduce_level(lift_system(sys_, leaf_size=4), TOL)
        with pytest.raises(ValueError):
            backsubstitute(EliminationRecord(entries=[entry]),
                           [np.zeros(4)] * 2)


class TestExpectedLevels:
    def test_values(self):
        assert expected_levels(64, 1) == 6
        assert expected_levels(65, 1) == 6
        assert expected_levels(128, 1) == 7
        assert expected_levels(64, 4) == 4
        assert expected_levels(13, 1) == 3   # 13 -> 6 -> 3 -> 1
        assert expected_levels(3, 4) == 0

    @pytest.mark.parametrize("m,cutoff", [(16, 1), (13, 1), (20, 4), (7, 2)])
    def test_matches_solver(self, m, cutoff):
        sys_ = random_system(m, 4, seed=m + cutoff)
        _, report = acr_solve(sys_, TOL, cutoff_blocks=cutoff, leaf_size=4)
        assert report.levels == expected_levels(m, cutoff)
        assert report.cutoff_blocks <= cutoff


class TestAcrSolve:
    @pytest.mark.parametrize("build,label", [
        (lambda g: poisson2d(g), "poisson"),
        (lambda g: poisson2d(g, checkerboard_kappa()), "checkerboard"),
        (lambda g: helmholtz2d(g, 1.0), "helmholtz"),
        (lambda g: convdiff2d(g, 100.0), "convdiff"),
    ])
    def test_matches_dense_lu(self, build, label):
        sys_ = build(Grid2D(16))
        u_ref = dense_lu_solve(assemble_full(sys_).toarray(), sys_.rhs)
        u, report = acr_solve(sys_, TOL, leaf_size=8)
        assert np.linalg.norm(u - u_ref) <= 1e-8 * np.linalg.norm(u_ref)
        assert report.residual <= 1e-9

    def test_report_residual_is_honest(self):
        sys_ = poisson2d(Grid2D(16))
        u, report = acr_solve(sys_, Tolerance(1e-6), leaf_size=8)
        assert np.isclose(report.residual, relative_residual(sys_, u))

    def test_cutoff_variants_agree(self):
        sys_ = poisson2d(Grid2D(16))
        u1, r1 = acr_solve(sys_, TOL, cutoff_blocks=1, leaf_size=8)
        u4, r4 = acr_solve(sys_, TOL, cutoff_blocks=4, leaf_size=8)
        assert r4.levels == r1.levels - 2
        assert r4.cutoff_dim == 4 * 16
        assert np.linalg.norm(u1 - u4) <= 1e-9 * np.linalg.norm(u1)

    def test_forward_reversed_orders_agree(self):
        sys_ = convdiff2d(Grid2D(16), 50.0)
        u_f, _ = acr_solve(sys_, TOL, leaf_size=8, inversion_order="forward")
        u_r, _ = acr_solve(sys_, TOL, leaf_size=8, inversion_order="reversed")
        np.testing.assert_array_equal(u_f, u_r)

    def test_report_fields(self):
        sys_ = poisson2d(Grid2D(8))
        _, report = acr_solve(sys_, TOL, leaf_size=4)
        d = report.to_dict()
        for key in ("residual", "levels", "max_rank", "storage_bytes",
                    "reduce_ms", "backsub_ms", "threads"):
            assert key in d
        assert len(report.per_level_ranks) == report.levels + 1
        assert report.max_rank >= 1
        assert report.storage_bytes > 0
        assert report.reduce_ms >= 0 and report.backsub_ms >= 0

    def test_invalid_arguments(self):
        sys_ = poisson2d(Grid2D(4))
        with pytest.raises(ValueError):
            acr_solve(sys_, TOL, cutoff_blocks=0)
        with pytest.raises(ValueError):
            acr_solve(sys_, TOL, inversion_order="random")

    def test_looser_eps_larger_residual(self):
        sys_ = poisson2d(Grid2D(32))
        res = []
        for eps in (1e-2, 1e-6, 1e-10):
            _, report = acr_solve(sys_, Tolerance(eps), leaf_size=8)
            res.append(report.residual)
        assert res[0] > res[2]
        assert res[2] <= 1e-8


class TestDenseBcr:
    @pytest.mark.parametrize("m", [4, 5, 7, 16])
    def test_matches_dense_lu(self, m):
        sys_ = random_system(m, 6, seed=40 + m)
        u_ref = dense_lu_solve(assemble_full(sys_).toarray(), sys_.rhs)
        u = dense_bcr_solve(sys_)
        assert np.linalg.norm(u - u_ref) <= 1e-10 * np.linalg.norm(u_ref)

    def test_agrees_with_hodlr_path(self):
        sys_ = helmholtz2d(Grid2D(16), 2.0)
        u_dense = dense_bcr_solve(sys_)
        u_h, _ = acr_solve(sys_, TOL, leaf_size=8)
        assert (np.linalg.norm(u_h - u_dense)
                <= 1e-8 * np.linalg.norm(u_dense))
