"""Dual active-set solver: factorization cache, basis updates, GI iteration."""

import numpy as np
import pytest

from planarwbc.gisolver import (
    EQ,
    INFEASIBLE,
    LOW,
    MAX_ITER,
    OPTIMAL,
    UP,
    DenseQP,
    SolverConfig,
    SolverError,
    basis_add,
    basis_drop,
    factorize,
    solve,
    solve_qp,
    solve_stale,
)

from qp_oracle import brute_force_solve, random_feasible_qp

INF = np.inf


def spd(rng, n, cond=1.0):
    b = rng.normal(size=(n, n))
    return b @ b.T + cond * np.eye(n)


class TestFactorize:
    def test_identity(self):
        cache = factorize(np.eye(3), np.zeros((0, 3)))
        np.testing.assert_allclose(cache.L, np.eye(3))
        np.testing.assert_allclose(cache.jmat, np.eye(3))
        assert cache.age == 0

    def test_diagonal(self):
        cache = factorize(np.diag([4.0, 1.0]), np.zeros((0, 2)))
        np.testing.assert_allclose(cache.L, np.diag([2.0, 1.0]))
        np.testing.assert_allclose(cache.jmat, np.diag([0.5, 1.0]))

    def test_reconstruction(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            G = spd(rng, 8)
            cache = factorize(G, np.zeros((0, 8)))
            assert np.max(np.abs(cache.L @ cache.L.T - G)) < 1e-10
            assert np.max(np.abs(cache.jmat.T @ cache.L - np.eye(8))) < 1e-10

    def test_non_pd_rejected(self):
        with pytest.raises(SolverError, match="positive definite"):
            factorize(np.array([[1.0, 2.0], [2.0, 1.0]]), np.zeros((0, 2)))

    def test_dependent_equalities_named(self):
        C = np.array([[1.0, 0.0], [2.0, 0.0]])
        with pytest.raises(SolverError, match="equality row 1"):
            factorize(np.eye(2), C, equality_rows=[0, 1])


class TestBasisUpdates:
    def test_single_axis_normal(self):
        cache = factorize(np.eye(3), np.eye(3))
        assert basis_add(cache, np.array([1.0, 0.0, 0.0]), row=0)
        basis = cache.basis
        assert basis.R[0, 0] == pytest.approx(1.0)
        np.testing.assert_allclose(basis.M[:, 0], [1.0, 0.0, 0.0], atol=1e-15)

    def test_dependent_normal_rejected_without_change(self):
        cache = factorize(np.eye(3), np.eye(3))
        basis_add(cache, np.array([1.0, 0.0, 0.0]), row=0)
        M_before = cache.basis.M.copy()
        assert not basis_add(cache, np.array([2.0, 0.0, 0.0]), row=1)
        np.testing.assert_array_equal(cache.basis.M, M_before)

    def test_add_drop_round_trip(self):
        # the complement columns are only defined up to rotation, so compare
        # R, the basis columns, and the complement projector M2 M2'
        rng = np.random.default_rng(5)
        G = spd(rng, 6)
        cache = factorize(G, np.zeros((0, 6)))
        n0 = rng.normal(size=6)
        basis_add(cache, n0, row=0)
        q = cache.basis.size
        R0 = cache.basis.R.copy()
        M1_0 = cache.basis.M[:, :q].copy()
        P0 = cache.basis.M[:, q:] @ cache.basis.M[:, q:].T
        basis_add(cache, rng.normal(size=6), row=1)
        basis_drop(cache, 1)
        assert cache.basis.size == q
        assert np.max(np.abs(cache.basis.R - R0)) < 1e-10
        assert np.max(np.abs(cache.basis.M[:, :q] - M1_0)) < 1e-10
        P1 = cache.basis.M[:, q:] @ cache.basis.M[:, q:].T
        assert np.max(np.abs(P1 - P0)) < 1e-10

    def test_orthonormal_in_hessian_metric(self):
        # M = J Q with Q orthogonal, so M' G M must stay the identity
        rng = np.random.default_rng(9)
        G = spd(rng, 7)
        cache = factorize(G, np.zeros((0, 7)))
        for k in range(5):
            basis_add(cache, rng.normal(size=7), row=k)
        gram = cache.basis.M.T @ G @ cache.basis.M
        assert np.max(np.abs(gram - np.eye(7))) < 1e-10

    def test_random_add_drop_keeps_triangular_positive(self):
        rng = np.random.default_rng(33)
        G = spd(rng, 8)
        cache = factorize(G, np.zeros((0, 8)))
        live = 0
        for step in range(60):
            if live and rng.uniform() < 0.4:
                basis_drop(cache, int(rng.integers(0, live)))
                live -= 1
            elif live < 8:
                if basis_add(cache, rng.normal(size=8), row=step):
                    live += 1
            q = cache.basis.size
            assert q == live
            R = cache.basis.R[:q, :q]
            assert np.max(np.abs(np.tril(R, -1)), initial=0.0) < 1e-12
            assert np.all(np.diag(R) > 0.0)

    def test_drop_equality_refused(self):
        C = np.array([[1.0, 0.0]])
        cache = factorize(np.eye(2), C, equality_rows=[0])
        with pytest.raises(SolverError, match="equality"):
            basis_drop(cache, 0)

    def test_rebuilt_basis_equivalent(self):
        rng = np.random.default_rng(2)
        G = spd(rng, 5)
        normals = [rng.normal(size=5) for _ in range(4)]
        cache = factorize(G, np.zeros((0, 5)))
        for k, nrm in enumerate(normals):
            basis_add(cache, nrm, row=k)
        basis_drop(cache, 1)
        rebuilt = factorize(G, np.zeros((0, 5)))
        for k, nrm in enumerate(normals):
            if k != 1:
                basis_add(rebuilt, nrm, row=k)
        # same span: projections of random vectors agree
        for _ in range(5):
            v = rng.normal(size=5)
            q = cache.basis.size
            p1 = cache.basis.M[:, :q] @ (cache.basis.M[:, :q].T @ v)
            p2 = rebuilt.basis.M[:, :q] @ (rebuilt.basis.M[:, :q].T @ v)
            np.testing.assert_allclose(p1, p2, atol=1e-10)

    def test_cache_factors_never_mutated(self):
        rng = np.random.default_rng(4)
        G = spd(rng, 6)
        cache = factorize(G, np.zeros((0, 6)))
        L0, J0 = cache.L.copy(), cache.jmat.copy()
        for k in range(4):
            basis_add(cache, rng.normal(size=6), row=k)
        basis_drop(cache, 0)
        np.testing.assert_array_equal(cache.L, L0)
        np.testing.assert_array_equal(cache.jmat, J0)


class TestSolveBasics:
    def test_unconstrained_scalar(self):
        qp = DenseQP(G=np.array([[1.0]]), a=np.array([-1.0]),
                     C=np.zeros((0, 1)), l=np.zeros(0), u=np.zeros(0))
        sol = solve_qp(qp)
        assert sol.status == OPTIMAL
        assert sol.x[0] == pytest.approx(1.0)
        assert sol.iterations == 0

    def test_single_bound_activation(self):
        qp = DenseQP(G=np.array([[1.0]]), a=np.array([-1.0]),
                     C=np.array([[1.0]]), l=np.array([-INF]), u=np.array([0.5]))
        sol = solve_qp(qp)
        assert sol.status == OPTIMAL
        assert sol.x[0] == pytest.approx(0.5)
        assert sol.iterations == 1
        assert sol.active_set == ((0, UP),)
        assert sol.duals[0] == pytest.approx(0.5)

    def test_equality_only(self):
        qp = DenseQP(G=np.eye(2), a=np.zeros(2),
                     C=np.array([[1.0, 1.0]]), l=np.array([2.0]), u=np.array([2.0]))
        sol = solve_qp(qp)
        np.testing.assert_allclose(sol.x, [1.0, 1.0], atol=1e-12)
        assert sol.active_set == ((0, EQ),)

    def test_true_infeasibility_detected(self):
        qp = DenseQP(G=np.eye(1), a=np.zeros(1),
                     C=np.array([[1.0], [1.0]]),
                     l=np.array([1.0, -INF]), u=np.array([INF, 0.0]))
        sol = solve_qp(qp)
        assert sol.status == INFEASIBLE

    def test_max_iter_reported(self):
        rng = np.random.default_rng(1)
        qp = random_feasible_qp(rng, n_max=8, m_max=12)
        sol = solve_qp(qp, SolverConfig(max_iter=1))
        assert sol.status in (OPTIMAL, MAX_ITER)

    def test_deterministic_bitwise(self):
        rng = np.random.default_rng(12)
        qp = random_feasible_qp(rng)
        s1 = solve_qp(qp)
        s2 = solve_qp(qp)
        assert np.array_equal(s1.x, s2.x)
        assert s1.active_set == s2.active_set
        assert s1.iterations == s2.iterations

    def test_at_most_one_side_active(self):
        rng = np.random.default_rng(21)
        for _ in range(40):
            sol = solve_qp(random_feasible_qp(rng))
            rows = [r for r, _ in sol.active_set]
            assert len(rows) == len(set(rows))

    def test_objective_monotone_over_iterations(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            qp = random_feasible_qp(rng)
            lines = []
            solve_qp(qp, SolverConfig(trace=lines.append))
            objs = [float(t.split("obj=")[1]) for t in lines if "obj=" in t]
            for prev, cur in zip(objs, objs[1:]):
                assert cur >= prev - 1e-10


class TestSolveAgainstOracle:
    def test_random_qps_match_enumeration(self):
        rng = np.random.default_rng(2024)
        checked = 0
        for _ in range(150):
            qp = random_feasible_qp(rng)
            sol = solve_qp(qp)
            assert sol.status == OPTIMAL, "false infeasibility on a feasible QP"
            ref = brute_force_solve(qp)
            assert ref is not None
            assert np.max(np.abs(sol.x - ref)) < 1e-6
            checked += 1
        assert checked == 150

    def test_kkt_residuals_small(self):
        rng = np.random.default_rng(77)
        for _ in range(50):
            qp = random_feasible_qp(rng)
            sol = solve_qp(qp)
            assert sol.status == OPTIMAL
            grad = qp.G @ sol.x + qp.a
            for (row, side), dual in zip(sol.active_set, sol.duals):
                sign = -1.0 if side == UP else 1.0
                grad -= sign * dual * qp.C[row]
            assert np.max(np.abs(grad), initial=0.0) < 1e-7


class TestStaleSolves:
    def make_instance(self, seed=3):
        rng = np.random.default_rng(seed)
        qp = random_feasible_qp(rng, n_max=8, m_max=12)
        eq_rows = np.flatnonzero(qp.l == qp.u)
        cache = factorize(qp.G, qp.C, eq_rows)
        return qp, cache, rng

    def test_fixpoint_matches_solve_bitwise(self):
        qp, cache, _ = self.make_instance()
        fresh, cache = solve(qp, cache)
        stale, cache = solve_stale(qp, cache)
        assert np.array_equal(fresh.x, stale.x)
        assert fresh.active_set == stale.active_set
        assert cache.age == 1

    def test_age_counts_stale_solves(self):
        qp, cache, _ = self.make_instance()
        for expected in (1, 2, 3):
            _, cache = solve_stale(qp, cache)
            assert cache.age == expected

    def test_perturbed_linear_term_bounded_by_conditioning(self):
        qp, cache, rng = self.make_instance(seed=10)
        base, cache = solve(qp, cache)
        kappa = 1.0 / np.linalg.eigvalsh(qp.G)[0]
        for _ in range(10):
            da = 1e-4 * rng.normal(size=qp.n)
            shifted = DenseQP(qp.G, qp.a + da, qp.C, qp.l, qp.u)
            sol, cache = solve_stale(shifted, cache)
            ref = brute_force_solve(shifted)
            assert np.max(np.abs(sol.x - ref)) < 1e-6
            assert np.linalg.norm(sol.x - base.x) <= kappa * np.linalg.norm(da) + 1e-9

    def test_dimension_mismatch_rejected(self):
        qp, cache, _ = self.make_instance()
        other = DenseQP(np.eye(2), np.zeros(2), np.zeros((1, 2)),
                        np.array([-1.0]), np.array([1.0]))
        with pytest.raises(SolverError, match="match cache"):
            solve_stale(other, cache)

    def test_warm_start_reaches_same_solution(self):
        qp, cache, _ = self.make_instance(seed=6)
        cfg = SolverConfig(warm_start=True)
        cold, cache = solve(qp, cache)
        warm, cache = solve_stale(qp, cache, cfg)
        assert warm.status == OPTIMAL
        assert np.max(np.abs(warm.x - cold.x)) < 1e-9
