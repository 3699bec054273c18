"""Dense strictly convex QP solver: dual active-set with cached factors.

Solves  min 1/2 x'Gx + a'x  subject to  l <= Cx <= u  (rows with l = u are
equalities). The method starts from the unconstrained minimum, which is dual
feasible, and activates one violated constraint at a time, taking the step
that either satisfies it (full step) or drives an active multiplier to zero
(partial step, that constraint is dropped). Double-sided rows are handled
natively: each side is a candidate activation with the row normal flipped.

The expensive work is concentrated in `factorize`: the Cholesky factor
L of G, its inverse transpose J, and the QR data of the pre-activated
equality basis. A solve against frozen G and C reuses all of it, so
refreshing only the vectors a, l, u between solves is cheap. The basis QR
is maintained incrementally by plane rotations on constraint add/drop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import solve_triangular
from scipy.linalg.lapack import dtrtri

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITER = "max_iter"

EQ = "eq"
LOW = "lo"
UP = "up"

# relative threshold below which a candidate normal counts as dependent
_DEP_TOL = 1e-10


class SolverError(RuntimeError):
    """Raised for structural failures (non-PD Hessian, dependent equalities)."""


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and switches for the dual active-set iteration.

    tol_c is the base feasibility tolerance; each row is checked against
    tol_c * (1 + ||row||). tol_d guards dual ratios. warm_start reuses the
    previous solve's active set instead of resetting to the equality basis.
    refactor_threshold is purely diagnostic: a trace note is emitted when a
    stale cache older than this is used.
    """

    tol_c: float = 1e-8
    tol_d: float = 1e-10
    max_iter: int = 500
    warm_start: bool = False
    refactor_threshold: int | None = None
    trace: Callable[[str], None] | None = None

    def __post_init__(self):
        if self.tol_c <= 0 or self.tol_d <= 0:
            raise ValueError("solver tolerances must be positive")


@dataclass(frozen=True)
class DenseQP:
    """Plain canonical QP data, convenient for standalone solver use."""

    G: np.ndarray
    a: np.ndarray
    C: np.ndarray
    l: np.ndarray
    u: np.ndarray

    @property
    def n(self) -> int:
        return self.G.shape[0]

    @property
    def m(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class QPSolution:
    x: np.ndarray
    active_set: tuple[tuple[int, str], ...]
    duals: np.ndarray
    iterations: int
    status: str


class ActiveBasis:
    """QR data of the active-constraint normals in Hessian metric.

    Maintains M = J Q and the upper-triangular R of the factorization
    J' N = Q R, where N stacks the signed normals of the active set. The
    first `size` columns of M span the active normals' image; the remaining
    columns span its orthogonal complement. R keeps a positive diagonal.
    """

    __slots__ = ("M", "R", "rows", "sides", "n_eq")

    def __init__(self, jmat: np.ndarray):
        n = jmat.shape[0]
        self.M = jmat.copy()
        self.R = np.zeros((n, n))
        self.rows: list[int] = []
        self.sides: list[str] = []
        self.n_eq = 0

    @property
    def size(self) -> int:
        return len(self.rows)

    def clone(self) -> "ActiveBasis":
        other = ActiveBasis.__new__(ActiveBasis)
        other.M = self.M.copy()
        other.R = self.R.copy()
        other.rows = list(self.rows)
        other.sides = list(self.sides)
        other.n_eq = self.n_eq
        return other

    def projected(self, normal: np.ndarray) -> np.ndarray:
        """Coordinates of J' n in the current Q basis (w = M' n)."""
        return self.M.T @ normal

    def add(self, normal: np.ndarray, row: int, side: str) -> bool:
        """Append a constraint normal; False if it is dependent (no change)."""
        n = self.M.shape[0]
        q = self.size
        if q == n:
            return False
        w = self.M.T @ normal
        rho = math.sqrt(float(w[q:] @ w[q:]))
        if rho <= _DEP_TOL * max(1.0, float(np.abs(w).max())):
            return False
        for k in range(n - 1, q, -1):
            b = w[k]
            if b == 0.0:
                continue
            a = w[k - 1]
            r = math.hypot(a, b)
            c, s = a / r, b / r
            w[k - 1], w[k] = r, 0.0
            mk1 = self.M[:, k - 1].copy()
            self.M[:, k - 1] = c * mk1 + s * self.M[:, k]
            self.M[:, k] = -s * mk1 + c * self.M[:, k]
        if w[q] < 0.0:  # possible only when no rotation ran; fix the sign
            w[q] = -w[q]
            self.M[:, q] = -self.M[:, q]
        self.R[:q, q] = w[:q]
        self.R[q, q] = w[q]
        if side == EQ:
            if q != self.n_eq:
                raise SolverError("equality rows must be activated first")
            self.n_eq += 1
        self.rows.append(row)
        self.sides.append(side)
        return True

    def drop(self, pos: int) -> None:
        """Remove the basis member at `pos`, re-triangularizing R."""
        if pos < self.n_eq:
            raise SolverError("cannot drop an equality constraint")
        q = self.size
        if not self.n_eq <= pos < q:
            raise SolverError(f"basis position {pos} out of range")
        self.R[:, pos:q - 1] = self.R[:, pos + 1:q]
        self.R[:, q - 1] = 0.0
        for k in range(pos, q - 1):
            a, b = self.R[k, k], self.R[k + 1, k]
            r = math.hypot(a, b)
            if r == 0.0:
                continue
            c, s = a / r, b / r
            rk = self.R[k, k:q - 1].copy()
            self.R[k, k:q - 1] = c * rk + s * self.R[k + 1, k:q - 1]
            self.R[k + 1, k:q - 1] = -s * rk + c * self.R[k + 1, k:q - 1]
            self.R[k + 1, k] = 0.0
            mk = self.M[:, k].copy()
            self.M[:, k] = c * mk + s * self.M[:, k + 1]
            self.M[:, k + 1] = -s * mk + c * self.M[:, k + 1]
            if self.R[k, k] < 0.0:
                self.R[k, k:q - 1] = -self.R[k, k:q - 1]
                self.M[:, k] = -self.M[:, k]
        del self.rows[pos]
        del self.sides[pos]


@dataclass
class FactorCache:
    """Reusable matrix work for one (G, C) pair.

    L is the Cholesky factor of G, jmat its inverse transpose, and eq_basis
    the QR data with all equality rows pre-activated. `basis` carries the
    final active set of the last solve for optional warm starts. `age`
    counts control steps since factorization.
    """

    L: np.ndarray
    jmat: np.ndarray
    eq_rows: tuple[int, ...]
    eq_basis: ActiveBasis
    basis: ActiveBasis
    age: int
    n: int
    m: int


def factorize(G: np.ndarray, C: np.ndarray, equality_rows=()) -> FactorCache:
    """Precompute L, J = L^-T, and the equality-basis QR for (G, C)."""
    G = np.asarray(G, dtype=float)
    C = np.asarray(C, dtype=float) if C is not None else np.zeros((0, G.shape[0]))
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"Hessian is not positive definite: {exc}") from exc
    inv_l, info = dtrtri(L, lower=1)
    if info != 0:
        raise SolverError(f"triangular inversion failed (info={info})")
    jmat = inv_l.T.copy()
    basis = ActiveBasis(jmat)
    for row in equality_rows:
        if not basis.add(C[row], int(row), EQ):
            raise SolverError(
                f"equality row {int(row)} is linearly dependent on earlier equalities")
    cache = FactorCache(L=L, jmat=jmat, eq_rows=tuple(int(r) for r in equality_rows),
                        eq_basis=basis, basis=basis.clone(), age=0,
                        n=G.shape[0], m=C.shape[0])
    return cache


def basis_add(cache: FactorCache, normal: np.ndarray, row: int = -1,
              side: str = LOW) -> bool:
    """Add a constraint normal to the cache's current basis.

    Returns False (rejection signal) when the normal is linearly dependent
    on the current basis; the cache is left unchanged in that case.
    """
    return cache.basis.add(np.asarray(normal, dtype=float), row, side)


def basis_drop(cache: FactorCache, position: int) -> None:
    """Drop the (non-equality) basis member at `position`."""
    cache.basis.drop(position)


def solve(qp, cache: FactorCache, cfg: SolverConfig = SolverConfig()):
    """Solve against a freshly factorized cache. Returns (solution, cache)."""
    sol = _gi_solve(qp, cache, cfg)
    return sol, cache


def solve_stale(qp, cache: FactorCache, cfg: SolverConfig = SolverConfig()):
    """Solve with frozen matrices: reuse L, J, and the equality basis.

    The qp's vectors a, l, u may be newer than the matrices the cache was
    built from; G and C must be the cached snapshot. Increments cache.age.
    """
    if qp.C.shape != (cache.m, cache.n):
        raise SolverError(
            f"constraint matrix {qp.C.shape} does not match cache ({cache.m}, {cache.n})")
    if cfg.trace is not None and cfg.refactor_threshold is not None \
            and cache.age >= cfg.refactor_threshold:
        cfg.trace(f"note stale-cache age={cache.age} beyond "
                  f"refactor-threshold={cfg.refactor_threshold}")
    sol = _gi_solve(qp, cache, cfg)
    cache.age += 1
    return sol, cache


def solve_qp(qp, cfg: SolverConfig = SolverConfig()) -> QPSolution:
    """Convenience: factorize and solve a DenseQP in one call."""
    eq_rows = np.flatnonzero(qp.l == qp.u)
    cache = factorize(qp.G, qp.C, eq_rows)
    sol, _ = solve(qp, cache, cfg)
    return sol


def _project_onto_basis(x, basis, C, l, u, duals):
    """Move x to the minimizer subject to the basis rows being active."""
    q = basis.size
    if q == 0:
        return x
    rows = np.array(basis.rows)
    signs = np.array([1.0 if s != UP else -1.0 for s in basis.sides])
    bvals = np.array([l[r] if s != UP else -u[r]
                      for r, s in zip(basis.rows, basis.sides)])
    resid = bvals - signs * (C[rows] @ x)
    rq = basis.R[:q, :q]
    v = solve_triangular(rq, resid, lower=False, trans=1)
    x = x + basis.M[:, :q] @ v
    duals[:q] = solve_triangular(rq, v, lower=False)
    return x


def _gi_solve(qp, cache: FactorCache, cfg: SolverConfig) -> QPSolution:
    a = np.asarray(qp.a, dtype=float)
    C = np.asarray(qp.C, dtype=float)
    l = np.asarray(qp.l, dtype=float)
    u = np.asarray(qp.u, dtype=float)
    n, m = cache.n, cache.m
    L = cache.L
    trace = cfg.trace

    if cfg.warm_start and cache.basis is not None:
        basis = cache.basis.clone()
    else:
        basis = cache.eq_basis.clone()
    duals = np.zeros(n)

    # unconstrained minimum via two triangular solves, then basis projection
    y = solve_triangular(L, -a, lower=True)
    x = solve_triangular(L, y, lower=True, trans=1)
    x = _project_onto_basis(x, basis, C, l, u, duals)
    if cfg.warm_start:
        # a carried-over active set may start dual infeasible; shed offenders
        while basis.size > basis.n_eq:
            ineq = duals[basis.n_eq:basis.size]
            worst = int(np.argmin(ineq))
            if ineq[worst] >= -cfg.tol_d:
                break
            basis.drop(basis.n_eq + worst)
            duals[:] = 0.0
            y = solve_triangular(L, -a, lower=True)
            x = solve_triangular(L, y, lower=True, trans=1)
            x = _project_onto_basis(x, basis, C, l, u, duals)

    def objective(xv):
        w = L.T @ xv
        return 0.5 * float(w @ w) + float(a @ xv)

    row_scale = 1.0 + np.sqrt(np.einsum("ij,ij->i", C, C)) if m else np.ones(0)
    iters = 0
    status = OPTIMAL

    while True:
        if m == 0:
            break
        cx = C @ x
        low_viol = (l - cx) / row_scale
        up_viol = (cx - u) / row_scale
        viol = np.maximum(low_viol, up_viol)
        for brow, bside in zip(basis.rows, basis.sides):
            viol[brow] = -np.inf
        pick = int(np.argmax(viol))
        if viol[pick] <= cfg.tol_c:
            break
        if iters >= cfg.max_iter:
            status = MAX_ITER
            break
        side = LOW if low_viol[pick] >= up_viol[pick] else UP
        sign = 1.0 if side == LOW else -1.0
        normal = sign * C[pick]
        bval = sign * (l[pick] if side == LOW else u[pick])
        u_plus = 0.0

        while True:
            q = basis.size
            w = basis.M.T @ normal
            w2 = w[q:]
            zt_n = float(w2 @ w2)
            dep_cut = (_DEP_TOL * max(1.0, float(np.abs(w).max()))) ** 2
            have_z = zt_n > dep_cut
            r = None
            t1, blocker = np.inf, -1
            if q:
                r = solve_triangular(basis.R[:q, :q], w[:q], lower=False)
                for j in range(basis.n_eq, q):
                    if r[j] > cfg.tol_d:
                        ratio = duals[j] / r[j]
                        if ratio < t1:
                            t1, blocker = ratio, j
            violation = bval - float(normal @ x)
            t2 = violation / zt_n if have_z else np.inf

            if not np.isfinite(t1) and not np.isfinite(t2):
                status = INFEASIBLE
                if trace is not None:
                    trace(f"it={iters} infeasible row={pick} side={side}")
                break
            t = min(t1, t2)
            if have_z:
                x = x + t * (basis.M[:, q:] @ w2)
            if q:
                duals[:q] -= t * r
            u_plus += t
            iters += 1
            if t2 <= t1:
                if not basis.add(normal, pick, side):
                    raise SolverError(
                        f"activation of row {pick} unexpectedly dependent")
                duals[basis.size - 1] = u_plus
                if trace is not None:
                    trace(f"it={iters} add row={pick} side={side} "
                          f"t1={t1:.6g} t2={t2:.6g} obj={objective(x):.12g}")
                break
            dropped_row = basis.rows[blocker]
            basis.drop(blocker)
            duals[blocker:q - 1] = duals[blocker + 1:q]
            duals[q - 1] = 0.0
            if trace is not None:
                trace(f"it={iters} drop row={dropped_row} t1={t1:.6g} "
                      f"t2={t2:.6g} obj={objective(x):.12g}")
            if iters >= cfg.max_iter:
                status = MAX_ITER
                break
        if status in (INFEASIBLE, MAX_ITER):
            break

    cache.basis = basis
    active = tuple(zip(basis.rows, basis.sides))
    return QPSolution(x=x, active_set=active, duals=duals[:basis.size].copy(),
                      iterations=iters, status=status)
