"""Minimax equilibria of dense matrix games by linear programming.

The solver is a plain two-phase tableau simplex with Bland's rule.  Games are
small and dense, so there is no need for anything cleverer.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .game import (
    FULLY_MIXED_TOL,
    DimensionError,
    Equilibrium,
    PayoffMatrix,
    _matrix,
    unit_vector,
)

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-11
DUALITY_TOL = 1e-7
# slack on the optimal-face constraint of the secondary LP
FACE_SLACK = 1e-13


class SolverError(RuntimeError):
    """The simplex iteration cap was hit or the LP is infeasible."""


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    objective: float
    duals: np.ndarray  # one per constraint row, ub rows first
    iterations: int


def _pivot(T: np.ndarray, basis: list[int], row: int, col: int) -> None:
    T[row] /= T[row, col]
    factor = T[:, col].copy()
    factor[row] = 0.0
    T -= np.outer(factor, T[row])
    basis[row] = col


def _run_simplex(T, basis, n_cols, allowed, max_iter, iters):
    """Maximise the objective stored in the last row of ``T`` (as ``z_j - c_j``)."""
    n_rows = T.shape[0] - 1
    while True:
        obj = T[-1, :n_cols]
        entering = -1
        for j in range(n_cols):
            if allowed[j] and obj[j] < -PIVOT_TOL:
                entering = j
                break
        if entering < 0:
            return iters
        if iters >= max_iter:
            raise SolverError(f"simplex did not converge within {max_iter} pivots")
        column = T[:n_rows, entering]
        rhs = T[:n_rows, -1]
        best_row, best_ratio = -1, np.inf
        for i in range(n_rows):
            if column[i] > PIVOT_TOL:
                ratio = rhs[i] / column[i]
                if ratio < best_ratio - 1e-14 or (
                    abs(ratio - best_ratio) <= 1e-14 and basis[i] < basis[best_row]
                ):
                    best_row, best_ratio = i, ratio
        if best_row < 0:
            raise SolverError("LP is unbounded")
        _pivot(T, basis, best_row, entering)
        iters += 1


def linprog_max(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, max_iter: int = 10_000) -> LPResult:
    """Maximise ``c^T x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``."""
    c = np.asarray(c, dtype=float)
    nv = c.size
    A_ub = np.zeros((0, nv)) if A_ub is None else np.asarray(A_ub, dtype=float)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, nv)) if A_eq is None else np.asarray(A_eq, dtype=float)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    n_ub, n_eq = len(b_ub), len(b_eq)
    n_rows = n_ub + n_eq

    # columns: original | slacks (one per ub row) | artificials (one per row)
    n_cols = nv + n_ub + n_rows
    A = np.zeros((n_rows, n_cols))
    b = np.concatenate([b_ub, b_eq])
    A[:n_ub, :nv] = A_ub
    A[n_ub:, :nv] = A_eq
    A[:n_ub, nv:nv + n_ub] = np.eye(n_ub)
    sign = np.where(b < 0, -1.0, 1.0)
    A[:, : nv + n_ub] *= sign[:, None]
    b = b * sign
    A[:, nv + n_ub:] = np.eye(n_rows)

    basis = []
    for i in range(n_rows):
        # a slack with a +1 coefficient is a ready-made basic variable
        if i < n_ub and sign[i] > 0:
            basis.append(nv + i)
        else:
            basis.append(nv + n_ub + i)

    T = np.zeros((n_rows + 1, n_cols + 1))
    T[:n_rows, :n_cols] = A
    T[:n_rows, -1] = b
    art = [j for j in basis if j >= nv + n_ub]
    allowed = np.ones(n_cols, dtype=bool)
    iters = 0

    if art:
        # phase one: maximise minus the sum of artificials
        cost = np.zeros(n_cols)
        cost[art] = -1.0
        T[-1, :n_cols] = -cost
        T[-1, -1] = 0.0
        for i, j in enumerate(basis):
            if cost[j] != 0.0:
                T[-1] += cost[j] * T[i]
        iters = _run_simplex(T, basis, n_cols, allowed, max_iter, iters)
        if T[-1, -1] < -1e-9:
            raise SolverError("LP is infeasible")
        # drive remaining zero-level artificials out of the basis where possible
        for i, j in enumerate(basis):
            if j >= nv + n_ub:
                row = T[i, : nv + n_ub]
                nz = np.flatnonzero(np.abs(row) > PIVOT_TOL)
                if nz.size:
                    _pivot(T, basis, i, int(nz[0]))
    allowed[nv + n_ub:] = False

    cost = np.zeros(n_cols)
    cost[:nv] = c
    T[-1, :] = 0.0
    T[-1, :n_cols] = -cost
    for i, j in enumerate(basis):
        if cost[j] != 0.0:
            T[-1] += cost[j] * T[i]
    iters = _run_simplex(T, basis, n_cols, allowed, max_iter, iters)

    sol = np.zeros(n_cols)
    sol[basis] = T[:n_rows, -1]
    B = A[:, basis]
    duals = np.linalg.solve(B.T, cost[basis]) * sign
    return LPResult(sol[:nv], float(c @ sol[:nv]), duals, iters)


@dataclass(frozen=True)
class SolverReport:
    equilibrium: Equilibrium
    duality_gap: float
    iterations: int
    method: str = "simplex-lp"


def _clean(p: np.ndarray) -> np.ndarray:
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def _duality_gap(a, x, y) -> float:
    return float(abs((x @ a).max() - (a @ y).min()))


def _max_min_row(a: np.ndarray, value: float, max_iter: int):
    """Maximise ``min_i x(i)`` over the row player's optimal face."""
    n, m = a.shape
    # variables: x (n), s
    c = np.zeros(n + 1)
    c[-1] = 1.0
    A_ub = np.zeros((m + n, n + 1))
    A_ub[:m, :n] = a.T
    A_ub[m:, :n] = -np.eye(n)
    A_ub[m:, -1] = 1.0
    b_ub = np.concatenate([np.full(m, value + FACE_SLACK), np.zeros(n)])
    A_eq = np.zeros((1, n + 1))
    A_eq[0, :n] = 1.0
    res = linprog_max(c, A_ub, b_ub, A_eq, [1.0], max_iter=max_iter)
    return res.x[:n], res.x[-1], res.iterations


def _max_min_col(a: np.ndarray, value: float, max_iter: int):
    """Maximise ``min_j y(j)`` over the column player's optimal face."""
    n, m = a.shape
    c = np.zeros(m + 1)
    c[-1] = 1.0
    A_ub = np.zeros((n + m, m + 1))
    A_ub[:n, :m] = -a
    A_ub[n:, :m] = -np.eye(m)
    A_ub[n:, -1] = 1.0
    b_ub = np.concatenate([np.full(n, -(value - FACE_SLACK)), np.zeros(m)])
    A_eq = np.zeros((1, m + 1))
    A_eq[0, :m] = 1.0
    res = linprog_max(c, A_ub, b_ub, A_eq, [1.0], max_iter=max_iter)
    return res.x[:m], res.x[-1], res.iterations


def solve_minimax(A, tol: float = FULLY_MIXED_TOL) -> SolverReport:
    """Solve the zero-sum game by LP.

    Among optimal strategies the most interior ones (largest smallest component)
    are returned, so fully-mixed equilibria are found whenever they exist.
    """
    a = _matrix(A)
    n, m = a.shape
    cap = 10 * (n + m) ** 2
    shifted = a + 1.0
    # row LP: max sum p  s.t.  shifted^T p <= 1, p >= 0; then x = p / sum p
    res = linprog_max(np.ones(n), shifted.T, np.ones(m), max_iter=cap)
    total = res.objective
    x = _clean(res.x / total)
    y = _clean(res.duals)
    value = 1.0 / total - 1.0
    iterations = res.iterations

    try:
        x_face, s, it2 = _max_min_row(a, value, cap)
        iterations += it2
        if s > tol:
            x_face = _clean(x_face)
            if (x_face @ a).max() <= value + DUALITY_TOL:
                x = x_face
    except SolverError as exc:
        log.warning("secondary LP failed (%s); keeping primary row strategy", exc)
    try:
        y_face, s, it3 = _max_min_col(a, value, cap)
        iterations += it3
        if s > tol:
            y_face = _clean(y_face)
            if (a @ y_face).min() >= value - DUALITY_TOL:
                y = y_face
    except SolverError as exc:
        log.warning("secondary LP failed (%s); keeping primary column strategy", exc)

    value = float(np.clip(x @ a @ y, 0.0, 1.0))
    gap = _duality_gap(a, x, y)
    if gap > DUALITY_TOL:
        raise SolverError(f"duality gap {gap:.3g} exceeds {DUALITY_TOL}")
    eq = Equilibrium.from_strategies(x, y, value, tol)
    return SolverReport(eq, gap, iterations)


def verify_equilibrium(A, eq: Equilibrium, tol: float = 1e-7) -> bool:
    a = _matrix(A)
    return bool(
        (eq.row_strategy @ a).max() <= eq.value + tol
        and (a @ eq.col_strategy).min() >= eq.value - tol
    )


def detect_fully_mixed(A, eq: Equilibrium, tol: float = FULLY_MIXED_TOL) -> tuple[bool, bool, bool]:
    """Return ``(row_fully_mixed, col_fully_mixed, interior_row_equilibrium_exists)``."""
    a = _matrix(A)
    n, m = a.shape
    row_mixed = bool(np.all(eq.row_strategy > tol))
    col_mixed = bool(np.all(eq.col_strategy > tol))
    if row_mixed:
        interior = True
    else:
        try:
            _, s, _ = _max_min_row(a, eq.value, 10 * (n + m) ** 2)
            interior = bool(s > tol)
        except SolverError:
            interior = False
    return row_mixed, col_mixed, interior


def brute_force_minimax_2x2(A) -> Equilibrium:
    """Closed-form equilibrium of a 2x2 game, used as an independent oracle."""
    a = _matrix(A)
    if a.shape != (2, 2):
        raise DimensionError(f"expected a 2x2 game, got {a.shape}")
    # pure saddle point: the row player's security level meets the column player's
    upper = a.max(axis=1)
    lower = a.min(axis=0)
    i, j = int(np.argmin(upper)), int(np.argmax(lower))
    if upper[i] == lower[j]:
        return Equilibrium.from_strategies(unit_vector(2, i), unit_vector(2, j), upper[i])
    (a11, a12), (a21, a22) = a
    d = a11 - a12 - a21 + a22
    p = (a22 - a21) / d
    q = (a22 - a12) / d
    v = (a11 * a22 - a12 * a21) / d
    return Equilibrium.from_strategies([p, 1 - p], [q, 1 - q], v)
