"""Dense tableau simplex for small, audit-friendly linear programs.

Solves  max c.x  subject to  A x = b, x >= 0.  Bland's smallest-index rule
is used for both the entering and the leaving variable, so the method cannot
cycle and is fully deterministic for a fixed column order.  Problems here
are tiny (tens of rows), so a dense tableau beats anything clever.

`certify_basis` re-derives a returned basis in exact rational arithmetic:
it solves the basic system with Fractions and checks feasibility and the
sign of every reduced cost, so a certified objective value is exact, not
solver output.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

FEASIBILITY_TOL = 1e-9
OPTIMALITY_TOL = 1e-9
DEFAULT_MAX_PIVOTS = 200_000


class SimplexError(Exception):
    pass


@dataclass
class SimplexResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    objective: float
    x: np.ndarray
    basis: list[int]
    pivots: int


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    for i in range(tableau.shape[0]):
        if i != row and tableau[i, col] != 0.0:
            tableau[i] -= tableau[i, col] * tableau[row]


def _iterate(
    tableau: np.ndarray, c: np.ndarray, basis: list[int], max_pivots: int
) -> tuple[str, int]:
    m, width = tableau.shape
    ncols = width - 1
    pivots = 0
    while True:
        y = c[basis] @ tableau[:, :ncols]
        reduced = c - y
        entering = -1
        for j in range(ncols):
            if j not in basis and reduced[j] > OPTIMALITY_TOL:
                entering = j
                break
        if entering < 0:
            return "optimal", pivots
        leaving_row = -1
        best_ratio = None
        for i in range(m):
            coef = tableau[i, entering]
            if coef > FEASIBILITY_TOL:
                ratio = tableau[i, -1] / coef
                if (
                    best_ratio is None
                    or ratio < best_ratio - FEASIBILITY_TOL
                    or (abs(ratio - best_ratio) <= FEASIBILITY_TOL
                        and basis[i] < basis[leaving_row])
                ):
                    best_ratio = ratio
                    leaving_row = i
        if leaving_row < 0:
            return "unbounded", pivots
        _pivot(tableau, leaving_row, entering)
        basis[leaving_row] = entering
        pivots += 1
        if pivots > max_pivots:
            raise SimplexError(f"exceeded {max_pivots} pivots")


def solve_lp(
    c,
    A,
    b,
    basis: list[int] | None = None,
    max_pivots: int = DEFAULT_MAX_PIVOTS,
) -> SimplexResult:
    """Maximize c.x over {A x = b, x >= 0}.

    When ``basis`` names a feasible starting basis it is used directly;
    otherwise a standard phase-1 with artificial variables runs first.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    c = np.array(c, dtype=float)
    m, ncols = A.shape
    total_pivots = 0

    if basis is not None:
        basis = list(basis)
        B = A[:, basis]
        tableau = np.hstack([np.linalg.solve(B, A), np.linalg.solve(B, b)[:, None]])
        if (tableau[:, -1] < -FEASIBILITY_TOL).any():
            raise SimplexError("supplied basis is infeasible")
        tableau[:, -1] = np.maximum(tableau[:, -1], 0.0)
    else:
        flip = b < 0
        A = A.copy()
        b = b.copy()
        A[flip] *= -1.0
        b[flip] *= -1.0
        art = np.eye(m)
        tableau = np.hstack([A, art, b[:, None]])
        c1 = np.concatenate([np.zeros(ncols), -np.ones(m)])
        basis = list(range(ncols, ncols + m))
        status, pivots = _iterate(tableau, c1, basis, max_pivots)
        total_pivots += pivots
        if status != "optimal":  # pragma: no cover - phase 1 cannot be unbounded
            raise SimplexError("phase 1 failed")
        if c1[basis] @ tableau[:, -1] < -FEASIBILITY_TOL:
            return SimplexResult("infeasible", 0.0, np.zeros(ncols), basis, total_pivots)
        # drive leftover artificials out of the basis; drop redundant rows
        keep = []
        for i in range(m):
            if basis[i] >= ncols:
                j = next(
                    (jj for jj in range(ncols) if abs(tableau[i, jj]) > FEASIBILITY_TOL),
                    None,
                )
                if j is None:
                    continue
                _pivot(tableau, i, j)
                basis[i] = j
            keep.append(i)
        tableau = tableau[keep][:, list(range(ncols)) + [ncols + m]]
        basis = [basis[i] for i in keep]

    status, pivots = _iterate(tableau, c, basis, max_pivots)
    total_pivots += pivots
    x = np.zeros(ncols)
    for i, var in enumerate(basis):
        x[var] = tableau[i, -1]
    objective = float(c @ x) if status == "optimal" else float("nan")
    return SimplexResult(status, objective, x, list(basis), total_pivots)


# --- exact rational certification --------------------------------------------


@dataclass
class BasisCertificate:
    feasible: bool
    optimal: bool
    objective: Fraction
    x: dict[int, Fraction]  # basic variable -> exact value


def _solve_exact(B: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    m = len(B)
    M = [row[:] + [v] for row, v in zip(B, rhs)]
    for col in range(m):
        pivot_row = next((r for r in range(col, m) if M[r][col] != 0), None)
        if pivot_row is None:
            raise SimplexError("singular basis in exact certification")
        M[col], M[pivot_row] = M[pivot_row], M[col]
        inv = Fraction(1, 1) / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for r in range(m):
            if r != col and M[r][col] != 0:
                factor = M[r][col]
                M[r] = [a - factor * bb for a, bb in zip(M[r], M[col])]
    return [M[r][m] for r in range(m)]


def certify_basis(c, A, b, basis: list[int]) -> BasisCertificate:
    """Exact feasibility/optimality check of a basis; inputs may be int or Fraction."""
    m = len(A)
    frac = lambda v: v if isinstance(v, Fraction) else Fraction(v)
    Bcols = [[frac(A[i][j]) for j in basis] for i in range(m)]
    rhs = [frac(v) for v in b]
    x_basic = _solve_exact(Bcols, rhs)
    feasible = all(v >= 0 for v in x_basic)
    cB = [frac(c[j]) for j in basis]
    # y solves y.B = c_B, i.e. B^T y = c_B
    Bt = [[Bcols[i][j] for i in range(m)] for j in range(m)]
    y = _solve_exact(Bt, cB)
    ncols = len(A[0])
    optimal = True
    basis_set = set(basis)
    for j in range(ncols):
        if j in basis_set:
            continue
        reduced = frac(c[j]) - sum(y[i] * frac(A[i][j]) for i in range(m))
        if reduced > 0:
            optimal = False
            break
    objective = sum(cb * xv for cb, xv in zip(cB, x_basic))
    return BasisCertificate(
        feasible=feasible,
        optimal=optimal,
        objective=objective,
        x=dict(zip(basis, x_basic)),
    )
