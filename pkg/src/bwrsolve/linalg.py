"""Exact rational linear algebra.

Systems are cleared to integers row by row and eliminated with fraction-free
(Bareiss) row operations, so intermediate entries stay integral and bounded by
minors instead of blowing up the way naive rational elimination does. All
matrices here are small (game-sized), so no pivot heuristics beyond "first
nonzero" are needed.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm

from .errors import SingularSystemError

Row = list[Fraction]


def _integer_rows(rows: list[Row]) -> list[list[int]]:
    """Scale each row by its denominator lcm; scaling rows preserves solutions."""
    out = []
    for row in rows:
        mult = lcm(*(f.denominator for f in row)) if row else 1
        out.append([int(f * mult) for f in row])
    return out


def _eliminate(mat: list[list[int]]) -> tuple[list[list[int]], list[int]]:
    """Fraction-free forward elimination.

    Returns the eliminated matrix and the list of pivot column indices, one
    per pivot row. The matrix may include appended right-hand-side columns;
    pass ``ncols`` worth of genuine variables to the callers below.
    """
    mat = [row[:] for row in mat]
    nrows = len(mat)
    ncols = len(mat[0]) if nrows else 0
    pivots: list[int] = []
    prev = 1
    r = 0
    for c in range(ncols):
        pivot_row = None
        for i in range(r, nrows):
            if mat[i][c] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        if pivot_row != r:
            mat[r], mat[pivot_row] = mat[pivot_row], mat[r]
        p = mat[r][c]
        for i in range(r + 1, nrows):
            f = mat[i][c]
            for j in range(c, ncols):
                mat[i][j] = (mat[i][j] * p - mat[r][j] * f) // prev
        prev = p
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return mat, pivots


def solve_unique(a: list[Row], b: Row) -> list[Fraction]:
    """Solve the square system ``a x = b`` with a unique solution.

    Raises SingularSystemError when the matrix is singular.
    """
    n = len(a)
    if any(len(row) != n for row in a) or len(b) != n:
        raise ValueError("solve_unique expects a square system")
    aug = _integer_rows([list(row) + [rhs] for row, rhs in zip(a, b)])
    mat, pivots = _eliminate(aug)
    if len(pivots) != n or pivots != list(range(n)):
        raise SingularSystemError("matrix is singular")
    x: list[Fraction] = [Fraction(0)] * n
    for r in range(n - 1, -1, -1):
        s = Fraction(mat[r][n])
        for c in range(r + 1, n):
            s -= mat[r][c] * x[c]
        x[r] = s / mat[r][r]
    return x


def matrix_rank(a: list[Row]) -> int:
    if not a:
        return 0
    mat = _integer_rows([list(row) for row in a])
    _, pivots = _eliminate(mat)
    return len(pivots)


def nullspace_vector(a: list[Row], ncols: int) -> list[Fraction] | None:
    """Return one nonzero rational vector with ``a d = 0``, or None if rank is full.

    With no rows at all, the first unit vector is returned.
    """
    if not a:
        if ncols == 0:
            return None
        return [Fraction(1)] + [Fraction(0)] * (ncols - 1)
    mat = _integer_rows([list(row) for row in a])
    mat, pivots = _eliminate(mat)
    if len(pivots) >= ncols:
        return None
    pivot_set = set(pivots)
    free = next(c for c in range(ncols) if c not in pivot_set)
    d: list[Fraction] = [Fraction(0)] * ncols
    d[free] = Fraction(1)
    # Back-substitute pivot variables against the single free variable.
    for r in range(len(pivots) - 1, -1, -1):
        c = pivots[r]
        s = Fraction(0)
        for j in range(c + 1, ncols):
            s += mat[r][j] * d[j]
        d[c] = -s / mat[r][c]
    return d
