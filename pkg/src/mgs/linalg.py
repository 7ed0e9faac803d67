"""Exact rational dense linear algebra: rank, nullspace, solve, inverse.

Matrices are lists of row lists holding gmpy2.mpq entries. Everything here
is fraction-exact Gaussian elimination with partial row selection; sizes in
this package stay small (a few hundred rows at most).
"""

from __future__ import annotations

from .rationals import Q, QONE, QZERO


def _copy(mat):
    return [list(map(Q, row)) for row in mat]


def row_echelon(mat):
    """In-place echelon form; returns (matrix, pivot column list, row permutation)."""
    m = _copy(mat)
    rows = len(m)
    cols = len(m[0]) if rows else 0
    pivots = []
    perm = list(range(rows))
    r = 0
    for c in range(cols):
        sel = None
        for i in range(r, rows):
            if m[i][c] != 0:
                sel = i
                break
        if sel is None:
            continue
        m[r], m[sel] = m[sel], m[r]
        perm[r], perm[sel] = perm[sel], perm[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                mr = m[r]
                m[i] = [a - f * b for a, b in zip(m[i], mr)]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m, pivots, perm


def rank(mat) -> int:
    if not mat:
        return 0
    _, pivots, _ = row_echelon(mat)
    return len(pivots)


def affine_rank(points) -> int:
    """Dimension of the affine hull of the given points."""
    pts = list(points)
    if len(pts) <= 1:
        return 0
    base = pts[0]
    diffs = [[Q(a) - Q(b) for a, b in zip(p, base)] for p in pts[1:]]
    return rank(diffs)


def nullspace(mat):
    """Basis (list of vectors) of the right nullspace of mat."""
    if not mat:
        return []
    cols = len(mat[0])
    red, pivots, _ = row_echelon(mat)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [QZERO] * cols
        vec[fc] = QONE
        for r, pc in enumerate(pivots):
            vec[pc] = -red[r][fc]
        basis.append(vec)
    return basis


def solve_particular(mat, rhs):
    """One solution of mat x = rhs, or None when inconsistent."""
    rows = len(mat)
    cols = len(mat[0]) if rows else 0
    aug = [list(map(Q, row)) + [Q(v)] for row, v in zip(mat, rhs)]
    red, pivots, _ = row_echelon(aug)
    # ensure no pivot landed in the rhs column
    for r in range(len(pivots)):
        if pivots[r] == cols:
            return None
    # rows beyond the pivot count must be all-zero including rhs
    for r in range(len(pivots), rows):
        if any(v != 0 for v in red[r]):
            return None
    x = [QZERO] * cols
    for r, pc in enumerate(pivots):
        x[pc] = red[r][cols]
    return x


def invert(mat):
    """Exact inverse of a square nonsingular matrix; raises on singularity."""
    n = len(mat)
    aug = [list(map(Q, row)) + [QONE if i == j else QZERO for j in range(n)]
           for i, row in enumerate(mat)]
    red, pivots, _ = row_echelon(aug)
    if pivots != list(range(n)):
        raise ValueError("matrix is singular")
    return [row[n:] for row in red]


def independent_rows(mat, need: int):
    """Indices of `need` linearly independent rows, or None if rank < need."""
    chosen = []
    basis = []  # reduced independent rows so far
    for idx, row in enumerate(mat):
        v = list(map(Q, row))
        for b in basis:
            # eliminate with previously stored normalized rows
            c = v[b[0]]
            if c != 0:
                v = [a - c * x for a, x in zip(v, b[1])]
        lead = next((j for j, a in enumerate(v) if a != 0), None)
        if lead is None:
            continue
        inv = 1 / v[lead]
        basis.append((lead, [a * inv for a in v]))
        chosen.append(idx)
        if len(chosen) == need:
            return chosen
    return None
