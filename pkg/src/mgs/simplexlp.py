"""Exact rational revised simplex for feasibility LPs with certificates.

Standard form A x = b, x >= 0 over gmpy2.mpq. Columns are sparse and may be
added incrementally (column generation resumes from the current basis).
Artificial variables complete the initial basis; phase 1 minimizes their
sum, phase 2 minimizes a caller-supplied cost over the real columns.

Pricing scans candidates from a rotating cursor (first negative reduced
cost enters). Degenerate stretches switch to Bland's least-index rule for
both the entering and the leaving choice, which guarantees termination;
normal pricing resumes once the objective strictly improves.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

from .rationals import Q, QONE, QZERO

DEGENERACY_SWITCH = 60
MAX_ITERATIONS = 2_000_000


class SolverError(RuntimeError):
    """The solver gave up (iteration cap); distinct from genuine infeasibility."""


class ExactSimplex:
    def __init__(self, b: Sequence):
        self.b = [Q(v) for v in b]
        if any(v < 0 for v in self.b):
            raise ValueError("right-hand side must be non-negative")
        self.m = len(self.b)
        self.cols: list[list[tuple[int, Q]]] = []
        self.costs: list[Q] = []
        # artificial id for row r is -(r+1); dropped for good once it leaves
        self.basis: list[int] = [-(r + 1) for r in range(self.m)]
        self.binv: list[list[Q]] = [[QONE if i == j else QZERO for j in range(self.m)]
                                    for i in range(self.m)]
        self.xb: list[Q] = list(self.b)
        self.in_basis: set[int] = set(self.basis)
        self.dropped: set[int] = set()
        self.iterations = 0

    # -- columns ------------------------------------------------------------

    def add_column(self, sparse: Iterable[tuple[int, object]], cost=0) -> int:
        col = [(int(r), Q(v)) for r, v in sparse if v != 0]
        for r, _ in col:
            if not 0 <= r < self.m:
                raise ValueError("row index out of range")
        self.cols.append(col)
        self.costs.append(Q(cost))
        return len(self.cols) - 1

    def install_unit_basis(self, r: int, j: int):
        """Swap column j (which must be the unit vector e_r) for row r's artificial.

        Cheap warm start for slack columns; keeps binv the identity.
        """
        if self.basis[r] >= 0 or self.iterations:
            raise ValueError("unit basis installation only before solving")
        if self.cols[j] != [(r, QONE)]:
            raise ValueError("column is not the unit vector of that row")
        old = self.basis[r]
        self.basis[r] = j
        self.in_basis.discard(old)
        self.in_basis.add(j)
        self.dropped.add(old)

    # -- linear algebra helpers ----------------------------------------------

    def _duals(self, cost_of: Callable[[int], Q]) -> list[Q]:
        y = [QZERO] * self.m
        for i, j in enumerate(self.basis):
            c = cost_of(j)
            if c != 0:
                row = self.binv[i]
                for r in range(self.m):
                    if row[r] != 0:
                        y[r] += c * row[r]
        return y

    def _direction(self, col: list[tuple[int, Q]]) -> list[Q]:
        d = [QZERO] * self.m
        for i in range(self.m):
            row = self.binv[i]
            s = QZERO
            for r, v in col:
                if row[r] != 0:
                    s += row[r] * v
            d[i] = s
        return d

    def _reduced(self, j: int, y: list[Q], cost_of) -> Q:
        s = cost_of(j)
        for r, v in self.cols[j]:
            if y[r] != 0:
                s -= y[r] * v
        return s

    def _objective(self, cost_of) -> Q:
        z = QZERO
        for i, j in enumerate(self.basis):
            c = cost_of(j)
            if c != 0:
                z += c * self.xb[i]
        return z

    @staticmethod
    def _order(j: int) -> tuple[int, int]:
        # structural columns first (by index), artificials after
        return (0, j) if j >= 0 else (1, -j)

    def _pivot(self, j_enter: int, d: list[Q]):
        # ratio test; Bland-compatible tie-break on the leaving id
        theta = None
        p = -1
        leave_order = None
        for i in range(self.m):
            if d[i] > 0:
                ratio = self.xb[i] / d[i]
                o = self._order(self.basis[i])
                if theta is None or ratio < theta or (ratio == theta and o < leave_order):
                    theta, p, leave_order = ratio, i, o
        if theta is None:
            raise SolverError("unbounded direction in a bounded feasibility LP")
        leaving = self.basis[p]
        dp = d[p]
        inv = 1 / dp
        rowp = self.binv[p]
        self.binv[p] = [v * inv for v in rowp]
        self.xb[p] = self.xb[p] * inv
        rowp = self.binv[p]
        xp = self.xb[p]
        for i in range(self.m):
            if i != p and d[i] != 0:
                f = d[i]
                rowi = self.binv[i]
                self.binv[i] = [a - f * bb for a, bb in zip(rowi, rowp)]
                self.xb[i] -= f * xp
        self.basis[p] = j_enter
        self.in_basis.discard(leaving)
        self.in_basis.add(j_enter)
        if leaving < 0:
            self.dropped.add(leaving)
        return p, theta

    # -- optimization core -----------------------------------------------------

    def _solve(self, cost_of, max_iter: int, stop_at=None) -> Q:
        n = len(self.cols)
        cursor = 0
        degenerate_run = 0
        bland = False
        y = self._duals(cost_of)
        z = self._objective(cost_of)
        if stop_at is not None and z <= stop_at:
            return z
        while True:
            if self.iterations >= max_iter:
                raise SolverError(f"iteration cap {max_iter} reached")
            enter = -1
            reduced = None
            if bland:
                for j in range(n):
                    if j in self.in_basis:
                        continue
                    rc = self._reduced(j, y, cost_of)
                    if rc < 0:
                        enter, reduced = j, rc
                        break
            else:
                for off in range(n):
                    j = (cursor + off) % n
                    if j in self.in_basis:
                        continue
                    rc = self._reduced(j, y, cost_of)
                    if rc < 0:
                        enter, reduced = j, rc
                        cursor = (j + 1) % n
                        break
            if enter < 0:
                return self._objective(cost_of)
            d = self._direction(self.cols[enter])
            p, theta = self._pivot(enter, d)
            self.iterations += 1
            z += theta * reduced
            if stop_at is not None and z <= stop_at:
                return z
            # dual update: y' = y + rc * (new p-th row of binv); keeps
            # y' . a_i = c_i for every basic column of the new basis
            rowp = self.binv[p]
            y = [yv + reduced * rv if rv != 0 else yv for yv, rv in zip(y, rowp)]
            if theta == 0:
                degenerate_run += 1
                if degenerate_run >= DEGENERACY_SWITCH:
                    bland = True
            else:
                degenerate_run = 0
                bland = False

    def phase1(self, max_iter: int = MAX_ITERATIONS) -> Q:
        """Minimize the artificial sum; 0 means the current columns reach b."""
        cost_of = lambda j: QONE if j < 0 else QZERO
        return self._solve(cost_of, max_iter)

    def phase1_duals(self) -> list[Q]:
        return self._duals(lambda j: QONE if j < 0 else QZERO)

    def phase2(self, max_iter: int = MAX_ITERATIONS, stop_at=None) -> Q:
        """Minimize the structural costs; artificials are pinned at zero.

        With `stop_at`, returns as soon as the objective is proven <= it
        (early exit for threshold questions).
        """
        cost_of = lambda j: QZERO if j < 0 else self.costs[j]
        return self._solve(cost_of, max_iter, stop_at=stop_at)

    def phase2_duals(self) -> list[Q]:
        return self._duals(lambda j: QZERO if j < 0 else self.costs[j])

    def solution(self) -> dict[int, Q]:
        """Structural basic values (zero-valued entries omitted)."""
        out = {}
        for i, j in enumerate(self.basis):
            if j >= 0 and self.xb[i] != 0:
                out[j] = self.xb[i]
        return out

    def artificial_level(self) -> Q:
        return sum((self.xb[i] for i, j in enumerate(self.basis) if j < 0), QZERO)


# ---------------------------------------------------------------------------
# Feasibility with lazy columns (column generation)


class ColumnSource:
    """Column universe for `feasibility_with_pricing`.

    n_rows rows; column j is sparse (row, value) pairs. `price(y, skip)`
    returns (j, y . a_j) for every column with positive dual value, which
    would improve the phase-1 objective if added.
    """

    def __init__(self, n_rows: int, n_cols: int, col_fn, price_fn=None):
        self.n_rows = n_rows
        self.n_cols = n_cols
        self.col_fn = col_fn
        self._price_fn = price_fn

    def col(self, j: int):
        return self.col_fn(j)

    def price(self, y, skip: set) -> list[tuple[int, Q]]:
        if self._price_fn is not None:
            return self._price_fn(y, skip)
        out = []
        for j in range(self.n_cols):
            if j in skip:
                continue
            s = QZERO
            for r, v in self.col_fn(j):
                if y[r] != 0:
                    s += y[r] * v
            if s > 0:
                out.append((j, s))
        return out


def feasibility_with_pricing(source: ColumnSource, b, *, initial: Sequence[int],
                             batch: int = 512, max_iter: int = MAX_ITERATIONS):
    """Decide b in cone/hull of columns, materializing columns on demand.

    Returns (status, weights mapping global column index -> value, farkas
    dual y or None, stats). `initial` selects the starting active subset;
    afterwards the phase-1 duals price the remaining columns and the best
    violating batch joins the active set until the LP is settled either way.
    """
    sx = ExactSimplex(b)
    local_of: dict[int, int] = {}

    def activate(j: int):
        if j not in local_of:
            local_of[j] = sx.add_column(source.col(j))

    for j in initial:
        activate(j)
    rounds = 0
    while True:
        rounds += 1
        z = sx.phase1(max_iter)
        if z == 0:
            inv = {lj: gj for gj, lj in local_of.items()}
            weights = {inv[lj]: v for lj, v in sx.solution().items()}
            stats = {"iterations": sx.iterations, "rounds": rounds,
                     "active_columns": len(local_of)}
            return "feasible", weights, None, stats
        y = sx.phase1_duals()
        violating = source.price(y, set(local_of))
        if not violating:
            stats = {"iterations": sx.iterations, "rounds": rounds,
                     "active_columns": len(local_of), "phase1": z}
            return "infeasible", None, y, stats
        violating.sort(key=lambda t: (-t[1], t[0]))
        for j, _ in violating[:batch]:
            activate(j)
