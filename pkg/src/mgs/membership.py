"""LP membership of correlations in producible polytopes, with certificates.

decompose answers "is P a convex combination of these vertex columns" and
always returns evidence: convex weights reproducing P, or a Farkas
functional (a Bell-like witness) separating P from every column. Exact
mode works on rational tables and certifies with zero residual; real mode
minimizes the sup-norm residual t over convex combinations, exactly, on a
dyadic-rational copy of the float table, and accepts when t <= eps.

mgs sweeps the producibility level k upward and stops at the first
feasible level; levels whose vertex data is unavailable are reported
unresolved, never guessed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from math import gcd

from .corrspace import Correlation, Scenario
from .polytope import (CapExceededError, MissingVertexDataError, Partition, Vertex,
                       VertexSet, producible_vertices)
from .rationals import Q, QONE, QZERO, from_float_exact, qstr
from .simplexlp import (ColumnSource, ExactSimplex, SolverError,
                        feasibility_with_pricing)
from .witness import BellExpression, evaluate, evaluate_vertex

EXIT_FEASIBLE = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_UNRESOLVED = 3

DEFAULT_EPS = Q(1, 10 ** 8)
CG_THRESHOLD = 20_000
CG_INITIAL = 5_000
CG_BATCH = 512
CG_SEED = 0
FLOAT_GUIDE_THRESHOLD = 4_000

try:
    from scipy.optimize import linprog as _linprog
    from scipy.sparse import csc_matrix as _csc
    HAVE_FLOAT_GUIDE = True
except ImportError:  # the exact path covers everything, just slower
    HAVE_FLOAT_GUIDE = False


@dataclass
class MembershipResult:
    status: str                      # "feasible" | "infeasible"
    mode: str                        # "exact" | "real"
    weights: dict | None             # canonical vertex index -> mpq weight
    residual: Q                      # 0 in exact mode, optimal sup-norm in real mode
    farkas: BellExpression | None = None
    farkas_margin: Q | None = None   # witness value on P (positive iff separated)
    stats: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"

    def exit_code(self) -> int:
        return EXIT_FEASIBLE if self.feasible else EXIT_INFEASIBLE


@dataclass
class MgsReport:
    resource: str
    k_max: int
    levels: dict                     # k -> MembershipResult | "unresolved: ..." str
    mgs: int | None                  # smallest feasible k, if found
    lower_bound: int                 # MGS is at least this

    def exit_code(self) -> int:
        if self.mgs is not None:
            return EXIT_FEASIBLE
        if any(isinstance(r, str) for r in self.levels.values()):
            return EXIT_UNRESOLVED
        return EXIT_INFEASIBLE


def _vertex_column(v: Vertex, no: int, norm_row: int):
    col = [(x * no + a, val) for x, a, val in v.sparse()]
    col.append((norm_row, QONE))
    return col


def _normalize_integer(vec: list[Q]) -> list[Q]:
    """Positive rescale to coprime integers, for readable certificates."""
    den = 1
    for v in vec:
        den = den * v.denominator // gcd(den, v.denominator)
    ints = [int(v * den) for v in vec]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    if g > 1:
        ints = [v // g for v in ints]
    return [Q(v) for v in ints]


def _farkas_expression(scenario: Scenario, y_table: list[Q], y_const: Q,
                       V: VertexSet) -> BellExpression:
    """Tight Bell-like witness from LP duals.

    The functional y_table . P + y_const is <= 0 on every probed column and
    positive on the separated correlation. The constant is first shifted so
    the maximum over the columns is exactly 0 (the witness touches the
    polytope), then everything is rescaled to coprime integers and the
    constant is folded into the all-zeros-input cells.
    """
    no = scenario.n_joint_outputs
    mx = None
    for v in V:
        s = y_const
        for x, a, val in v.sparse():
            c = y_table[x * no + a]
            if c != 0:
                s += c * val
        if mx is None or s > mx:
            mx = s
    y_const = y_const - mx
    vec = _normalize_integer(y_table + [y_const])
    y_table, y_const = vec[:-1], vec[-1]
    coeffs: dict = {}
    for x in range(scenario.n_joint_inputs):
        for a in range(no):
            c = y_table[x * no + a]
            if x == 0:
                c = c + y_const
            if c != 0:
                coeffs[(x, a)] = c
    return BellExpression(scenario, coeffs, 0, V.resource, V.k,
                          meta={"name": "farkas", "folded_bound": qstr(-y_const)})


def _initial_subset(n_cols: int, size: int, seed: int) -> list[int]:
    if n_cols <= size:
        return list(range(n_cols))
    rng = random.Random(seed)
    return sorted(rng.sample(range(n_cols), size))


def _float_support(columns_nnz, n_rows: int, b_float, n_cols: int) -> list[int] | None:
    """Support of a float solution of A w = b, sum-normalized, w >= 0.

    Fast LP guide for large column sets: the exact simplex then certifies
    on (and, if needed, grows) this subset, so a wrong float answer costs
    time but never correctness. Returns None when no guidance is available.
    """
    rows, cols, data = columns_nnz
    A = _csc((data, (rows, cols)), shape=(n_rows, n_cols))
    try:
        res = _linprog([0.0] * n_cols, A_eq=A, b_eq=b_float,
                       bounds=(0, None), method="highs")
    except Exception:
        return None
    if res.status != 0 or res.x is None:
        return None
    sup = [int(j) for j in (res.x > 1e-11).nonzero()[0]]
    if not sup:
        return None
    if len(sup) > 2000:
        order = sorted(sup, key=lambda j: -res.x[j])
        sup = sorted(order[:2000])
    return sup


def decompose(P: Correlation, V: VertexSet, mode: str = "exact",
              eps: Q = DEFAULT_EPS, *, cg_threshold: int = CG_THRESHOLD,
              cg_initial: int = CG_INITIAL, cg_batch: int = CG_BATCH,
              seed: int = CG_SEED) -> MembershipResult:
    """Feasibility of P = sum_v w_v v with w >= 0, sum w = 1 over V's columns."""
    if P.scenario != V.scenario:
        raise ValueError("correlation and vertex set live on different scenarios")
    if len(V) == 0:
        raise ValueError("empty vertex set")
    if mode == "exact":
        if P.mode != "rational":
            raise ValueError(
                "exact membership needs a rational table; rationalize explicitly "
                "(Correlation.to_rational / to_exact_dyadic) or use mode='real'")
        return _decompose_exact(P, V, cg_threshold, cg_initial, cg_batch, seed)
    if mode == "real":
        return _decompose_real(P, V, Q(eps), cg_threshold, cg_initial, cg_batch, seed)
    raise ValueError(f"unknown mode {mode!r}")


def _decompose_exact(P, V, cg_threshold, cg_initial, cg_batch, seed) -> MembershipResult:
    sc = P.scenario
    ni, no = sc.n_joint_inputs, sc.n_joint_outputs
    D = ni * no
    flat = [P.table[x][a] for x in range(ni) for a in range(no)]

    # Support presolve: column entries are non-negative, so a column with
    # mass on a zero cell of the target can never carry weight. Dropping
    # those columns turns the zero rows into 0 = 0, which are removed too;
    # this kills most of the degeneracy that sparse targets cause.
    zero_rows = {r for r, v in enumerate(flat) if v == 0}
    verts = V.vertices
    if zero_rows:
        eligible = [j for j, v in enumerate(verts)
                    if all(x * no + a not in zero_rows for x, a, _ in v.sparse())]
    else:
        eligible = list(range(len(verts)))
    kept = [r for r in range(D) if r not in zero_rows]
    row_of = {r: i for i, r in enumerate(kept)}
    norm_row = len(kept)
    b = [flat[r] for r in kept] + [QONE]

    def lift_farkas(y_red, stats):
        """Duals of the reduced LP, extended to all columns of the full system.

        Dropped rows get a dual negative enough that every presolved-away
        column also prices non-positively; the margin on P is unchanged
        because P vanishes on the dropped rows.
        """
        y_full = [QZERO] * D
        for r in kept:
            y_full[r] = y_red[row_of[r]]
        y0 = y_red[norm_row]
        if len(eligible) < len(verts):
            need = QZERO
            elig = set(eligible)
            for j, v in enumerate(verts):
                if j in elig:
                    continue
                s = y0
                t = QZERO
                for x, a, val in v.sparse():
                    r = x * no + a
                    if r in zero_rows:
                        t += val
                    elif y_full[r] != 0:
                        s += y_full[r] * val
                if s > 0:
                    need = max(need, s / t)
            big = need + 1
            for r in zero_rows:
                y_full[r] = -big
        farkas = _farkas_expression(sc, y_full, y0, V)
        margin = evaluate(farkas, P)
        return MembershipResult("infeasible", "exact", None, QZERO, farkas=farkas,
                                farkas_margin=margin, stats=stats)

    if not eligible:
        return lift_farkas([QZERO] * norm_row + [QONE],
                           {"iterations": 0, "rounds": 0, "active_columns": 0,
                            "presolve": "no column fits the target support"})

    def col_fn(i):
        v = verts[eligible[i]]
        col = [(row_of[x * no + a], val) for x, a, val in v.sparse()]
        col.append((norm_row, QONE))
        return col

    def price_fn(y, skip):
        y_norm = y[norm_row]
        out = []
        for i in range(len(eligible)):
            if i in skip:
                continue
            v = verts[eligible[i]]
            s = y_norm
            if v.outcomes is not None:
                outs = v.outcomes
                for x in range(ni):
                    r = row_of.get(x * no + outs[x])
                    if r is not None and y[r] != 0:
                        s += y[r]
            else:
                for x, a, val in v.entries:
                    r = row_of.get(x * no + a)
                    if r is not None and y[r] != 0:
                        s += y[r] * val
            if s > 0:
                out.append((i, s))
        return out

    source = ColumnSource(norm_row + 1, len(eligible), col_fn, price_fn)
    initial = None
    if HAVE_FLOAT_GUIDE and len(eligible) > FLOAT_GUIDE_THRESHOLD:
        rows, cols, data = [], [], []
        for i in range(len(eligible)):
            for r, val in col_fn(i):
                rows.append(r)
                cols.append(i)
                data.append(float(val))
        initial = _float_support((rows, cols, data), norm_row + 1,
                                 [float(v) for v in b], len(eligible))
    if initial is None:
        initial = _initial_subset(len(eligible), cg_initial if len(eligible) > cg_threshold
                                  else len(eligible), seed)
    status, weights, y, stats = feasibility_with_pricing(
        source, b, initial=initial, batch=cg_batch)
    stats["eligible_columns"] = len(eligible)
    if status == "feasible":
        weights = {eligible[i]: w for i, w in weights.items()}
        return MembershipResult("feasible", "exact", weights, QZERO, stats=stats)
    return lift_farkas(y, stats)


def _float_min_residual(verts, no, D, flat):
    """Float LP guide: min t with |Vw - P| <= t, sum w = 1, w >= 0.

    Returns (w, support indices) at the float optimum, or None."""
    rows, cols, data = [], [], []
    for j, v in enumerate(verts):
        for x, a, val in v.sparse():
            r = x * no + a
            rows.append(r)
            cols.append(j)
            data.append(float(val))
            rows.append(D + r)
            cols.append(j)
            data.append(-float(val))
    tcol = len(verts)
    for r in range(2 * D):
        rows.append(r)
        cols.append(tcol)
        data.append(-1.0)
    try:
        A_ub = _csc((data, (rows, cols)), shape=(2 * D, tcol + 1))
        b_ub = [float(v) for v in flat] + [-float(v) for v in flat]
        A_eq = _csc(([1.0] * tcol, (([0] * tcol), list(range(tcol)))),
                    shape=(1, tcol + 1))
        res = _linprog([0.0] * tcol + [1.0], A_ub=A_ub, b_ub=b_ub,
                       A_eq=A_eq, b_eq=[1.0], bounds=(0, None), method="highs")
    except Exception:
        return None
    if res.status != 0 or res.x is None:
        return None
    sup = [int(j) for j in (res.x[:tcol] > 1e-13).nonzero()[0]]
    if not sup:
        return None
    return res.x[:tcol], sup


def _exactify_weights(w_float, support, verts, no, flat, eps):
    """Exact certificate from a float solution, when it is good enough.

    The float weights become exact dyadic rationals, are renormalized to
    sum exactly 1, and the sup-norm residual is recomputed exactly; only a
    residual <= eps is accepted.
    """
    wq = {j: from_float_exact(float(w_float[j])) for j in support}
    total = sum(wq.values())
    if total <= 0:
        return None
    weights = {j: w / total for j, w in wq.items() if w > 0}
    acc = {}
    for j, w in weights.items():
        for x, a, val in verts[j].sparse():
            r = x * no + a
            acc[r] = acc.get(r, QZERO) + w * val
    resid = QZERO
    for r, target in enumerate(flat):
        dev = abs(acc.get(r, QZERO) - target)
        if dev > resid:
            resid = dev
    if resid > eps:
        return None
    return weights, resid


def _decompose_real(P, V, eps, cg_threshold, cg_initial, cg_batch, seed) -> MembershipResult:
    sc = P.scenario
    ni, no = sc.n_joint_inputs, sc.n_joint_outputs
    D = ni * no
    if P.mode == "real":
        flat = [from_float_exact(float(P.table[x][a]))
                for x in range(ni) for a in range(no)]
    else:
        flat = [P.table[x][a] for x in range(ni) for a in range(no)]
    # rows 0..D-1:   sum_j v_j w_j + s+_r - t = P_r     (excess above P bounded by t)
    # rows D..2D-1:  sum_j v_j w_j - s-_r + t = P_r     (deficit below P bounded by t)
    # row 2D:        sum_j w_j = 1
    b = flat + flat + [QONE]
    sx = ExactSimplex(b)
    splus = [sx.add_column([(r, QONE)]) for r in range(D)]
    for r in range(D):
        sx.install_unit_basis(r, splus[r])
    for r in range(D):
        sx.add_column([(D + r, -QONE)])
    t_col = [(r, -QONE) for r in range(D)] + [(D + r, QONE) for r in range(D)]
    sx.add_column(t_col, cost=1)

    verts = V.vertices
    struct_of: dict[int, int] = {}

    def wcol(j):
        v = verts[j]
        col = []
        for x, a, val in v.sparse():
            col.append((x * no + a, val))
            col.append((D + x * no + a, val))
        col.append((2 * D, QONE))
        return col

    def activate(j):
        if j not in struct_of:
            struct_of[j] = sx.add_column(wcol(j))

    initial = None
    if HAVE_FLOAT_GUIDE and len(verts) > 50:
        guided = _float_min_residual(verts, no, D, flat)
        if guided is not None:
            w_float, support = guided
            exact = _exactify_weights(w_float, support, verts, no, flat, eps)
            if exact is not None:
                weights, resid = exact
                return MembershipResult("feasible", "real", weights, resid,
                                        stats={"iterations": 0, "rounds": 0,
                                               "active_columns": len(support),
                                               "certified": "exactified float solution"})
            initial = sorted(support[:2000])
    if initial is None:
        initial = _initial_subset(len(verts), cg_initial if len(verts) > cg_threshold
                                  else len(verts), seed)
    for j in initial:
        activate(j)

    z1 = sx.phase1()
    if z1 != 0:
        raise SolverError("phase 1 failed on an always-feasible residual LP")
    rounds = 0
    while True:
        rounds += 1
        # early exit: any subset solution at residual <= eps settles the
        # question globally, no pricing pass needed
        tstar = sx.phase2(stop_at=eps)
        if tstar <= eps:
            break
        y = sx.phase2_duals()
        violating = []
        for j, v in enumerate(verts):
            if j in struct_of:
                continue
            s = y[2 * D]
            for x, a, val in v.sparse():
                r1, r2 = x * no + a, D + x * no + a
                if y[r1] != 0:
                    s += y[r1] * val
                if y[r2] != 0:
                    s += y[r2] * val
            if s > 0:
                violating.append((j, s))
        if not violating:
            break
        violating.sort(key=lambda t: (-t[1], t[0]))
        for j, _ in violating[:cg_batch]:
            activate(j)
    stats = {"iterations": sx.iterations, "rounds": rounds,
             "active_columns": len(struct_of), "residual": qstr(tstar)}
    inv = {lj: gj for gj, lj in struct_of.items()}
    if tstar <= eps:
        sol = sx.solution()
        weights = {inv[lj]: val for lj, val in sol.items() if lj in inv}
        return MembershipResult("feasible", "real", weights, tstar, stats=stats)
    g = [y[r] + y[D + r] for r in range(D)]
    farkas = _farkas_expression(sc, g, y[2 * D], V)
    margin = _exact_value(farkas, _flat_exact(P), no)
    return MembershipResult("infeasible", "real", None, tstar, farkas=farkas,
                            farkas_margin=margin, stats=stats)


def _exact_value(expr: BellExpression, target_flat: list[Q], no: int) -> Q:
    total = QZERO
    for (x, a), c in expr.coeffs.items():
        total += c * target_flat[x * no + a]
    return total


def _flat_exact(P: Correlation) -> list[Q]:
    """Table entries as exact rationals, row-major; floats become dyadic."""
    sc = P.scenario
    ni, no = sc.n_joint_inputs, sc.n_joint_outputs
    if P.mode == "rational":
        return [P.table[x][a] for x in range(ni) for a in range(no)]
    return [from_float_exact(float(P.table[x][a]))
            for x in range(ni) for a in range(no)]


def verify_certificate(result: MembershipResult, P: Correlation, V: VertexSet) -> dict:
    """Independent recomputation of whichever certificate was produced.

    Feasible: weights are non-negative, sum exactly to 1, and reproduce P
    exactly (exact mode) or within the reported sup-norm residual (real
    mode). Infeasible: the functional is <= 0 on every column and positive
    on P. Everything is rechecked in exact arithmetic; a False verdict
    flags a solver bug.
    """
    sc = P.scenario
    no = sc.n_joint_outputs
    target = _flat_exact(P)
    report: dict = {"status": result.status, "mode": result.mode}
    if result.feasible:
        ws = result.weights or {}
        ok = all(w >= 0 for w in ws.values()) and sum(ws.values()) == 1
        acc = [QZERO] * len(target)
        for j, w in ws.items():
            for x, a, val in V.vertices[j].sparse():
                acc[x * no + a] += w * val
        resid = max(abs(a - t) for a, t in zip(acc, target))
        tol = result.residual if result.mode == "real" else QZERO
        report["residual"] = resid
        report["ok"] = bool(ok) and resid <= tol
        return report
    worst = None
    for v in V:
        val = evaluate_vertex(result.farkas, v)
        if worst is None or val > worst:
            worst = val
    by_input = result.farkas.by_input()
    margin = QZERO
    for x, per_a in by_input.items():
        for a, c in per_a.items():
            margin += c * target[x * no + a]
    report["max_over_columns"] = worst
    report["value_on_P"] = margin
    report["ok"] = bool(worst <= 0 and margin > 0)
    return report


def fixed_partition_membership(P: Correlation, resource: str, partition: Partition,
                               mode: str = "exact", eps: Q = DEFAULT_EPS,
                               external: dict | None = None, **kw) -> MembershipResult:
    """Membership against the products of a single fixed partition."""
    V = producible_vertices(P.scenario, resource, partition.max_block,
                            partition=partition, external=external)
    return decompose(P, V, mode=mode, eps=eps, **kw)


def mgs(P: Correlation, resource: str, k_max: int | None = None, mode: str = "exact",
        eps: Q = DEFAULT_EPS, external: dict | None = None, **kw) -> MgsReport:
    """Ascending sweep over k; stops at the first feasible level."""
    n = P.scenario.n
    if k_max is None:
        k_max = n
    k_max = min(k_max, n)
    levels: dict = {}
    found = None
    lower = 1
    for k in range(1, k_max + 1):
        try:
            V = producible_vertices(P.scenario, resource, k, external=external)
        except (MissingVertexDataError, CapExceededError) as exc:
            levels[k] = f"unresolved: {exc}"
            continue
        res = decompose(P, V, mode=mode, eps=eps, **kw)
        levels[k] = res
        if res.feasible:
            found = k
            break
        lower = k + 1
    if not levels:
        raise ValueError("no producibility level could be probed")
    return MgsReport(resource, k_max, levels, found, lower)


# ---------------------------------------------------------------------------
# Certificate serialization


def result_to_dict(result: MembershipResult, V: VertexSet | None = None) -> dict:
    from .witness import expression_to_dict
    d = {"status": result.status, "mode": result.mode,
         "residual": qstr(result.residual), "stats": result.stats}
    if result.weights is not None:
        if V is not None:
            d["weights"] = {V.vertices[j].id_string(): qstr(w)
                            for j, w in sorted(result.weights.items())}
        else:
            d["weights"] = {str(j): qstr(w) for j, w in sorted(result.weights.items())}
    if result.farkas is not None:
        d["farkas"] = expression_to_dict(result.farkas)
        d["farkas_margin"] = qstr(result.farkas_margin) \
            if not isinstance(result.farkas_margin, float) else result.farkas_margin
    return d
