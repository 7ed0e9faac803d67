"""Bell-like expressions: construction, evaluation, lifting, facet checks.

An expression is a sparse rational coefficient map over (joint input, joint
outcome) cells together with an upper bound, a resource tag and a
producibility level. Correlator monomials (for binary outcomes) and
full-correlation coefficient tables compile down to the same probability
form; lifting to more parties attaches fixed settings and outcomes for the
added parties, following the zero-bound normal form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import permutations
from typing import Mapping, Sequence

from .corrspace import Correlation, Scenario
from .linalg import affine_rank
from .polytope import Partition, Vertex, VertexSet
from .rationals import Q, QZERO, qparse, qstr

RESOURCE_TAGS = ("L", "Q", "NS", "T", "S")


class WitnessError(ValueError):
    pass


@dataclass(frozen=True)
class CorrelatorMonomial:
    """coeff * <prod over `parties` of the +/-1 observable at their `settings`>."""

    parties: tuple[int, ...]
    settings: tuple[int, ...]
    coeff: Q

    def __post_init__(self):
        if len(self.parties) != len(self.settings):
            raise WitnessError("parties and settings must align")
        if len(set(self.parties)) != len(self.parties):
            raise WitnessError("a party may appear once per monomial")
        object.__setattr__(self, "parties", tuple(self.parties))
        object.__setattr__(self, "settings", tuple(self.settings))
        object.__setattr__(self, "coeff", Q(self.coeff))


class BellExpression:
    """Linear functional sum_{x,a} beta[(x,a)] P(a|x), with an upper bound."""

    __slots__ = ("scenario", "coeffs", "bound", "resource", "k", "meta", "_by_input")

    def __init__(self, scenario: Scenario, coeffs: Mapping, bound, resource: str = "L",
                 k: int | None = None, meta: dict | None = None):
        if resource not in RESOURCE_TAGS:
            raise WitnessError(f"unknown resource tag {resource!r}")
        self.scenario = scenario
        self.coeffs = {key: Q(v) for key, v in coeffs.items() if v != 0}
        self.bound = Q(bound)
        self.resource = resource
        self.k = k
        self.meta = dict(meta or {})
        self._by_input = None

    def by_input(self) -> dict:
        """coeffs grouped per joint input: {x: {a: coeff}} (cached)."""
        if self._by_input is None:
            g: dict = {}
            for (x, a), c in self.coeffs.items():
                g.setdefault(x, {})[a] = c
            self._by_input = g
        return self._by_input

    def __repr__(self):
        return (f"BellExpression(n={self.scenario.n}, {len(self.coeffs)} terms, "
                f"bound={self.bound}, {self.resource}, k={self.k})")


def evaluate(expr: BellExpression, P: Correlation):
    """sum beta * P; exact mpq on rational tables, float on real ones."""
    if P.scenario != expr.scenario:
        raise WitnessError("expression and correlation scenarios differ")
    if P.mode == "rational":
        total = QZERO
        for (x, a), c in expr.coeffs.items():
            total += c * P.table[x][a]
        return total
    total = 0.0
    for (x, a), c in expr.coeffs.items():
        total += float(c) * float(P.table[x][a])
    return total


def evaluate_vertex(expr: BellExpression, v: Vertex) -> Q:
    if v.scenario != expr.scenario:
        raise WitnessError("expression and vertex scenarios differ")
    total = QZERO
    if v.is_deterministic:
        outs = v.outcomes
        for x, per_a in expr.by_input().items():
            c = per_a.get(outs[x])
            if c is not None:
                total += c
        return total
    by_input = expr.by_input()
    for x, a, val in v.entries:
        per_a = by_input.get(x)
        if per_a is not None:
            c = per_a.get(a)
            if c is not None:
                total += c * val
    return total


def expand_correlators(scenario: Scenario, monomials: Sequence[CorrelatorMonomial],
                       symmetrize: bool = False, bound=0, resource: str = "L",
                       k: int | None = None) -> BellExpression:
    """Compile +/-1 correlator monomials to probability coefficients.

    Each monomial contributes coeff * (-1)^(sum of involved outcomes) to
    every outcome cell at the joint input fixing the involved parties'
    settings and anchoring every uninvolved party's setting at 0. With
    `symmetrize`, each monomial is replaced by the sum over its orbit under
    party permutations, every distinct image counted exactly once.
    """
    if any(l != 2 for l in scenario.outputs):
        raise WitnessError("correlator monomials need binary outcomes")
    work: list[CorrelatorMonomial] = []
    if symmetrize:
        seen = set()
        for mon in monomials:
            for perm in permutations(range(scenario.n)):
                pairs = frozenset((perm[p], s) for p, s in zip(mon.parties, mon.settings))
                if pairs in seen:
                    continue
                seen.add(pairs)
                ps = sorted(pairs)
                work.append(CorrelatorMonomial(
                    tuple(p for p, _ in ps), tuple(s for _, s in ps), mon.coeff))
    else:
        work = list(monomials)

    coeffs: dict = {}
    for mon in work:
        for p in mon.parties:
            if mon.settings[mon.parties.index(p)] >= scenario.inputs[p]:
                raise WitnessError("monomial setting out of range")
        x = [0] * scenario.n
        for p, s in zip(mon.parties, mon.settings):
            x[p] = s
        x_idx = scenario.input_index(x)
        involved = set(mon.parties)
        for a_idx in range(scenario.n_joint_outputs):
            a = scenario.output_tuple(a_idx)
            sign = -1 if sum(a[p] for p in involved) % 2 else 1
            key = (x_idx, a_idx)
            coeffs[key] = coeffs.get(key, QZERO) + sign * mon.coeff
    return BellExpression(scenario, coeffs, bound, resource, k,
                          meta={"form": "correlator", "symmetrized": bool(symmetrize)})


def compile_fullcorr(scenario: Scenario, residue_coeffs: Mapping, bound,
                     resource: str = "NS", k: int | None = None) -> BellExpression:
    """Compile a full-correlation table beta[(x, r)] into probability form.

    The coefficient of P(a|x) is beta[(x, [sum_i a_i] mod l)].
    """
    l = scenario.uniform_output_count()
    coeffs: dict = {}
    for (x_idx, r), c in residue_coeffs.items():
        if not 0 <= r < l:
            raise WitnessError(f"residue {r} out of range")
        if not 0 <= x_idx < scenario.n_joint_inputs:
            raise WitnessError(f"joint input {x_idx} out of range")
        for a_idx in range(scenario.n_joint_outputs):
            if sum(scenario.output_tuple(a_idx)) % l == r:
                key = (x_idx, a_idx)
                coeffs[key] = coeffs.get(key, QZERO) + Q(c)
    return BellExpression(scenario, coeffs, bound, resource, k, meta={"form": "fullcorr"})


def zero_bound_form(expr: BellExpression) -> BellExpression:
    """Fold the bound into the coefficients at the all-zeros input.

    Subtracting bound * sum_a P(a|x0) changes nothing on normalized tables
    except shifting every evaluation down by the bound; the new bound is 0.
    """
    if expr.bound == 0:
        return expr
    coeffs = dict(expr.coeffs)
    x0 = 0
    for a_idx in range(expr.scenario.n_joint_outputs):
        key = (x0, a_idx)
        coeffs[key] = coeffs.get(key, QZERO) - expr.bound
    meta = dict(expr.meta)
    meta["folded_bound"] = qstr(expr.bound)
    return BellExpression(expr.scenario, coeffs, 0, expr.resource, expr.k, meta)


def lift(expr: BellExpression, h: int, settings: Sequence[int], outcomes: Sequence[int],
         added_inputs: Sequence[int] | int = 2, added_outputs: Sequence[int] | int = 2,
         *, unchecked: bool = False) -> BellExpression:
    """Attach h extra parties at fixed settings/outcomes to a zero-bound expression.

    Valid for resources respecting no-signaling (tags Q and NS); lifting a
    signaling-resource expression is rejected because the lifted form can
    be violated by a signaling product strategy (set `unchecked` to build
    the naive form anyway, e.g. to demonstrate that failure).
    """
    if h == 0:
        return expr
    if h < 0 or len(settings) != h or len(outcomes) != h:
        raise WitnessError("need one fixed setting and outcome per added party")
    if expr.bound != 0:
        raise WitnessError("lift expects the zero-bound form (fold the bound first)")
    if not unchecked and expr.resource in ("T", "S"):
        raise WitnessError(
            f"lifting is not sound for the signaling resource tag {expr.resource!r}: "
            "a product strategy of the extended scenario can violate the lifted form")
    if isinstance(added_inputs, int):
        added_inputs = (added_inputs,) * h
    if isinstance(added_outputs, int):
        added_outputs = (added_outputs,) * h
    sc = expr.scenario
    new_sc = Scenario(sc.inputs + tuple(added_inputs), sc.outputs + tuple(added_outputs))
    for j in range(h):
        if not 0 <= settings[j] < added_inputs[j] or not 0 <= outcomes[j] < added_outputs[j]:
            raise WitnessError("fixed setting/outcome out of range for added party")
    s = tuple(settings)
    o = tuple(outcomes)
    coeffs: dict = {}
    for (x_idx, a_idx), c in expr.coeffs.items():
        x = sc.input_tuple(x_idx) + s
        a = sc.output_tuple(a_idx) + o
        coeffs[(new_sc.input_index(x), new_sc.output_index(a))] = c
    meta = dict(expr.meta)
    meta["lift"] = {"h": h, "settings": list(s), "outcomes": list(o)}
    return BellExpression(new_sc, coeffs, 0, expr.resource, expr.k, meta)


def max_over_vertices(expr: BellExpression, V: VertexSet) -> tuple[Q, Vertex]:
    """Exact maximum and the first attaining vertex in canonical order."""
    if len(V) == 0:
        raise WitnessError("empty vertex set")
    best = None
    best_v = None
    for v in V:
        val = evaluate_vertex(expr, v)
        if best is None or val > best:
            best = val
            best_v = v
    return best, best_v


def facet_rank(expr: BellExpression, V: VertexSet) -> tuple[int, int, int]:
    """(saturating vertex count, their affine rank, polytope dimension).

    The expression must be valid on V (max exactly 0 in zero-bound form);
    it defines a facet iff the saturating rank equals dimension - 1.
    """
    if expr.bound != 0:
        expr = zero_bound_form(expr)
    vals = [evaluate_vertex(expr, v) for v in V]
    mx = max(vals)
    if mx > 0:
        raise WitnessError(f"expression is violated by a vertex (max {mx} > 0)")
    sat = [v for v, val in zip(V, vals) if val == 0]
    sat_rank = affine_rank([v.flat() for v in sat])
    dim = polytope_dimension(V)
    return len(sat), sat_rank, dim


_DIM_CACHE: dict = {}


def polytope_dimension(V: VertexSet) -> int:
    key = (V.scenario, V.resource, V.k, str(V.partition), len(V))
    dim = _DIM_CACHE.get(key)
    if dim is None:
        dim = affine_rank([v.flat() for v in V])
        _DIM_CACHE[key] = dim
    return dim


# ---------------------------------------------------------------------------
# Built-in expressions


def chsh() -> BellExpression:
    """(-1)^(a1+a2+x1 x2) summed over the two-party binary scenario, <= 2 locally."""
    sc = Scenario.uniform(2, 2, 2)
    coeffs = {}
    for x_idx in range(4):
        x1, x2 = sc.input_tuple(x_idx)
        for a_idx in range(4):
            a1, a2 = sc.output_tuple(a_idx)
            coeffs[(x_idx, a_idx)] = Q((-1) ** ((a1 + a2 + x1 * x2) % 2))
    return BellExpression(sc, coeffs, 2, "L", 1, meta={"name": "chsh"})


def _svetlichny3_coeffs(sc: Scenario) -> dict:
    coeffs = {}
    for x_idx in range(sc.n_joint_inputs):
        x = sc.input_tuple(x_idx)
        sx = (sum(x) - 1) // 2
        for a_idx in range(sc.n_joint_outputs):
            a = sc.output_tuple(a_idx)
            coeffs[(x_idx, a_idx)] = Q((-1) ** ((sum(a) + sx) % 2))
    return coeffs


def svetlichny3() -> BellExpression:
    """Tripartite Svetlichny expression, <= 4 for two-party grouped strategies."""
    sc = Scenario.uniform(3, 2, 2)
    return BellExpression(sc, _svetlichny3_coeffs(sc), 4, "S", 2,
                          meta={"name": "svetlichny3", "form": "fullcorr"})


def ns3() -> BellExpression:
    """The Svetlichny coefficients re-tagged for non-signaling pairs (same tight bound)."""
    sc = Scenario.uniform(3, 2, 2)
    return BellExpression(sc, _svetlichny3_coeffs(sc), 4, "NS", 2,
                          meta={"name": "ns3", "form": "fullcorr"})


INEQ10_MONOMIALS: tuple[tuple[tuple[int, ...], int], ...] = (
    ((0,), -12),
    ((1,), -3),
    ((0, 0), -2),
    ((0, 1), 6),
    ((1, 1), -3),
    ((0, 0, 0), 13),
    ((1, 0, 0), -3),
    ((1, 1, 0), -11),
    ((1, 1, 1), 14),
    ((0, 0, 0, 0), 22),
    ((0, 0, 0, 1), -15),
    ((1, 1, 0, 0), -10),
    ((1, 1, 1, 0), -7),
    ((1, 1, 1, 1), 21),
)


def ineq10() -> BellExpression:
    """Symmetrized four-party witness with non-signaling-pair bound 105."""
    sc = Scenario.uniform(4, 2, 2)
    mons = [CorrelatorMonomial(tuple(range(len(s))), s, c) for s, c in INEQ10_MONOMIALS]
    expr = expand_correlators(sc, mons, symmetrize=True, bound=105, resource="NS", k=2)
    expr.meta["name"] = "ineq10"
    return expr


BUILTIN_EXPRESSIONS = {
    "chsh": chsh,
    "svetlichny3": svetlichny3,
    "ns3": ns3,
    "ineq10": ineq10,
}


def builtin_expression(name: str) -> BellExpression:
    """Builtins by name, including lifted(<name>, h, s..., o...)."""
    name = name.strip()
    if name in BUILTIN_EXPRESSIONS:
        return BUILTIN_EXPRESSIONS[name]()
    if name.startswith("lifted(") and name.endswith(")"):
        body = name[len("lifted("):-1]
        parts = [p.strip() for p in body.split(",")]
        base = builtin_expression(parts[0])
        h = int(parts[1])
        nums = [int(p) for p in parts[2:]]
        if len(nums) != 2 * h:
            raise WitnessError("lifted(name, h, s_1..s_h, o_1..o_h)")
        return lift(zero_bound_form(base), h, nums[:h], nums[h:])
    raise WitnessError(f"unknown expression {name!r}")


def svetlichny_counterexample():
    """Why naive lifting fails for unconstrained signaling groups.

    Builds the deterministic pair-grouped strategy a1 = 1 - [x1=1][x2=1],
    a2 = 1, a3 = a4 = 1 - [x3=1][x4=0] (a product for the partition
    {1,2}|{3,4}), and evaluates the naively lifted Svetlichny form with the
    fourth party fixed at setting 0, outcome 0 and reference input 0.

    Returns (vertex, value, lifted expression); the value is 4 > 0.
    """
    sc = Scenario.uniform(4, 2, 2)
    outs = []
    for x_idx in range(sc.n_joint_inputs):
        x1, x2, x3, x4 = sc.input_tuple(x_idx)
        a1 = 1 - (1 if (x1 == 1 and x2 == 1) else 0)
        a2 = 1
        a34 = 1 - (1 if (x3 == 1 and x4 == 0) else 0)
        outs.append(sc.output_index((a1, a2, a34, a34)))
    vertex = Vertex(sc, outcomes=outs, provenance=("S", 2, "0,1|2,3", "counterexample"))
    naive = lift(zero_bound_form(svetlichny3()), 1, [0], [0], unchecked=True)
    value = evaluate_vertex(naive, vertex)
    return vertex, value, naive


def is_partition_product(vertex: Vertex, partition: Partition) -> bool:
    """Does a deterministic vertex factor as a product over the partition's groups?"""
    if not vertex.is_deterministic:
        raise WitnessError("product check implemented for deterministic vertices")
    sc = vertex.scenario
    for block in partition.blocks:
        sub = sc.subscenario(block)
        seen: dict[int, tuple] = {}
        for x_idx in range(sc.n_joint_inputs):
            x = sc.input_tuple(x_idx)
            a = sc.output_tuple(vertex.outcomes[x_idx])
            key = sub.input_index(tuple(x[p] for p in block))
            part = tuple(a[p] for p in block)
            if seen.setdefault(key, part) != part:
                return False
    return True


# ---------------------------------------------------------------------------
# JSON serialization


def expression_to_dict(expr: BellExpression) -> dict:
    sc = expr.scenario
    return {
        "scenario": {"inputs": list(sc.inputs), "outputs": list(sc.outputs)},
        "form": "probability",
        "terms": sorted([x, a, qstr(c)] for (x, a), c in expr.coeffs.items()),
        "bound": qstr(expr.bound),
        "resource": expr.resource,
        "k": expr.k,
        "meta": {k: v for k, v in expr.meta.items() if k in ("name", "lift", "folded_bound")},
    }


def expression_from_dict(d: dict) -> BellExpression:
    sc = Scenario(tuple(d["scenario"]["inputs"]), tuple(d["scenario"]["outputs"]))
    form = d.get("form", "probability")
    bound = qparse(d["bound"])
    resource = d.get("resource", "L")
    k = d.get("k")
    if form == "probability":
        coeffs = {(int(x), int(a)): qparse(c) for x, a, c in d["terms"]}
        return BellExpression(sc, coeffs, bound, resource, k, meta=d.get("meta", {}))
    if form == "fullcorr":
        residue = {(int(x), int(r)): qparse(c) for x, r, c in d["terms"]}
        return compile_fullcorr(sc, residue, bound, resource, k)
    if form == "correlator":
        mons = [CorrelatorMonomial(tuple(t["parties"]), tuple(t["settings"]),
                                   qparse(t["coeff"])) for t in d["terms"]]
        return expand_correlators(sc, mons, symmetrize=bool(d.get("symmetrize", False)),
                                  bound=bound, resource=resource, k=k)
    raise WitnessError(f"unknown expression form {form!r}")


def save_expression(expr: BellExpression, path) -> None:
    with open(path, "w") as fh:
        json.dump(expression_to_dict(expr), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_expression(path) -> BellExpression:
    with open(path) as fh:
        return expression_from_dict(json.load(fh))
