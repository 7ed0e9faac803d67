"""Vertex sets of k-producible correlation polytopes.

Extremal columns of R_{n,k} for resources L (shared randomness), NS
(non-signaling) and S (unconstrained group strategies) are built as
products of per-group extremal correlations over set partitions with
bounded block size. Group extremes:

  L  : products of single-party deterministic assignments,
  S  : joint deterministic functions of the group's inputs,
  NS : exact vertex enumeration of the group no-signaling polytope by the
       double description method (native for groups of 1 or 2 parties;
       larger groups require an externally supplied vertex file).

All vertex tables are exact rationals. Vertex sets are deduplicated under
exact table equality and canonically sorted, so generation order never
leaks into results.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product as iproduct
from math import prod
from typing import Iterable, Sequence

from .corrspace import Correlation, Scenario
from .linalg import independent_rows, invert, nullspace, rank, solve_particular
from .rationals import Q, QONE, QZERO, qparse, qstr

DET_GROUP_CAP = 10 ** 6
NS_TABLE_DIM_CAP = 64

RESOURCES = ("L", "NS", "S")


class CapExceededError(ValueError):
    pass


class MissingVertexDataError(LookupError):
    """A producibility level needs vertex data that is not available natively."""


# ---------------------------------------------------------------------------
# Vertices


class Vertex:
    """Extremal correlation stored sparsely, with provenance.

    Deterministic vertices (one unit entry per joint input) keep only the
    outcome map; general vertices keep sorted (input, outcome, value)
    triples. Both compare and deduplicate through the same canonical key.
    """

    __slots__ = ("scenario", "outcomes", "entries", "provenance")

    def __init__(self, scenario: Scenario, *, outcomes=None, entries=None, provenance=()):
        self.scenario = scenario
        self.provenance = tuple(provenance)
        if outcomes is not None:
            self.outcomes = tuple(outcomes)
            self.entries = None
            if len(self.outcomes) != scenario.n_joint_inputs:
                raise ValueError("outcome map must cover every joint input")
        else:
            ent = tuple(sorted((int(x), int(a), Q(v)) for x, a, v in entries))
            # canonicalize: a sparse table that is deterministic becomes an outcome map
            if (len(ent) == scenario.n_joint_inputs
                    and all(v == 1 for _, _, v in ent)
                    and [x for x, _, _ in ent] == list(range(scenario.n_joint_inputs))):
                self.outcomes = tuple(a for _, a, _ in ent)
                self.entries = None
            else:
                self.outcomes = None
                self.entries = ent

    @property
    def is_deterministic(self) -> bool:
        return self.outcomes is not None

    def sparse(self) -> Iterable[tuple[int, int, Q]]:
        if self.outcomes is not None:
            one = QONE
            return tuple((x, a, one) for x, a in enumerate(self.outcomes))
        return self.entries

    def sort_key(self):
        if self.outcomes is not None:
            return tuple((x, a, 1, 1) for x, a in enumerate(self.outcomes))
        return tuple((x, a, v.numerator, v.denominator) for x, a, v in self.entries)

    def value_at(self, x_idx: int, a_idx: int) -> Q:
        if self.outcomes is not None:
            return QONE if self.outcomes[x_idx] == a_idx else QZERO
        # entries are sorted; linear scan is fine at our sparsity
        for x, a, v in self.entries:
            if x == x_idx and a == a_idx:
                return v
        return QZERO

    def row(self, x_idx: int) -> list[tuple[int, Q]]:
        """Nonzero (outcome, value) pairs of one table row."""
        if self.outcomes is not None:
            return [(self.outcomes[x_idx], QONE)]
        return [(a, v) for x, a, v in self.entries if x == x_idx]

    def dense(self) -> list[list[Q]]:
        ni, no = self.scenario.n_joint_inputs, self.scenario.n_joint_outputs
        rows = [[QZERO] * no for _ in range(ni)]
        for x, a, v in self.sparse():
            rows[x][a] += v
        return rows

    def to_correlation(self) -> Correlation:
        return Correlation(self.scenario, self.dense(), "rational")

    def flat(self) -> list[Q]:
        """Dense table flattened row-major, for rank computations."""
        no = self.scenario.n_joint_outputs
        vec = [QZERO] * (self.scenario.n_joint_inputs * no)
        for x, a, v in self.sparse():
            vec[x * no + a] += v
        return vec

    def id_string(self) -> str:
        return ";".join(str(p) for p in self.provenance) if self.provenance else "anon"

    def __eq__(self, other):
        return isinstance(other, Vertex) and self.scenario == other.scenario \
            and self.sort_key() == other.sort_key()

    def __hash__(self):
        return hash((self.scenario, self.sort_key()))

    def __repr__(self):
        kind = "det" if self.is_deterministic else f"sparse[{len(self.entries)}]"
        return f"Vertex({kind}, {self.id_string()})"


@dataclass(frozen=True)
class Partition:
    """Disjoint party groups covering 0..n-1, canonically ordered."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(tuple(sorted(b)) for b in self.blocks)
        blocks = tuple(sorted(blocks, key=lambda b: b[0]))
        flat = [p for b in blocks for p in b]
        if sorted(flat) != list(range(len(flat))) or not flat:
            raise ValueError("blocks must disjointly cover 0..n-1")
        object.__setattr__(self, "blocks", blocks)

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def max_block(self) -> int:
        return max(len(b) for b in self.blocks)

    def __str__(self):
        return "|".join(",".join(str(p) for p in b) for b in self.blocks)

    @classmethod
    def parse(cls, text: str) -> "Partition":
        return cls(tuple(tuple(int(p) for p in b.split(",")) for b in text.split("|")))


def partitions(n: int, k: int) -> list[Partition]:
    """All set partitions of 0..n-1 with every block of size <= k."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    out: list[Partition] = []

    def extend(i: int, blocks: list[list[int]]):
        if i == n:
            out.append(Partition(tuple(tuple(b) for b in blocks)))
            return
        for b in blocks:
            if len(b) < k:
                b.append(i)
                extend(i + 1, blocks)
                b.pop()
        blocks.append([i])
        extend(i + 1, blocks)
        blocks.pop()

    extend(0, [])
    return sorted(out, key=lambda p: p.blocks)


class VertexSet:
    """Deduplicated, canonically sorted vertex list of one producible polytope."""

    def __init__(self, scenario: Scenario, resource: str, k: int | None,
                 vertices: Iterable[Vertex], partition: Partition | None = None,
                 raw_count: int | None = None):
        if resource not in RESOURCES and resource != "external":
            raise ValueError(f"unknown resource {resource!r}")
        self.scenario = scenario
        self.resource = resource
        self.k = k
        self.partition = partition
        seen: dict = {}
        count = 0
        for v in vertices:
            count += 1
            seen.setdefault(v.sort_key(), v)
        self.vertices = sorted(seen.values(), key=Vertex.sort_key)
        self.raw_count = raw_count if raw_count is not None else count

    def __len__(self):
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def __getitem__(self, i):
        return self.vertices[i]

    def key_set(self):
        return {v.sort_key() for v in self.vertices}

    def __repr__(self):
        part = f", partition={self.partition}" if self.partition else ""
        return (f"VertexSet({self.resource}, k={self.k}, n={self.scenario.n}, "
                f"{len(self)} vertices{part})")


# ---------------------------------------------------------------------------
# Deterministic group strategies


def group_deterministic_vertices(scenario: Scenario, group: Sequence[int],
                                 cap: int = DET_GROUP_CAP) -> VertexSet:
    """All joint deterministic strategies of a party group, as group-scenario vertices."""
    group = tuple(group)
    if not group:
        raise ValueError("group must be nonempty")
    sub = scenario.subscenario(group)
    ni, no = sub.n_joint_inputs, sub.n_joint_outputs
    count = no ** ni
    if count > cap:
        raise CapExceededError(
            f"{count} deterministic strategies for group {group} exceed the cap {cap}")
    verts = []
    for fidx in range(count):
        # decode fidx as a base-`no` outcome per joint input
        rem = fidx
        outs = [0] * ni
        for x in range(ni - 1, -1, -1):
            outs[x] = rem % no
            rem //= no
        verts.append(Vertex(sub, outcomes=outs, provenance=("det", fidx)))
    return VertexSet(sub, "S", len(group), verts)


def _local_deterministic_vertices(sub: Scenario) -> list[Vertex]:
    """Products of per-party deterministic assignments on a (sub)scenario."""
    per_party = []
    for i in range(sub.n):
        m, l = sub.inputs[i], sub.outputs[i]
        per_party.append(list(iproduct(range(l), repeat=m)))
    verts = []
    for combo_idx, combo in enumerate(iproduct(*per_party)):
        outs = []
        for x in sub.all_inputs():
            outs.append(sub.output_index(tuple(combo[i][x[i]] for i in range(sub.n))))
        verts.append(Vertex(sub, outcomes=outs, provenance=("ldet", combo_idx)))
    return verts


# ---------------------------------------------------------------------------
# Double description enumeration of the no-signaling polytope


def _ns_h_representation(scenario: Scenario):
    """Equality rows (E, e) and the table dimension of the NS polytope.

    Equalities: per-input normalization, and for each party the equality of
    every outcome marginal of the other parties between x_i = v and x_i = 0.
    Inequalities are coordinate non-negativity and are implicit.
    """
    ni, no = scenario.n_joint_inputs, scenario.n_joint_outputs
    D = ni * no
    E, e = [], []
    for x in range(ni):
        row = [QZERO] * D
        for a in range(no):
            row[x * no + a] = QONE
        E.append(row)
        e.append(QONE)
    n = scenario.n
    for i in range(n):
        others = [j for j in range(n) if j != i]
        other_inputs = list(iproduct(*(range(scenario.inputs[j]) for j in others)))
        other_outputs = list(iproduct(*(range(scenario.outputs[j]) for j in others)))
        for xo in other_inputs:
            base = [0] * n
            for kk, j in enumerate(others):
                base[j] = xo[kk]
            for v in range(1, scenario.inputs[i]):
                for ao in other_outputs:
                    row = [QZERO] * D
                    for ai in range(scenario.outputs[i]):
                        a = [0] * n
                        for kk, j in enumerate(others):
                            a[j] = ao[kk]
                        a[i] = ai
                        a_idx = scenario.output_index(a)
                        x1 = list(base)
                        x1[i] = v
                        row[scenario.input_index(x1) * no + a_idx] += QONE
                        x0 = list(base)
                        x0[i] = 0
                        row[scenario.input_index(x0) * no + a_idx] -= QONE
                    E.append(row)
                    e.append(QZERO)
    return E, e, D


def _double_description(halfspaces):
    """Extreme rays of {z : H z >= 0} for a pointed full-dimensional cone.

    Incremental insertion with the combinatorial adjacency test. Rays are
    canonicalized to coprime integer vectors. Raises if no full-rank
    initial simplicial cone exists (cone not pointed / not full-dim).
    """
    d = len(halfspaces[0])
    init = independent_rows(halfspaces, d)
    if init is None:
        raise ValueError("halfspace system is not full-dimensional")
    M = [halfspaces[i] for i in init]
    Minv = invert(M)
    rays = [_canon_ray([Minv[r][c] for r in range(d)]) for c in range(d)]
    processed = list(init)
    zsets = [_zero_mask(r, halfspaces, processed) for r in rays]

    for h_idx, h in enumerate(halfspaces):
        if h_idx in init:
            continue
        vals = [_dot(h, r) for r in rays]
        pos = [i for i, v in enumerate(vals) if v > 0]
        zer = [i for i, v in enumerate(vals) if v == 0]
        neg = [i for i, v in enumerate(vals) if v < 0]
        if not neg:
            processed.append(h_idx)
            bit = 1 << (len(processed) - 1)
            zsets = [z | (bit if i in set(zer) else 0) for i, z in enumerate(zsets)]
            continue
        new_rays = []
        for ip in pos:
            for im in neg:
                meet = zsets[ip] & zsets[im]
                adjacent = True
                for j in range(len(rays)):
                    if j != ip and j != im and (zsets[j] & meet) == meet:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                vp, vm = vals[ip], vals[im]
                ray = [vp * bm - vm * bp for bp, bm in zip(rays[ip], rays[im])]
                new_rays.append(_canon_ray(ray))
        processed.append(h_idx)
        keep_idx = pos + zer
        rays = [rays[i] for i in keep_idx] + new_rays
        zsets = [_zero_mask(r, halfspaces, processed) for r in rays]
    return rays


def _dot(u, v):
    s = QZERO
    for a, b in zip(u, v):
        if a != 0 and b != 0:
            s += a * b
    return s


def _canon_ray(ray):
    # rays scale only by positive factors: clear denominators, divide by gcd
    from math import gcd
    den = 1
    for v in ray:
        den = den * v.denominator // gcd(den, v.denominator)
    ints = [int(v * den) for v in ray]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    if g > 1:
        ints = [v // g for v in ints]
    return tuple(Q(v) for v in ints)


def _zero_mask(ray, halfspaces, processed):
    mask = 0
    for bit, h_idx in enumerate(processed):
        if _dot(halfspaces[h_idx], ray) == 0:
            mask |= 1 << bit
    return mask


_NS_CACHE: dict[Scenario, VertexSet] = {}


def ns_vertices(scenario: Scenario, cap: int = NS_TABLE_DIM_CAP) -> VertexSet:
    """Exact extreme points of the no-signaling polytope of a scenario."""
    cached = _NS_CACHE.get(scenario)
    if cached is not None:
        return cached
    ni, no = scenario.n_joint_inputs, scenario.n_joint_outputs
    D = ni * no
    if D > cap:
        raise CapExceededError(
            f"table dimension {D} exceeds the enumeration cap {cap}")
    E, e, _ = _ns_h_representation(scenario)
    p0 = solve_particular(E, e)
    if p0 is None:
        raise RuntimeError("no-signaling equality system is inconsistent")
    basis = nullspace(E)
    d = len(basis)
    # homogenized reduced inequalities: coordinate j >= 0 becomes
    # sum_k basis[k][j] t_k + p0[j] s >= 0; append s >= 0
    halfspaces = []
    for j in range(D):
        halfspaces.append([b[j] for b in basis] + [p0[j]])
    halfspaces.append([QZERO] * d + [QONE])
    rays = _double_description(halfspaces)
    verts = []
    for ray in rays:
        s = ray[d]
        if s == 0:
            raise RuntimeError("unbounded direction in a probability polytope")
        t = [v / s for v in ray[:d]]
        flat = [p0[j] + sum(basis[kk][j] * t[kk] for kk in range(d)) for j in range(D)]
        entries = [(j // no, j % no, v) for j, v in enumerate(flat) if v != 0]
        verts.append(Vertex(scenario, entries=entries, provenance=("ns",)))
    vs = VertexSet(scenario, "NS", scenario.n, verts)
    # provenance index follows the canonical order
    for idx, v in enumerate(vs.vertices):
        v.provenance = ("ns", idx)
    _NS_CACHE[scenario] = vs
    return vs


def extremality_rank(scenario: Scenario, vertex: Vertex) -> tuple[int, int]:
    """(active-constraint rank, table dimension) for an NS polytope member.

    The point is a 0-dimensional face, i.e. an extreme point, iff the
    equality rows plus the tight non-negativity rows reach full rank.
    """
    E, _, D = _ns_h_representation(scenario)
    no = scenario.n_joint_outputs
    flat = vertex.flat()
    rows = [list(r) for r in E]
    for j in range(D):
        if flat[j] == 0:
            row = [QZERO] * D
            row[j] = QONE
            rows.append(row)
    return rank(rows), D


# ---------------------------------------------------------------------------
# Products over partitions


def _group_maps(scenario: Scenario, group: tuple[int, ...]):
    """Index helpers: global input -> group sub-input, and group sub-outcome ->
    contribution to the global outcome index."""
    sub = scenario.subscenario(group)
    sub_in = []
    for x_idx in range(scenario.n_joint_inputs):
        x = scenario.input_tuple(x_idx)
        sub_in.append(sub.input_index(tuple(x[p] for p in group)))
    weights = []
    w = 1
    for l in reversed(scenario.outputs):
        weights.append(w)
        w *= l
    weights.reverse()
    contrib = []
    for sa_idx in range(sub.n_joint_outputs):
        sa = sub.output_tuple(sa_idx)
        contrib.append(sum(sa[kk] * weights[p] for kk, p in enumerate(group)))
    return sub, sub_in, contrib


def group_extremes(scenario: Scenario, group: tuple[int, ...], resource: str,
                   external: dict | None = None,
                   det_cap: int = DET_GROUP_CAP, ns_cap: int = NS_TABLE_DIM_CAP) -> list[Vertex]:
    """Extremal vertices of one group under a resource, on the group scenario."""
    sub = scenario.subscenario(group)
    if resource == "L":
        return _local_deterministic_vertices(sub)
    if resource == "S":
        if len(group) == 1:
            return _local_deterministic_vertices(sub)
        return list(group_deterministic_vertices(scenario, group, cap=det_cap))
    if resource == "NS":
        if len(group) == 1:
            return _local_deterministic_vertices(sub)
        if len(group) == 2:
            return list(ns_vertices(sub, cap=ns_cap))
        if external and sub in external:
            return list(external[sub])
        raise MissingVertexDataError(
            f"no-signaling extremes for a {len(group)}-party group need an external "
            f"vertex file for scenario inputs={sub.inputs} outputs={sub.outputs}")
    raise ValueError(f"unknown resource {resource!r}")


_PRODUCIBLE_CACHE: dict = {}


def producible_vertices(scenario: Scenario, resource: str, k: int,
                        partition: Partition | None = None,
                        external: dict | None = None,
                        det_cap: int = DET_GROUP_CAP,
                        ns_cap: int = NS_TABLE_DIM_CAP) -> VertexSet:
    """Vertices of R_{n,k}: products of group extremes over bounded partitions.

    With `partition` given, only that partition's products are generated
    (its blocks must respect k). `external` maps group Scenario -> vertex
    list and unlocks levels whose group polytopes are not enumerated
    natively (non-signaling groups of 3 or more parties). Results without
    external data are cached (vertex sets are immutable).
    """
    if resource not in RESOURCES:
        raise ValueError(f"unknown resource {resource!r}")
    cache_key = None
    if external is None and det_cap == DET_GROUP_CAP and ns_cap == NS_TABLE_DIM_CAP:
        cache_key = (scenario, resource, k, partition)
        cached = _PRODUCIBLE_CACHE.get(cache_key)
        if cached is not None:
            return cached
    n = scenario.n
    if partition is not None:
        if partition.n != n:
            raise ValueError("partition does not match the scenario")
        if partition.max_block > k:
            raise ValueError(f"partition has a block larger than k={k}")
        parts = [partition]
    else:
        parts = partitions(n, k)

    one = QONE
    out: list[Vertex] = []
    raw = 0
    for pidx, part in enumerate(parts):
        groups = part.blocks
        infos = [_group_maps(scenario, g) for g in groups]
        extremes = [group_extremes(scenario, g, resource, external, det_cap, ns_cap)
                    for g in groups]
        all_det_lists = [[v for v in ex] for ex in extremes]
        part_tag = str(part)
        for combo in iproduct(*(range(len(ex)) for ex in extremes)):
            vs = [all_det_lists[g][combo[g]] for g in range(len(groups))]
            raw += 1
            prov = (resource, k, part_tag) + combo
            if all(v.is_deterministic for v in vs):
                outs = []
                for x_idx in range(scenario.n_joint_inputs):
                    a_idx = 0
                    for (sub, sub_in, contrib), v in zip(infos, vs):
                        a_idx += contrib[v.outcomes[sub_in[x_idx]]]
                    outs.append(a_idx)
                out.append(Vertex(scenario, outcomes=outs, provenance=prov))
            else:
                rows_per_group = []
                for (sub, sub_in, contrib), v in zip(infos, vs):
                    per_sub = {}
                    for x, a, val in v.sparse():
                        per_sub.setdefault(x, []).append((contrib[a], val))
                    rows_per_group.append((sub_in, per_sub))
                entries = []
                for x_idx in range(scenario.n_joint_inputs):
                    cells = [(0, one)]
                    for sub_in, per_sub in rows_per_group:
                        nxt = []
                        for base, bv in cells:
                            for contrib_a, val in per_sub[sub_in[x_idx]]:
                                nxt.append((base + contrib_a, bv * val))
                        cells = nxt
                    entries.extend((x_idx, a, v) for a, v in cells)
                out.append(Vertex(scenario, entries=entries, provenance=prov))
    vs = VertexSet(scenario, resource, k, out, partition=partition, raw_count=raw)
    if cache_key is not None:
        _PRODUCIBLE_CACHE[cache_key] = vs
    return vs


# ---------------------------------------------------------------------------
# Vertex file I/O


def _scenario_to_dict(sc: Scenario) -> dict:
    return {"inputs": list(sc.inputs), "outputs": list(sc.outputs)}


def _scenario_from_dict(d: dict) -> Scenario:
    return Scenario(tuple(d["inputs"]), tuple(d["outputs"]))


def vertex_to_list(v: Vertex) -> list:
    return [[x, a, qstr(val)] for x, a, val in v.sparse()]


def vertex_from_list(scenario: Scenario, lst, provenance=("file",)) -> Vertex:
    return Vertex(scenario, entries=[(x, a, qparse(val)) for x, a, val in lst],
                  provenance=provenance)


def save_vertex_set(vs: VertexSet, path) -> None:
    path = str(path)
    meta = {"scenario": _scenario_to_dict(vs.scenario), "resource": vs.resource,
            "k": vs.k}
    if vs.partition is not None:
        meta["partition"] = str(vs.partition)
    if path.endswith(".jsonl"):
        with open(path, "w") as fh:
            fh.write(json.dumps(meta, sort_keys=True) + "\n")
            for v in vs:
                fh.write(json.dumps(vertex_to_list(v)) + "\n")
    else:
        meta["vertices"] = [vertex_to_list(v) for v in vs]
        with open(path, "w") as fh:
            json.dump(meta, fh, sort_keys=True)
            fh.write("\n")


def load_vertex_file(path) -> VertexSet:
    path = str(path)
    if path.endswith(".jsonl"):
        with open(path) as fh:
            meta = json.loads(fh.readline())
            raw = [json.loads(line) for line in fh if line.strip()]
    else:
        with open(path) as fh:
            meta = json.load(fh)
        raw = meta["vertices"]
    sc = _scenario_from_dict(meta["scenario"])
    verts = [vertex_from_list(sc, lst, provenance=("file", i))
             for i, lst in enumerate(raw)]
    partition = Partition.parse(meta["partition"]) if "partition" in meta else None
    resource = meta.get("resource", "external")
    return VertexSet(sc, resource, meta.get("k"), verts, partition=partition)
