import itertools

import pytest
from hypothesis import given
import hypothesis.strategies as st

from mgs.corrspace import Scenario, is_no_signaling
from mgs.polytope import (CapExceededError, MissingVertexDataError, Partition,
                          Vertex, extremality_rank, group_deterministic_vertices,
                          load_vertex_file, ns_vertices, partitions,
                          producible_vertices, save_vertex_set)
from mgs.rationals import Q


def all_set_partitions(n):
    """Oracle: textbook recursive enumeration of all set partitions."""
    if n == 0:
        return [[]]
    out = []
    for smaller in all_set_partitions(n - 1):
        for i in range(len(smaller)):
            out.append(smaller[:i] + [smaller[i] + [n - 1]] + smaller[i + 1:])
        out.append(smaller + [[n - 1]])
    return out


# --- partitions --------------------------------------------------------------

def test_partitions_4_2_count_and_shape():
    ps = partitions(4, 2)
    assert len(ps) == 10
    sizes = sorted(tuple(sorted(len(b) for b in p.blocks)) for p in ps)
    assert sizes.count((2, 2)) == 3
    assert sizes.count((1, 1, 2)) == 6
    assert sizes.count((1, 1, 1, 1)) == 1


def test_partitions_3_3_is_bell_number():
    assert len(partitions(3, 3)) == 5


def test_partitions_k1_single():
    ps = partitions(5, 1)
    assert len(ps) == 1
    assert ps[0].blocks == tuple((i,) for i in range(5))


@given(st.integers(1, 6), st.data())
def test_partitions_match_filtered_oracle(n, data):
    k = data.draw(st.integers(1, n))
    got = {tuple(tuple(b) for b in p.blocks) for p in partitions(n, k)}
    want = set()
    for blocks in all_set_partitions(n):
        if all(len(b) <= k for b in blocks):
            want.add(tuple(sorted(tuple(sorted(b)) for b in blocks)))
    assert got == want


def test_partition_canonical_order_and_parse():
    p = Partition(((3, 1), (0, 2)))
    assert str(p) == "0,2|1,3"
    assert Partition.parse("0,2|1,3") == p
    with pytest.raises(ValueError):
        Partition(((0, 1), (1, 2)))


# --- deterministic group strategies -------------------------------------------

def test_single_party_strategies():
    sc = Scenario.uniform(1, 2, 2)
    vs = group_deterministic_vertices(sc, (0,))
    assert len(vs) == 4


def test_pair_strategies_count():
    sc = Scenario.uniform(4, 2, 2)
    vs = group_deterministic_vertices(sc, (1, 2))
    assert len(vs) == 256
    assert all(v.is_deterministic for v in vs)


def test_triple_group_over_cap():
    sc = Scenario.uniform(3, 2, 2)
    with pytest.raises(CapExceededError):
        group_deterministic_vertices(sc, (0, 1, 2))  # 8^8 strategies


# --- double description --------------------------------------------------------

def known_ns22_vertices(sc):
    """Oracle: the textbook 16 + 8 extreme points of the two-party binary box."""
    verts = []
    for alpha, beta, gamma, delta in itertools.product(range(2), repeat=4):
        ent = []
        for x in range(4):
            x1, x2 = divmod(x, 2)
            a = (alpha * x1) ^ beta
            b = (gamma * x2) ^ delta
            ent.append((x, sc.output_index((a, b)), Q(1)))
        verts.append(Vertex(sc, entries=ent))
    for alpha, beta, gamma in itertools.product(range(2), repeat=3):
        ent = []
        for x in range(4):
            x1, x2 = divmod(x, 2)
            for a in range(2):
                b = a ^ (x1 * x2) ^ (alpha * x1) ^ (beta * x2) ^ gamma
                ent.append((x, sc.output_index((a, b)), Q(1, 2)))
        verts.append(Vertex(sc, entries=ent))
    return verts


def test_ns22_enumeration_matches_known_list():
    sc = Scenario.uniform(2, 2, 2)
    vs = ns_vertices(sc)
    assert len(vs) == 24
    got = vs.key_set()
    want = {v.sort_key() for v in known_ns22_vertices(sc)}
    assert got == want


def test_ns22_entry_values_and_split():
    vs = ns_vertices(Scenario.uniform(2, 2, 2))
    det = [v for v in vs if v.is_deterministic]
    assert len(det) == 16
    vals = {val for v in vs for _, _, val in v.sparse()}
    assert vals == {Q(1, 2), Q(1)}


def test_ns_vertices_all_extremal_and_valid():
    sc = Scenario.uniform(2, 2, 2)
    for v in ns_vertices(sc):
        r, D = extremality_rank(sc, v)
        assert r == D
        P = v.to_correlation()
        assert is_no_signaling(P).passed


def test_single_party_ns_polytope_is_deterministic():
    vs = ns_vertices(Scenario.uniform(1, 2, 2))
    assert len(vs) == 4
    assert all(v.is_deterministic for v in vs)


def test_ns_cap():
    with pytest.raises(CapExceededError):
        ns_vertices(Scenario.uniform(3, 2, 2), cap=63)


def test_ns_nontrivial_scenario_vertices_are_extremal():
    # 2 parties, 2 settings, (3,2) outcomes: checks the generic path
    sc = Scenario((2, 2), (3, 2))
    vs = ns_vertices(sc)
    assert len(vs) > 36  # more than the deterministic count
    for v in vs:
        r, D = extremality_rank(sc, v)
        assert r == D
        assert is_no_signaling(v.to_correlation()).passed


# --- producible vertex sets -----------------------------------------------------

def test_s42_fixed_partition_product_count():
    sc = Scenario.uniform(4, 2, 2)
    vs = producible_vertices(sc, "S", 2, partition=Partition.parse("0,1|2,3"))
    assert len(vs) == 65536
    assert vs.raw_count == 65536


def test_ns42_raw_column_count():
    sc = Scenario.uniform(4, 2, 2)
    vs = producible_vertices(sc, "NS", 2)
    assert vs.raw_count == 3 * 24 ** 2 + 6 * 24 * 4 ** 2 + 4 ** 4
    assert len(vs) == 1216  # after exact dedup


def test_l31_deterministic_vertices():
    vs = producible_vertices(Scenario.uniform(3, 2, 2), "L", 1)
    assert len(vs) == 64
    assert all(v.is_deterministic for v in vs)


def test_every_vertex_validates_and_ns_vertices_nonsignaling():
    sc = Scenario.uniform(3, 2, 2)
    for resource in ("L", "NS"):
        for v in producible_vertices(sc, resource, 2):
            P = v.to_correlation()  # validates normalization and positivity
            assert is_no_signaling(P).passed
    for v in producible_vertices(sc, "S", 2):
        v.to_correlation()


def test_monotonicity_in_k():
    sc = Scenario.uniform(3, 2, 2)
    for resource in ("L", "NS", "S"):
        k1 = producible_vertices(sc, resource, 1).key_set()
        k2 = producible_vertices(sc, resource, 2).key_set()
        assert k1 <= k2


def test_resource_hierarchy_on_vertices():
    sc = Scenario.uniform(2, 2, 2)
    loc = producible_vertices(sc, "L", 1).key_set()
    ns = ns_vertices(sc).key_set()
    assert loc <= ns
    # every NS vertex is a normalized table, i.e. a valid unconstrained strategy
    for v in ns_vertices(sc):
        v.to_correlation()


def test_hierarchy_inclusion_at_hull_level():
    # the inclusion chain is between hulls, not vertex lists: every
    # non-signaling pair-producible extreme point must decompose over the
    # unconstrained-pair columns
    import numpy as np
    from mgs.membership import decompose
    sc = Scenario.uniform(3, 2, 2)
    NS = producible_vertices(sc, "NS", 2)
    S = producible_vertices(sc, "S", 2)
    rng = np.random.default_rng(9)
    for idx in rng.choice(len(NS), 4, replace=False):
        res = decompose(NS[int(idx)].to_correlation(), S)
        assert res.feasible


def test_l_resource_ignores_k():
    sc = Scenario.uniform(3, 2, 2)
    assert producible_vertices(sc, "L", 1).key_set() == \
        producible_vertices(sc, "L", 3).key_set()


def test_ns_triple_group_needs_external_data():
    sc = Scenario.uniform(4, 2, 2)
    with pytest.raises(MissingVertexDataError):
        producible_vertices(sc, "NS", 3)


def test_external_vertices_unlock_levels():
    # use the exact pair enumeration as a stand-in external file for k=2 groups
    sc = Scenario.uniform(3, 2, 2)
    sub = Scenario.uniform(2, 2, 2)
    native = producible_vertices(sc, "NS", 2)
    external = {sub: list(ns_vertices(sub))}
    # pretend the pair polytope came from a file: results must agree
    vs = producible_vertices(sc, "NS", 2, external=external)
    assert vs.key_set() == native.key_set()


def test_partition_restricted_set_is_subset():
    sc = Scenario.uniform(4, 2, 2)
    part = Partition.parse("0,1|2,3")
    restricted = producible_vertices(sc, "NS", 2, partition=part)
    full = producible_vertices(sc, "NS", 2)
    assert restricted.key_set() <= full.key_set()


def test_dd_extremality_no_convex_combination():
    # LP oracle: no vertex is a convex combination of the other 23
    import numpy as np
    from mgs.membership import decompose
    from mgs.polytope import VertexSet
    sc = Scenario.uniform(2, 2, 2)
    vs = ns_vertices(sc)
    rng = np.random.default_rng(5)
    for idx in rng.choice(len(vs), 6, replace=False):
        others = VertexSet(sc, "NS", 2, [v for i, v in enumerate(vs) if i != idx])
        res = decompose(vs[int(idx)].to_correlation(), others)
        assert res.status == "infeasible"


# --- vertex file round trips ------------------------------------------------------

def test_vertex_file_roundtrip_json(tmp_path):
    vs = ns_vertices(Scenario.uniform(2, 2, 2))
    path = tmp_path / "ns22.json"
    save_vertex_set(vs, path)
    back = load_vertex_file(path)
    assert back.key_set() == vs.key_set()
    assert back.resource == "NS"


def test_vertex_file_roundtrip_jsonl(tmp_path):
    vs = producible_vertices(Scenario.uniform(2, 2, 2), "L", 1)
    path = tmp_path / "l21.jsonl"
    save_vertex_set(vs, path)
    back = load_vertex_file(path)
    assert back.key_set() == vs.key_set()


def test_vertex_canonicalizes_deterministic_sparse():
    sc = Scenario.uniform(1, 2, 2)
    v = Vertex(sc, entries=[(0, 1, Q(1)), (1, 0, Q(1))])
    assert v.is_deterministic
    assert v.outcomes == (1, 0)
