import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from mgs.corrspace import (Correlation, CorrelationError, ConditioningError,
                           DeterministicResidueFunction, Scenario, SignalingError,
                           condition, correlation_from_dict, correlation_to_dict,
                           deterministic_correlation, full_correlators,
                           is_no_signaling, marginal, mix, new_correlation, product,
                           simulate_full_correlators, uniform_correlation)
from mgs.rationals import Q


def pr_box() -> Correlation:
    sc = Scenario.uniform(2, 2, 2)
    f = DeterministicResidueFunction(sc, tuple((x // 2) * (x % 2) for x in range(4)))
    return simulate_full_correlators(f)


# --- scenarios and indexing -------------------------------------------------

def test_mixed_radix_party0_most_significant():
    sc = Scenario((2, 3), (2, 2))
    assert sc.input_index((1, 2)) == 1 * 3 + 2
    assert sc.input_tuple(5) == (1, 2)
    assert sc.n_joint_inputs == 6 and sc.n_joint_outputs == 4


def test_scenario_validation():
    with pytest.raises(ValueError):
        Scenario((2, 0), (2, 2))
    with pytest.raises(ValueError):
        Scenario((2,), (2, 2))


# --- construction and validation ---------------------------------------------

def test_point_distribution_valid():
    sc = Scenario((1,), (2,))
    P = new_correlation(sc, [[1, 0]])
    assert P.mode == "rational"
    assert P.table[0][0] == 1


def test_uniform_quarter_table_valid():
    sc = Scenario.uniform(2, 2, 2)
    P = new_correlation(sc, [[Q(1, 4)] * 4] * 4)
    assert P.table[2][3] == Q(1, 4)


def test_normalization_enforced():
    sc = Scenario((1,), (2,))
    with pytest.raises(CorrelationError):
        new_correlation(sc, [[0.5, 0.4]], mode="real")
    with pytest.raises(CorrelationError):
        new_correlation(sc, [[Q(1, 2), Q(2, 5)]])


def test_negative_entry_rejected():
    sc = Scenario((1,), (2,))
    with pytest.raises(CorrelationError):
        new_correlation(sc, [[Q(3, 2), Q(-1, 2)]])


def test_shape_mismatch_rejected():
    sc = Scenario.uniform(2, 2, 2)
    with pytest.raises(CorrelationError):
        new_correlation(sc, [[1, 0, 0, 0]] * 3)


# --- no-signaling ------------------------------------------------------------

def test_pr_box_is_no_signaling():
    rep = is_no_signaling(pr_box())
    assert rep.passed and rep.worst_deviation == 0


def test_one_way_signaling_detected():
    # party 2 outputs x1 deterministically
    sc = Scenario.uniform(2, 2, 2)
    rows = []
    for x in range(4):
        x1 = x // 2
        row = [Q(0)] * 4
        row[sc.output_index((0, x1))] = Q(1)
        rows.append(row)
    P = new_correlation(sc, rows)
    rep = is_no_signaling(P)
    assert not rep.passed
    assert rep.worst_subset == (1,)
    assert rep.removed_party == 0


def brute_force_all_subset_marginals_independent(P: Correlation) -> bool:
    """Oracle: every subset's outcome marginal is independent of the rest."""
    sc = P.scenario
    n = sc.n
    for mask in range(1, 2 ** n - 1):
        sub = tuple(i for i in range(n) if mask >> i & 1)
        sub_sc = sc.subscenario(sub)
        tables = {}
        for x_idx in range(sc.n_joint_inputs):
            x = sc.input_tuple(x_idx)
            key = tuple(x[i] for i in sub)
            marg = [Q(0)] * sub_sc.n_joint_outputs
            for a_idx in range(sc.n_joint_outputs):
                a = sc.output_tuple(a_idx)
                marg[sub_sc.output_index(tuple(a[i] for i in sub))] += P.table[x_idx][a_idx]
            if key in tables and tables[key] != marg:
                return False
            tables[key] = marg
    return True


def test_single_removal_check_implies_full_subset_consistency():
    # the implementation theorem behind is_no_signaling, checked directly
    rng = np.random.default_rng(7)
    for _ in range(10):
        sc = Scenario.uniform(int(rng.integers(2, 4)), 2, 2)
        res = tuple(int(r) for r in rng.integers(0, 2, sc.n_joint_inputs))
        P = simulate_full_correlators(DeterministicResidueFunction(sc, res))
        assert is_no_signaling(P).passed
        assert brute_force_all_subset_marginals_independent(P)


# --- conditioning and marginals ----------------------------------------------

def test_condition_product_recovers_factor():
    sc1 = Scenario.uniform(1, 2, 2)
    P1 = deterministic_correlation(sc1, [0, 1])
    P2 = uniform_correlation(Scenario.uniform(2, 2, 2))
    joint = product([(P1, (0,)), (P2, (1, 2))])
    cond = condition(joint, [1, 2], [0, 1], [1, 0])
    assert cond.table == P1.table


def test_condition_vanishing_block_errors():
    sc = Scenario.uniform(2, 2, 2)
    P = deterministic_correlation(sc, [0, 0, 0, 0])  # always outputs (0,0)
    with pytest.raises(ConditioningError):
        condition(P, [1], [0], [1])


def test_marginal_of_uniform_is_uniform():
    P = uniform_correlation(Scenario.uniform(4, 2, 2))
    M = marginal(P, (0, 1, 2))
    assert M.table == uniform_correlation(Scenario.uniform(3, 2, 2)).table


def test_marginal_of_product_recovers_factor():
    P1 = pr_box()
    P2 = deterministic_correlation(Scenario.uniform(1, 2, 2), [1, 0])
    joint = product([(P1, (0, 2)), (P2, (1,))])
    M = marginal(joint, (0, 2))
    assert M.table == P1.table


def test_marginal_rejects_signaling_input():
    sc = Scenario.uniform(2, 2, 2)
    rows = []
    for x in range(4):
        x1 = x // 2
        row = [Q(0)] * 4
        row[sc.output_index((0, x1))] = Q(1)
        rows.append(row)
    P = new_correlation(sc, rows)
    with pytest.raises(SignalingError):
        marginal(P, (1,))


# --- full correlators ----------------------------------------------------------

def test_full_correlators_deterministic_zero_output():
    sc = Scenario.uniform(2, 2, 2)
    P = deterministic_correlation(sc, [0, 0, 0, 0])
    fc = full_correlators(P)
    for x in range(4):
        assert fc.values[x][0] == 1 and fc.values[x][1] == 0


def test_full_correlators_match_pm1_expectation():
    # for binary outcomes, P(r=0) - P(r=1) is the product expectation
    rng = np.random.default_rng(3)
    sc = Scenario.uniform(2, 2, 2)
    for _ in range(5):
        raw = rng.dirichlet(np.ones(4), size=4)
        P = new_correlation(sc, raw, mode="real")
        fc = full_correlators(P)
        for x in range(4):
            expect = sum((-1) ** sum(sc.output_tuple(a)) * P.table[x][a]
                         for a in range(4))
            assert abs((fc.values[x][0] - fc.values[x][1]) - expect) < 1e-12


def test_full_correlators_uniform():
    P = uniform_correlation(Scenario.uniform(2, 2, 3))
    fc = full_correlators(P)
    assert all(v == Q(1, 3) for row in fc.values for v in row)


def test_full_correlators_requires_uniform_outputs():
    P = uniform_correlation(Scenario((2, 2), (2, 3)))
    with pytest.raises(ValueError):
        full_correlators(P)


# --- the non-signaling simulator ----------------------------------------------

def test_simulator_pr_box():
    P = pr_box()
    sc = P.scenario
    for x in range(4):
        x1, x2 = sc.input_tuple(x)
        for a in range(4):
            a1, a2 = sc.output_tuple(a)
            want = Q(1, 2) if (a1 + a2) % 2 == x1 * x2 else Q(0)
            assert P.table[x][a] == want


def test_simulator_constant_function_perfect_correlation():
    sc = Scenario.uniform(2, 2, 2)
    P = simulate_full_correlators(DeterministicResidueFunction(sc, (0, 0, 0, 0)))
    M = marginal(P, (0,))
    assert all(v == Q(1, 2) for row in M.table for v in row)


@given(st.data())
def test_simulator_property_ns_and_indicator(data):
    n = data.draw(st.integers(2, 4))
    m = data.draw(st.integers(1, 3))
    l = data.draw(st.integers(2, 4))
    sc = Scenario.uniform(n, m, l)
    res = tuple(data.draw(st.integers(0, l - 1)) for _ in range(sc.n_joint_inputs))
    P = simulate_full_correlators(DeterministicResidueFunction(sc, res))
    assert is_no_signaling(P).passed
    fc = full_correlators(P)
    for x in range(sc.n_joint_inputs):
        assert all((fc.values[x][r] == 1) == (r == res[x]) for r in range(l))
    # proper marginals are uniform
    M = marginal(P, tuple(range(n - 1)))
    want = Q(1, l ** (n - 1))
    assert all(v == want for row in M.table for v in row)


# --- mix and product -----------------------------------------------------------

def test_mix_single_weight_identity():
    P = pr_box()
    assert mix([(1, P)]).table == P.table


def test_mix_weight_validation():
    P = pr_box()
    with pytest.raises(ValueError):
        mix([(Q(1, 2), P), (Q(1, 3), P)])
    with pytest.raises(ValueError):
        mix([(Q(3, 2), P), (Q(-1, 2), P)])


def test_product_of_deterministic_is_deterministic():
    P1 = deterministic_correlation(Scenario.uniform(1, 2, 2), [0, 1])
    P2 = deterministic_correlation(Scenario.uniform(1, 2, 2), [1, 1])
    joint = product([(P1, (0,)), (P2, (1,))])
    sc = joint.scenario
    for x in range(4):
        x1, x2 = sc.input_tuple(x)
        want = sc.output_index(([0, 1][x1], 1))
        assert joint.table[x][want] == 1


def test_mixture_of_pair_products_is_no_signaling():
    # equal mixture over the three pairings, each with identical box factors
    sc2 = Scenario.uniform(2, 2, 2)
    box = pr_box()
    pairs = [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))]
    parts = [product([(box, g1), (box, g2)]) for g1, g2 in pairs]
    P = mix([(Q(1, 3), p) for p in parts])
    assert is_no_signaling(P).passed


def test_product_condition_commute_on_groups():
    # conditioning inside one group of a product equals conditioning that factor
    box = pr_box()
    single = deterministic_correlation(Scenario.uniform(1, 2, 2), [0, 1])
    joint = product([(box, (0, 1)), (single, (2,))])
    left = condition(joint, [1], [0], [0])
    right = product([(condition(box, [1], [0], [0]), (0,)), (single, (1,))])
    assert left.table == right.table


def test_mix_commutes_with_full_correlators():
    sc = Scenario.uniform(2, 2, 2)
    A = pr_box()
    B = uniform_correlation(sc)
    mixed = mix([(Q(1, 4), A), (Q(3, 4), B)])
    fa, fb, fm = full_correlators(A), full_correlators(B), full_correlators(mixed)
    for x in range(4):
        for r in range(2):
            assert fm.values[x][r] == Q(1, 4) * fa.values[x][r] + Q(3, 4) * fb.values[x][r]


# --- serialization --------------------------------------------------------------

def test_rational_roundtrip_bit_exact():
    P = pr_box()
    d = correlation_to_dict(P)
    Q2 = correlation_from_dict(d)
    assert Q2.table == P.table and Q2.scenario == P.scenario


def test_real_roundtrip():
    sc = Scenario.uniform(1, 2, 2)
    P = new_correlation(sc, [[0.25, 0.75], [0.6, 0.4]], mode="real")
    d = correlation_to_dict(P)
    P2 = correlation_from_dict(d)
    assert np.array_equal(np.asarray(P2.table), np.asarray(P.table))


def test_rationalize_reports_error():
    sc = Scenario.uniform(1, 1, 2)
    P = new_correlation(sc, [[1 / 3, 2 / 3]], mode="real")
    Px, err = P.to_rational(10 ** 6)
    assert Px.table[0][0] == Q(1, 3)
    assert err < 1e-6
