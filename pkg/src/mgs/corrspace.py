"""Scenarios and conditional-probability correlations.

A correlation is a table P(a|x) over an n-party Bell scenario, stored row
per joint input, column per joint outcome. Joint indices use mixed radix
with party 0 most significant: idx(x) = sum_i x_i * prod_{j>i} m_j.

Tables come in two numeric modes. "rational" tables hold exact gmpy2.mpq
entries and every check is exact; "real" tables hold float64 and checks use
a tolerance. Conversions between the modes are explicit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product as iproduct
from math import prod
from typing import Iterable, Sequence

import numpy as np

from .rationals import Q, QONE, QZERO, from_float_exact, qparse, qstr, rationalize

DEFAULT_REAL_TOL = 1e-9


class CorrelationError(ValueError):
    """Invalid correlation data (shape, negativity, normalization)."""


class SignalingError(ValueError):
    """Operation required a non-signaling correlation."""

    def __init__(self, message: str, subset: tuple[int, ...] = ()):
        super().__init__(message)
        self.subset = subset


class ConditioningError(ValueError):
    """Conditioning on an outcome block of probability zero."""


@dataclass(frozen=True)
class Scenario:
    """n parties with per-party setting counts `inputs` and outcome counts `outputs`."""

    inputs: tuple[int, ...]
    outputs: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(int(m) for m in self.inputs))
        object.__setattr__(self, "outputs", tuple(int(l) for l in self.outputs))
        if len(self.inputs) != len(self.outputs) or not self.inputs:
            raise ValueError("inputs and outputs must be equal-length, nonempty")
        if any(m < 1 for m in self.inputs) or any(l < 1 for l in self.outputs):
            raise ValueError("setting and outcome counts must be >= 1")

    @classmethod
    def uniform(cls, n: int, m: int, l: int) -> "Scenario":
        return cls((m,) * n, (l,) * n)

    @property
    def n(self) -> int:
        return len(self.inputs)

    @property
    def n_joint_inputs(self) -> int:
        return prod(self.inputs)

    @property
    def n_joint_outputs(self) -> int:
        return prod(self.outputs)

    def pack(self, radices: Sequence[int], digits: Sequence[int]) -> int:
        idx = 0
        for r, d in zip(radices, digits):
            if not 0 <= d < r:
                raise ValueError(f"digit {d} out of range for radix {r}")
            idx = idx * r + d
        return idx

    def unpack(self, radices: Sequence[int], idx: int) -> tuple[int, ...]:
        digits = []
        for r in reversed(radices):
            digits.append(idx % r)
            idx //= r
        return tuple(reversed(digits))

    def input_index(self, x: Sequence[int]) -> int:
        return self.pack(self.inputs, x)

    def output_index(self, a: Sequence[int]) -> int:
        return self.pack(self.outputs, a)

    def input_tuple(self, idx: int) -> tuple[int, ...]:
        return self.unpack(self.inputs, idx)

    def output_tuple(self, idx: int) -> tuple[int, ...]:
        return self.unpack(self.outputs, idx)

    def all_inputs(self) -> Iterable[tuple[int, ...]]:
        return iproduct(*(range(m) for m in self.inputs))

    def all_outputs(self) -> Iterable[tuple[int, ...]]:
        return iproduct(*(range(l) for l in self.outputs))

    def subscenario(self, parties: Sequence[int]) -> "Scenario":
        parties = tuple(parties)
        return Scenario(
            tuple(self.inputs[i] for i in parties),
            tuple(self.outputs[i] for i in parties),
        )

    def uniform_output_count(self) -> int:
        l = self.outputs[0]
        if any(li != l for li in self.outputs):
            raise ValueError("scenario does not have a uniform outcome count")
        return l


class Correlation:
    """Validated conditional probability table over a scenario.

    Immutable after construction. `table` is a tuple of row tuples of mpq in
    rational mode, or a read-only float64 ndarray in real mode.
    """

    __slots__ = ("scenario", "mode", "table")

    def __init__(self, scenario: Scenario, table, mode: str, *, tol: float = DEFAULT_REAL_TOL,
                 _validated: bool = False):
        if mode not in ("rational", "real"):
            raise CorrelationError(f"unknown mode {mode!r}")
        self.scenario = scenario
        self.mode = mode
        if mode == "rational":
            rows = tuple(tuple(Q(v) for v in row) for row in table)
            self.table = rows
        else:
            arr = np.array(table, dtype=np.float64)
            arr.setflags(write=False)
            self.table = arr
        if not _validated:
            self._validate(tol)

    def _validate(self, tol: float):
        ni, no = self.scenario.n_joint_inputs, self.scenario.n_joint_outputs
        if self.mode == "rational":
            if len(self.table) != ni or any(len(r) != no for r in self.table):
                raise CorrelationError(
                    f"table shape mismatch: expected {ni}x{no}")
            for xi, row in enumerate(self.table):
                s = QZERO
                for v in row:
                    if v < 0:
                        raise CorrelationError(
                            f"negative entry {v} at input {xi}")
                    s += v
                if s != 1:
                    raise CorrelationError(
                        f"row {xi} sums to {s}, expected exactly 1")
        else:
            if self.table.shape != (ni, no):
                raise CorrelationError(
                    f"table shape mismatch: expected ({ni}, {no}), got {self.table.shape}")
            if np.min(self.table) < -tol:
                raise CorrelationError(
                    f"negative entry {np.min(self.table)} beyond tolerance {tol}")
            sums = self.table.sum(axis=1)
            worst = np.max(np.abs(sums - 1.0))
            if worst > tol:
                raise CorrelationError(
                    f"row normalization off by {worst}, beyond tolerance {tol}")

    def value(self, x_idx: int, a_idx: int):
        return self.table[x_idx][a_idx]

    def to_real(self) -> "Correlation":
        if self.mode == "real":
            return self
        arr = [[float(v) for v in row] for row in self.table]
        return Correlation(self.scenario, arr, "real", _validated=True)

    def to_rational(self, max_denominator: int = 10**6) -> tuple["Correlation", float]:
        """Rationalize a real table, renormalizing each row exactly.

        The largest outcome entry of each row absorbs the normalization
        slack so rows sum to exactly 1. Returns the correlation and the
        worst-case entrywise conversion error.
        """
        if self.mode == "rational":
            return self, 0.0
        rows = []
        worst = 0.0
        for row in np.asarray(self.table):
            qrow = []
            for v in row:
                qv, err = rationalize(float(v), max_denominator)
                worst = max(worst, err)
                qrow.append(qv)
            slack = QONE - sum(qrow)
            jmax = max(range(len(qrow)), key=lambda j: qrow[j])
            qrow[jmax] += slack
            if qrow[jmax] < 0:
                raise CorrelationError("rationalization produced a negative entry")
            worst = max(worst, abs(float(slack)))
            rows.append(qrow)
        return Correlation(self.scenario, rows, "rational"), worst

    def to_exact_dyadic(self) -> "Correlation":
        """Exact rational copy of a real table (floats are dyadic rationals).

        Rows are renormalized exactly via the largest entry, as in
        to_rational; the adjustment is at float roundoff scale.
        """
        if self.mode == "rational":
            return self
        rows = []
        for row in np.asarray(self.table):
            qrow = [from_float_exact(float(v)) for v in row]
            slack = QONE - sum(qrow)
            jmax = max(range(len(qrow)), key=lambda j: qrow[j])
            qrow[jmax] += slack
            rows.append(qrow)
        return Correlation(self.scenario, rows, "rational")

    def __eq__(self, other):
        if not isinstance(other, Correlation):
            return NotImplemented
        if self.scenario != other.scenario or self.mode != other.mode:
            return False
        if self.mode == "rational":
            return self.table == other.table
        return bool(np.array_equal(self.table, other.table))

    def __repr__(self):
        return (f"Correlation(n={self.scenario.n}, inputs={self.scenario.inputs}, "
                f"outputs={self.scenario.outputs}, mode={self.mode})")


@dataclass(frozen=True)
class FullCorrelatorTable:
    """P([sum of outputs mod l] = r | x) for each joint input x and residue r."""

    scenario: Scenario
    values: tuple  # rows per joint input, l entries each (mpq or float)
    mode: str

    @property
    def modulus(self) -> int:
        return self.scenario.uniform_output_count()


@dataclass(frozen=True)
class DeterministicResidueFunction:
    """Total map from joint inputs to a residue in 0..l-1."""

    scenario: Scenario
    residues: tuple[int, ...]  # indexed by joint input

    def __post_init__(self):
        l = self.scenario.uniform_output_count()
        if len(self.residues) != self.scenario.n_joint_inputs:
            raise ValueError("residue table must cover every joint input")
        if any(not 0 <= r < l for r in self.residues):
            raise ValueError(f"residues must lie in 0..{l - 1}")

    def __call__(self, x_idx: int) -> int:
        return self.residues[x_idx]


@dataclass
class NoSignalingReport:
    passed: bool
    tol: float
    worst_deviation: float
    # subset whose marginal moved, the removed party whose input moved it,
    # and the two offending joint inputs (None when passed with slack)
    worst_subset: tuple[int, ...] | None = None
    removed_party: int | None = None
    witness_inputs: tuple[tuple[int, ...], tuple[int, ...]] | None = None

    def __bool__(self):
        return self.passed


def new_correlation(scenario: Scenario, table, mode: str | None = None,
                    tol: float = DEFAULT_REAL_TOL) -> Correlation:
    """Validate and build a Correlation; mode is inferred when omitted."""
    if mode is None:
        flat = table
        while isinstance(flat, (list, tuple)) and flat:
            flat = flat[0]
        mode = "real" if isinstance(flat, float) or isinstance(table, np.ndarray) else "rational"
    return Correlation(scenario, table, mode, tol=tol)


def uniform_correlation(scenario: Scenario) -> Correlation:
    v = Q(1, scenario.n_joint_outputs)
    row = [v] * scenario.n_joint_outputs
    return Correlation(scenario, [row] * scenario.n_joint_inputs, "rational", _validated=True)


def deterministic_correlation(scenario: Scenario, outcome_map: Sequence[int]) -> Correlation:
    """Point distribution per joint input; outcome_map[x_idx] is a joint outcome index."""
    no = scenario.n_joint_outputs
    rows = []
    for x in range(scenario.n_joint_inputs):
        row = [QZERO] * no
        row[outcome_map[x]] = QONE
        rows.append(row)
    return Correlation(scenario, rows, "rational", _validated=True)


def _marginal_rows(P: Correlation, keep: tuple[int, ...]):
    """For each joint input, the outcome marginal onto `keep` (summing the rest)."""
    sc = P.scenario
    keep_sc = sc.subscenario(keep)
    n_keep_out = keep_sc.n_joint_outputs
    proj = [0] * sc.n_joint_outputs
    for a_idx in range(sc.n_joint_outputs):
        a = sc.output_tuple(a_idx)
        proj[a_idx] = keep_sc.output_index(tuple(a[i] for i in keep))
    rows = []
    for x_idx in range(sc.n_joint_inputs):
        row = P.table[x_idx]
        if P.mode == "rational":
            acc = [QZERO] * n_keep_out
        else:
            acc = [0.0] * n_keep_out
        for a_idx in range(sc.n_joint_outputs):
            acc[proj[a_idx]] += row[a_idx]
        rows.append(acc)
    return rows


def is_no_signaling(P: Correlation, tol: float | None = None) -> NoSignalingReport:
    """Check that no party's input shifts the outcome marginal of the others.

    Only single-party-removal consistencies are tested: for each party i,
    the marginal on the other parties must not depend on x_i. Consistency
    for every smaller subset follows by induction (marginalizing one party
    at a time reuses the same single-removal equalities), which is verified
    directly in the test suite on small scenarios.

    Exact tables are checked with tol 0 regardless of the argument.
    """
    sc = P.scenario
    if tol is None:
        tol = 0.0 if P.mode == "rational" else DEFAULT_REAL_TOL
    if P.mode == "rational":
        tol = 0.0
    exact = P.mode == "rational"
    worst = QZERO if exact else 0.0
    worst_info = None
    for i in range(sc.n):
        others = tuple(j for j in range(sc.n) if j != i)
        if not others:
            continue
        rows = _marginal_rows(P, others)
        # group joint inputs by the inputs of `others`; entries must agree across x_i
        groups: dict[tuple[int, ...], list[int]] = {}
        for x_idx in range(sc.n_joint_inputs):
            x = sc.input_tuple(x_idx)
            groups.setdefault(tuple(x[j] for j in others), []).append(x_idx)
        for xo, idxs in groups.items():
            base = rows[idxs[0]]
            for x_idx in idxs[1:]:
                row = rows[x_idx]
                for b, v in zip(base, row):
                    dev = abs(v - b)
                    if dev > worst:
                        worst = dev
                        worst_info = (others, i,
                                      (sc.input_tuple(idxs[0]), sc.input_tuple(x_idx)))
    failed = worst > 0 if exact else worst > tol
    if failed:
        subset, removed, wit = worst_info
        return NoSignalingReport(False, tol, float(worst), subset, removed, wit)
    return NoSignalingReport(True, tol, float(worst))


def condition(P: Correlation, held_parties: Sequence[int], settings: Sequence[int],
              outcomes: Sequence[int]) -> Correlation:
    """Condition on fixed settings and outcomes of a block of parties.

    Returns the renormalized distribution on the remaining parties. The
    denominator is computed per remaining joint input; a vanishing
    denominator raises ConditioningError.
    """
    sc = P.scenario
    held = tuple(held_parties)
    if len(set(held)) != len(held) or any(not 0 <= p < sc.n for p in held):
        raise ValueError("held parties must be distinct valid indices")
    if len(settings) != len(held) or len(outcomes) != len(held):
        raise ValueError("settings/outcomes must match the held block")
    if len(held) == sc.n:
        raise ValueError("cannot condition away every party")
    rest = tuple(i for i in range(sc.n) if i not in held)
    rest_sc = sc.subscenario(rest)
    pos = {p: k for k, p in enumerate(held)}

    rows = []
    for xr in rest_sc.all_inputs():
        x = [0] * sc.n
        for k, p in enumerate(rest):
            x[p] = xr[k]
        for p in held:
            x[p] = settings[pos[p]]
        x_idx = sc.input_index(x)
        src = P.table[x_idx]
        num = []
        for ar in rest_sc.all_outputs():
            a = [0] * sc.n
            for k, p in enumerate(rest):
                a[p] = ar[k]
            for p in held:
                a[p] = outcomes[pos[p]]
            num.append(src[sc.output_index(a)])
        den = sum(num)
        if (P.mode == "rational" and den == 0) or (P.mode == "real" and float(den) <= 0.0):
            raise ConditioningError(
                f"conditioning block has probability 0 at remaining input {xr}")
        rows.append([v / den for v in num])
    mode = P.mode
    return Correlation(rest_sc, rows, mode, _validated=True)


def marginal(P: Correlation, subset: Sequence[int], tol: float | None = None) -> Correlation:
    """Marginal correlation on `subset`; requires P to be non-signaling.

    The complementary inputs are fixed to 0 (any choice agrees once the
    no-signaling check passes).
    """
    sc = P.scenario
    subset = tuple(subset)
    report = is_no_signaling(P, tol)
    if not report:
        raise SignalingError(
            f"correlation signals: marginal on {report.worst_subset} depends on "
            f"party {report.removed_party}'s input (deviation {report.worst_deviation})",
            subset=report.worst_subset or ())
    sub_sc = sc.subscenario(subset)
    rows_all = _marginal_rows(P, subset)
    rows = []
    for xs in sub_sc.all_inputs():
        x = [0] * sc.n
        for k, p in enumerate(subset):
            x[p] = xs[k]
        rows.append(rows_all[sc.input_index(x)])
    return Correlation(sub_sc, rows, P.mode, _validated=True)


def full_correlators(P: Correlation) -> FullCorrelatorTable:
    """Coarse-grain to P([sum_i a_i mod l] = r | x)."""
    sc = P.scenario
    l = sc.uniform_output_count()
    residue = [sum(sc.output_tuple(a_idx)) % l for a_idx in range(sc.n_joint_outputs)]
    rows = []
    for x_idx in range(sc.n_joint_inputs):
        src = P.table[x_idx]
        acc = [QZERO] * l if P.mode == "rational" else [0.0] * l
        for a_idx in range(sc.n_joint_outputs):
            acc[residue[a_idx]] += src[a_idx]
        rows.append(tuple(acc))
    return FullCorrelatorTable(sc, tuple(rows), P.mode)


def simulate_full_correlators(f: DeterministicResidueFunction) -> Correlation:
    """Non-signaling table whose full correlators are the indicator of f.

    P(a|x) = l^-(n-1) when sum_i a_i = f(x) mod l, else 0. Every proper
    marginal is uniform, so the table is non-signaling exactly.
    """
    sc = f.scenario
    l = sc.uniform_output_count()
    n = sc.n
    weight = Q(1, l ** (n - 1))
    residue = [sum(sc.output_tuple(a_idx)) % l for a_idx in range(sc.n_joint_outputs)]
    rows = []
    for x_idx in range(sc.n_joint_inputs):
        target = f(x_idx)
        rows.append([weight if residue[a_idx] == target else QZERO
                     for a_idx in range(sc.n_joint_outputs)])
    return Correlation(sc, rows, "rational", _validated=True)


def mix(weighted: Sequence[tuple]) -> Correlation:
    """Convex combination of correlations on a common scenario.

    `weighted` holds (weight, Correlation) pairs; weights must be
    non-negative and sum to 1 (exactly, when every part is rational).
    """
    if not weighted:
        raise ValueError("mix of nothing")
    sc = weighted[0][1].scenario
    if any(P.scenario != sc for _, P in weighted):
        raise ValueError("mix requires a common scenario")
    exact = all(P.mode == "rational" for _, P in weighted) and \
        all(not isinstance(w, float) for w, _ in weighted)
    ws = [Q(w) if exact else float(w) for w, _ in weighted]
    if any(w < 0 for w in ws):
        raise ValueError("negative mixture weight")
    total = sum(ws)
    if exact:
        if total != 1:
            raise ValueError(f"mixture weights sum to {total}, expected 1")
    elif abs(float(total) - 1.0) > DEFAULT_REAL_TOL:
        raise ValueError(f"mixture weights sum to {total}, expected 1")
    ni, no = sc.n_joint_inputs, sc.n_joint_outputs
    if exact:
        rows = [[QZERO] * no for _ in range(ni)]
        for w, P in zip(ws, (P for _, P in weighted)):
            for xi in range(ni):
                src = P.table[xi]
                row = rows[xi]
                for ai in range(no):
                    row[ai] += w * src[ai]
        return Correlation(sc, rows, "rational", _validated=True)
    acc = np.zeros((ni, no))
    for w, (_, P) in zip(ws, weighted):
        acc += float(w) * np.asarray(P.to_real().table)
    return Correlation(sc, acc, "real", _validated=True)


def product(factors: Sequence[tuple]) -> Correlation:
    """Tensor product of correlations placed on disjoint party groups.

    `factors` holds (Correlation, group) pairs where the groups are
    disjoint party index tuples covering 0..n-1 of the joint scenario.
    """
    groups = [tuple(g) for _, g in factors]
    flat = [p for g in groups for p in g]
    n = len(flat)
    if sorted(flat) != list(range(n)):
        raise ValueError("groups must be disjoint and cover 0..n-1")
    for (P, g) in factors:
        if P.scenario.n != len(g):
            raise ValueError("factor scenario size does not match its group")
    inputs = [0] * n
    outputs = [0] * n
    for (P, g) in factors:
        for k, p in enumerate(g):
            inputs[p] = P.scenario.inputs[k]
            outputs[p] = P.scenario.outputs[k]
    sc = Scenario(tuple(inputs), tuple(outputs))
    exact = all(P.mode == "rational" for P, _ in factors)
    rows = []
    for x in sc.all_inputs():
        row = []
        for a in sc.all_outputs():
            v = QONE if exact else 1.0
            for (P, g) in factors:
                xi = P.scenario.input_index(tuple(x[p] for p in g))
                ai = P.scenario.output_index(tuple(a[p] for p in g))
                v = v * P.table[xi][ai]
            row.append(v)
        rows.append(row)
    return Correlation(sc, rows, "rational" if exact else "real", _validated=True)


# ---------------------------------------------------------------------------
# JSON serialization


def correlation_to_dict(P: Correlation) -> dict:
    sc = P.scenario
    if P.mode == "rational":
        table = [[qstr(v) for v in row] for row in P.table]
    else:
        table = [[float(v) for v in row] for row in P.table]
    return {
        "parties": sc.n,
        "inputs": list(sc.inputs),
        "outputs": list(sc.outputs),
        "mode": P.mode,
        "table": table,
    }


def correlation_from_dict(d: dict) -> Correlation:
    sc = Scenario(tuple(d["inputs"]), tuple(d["outputs"]))
    if int(d["parties"]) != sc.n:
        raise CorrelationError("party count disagrees with inputs/outputs length")
    mode = d["mode"]
    if mode == "rational":
        table = [[qparse(v) for v in row] for row in d["table"]]
    else:
        table = d["table"]
    return Correlation(sc, table, mode)


def save_correlation(P: Correlation, path) -> None:
    with open(path, "w") as fh:
        json.dump(correlation_to_dict(P), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_correlation(path) -> Correlation:
    with open(path) as fh:
        return correlation_from_dict(json.load(fh))
