"""Born-rule correlation generation from small quantum states.

All measurements are dichotomic qubit observables (O^2 = 1); projectors are
built algebraically as (1 +/- O)/2 rather than by eigendecomposition.
States are dense complex density matrices, comfortable up to 10 qubits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import sqrt
from typing import Sequence

import numpy as np

from .corrspace import Correlation, Scenario

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
UNIT_TOL = 1e-12

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
ID2 = np.eye(2, dtype=complex)


class QuantumError(ValueError):
    pass


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise QuantumError("density matrix must be square")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise QuantumError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL or abs(np.trace(m).imag) > TRACE_TOL:
            raise QuantumError("density matrix trace is not 1")
        if np.min(np.linalg.eigvalsh(m)) < -PSD_TOL:
            raise QuantumError("density matrix is not positive semidefinite")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        n = self.dim.bit_length() - 1
        if 2 ** n != self.dim:
            raise QuantumError("dimension is not a power of 2")
        return n


@dataclass(frozen=True)
class Observable:
    """2x2 Hermitian involution (dichotomic +/-1 outcomes)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise QuantumError("observable must be 2x2")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise QuantumError("observable is not Hermitian")
        if np.max(np.abs(m @ m - ID2)) > PSD_TOL:
            raise QuantumError("observable does not square to the identity")
        object.__setattr__(self, "matrix", m)

    def projector(self, outcome: int) -> np.ndarray:
        sign = 1 if outcome == 0 else -1
        return (ID2 + sign * self.matrix) / 2


@dataclass(frozen=True)
class MeasurementSet:
    """Per party, per setting, a dichotomic observable."""

    observables: tuple  # tuple over parties of tuples over settings

    def __post_init__(self):
        obs = tuple(tuple(o for o in party) for party in self.observables)
        for party in obs:
            if not party:
                raise QuantumError("each party needs at least one setting")
            for o in party:
                if not isinstance(o, Observable):
                    raise QuantumError("entries must be Observable instances")
        object.__setattr__(self, "observables", obs)

    @property
    def n(self) -> int:
        return len(self.observables)

    def scenario(self) -> Scenario:
        return Scenario(tuple(len(p) for p in self.observables), (2,) * self.n)


def observable_from_bloch(nx: float, ny: float, nz: float) -> Observable:
    norm = sqrt(nx * nx + ny * ny + nz * nz)
    if abs(norm - 1.0) > UNIT_TOL:
        raise QuantumError(f"Bloch vector has norm {norm}, expected 1")
    return Observable(nx * SIGMA_X + ny * SIGMA_Y + nz * SIGMA_Z)


def ghz_state(n: int) -> DensityMatrix:
    """|GHZ_n> = (|0...0> + |1...1>)/sqrt(2) as a density matrix."""
    if n < 1:
        raise QuantumError("need at least one qubit")
    d = 2 ** n
    psi = np.zeros(d, dtype=complex)
    psi[0] = psi[-1] = 1 / sqrt(2)
    return DensityMatrix(np.outer(psi, psi.conj()))


def _minus_state() -> np.ndarray:
    v = np.array([1, -1], dtype=complex) / sqrt(2)
    return np.outer(v, v.conj())


def permute_qubits(rho: np.ndarray, perm: Sequence[int]) -> np.ndarray:
    """Relabel qubits so that new position i holds old qubit perm[i]."""
    n = len(perm)
    t = rho.reshape((2,) * (2 * n))
    axes = list(perm) + [n + p for p in perm]
    return t.transpose(axes).reshape(2 ** n, 2 ** n)


def symmetric_ghz3_minus_state() -> DensityMatrix:
    """Equal mixture over the 4 placements of |->, the other 3 parties sharing GHZ_3."""
    base = np.kron(ghz_state(3).matrix, _minus_state())
    acc = np.zeros_like(base)
    for pos in range(4):
        order = [0, 1, 2]  # the GHZ qubits of `base`, in order
        order.insert(pos, 3)  # qubit 3 of `base` is the |-> slot
        # new position i holds old qubit order[i]
        acc += permute_qubits(base, order)
    return DensityMatrix(acc / 4)


def ghz3_noise_flag_state(v: float) -> DensityMatrix:
    """v * GHZ_3 tensor |0><0|  +  (1-v) * (1/8) tensor |1><1|."""
    if not 0 < v <= 1:
        raise QuantumError("visibility v must lie in (0, 1]")
    zero = np.zeros((2, 2), dtype=complex)
    zero[0, 0] = 1
    one = np.zeros((2, 2), dtype=complex)
    one[1, 1] = 1
    m = v * np.kron(ghz_state(3).matrix, zero) + (1 - v) * np.kron(np.eye(8, dtype=complex) / 8, one)
    return DensityMatrix(m)


def builtin_state(name: str, **params) -> DensityMatrix:
    """Named states: ghz (param n), sec3a, sec3c (param v)."""
    if name == "ghz":
        return ghz_state(int(params["n"]))
    if name == "sec3a":
        return symmetric_ghz3_minus_state()
    if name == "sec3c":
        return ghz3_noise_flag_state(float(params["v"]))
    raise QuantumError(f"unknown builtin state {name!r}")


def planar_observable(phi: float) -> Observable:
    """cos(phi) sigma_x + sin(phi) sigma_y."""
    return observable_from_bloch(np.cos(phi), np.sin(phi), 0.0)


def measurements_identical(n: int, settings: Sequence[Observable]) -> MeasurementSet:
    return MeasurementSet(tuple(tuple(settings) for _ in range(n)))


def tilted_xy_measurements(n: int = 4) -> MeasurementSet:
    """Every party measures -(sqrt3/2) sx + (1/2) sy  or  -(sqrt3/2) sx - (1/2) sy."""
    a0 = observable_from_bloch(-sqrt(3) / 2, 0.5, 0.0)
    a1 = observable_from_bloch(-sqrt(3) / 2, -0.5, 0.0)
    return measurements_identical(n, (a0, a1))


def svetlichny_ghz3_measurements() -> MeasurementSet:
    """The three-party settings maximally violating the tripartite Svetlichny bound on GHZ_3."""
    s = 1 / sqrt(2)
    return MeasurementSet((
        (Observable(SIGMA_X), Observable(SIGMA_Y)),
        (observable_from_bloch(s, -s, 0.0), observable_from_bloch(s, s, 0.0)),
        (observable_from_bloch(0.0, -1.0, 0.0), Observable(SIGMA_X)),
    ))


def xy_measurements(n: int) -> MeasurementSet:
    return measurements_identical(n, (Observable(SIGMA_X), Observable(SIGMA_Y)))


def born_correlation(rho: DensityMatrix, meas: MeasurementSet) -> Correlation:
    """P(a|x) = Tr[rho tensor_i Proj_i^(a_i, x_i)], as a real-mode Correlation."""
    n = meas.n
    if rho.dim != 2 ** n:
        raise QuantumError(
            f"state dimension {rho.dim} does not match {n} qubit parties")
    sc = meas.scenario()
    # Stack of projectors per party and setting: proj[i][x][a] is 2x2.
    proj = [[np.stack([o.projector(0), o.projector(1)]) for o in party]
            for party in meas.observables]
    t0 = rho.matrix.reshape((2,) * (2 * n))
    rows = []
    for x in sc.all_inputs():
        # Contract each party's (ket, bra) index pair with its projector stack,
        # leaving one outcome index per party: result[a_0, ..., a_{n-1}].
        t = t0
        for i in range(n):
            # current tensor: (a_0..a_{i-1}, k_i..k_{n-1}, b_i..b_{n-1})
            stack = proj[i][x[i]]  # (outcome, bra, ket): Tr[rho P] pattern
            n_rem = n - i
            t = np.tensordot(stack, t, axes=([1, 2], [i + n_rem, i]))
            # tensordot puts the outcome axis first; rotate it behind the a's
            t = np.moveaxis(t, 0, i)
        row = np.real(t).reshape(2 ** n)
        rows.append(row)
    table = np.array(rows)
    table[np.abs(table) < 1e-15] = 0.0
    return Correlation(sc, table, "real", tol=1e-12)


# ---------------------------------------------------------------------------
# JSON serialization


def measurements_to_dict(meas: MeasurementSet) -> dict:
    def bloch(o: Observable):
        m = o.matrix
        return [float(np.real(m[0, 1])), float(np.imag(m[1, 0])), float(np.real(m[0, 0]))]

    return {"parties": meas.n,
            "bloch": [[bloch(o) for o in party] for party in meas.observables]}


def measurements_from_dict(d: dict) -> MeasurementSet:
    return MeasurementSet(tuple(
        tuple(observable_from_bloch(*vec) for vec in party)
        for party in d["bloch"]))


def state_to_dict(rho: DensityMatrix) -> dict:
    return {"matrix": [[[float(z.real), float(z.imag)] for z in row] for row in rho.matrix]}


def state_from_dict(d: dict) -> DensityMatrix:
    if "name" in d:
        return builtin_state(d["name"], **d.get("params", {}))
    m = np.array([[complex(re, im) for re, im in row] for row in d["matrix"]])
    return DensityMatrix(m)


def load_state(path) -> DensityMatrix:
    with open(path) as fh:
        return state_from_dict(json.load(fh))


def load_measurements(path) -> MeasurementSet:
    with open(path) as fh:
        return measurements_from_dict(json.load(fh))
