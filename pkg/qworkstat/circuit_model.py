"""
Gate-level interferometric circuits and their density-matrix execution.

The ancilla is the last qubit of the register. After H, the control=1 branch
applies exp(-iuH) U and the control=0 branch applies U exp(-iuH); a final H maps
the ancilla coherence onto <sigma_z> + i <sigma_y> = Tr U^dag e^{iuH} U e^{-iuH} rho.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ArgumentError, NumericalError
from .linalg_core import (PAULI_X, PAULI_Y, PAULI_Z, HermitianOperator, QuantumState, as_matrix, embed_operator,
                          expectation, is_unitary, matrix_exp_unitary, num_qubits_for, partial_trace)
from .noise_channels import NoiseModel, apply_kraus

log = logging.getLogger(__name__)

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
SQRT_X = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex)
PHASE_DAG = np.array([[1, 0], [0, -1j]], dtype=complex)

DRIVES = {
    "sqrt_x": SQRT_X,
    "x": PAULI_X,
    "hadamard": HADAMARD,
    "identity": np.eye(2, dtype=complex),
}


class Basis(str, Enum):
    Z = "Z"
    Y = "Y"

    @property
    def code(self) -> int:
        return 0 if self is Basis.Z else 1

    @property
    def observable(self) -> np.ndarray:
        return PAULI_Z if self is Basis.Z else PAULI_Y


class GateKind(str, Enum):
    HADAMARD = "h"
    PAULI_X = "x"
    SQRT_X = "sx"
    PHASE_DAG = "sdg"
    UNITARY = "unitary"
    CONTROLLED_UNITARY = "controlled_unitary"
    DELAY_EVOLUTION = "delay"


_FIXED = {
    GateKind.HADAMARD: HADAMARD,
    GateKind.PAULI_X: PAULI_X,
    GateKind.SQRT_X: SQRT_X,
    GateKind.PHASE_DAG: PHASE_DAG,
}


@dataclass(frozen=True, eq=False)
class Gate:
    """One gate. ``control`` is (qubit, value) with value 0 or 1.

    UNITARY/CONTROLLED_UNITARY carry ``matrix``; DELAY_EVOLUTION carries the
    ``hamiltonian`` and the delay ``duration`` u in 1/ueV.
    """
    kind: GateKind
    targets: tuple
    control: Optional[tuple] = None
    matrix: Optional[np.ndarray] = None
    hamiltonian: Optional[HermitianOperator] = None
    duration: float = 0.0
    label: str = ""

    def __post_init__(self):
        targets = tuple(int(q) for q in self.targets)
        if not targets or len(set(targets)) != len(targets):
            raise ArgumentError(f"gate targets must be distinct and non-empty, got {self.targets}")
        object.__setattr__(self, "targets", targets)
        if self.control is not None:
            qubit, value = int(self.control[0]), int(self.control[1])
            if value not in (0, 1):
                raise ArgumentError(f"control value must be 0 or 1, got {value}")
            if qubit in targets:
                raise ArgumentError(f"control qubit {qubit} is also a target")
            object.__setattr__(self, "control", (qubit, value))

        if self.kind in _FIXED:
            if len(targets) != 1:
                raise ArgumentError(f"{self.kind.value} acts on one qubit")
        elif self.kind in (GateKind.UNITARY, GateKind.CONTROLLED_UNITARY):
            if self.matrix is None:
                raise ArgumentError(f"{self.kind.value} gate needs a matrix")
            m = np.array(self.matrix, dtype=complex)
            if m.shape != (2 ** len(targets),) * 2:
                raise ArgumentError(f"matrix shape {m.shape} does not fit {len(targets)} target(s)")
            if not is_unitary(m):
                raise ArgumentError(f"{self.kind.value} payload is not unitary within 1e-10")
            if self.kind is GateKind.CONTROLLED_UNITARY and self.control is None:
                raise ArgumentError("controlled unitary needs a control")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        elif self.kind is GateKind.DELAY_EVOLUTION:
            if self.hamiltonian is None or self.hamiltonian.dim != 2 ** len(targets):
                raise ArgumentError("delay evolution needs a Hamiltonian on its targets")
            if self.duration < 0:
                raise ArgumentError(f"delay must be >= 0, got {self.duration}")

    @property
    def qubits(self) -> tuple:
        """Control first (if any), then targets."""
        return ((self.control[0],) if self.control else ()) + self.targets

    @property
    def gate_class(self) -> str:
        if self.kind is GateKind.DELAY_EVOLUTION:
            return "delay"
        return "controlled" if self.control is not None else "single"

    def target_unitary(self) -> np.ndarray:
        if self.kind in _FIXED:
            return _FIXED[self.kind]
        if self.kind is GateKind.DELAY_EVOLUTION:
            return matrix_exp_unitary(self.hamiltonian, self.duration)
        return self.matrix

    def unitary(self) -> np.ndarray:
        """The operator on ``qubits``: |c><c| (x) U + |1-c><1-c| (x) I when controlled."""
        u = self.target_unitary()
        if self.control is None:
            return u
        on = np.zeros((2, 2), dtype=complex)
        on[self.control[1], self.control[1]] = 1.0
        return np.kron(on, u) + np.kron(np.eye(2) - on, np.eye(u.shape[0]))


@dataclass(frozen=True, eq=False)
class CircuitSpec:
    num_qubits: int
    gates: tuple
    roles: tuple
    measurements: dict = field(default_factory=dict)
    u: float = 0.0

    def __post_init__(self):
        if len(self.roles) != self.num_qubits:
            raise ArgumentError(f"{len(self.roles)} roles for {self.num_qubits} qubits")
        if sum(1 for r in self.roles if r == "ancilla") != 1:
            raise ArgumentError("a circuit needs exactly one ancilla qubit")
        for gate in self.gates:
            if any(q >= self.num_qubits for q in gate.qubits):
                raise ArgumentError(f"gate {gate.kind.value} addresses qubits {gate.qubits} "
                                    f"outside a {self.num_qubits}-qubit register")
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "roles", tuple(self.roles))
        object.__setattr__(self, "measurements", {int(q): Basis(b) for q, b in self.measurements.items()})

    @property
    def ancilla(self) -> int:
        return self.roles.index("ancilla")


def extend_drive(drive: np.ndarray, work_qubits: int) -> np.ndarray:
    """Drive on the work register: as is, or U (x) 1_B when it acts on the system alone."""
    drive = as_matrix(drive)
    dim = 2 ** work_qubits
    if drive.shape == (dim, dim):
        return drive
    if drive.shape == (2, 2):
        return np.kron(drive, np.eye(dim // 2, dtype=complex))
    raise ArgumentError(f"drive of shape {drive.shape} fits neither the system nor the {work_qubits}-qubit register")


def default_roles(work_qubits: int, drive: np.ndarray) -> tuple:
    if as_matrix(drive).shape == (2, 2) and work_qubits > 1:
        return ("system",) + ("bath",) * (work_qubits - 1) + ("ancilla",)
    return ("system",) * work_qubits + ("ancilla",)


def build_interferometric_circuit(h0_sb: HermitianOperator, drive: np.ndarray, u: float,
                                  basis: Union[Basis, str] = Basis.Z,
                                  roles: Optional[Sequence[str]] = None) -> CircuitSpec:
    """Interferometric circuit for one delay ``u``.

    ``basis`` selects the ancilla rotation appended after the interference
    Hadamard (S^dag then H for Y), not an observable: the ancilla is always
    read out in Z, see read_ancilla.
    """
    if u < 0:
        raise ArgumentError(f"delay u must be >= 0, got {u}")
    basis = Basis(basis)
    work = h0_sb.num_qubits
    unitary = extend_drive(drive, work)
    if not is_unitary(unitary):
        raise ArgumentError("drive is not unitary within 1e-10")
    roles = tuple(roles) if roles is not None else default_roles(work, drive)
    if len(roles) == work:
        roles = roles + ("ancilla",)

    anc = work
    targets = tuple(range(work))
    gates = [Gate(GateKind.HADAMARD, (anc,), label="prepare")]
    gates.append(Gate(GateKind.CONTROLLED_UNITARY, targets, control=(anc, 1), matrix=unitary, label="drive_c1"))
    if u > 0:
        gates.append(Gate(GateKind.DELAY_EVOLUTION, targets, control=(anc, 1), hamiltonian=h0_sb, duration=u,
                          label="delay_c1"))
        gates.append(Gate(GateKind.DELAY_EVOLUTION, targets, control=(anc, 0), hamiltonian=h0_sb, duration=u,
                          label="delay_c0"))
    gates.append(Gate(GateKind.CONTROLLED_UNITARY, targets, control=(anc, 0), matrix=unitary, label="drive_c0"))
    gates.append(Gate(GateKind.HADAMARD, (anc,), label="interfere"))
    if basis is Basis.Y:
        gates.append(Gate(GateKind.PHASE_DAG, (anc,), label="to_y"))
        gates.append(Gate(GateKind.HADAMARD, (anc,), label="to_y"))

    return CircuitSpec(num_qubits=work + 1, gates=tuple(gates), roles=roles, measurements={anc: basis}, u=float(u))


def execute(circuit: CircuitSpec, initial: QuantumState, noise: Optional[NoiseModel] = None) -> QuantumState:
    """Apply every gate (and, with a noise model, its channels) to ``initial``."""
    if initial.num_qubits != circuit.num_qubits:
        raise ArgumentError(f"{initial.num_qubits}-qubit state for a {circuit.num_qubits}-qubit circuit")
    n = circuit.num_qubits
    rho = initial.matrix
    for gate in circuit.gates:
        full = embed_operator(gate.unitary(), gate.qubits, n)
        rho = full @ rho @ full.conj().T
        if noise is not None:
            for channel, targets in noise.gate_channels(gate.gate_class, gate.qubits, circuit.roles,
                                                        delay=gate.duration):
                rho = apply_kraus(rho, channel, targets)
    return QuantumState(rho, initial.qubit_labels)


def prepare(initial: QuantumState, roles: Sequence[str], noise: Optional[NoiseModel] = None) -> QuantumState:
    """Apply preparation bit-flips of the noise model."""
    if noise is None:
        return initial
    rho = initial.matrix
    for channel, targets in noise.preparation_channels(roles):
        rho = apply_kraus(rho, channel, targets)
    return QuantumState(rho, initial.qubit_labels)


def measure_expectation(final: QuantumState, qubit: int, basis: Union[Basis, str] = Basis.Z) -> float:
    if not 0 <= qubit < final.num_qubits:
        raise ArgumentError(f"qubit {qubit} outside a {final.num_qubits}-qubit register")
    reduced = partial_trace(final, [qubit])
    return expectation(reduced, Basis(basis).observable)


def read_ancilla(circuit: CircuitSpec, final: QuantumState, shots: int = 0,
                 seed: Union[int, np.random.Generator, None] = None,
                 confusion: Optional[np.ndarray] = None) -> float:
    """<sigma> of the basis the circuit measures, read as Z after its basis change.

    ``shots == 0`` gives the exact value; otherwise ``shots`` readouts are
    sampled with ``seed`` and passed through ``confusion``.
    """
    if shots == 0:
        return measure_expectation(final, circuit.ancilla, Basis.Z)
    return sample_expectation(final, circuit.ancilla, Basis.Z, shots, seed, confusion)


def point_rng(seed: int, point_index: int, basis: Union[Basis, str]) -> np.random.Generator:
    """Counter-based generator for one (sweep point, basis) pair."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(point_index), Basis(basis).code))
    return np.random.Generator(np.random.Philox(sequence))


def sample_expectation(final: QuantumState, qubit: int, basis: Union[Basis, str], shots: int,
                       seed: Union[int, np.random.Generator],
                       confusion: Optional[np.ndarray] = None) -> float:
    """Empirical mean of +-1 outcomes over ``shots`` readouts.

    Outcomes pass through ``confusion`` (row i: readout probabilities for true
    outcome i) and the frequencies are then corrected with its inverse.
    """
    if shots < 1:
        raise ArgumentError(f"shots must be >= 1, got {shots}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    exact = measure_expectation(final, qubit, basis)
    p_plus = min(max(0.5 * (1.0 + exact), 0.0), 1.0)
    n_plus = int(rng.binomial(shots, p_plus))
    if confusion is None:
        return (2 * n_plus - shots) / shots

    matrix = np.asarray(confusion, dtype=float)
    if matrix.shape != (2, 2):
        raise ArgumentError("confusion must be 2x2")
    if abs(np.linalg.det(matrix)) < 1e-12:
        raise NumericalError("confusion matrix is singular")
    n_minus = shots - n_plus
    flipped_down = int(rng.binomial(n_plus, matrix[0, 1]))
    flipped_up = int(rng.binomial(n_minus, matrix[1, 0]))
    observed = np.array([n_plus - flipped_down + flipped_up, n_minus - flipped_up + flipped_down]) / shots
    corrected = np.linalg.solve(matrix.T, observed)
    return float(corrected[0] - corrected[1])
