"""
Dense complex linear algebra for few-qubit registers.

Matrices are plain numpy complex128 arrays. Qubit 0 is the most significant bit
of a computational-basis index, so for a register (q0, q1, ..., q{n-1}) the
operator A on q0 and B on the rest is ``tensor_product(A, B)``.
"""
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np
import scipy.linalg

from .constants import ENERGY_CLUSTER_TOL, MAX_QUBITS
from .errors import ArgumentError, CapacityError, NumericalError


PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}

# |0> is the ground state of -(w/2) sigma_z: sigma_plus raises |0> -> |1>
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.conj().T

HERMITIAN_TOL = 1e-12
STATE_TOL = 1e-10

MatrixLike = Union[np.ndarray, "HermitianOperator", "QuantumState"]


def as_matrix(value: MatrixLike) -> np.ndarray:
    """Return the complex array behind an operator, a state or a raw array."""
    if isinstance(value, (HermitianOperator, QuantumState)):
        return value.matrix
    return np.asarray(value, dtype=complex)


def num_qubits_for(dim: int) -> int:
    n = int(round(np.log2(dim))) if dim > 0 else -1
    if n < 0 or 2 ** n != dim:
        raise ArgumentError(f"dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """A Hermitian matrix, energy in ueV."""
    matrix: np.ndarray
    units: str = "ueV"

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ArgumentError(f"Hermitian operator must be square, got shape {m.shape}")
        if not np.allclose(m, m.conj().T, rtol=0.0, atol=HERMITIAN_TOL):
            raise ArgumentError("matrix is not Hermitian within 1e-12")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_qubits(self) -> int:
        return num_qubits_for(self.dim)


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Density matrix of an n-qubit register.

    ``qubit_labels`` names the role of each qubit (system, bath, ancilla) in
    register order. Validation may be skipped for intermediate results that are
    known to be valid by construction.
    """
    matrix: np.ndarray
    qubit_labels: tuple = ()
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ArgumentError(f"density matrix must be square, got shape {m.shape}")
        n = num_qubits_for(m.shape[0])
        labels = tuple(self.qubit_labels) if self.qubit_labels else ("system",) * n
        if len(labels) != n:
            raise ArgumentError(f"{len(labels)} qubit labels for a {n}-qubit state")
        if n > MAX_QUBITS:
            raise CapacityError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit limit")
        if self.check:
            if abs(np.trace(m) - 1.0) > STATE_TOL:
                raise ArgumentError(f"trace {np.trace(m).real:.12g} differs from 1")
            if not np.allclose(m, m.conj().T, rtol=0.0, atol=STATE_TOL):
                raise ArgumentError("density matrix is not Hermitian")
            lowest = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
            if lowest < -STATE_TOL:
                raise ArgumentError(f"density matrix has negative eigenvalue {lowest:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "qubit_labels", labels)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_qubits(self) -> int:
        return len(self.qubit_labels)

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()

    def index_of(self, role: str) -> int:
        """Index of the first qubit carrying ``role``."""
        try:
            return self.qubit_labels.index(role)
        except ValueError:
            raise ArgumentError(f"no qubit labelled '{role}' in {self.qubit_labels}") from None


@dataclass(frozen=True, eq=False)
class Eigenspace:
    """One energy level: its (clustered) energy and the projector onto it."""
    energy: float
    projector: np.ndarray


def tensor_product(*operators: MatrixLike) -> np.ndarray:
    """Kronecker product, leftmost operand most significant."""
    if not operators:
        raise ArgumentError("tensor_product needs at least one operand")
    return reduce(np.kron, (as_matrix(op) for op in operators))


def eigh(h: MatrixLike) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (as columns)."""
    matrix = as_matrix(h)
    try:
        values, vectors = scipy.linalg.eigh(matrix)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"eigendecomposition failed: {e}") from e
    return values, vectors


def matrix_exp_unitary(h: MatrixLike, t: float) -> np.ndarray:
    """exp(-i h t) through the eigendecomposition of h (hbar = 1)."""
    values, vectors = eigh(h)
    phases = np.exp(-1j * values * t)
    return (vectors * phases) @ vectors.conj().T


def energy_projectors(h: MatrixLike, tol: float = ENERGY_CLUSTER_TOL) -> list[Eigenspace]:
    """Group eigenvalues closer than ``tol`` and return one projector per level."""
    values, vectors = eigh(h)
    levels: list[Eigenspace] = []
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[i - 1] > tol:
            block = vectors[:, start:i]
            levels.append(Eigenspace(energy=float(np.mean(values[start:i])), projector=block @ block.conj().T))
            start = i
    return levels


def dephase_in_eigenbasis(state: QuantumState, h: MatrixLike) -> QuantumState:
    """Remove all coherence between distinct energy levels of h."""
    rho = state.matrix
    dephased = sum(level.projector @ rho @ level.projector for level in energy_projectors(h))
    return QuantumState(dephased, state.qubit_labels)


def embed_operator(op: np.ndarray, targets: Sequence[int], num_qubits: int) -> np.ndarray:
    """Lift an operator on ``targets`` (in the given order) to the full register."""
    targets = tuple(int(q) for q in targets)
    k = len(targets)
    if op.shape != (2 ** k, 2 ** k):
        raise ArgumentError(f"operator of shape {op.shape} does not act on {k} qubit(s)")
    if len(set(targets)) != k or any(q < 0 or q >= num_qubits for q in targets):
        raise ArgumentError(f"invalid targets {targets} for a {num_qubits}-qubit register")

    full = np.kron(op, np.eye(2 ** (num_qubits - k), dtype=complex))
    order = list(targets) + [q for q in range(num_qubits) if q not in targets]
    if order == list(range(num_qubits)):
        return full
    axes = [order.index(q) for q in range(num_qubits)]
    shape = [2] * (2 * num_qubits)
    return full.reshape(shape).transpose(axes + [num_qubits + a for a in axes]).reshape(full.shape)


def partial_trace(state: QuantumState, keep: Iterable[int]) -> QuantumState:
    """Reduced density matrix over the ``keep`` qubits (ascending order)."""
    n = state.num_qubits
    keep = sorted({int(q) for q in keep})
    if not keep:
        raise ArgumentError("partial_trace needs at least one qubit to keep")
    if keep[0] < 0 or keep[-1] >= n:
        raise ArgumentError(f"keep set {keep} outside a {n}-qubit register")

    traced = [q for q in range(n) if q not in keep]
    dk, dt = 2 ** len(keep), 2 ** len(traced)
    tensor = state.matrix.reshape([2] * (2 * n))
    perm = keep + traced + [n + q for q in keep] + [n + q for q in traced]
    reduced = np.einsum("ajbj->ab", tensor.transpose(perm).reshape(dk, dt, dk, dt))
    return QuantumState(reduced, tuple(state.qubit_labels[q] for q in keep))


def expectation(state: MatrixLike, obs: MatrixLike) -> float:
    """Tr(obs . rho), real part."""
    rho, o = as_matrix(state), as_matrix(obs)
    if rho.shape != o.shape:
        raise ArgumentError(f"observable shape {o.shape} does not match state shape {rho.shape}")
    return float(np.real(np.trace(o @ rho)))


def density_from_ket(ket: Sequence[complex], labels: tuple = ()) -> QuantumState:
    vector = np.asarray(ket, dtype=complex)
    vector = vector / np.linalg.norm(vector)
    return QuantumState(np.outer(vector, vector.conj()), labels)


def basis_density(bits: str, labels: tuple = ()) -> QuantumState:
    """|bits><bits| for a bit string such as '010'."""
    index = int(bits, 2)
    m = np.zeros((2 ** len(bits), 2 ** len(bits)), dtype=complex)
    m[index, index] = 1.0
    return QuantumState(m, labels)


def product_state(*states: QuantumState) -> QuantumState:
    labels = tuple(label for s in states for label in s.qubit_labels)
    return QuantumState(tensor_product(*states), labels)


def is_unitary(u: np.ndarray, atol: float = 1e-10) -> bool:
    u = np.asarray(u, dtype=complex)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.allclose(
        u.conj().T @ u, np.eye(u.shape[0]), rtol=0.0, atol=atol)
