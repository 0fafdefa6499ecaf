"""
Kraus channels, the per-qubit noise model and the synthetic spectator bath.

Channels are immutable. Constructors are memoised so the same physical channel
is one object, which lets apply_channel cache its embedded Kraus operators.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from .constants import HBAR_UEV_US, MAX_QUBITS
from .errors import ArgumentError, CapacityError
from .linalg_core import (PAULIS, PAULI_X, PAULI_Z, SIGMA_MINUS, SIGMA_PLUS, HermitianOperator, QuantumState,
                          embed_operator, num_qubits_for, tensor_product)

log = logging.getLogger(__name__)

CPTP_TOL = 1e-10
WEAK_COUPLING_RATIO = 0.1

# Gate classes a NoiseModel distinguishes
GATE_CLASSES = ("single", "controlled", "delay")


@dataclass(frozen=True, eq=False)
class KrausChannel:
    operators: tuple
    label: str = ""

    def __post_init__(self):
        ops = tuple(np.array(op, dtype=complex) for op in self.operators)
        if not ops:
            raise ArgumentError("a Kraus channel needs at least one operator")
        shape = ops[0].shape
        if len(shape) != 2 or shape[0] != shape[1] or any(op.shape != shape for op in ops):
            raise ArgumentError("Kraus operators must share one square shape")
        num_qubits_for(shape[0])
        for op in ops:
            op.setflags(write=False)
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    @property
    def num_qubits(self) -> int:
        return num_qubits_for(self.dim)

    def choi_matrix(self) -> np.ndarray:
        """sum_ij |i><j| (x) E(|i><j|), built from column-stacked Kraus vectors."""
        vectors = [op.reshape(-1, order="F") for op in self.operators]
        return sum(np.outer(v, v.conj()) for v in vectors)

    def compose(self, after: "KrausChannel", label: str = "") -> "KrausChannel":
        """The channel that applies ``self`` first and ``after`` second."""
        ops = [b @ a for b, a in itertools.product(after.operators, self.operators)]
        return KrausChannel(tuple(_prune(ops)), label or f"{after.label}.{self.label}")


@dataclass(frozen=True)
class CptpReport:
    trace_preserving: bool
    completely_positive: bool
    max_violation: float

    @property
    def ok(self) -> bool:
        return self.trace_preserving and self.completely_positive


def _prune(ops: Sequence[np.ndarray], atol: float = 1e-15) -> list[np.ndarray]:
    kept = [op for op in ops if np.max(np.abs(op)) > atol]
    return kept or [np.zeros_like(ops[0])]


def _check_probability(name: str, p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ArgumentError(f"{name} must lie in [0, 1], got {p}")
    return p


@lru_cache(maxsize=256)
def depolarizing_channel(p: float, num_qubits: int = 1) -> KrausChannel:
    """Pauli-symmetric depolarizing channel on one or two qubits."""
    p = _check_probability("depolarizing probability", p)
    if num_qubits not in (1, 2):
        raise ArgumentError(f"depolarizing channel supports 1 or 2 qubits, got {num_qubits}")
    d2 = 4 ** num_qubits
    identity_weight = 1.0 - p * (d2 - 1) / d2
    ops = [math.sqrt(identity_weight) * np.eye(2 ** num_qubits, dtype=complex)]
    if p > 0.0:
        for labels in itertools.product("IXYZ", repeat=num_qubits):
            if set(labels) == {"I"}:
                continue
            ops.append(math.sqrt(p / d2) * tensor_product(*(PAULIS[c] for c in labels)))
    return KrausChannel(tuple(ops), f"depolarizing({p:g},{num_qubits}q)")


def depolarizing_from_fidelity(fidelity: float, num_qubits: int = 1) -> float:
    """Depolarizing probability p = (4^n / (4^n - 1)) (1 - F) for gate fidelity F."""
    d2 = 4 ** num_qubits
    p = d2 / (d2 - 1) * (1.0 - float(fidelity))
    return _check_probability(f"depolarizing probability for fidelity {fidelity}", p)


@lru_cache(maxsize=4096)
def thermal_relaxation_channel(t1: float, t2: float, duration: float, p_exc: float = 0.0) -> KrausChannel:
    """Generalized amplitude damping toward ``p_exc`` followed by pure dephasing.

    Populations relax with 1 - exp(-duration/t1); coherences decay as
    exp(-duration/t2) overall. Times in microseconds, t1 or t2 may be inf.
    """
    if t1 <= 0 or t2 <= 0:
        raise ArgumentError(f"T1 and T2 must be positive, got T1={t1}, T2={t2}")
    if t2 > 2 * t1:
        raise ArgumentError(f"T2={t2} exceeds 2*T1={2 * t1}")
    if duration < 0:
        raise ArgumentError(f"duration must be >= 0, got {duration}")
    p_exc = _check_probability("equilibrium excited population", p_exc)

    gamma = -math.expm1(-duration / t1)
    a = math.sqrt(1.0 - p_exc)
    b = math.sqrt(p_exc)
    damping = [
        a * np.array([[1, 0], [0, math.sqrt(1 - gamma)]], dtype=complex),
        a * math.sqrt(gamma) * SIGMA_MINUS,
        b * np.array([[math.sqrt(1 - gamma), 0], [0, 1]], dtype=complex),
        b * math.sqrt(gamma) * SIGMA_PLUS,
    ]

    # amplitude damping already decays coherences by exp(-t/(2 T1))
    dephasing_rate = 1.0 / t2 - 1.0 / (2.0 * t1)
    q = 0.5 * -math.expm1(-duration * max(dephasing_rate, 0.0))
    dephasing = [math.sqrt(1 - q) * np.eye(2, dtype=complex), math.sqrt(q) * PAULI_Z]

    ops = [d @ k for d in dephasing for k in damping]
    return KrausChannel(tuple(_prune(ops)), f"thermal(t1={t1:g},t2={t2:g},t={duration:g},p={p_exc:g})")


def bit_flip_channel(p: float) -> KrausChannel:
    p = _check_probability("bit-flip probability", p)
    return KrausChannel(tuple(_prune([math.sqrt(1 - p) * np.eye(2, dtype=complex), math.sqrt(p) * PAULI_X])),
                        f"bitflip({p:g})")


def verify_cptp(channel: KrausChannel, tol: float = CPTP_TOL) -> CptpReport:
    """Check sum K^dag K = I and positivity of the Choi matrix."""
    completeness = sum(op.conj().T @ op for op in channel.operators)
    tp_violation = float(np.max(np.abs(completeness - np.eye(channel.dim))))
    choi = channel.choi_matrix()
    lowest = float(np.linalg.eigvalsh(0.5 * (choi + choi.conj().T))[0])
    cp_violation = max(0.0, -lowest)
    return CptpReport(
        trace_preserving=tp_violation <= tol,
        completely_positive=cp_violation <= tol,
        max_violation=max(tp_violation, cp_violation),
    )


@lru_cache(maxsize=4096)
def _embedded(channel: KrausChannel, targets: tuple, num_qubits: int) -> tuple:
    return tuple(embed_operator(op, targets, num_qubits) for op in channel.operators)


def apply_kraus(rho: np.ndarray, channel: KrausChannel, targets: Sequence[int]) -> np.ndarray:
    """Array-level channel application used inside circuit execution."""
    targets = tuple(int(q) for q in targets)
    if channel.num_qubits != len(targets):
        raise ArgumentError(f"{channel.num_qubits}-qubit channel applied to {len(targets)} target(s)")
    num_qubits = num_qubits_for(rho.shape[0])
    return sum(k @ rho @ k.conj().T for k in _embedded(channel, targets, num_qubits))


def apply_channel(state: QuantumState, channel: KrausChannel, targets: Sequence[int]) -> QuantumState:
    return QuantumState(apply_kraus(state.matrix, channel, targets), state.qubit_labels)


@dataclass(frozen=True)
class QubitNoise:
    """Noise parameters of one physical qubit.

    depolarizing maps a gate class (single, controlled, delay) to an error
    probability. confusion[i][j] is P(read j | prepared i).
    """
    depolarizing: Mapping[str, float] = field(default_factory=dict)
    t1_us: float = math.inf
    t2_us: float = math.inf
    excited_population: float = 0.0
    initial_excited: float = 0.0
    confusion: tuple = ((1.0, 0.0), (0.0, 1.0))

    def __post_init__(self):
        for kind, p in self.depolarizing.items():
            if kind not in GATE_CLASSES:
                raise ArgumentError(f"unknown gate class '{kind}', expected one of {GATE_CLASSES}")
            _check_probability(f"depolarizing[{kind}]", p)
        if self.t1_us <= 0 or self.t2_us <= 0:
            raise ArgumentError("T1 and T2 must be positive")
        if self.t2_us > 2 * self.t1_us:
            raise ArgumentError(f"T2={self.t2_us} exceeds 2*T1={2 * self.t1_us}")
        _check_probability("excited_population", self.excited_population)
        _check_probability("initial_excited", self.initial_excited)
        confusion = np.asarray(self.confusion, dtype=float)
        if confusion.shape != (2, 2) or np.any(confusion < 0) or np.any(confusion > 1):
            raise ArgumentError("confusion must be a 2x2 matrix of probabilities")
        if not np.allclose(confusion.sum(axis=1), 1.0, atol=1e-9):
            raise ArgumentError("confusion matrix rows must sum to 1")
        object.__setattr__(self, "confusion", tuple(tuple(float(x) for x in row) for row in confusion))
        object.__setattr__(self, "depolarizing", dict(self.depolarizing))

    def error(self, gate_class: str) -> float:
        return float(self.depolarizing.get(gate_class, 0.0))

    @property
    def confusion_matrix(self) -> np.ndarray:
        return np.asarray(self.confusion, dtype=float)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "QubitNoise":
        """Build from a TOML table; ``fidelity`` gives gate fidelities instead of error probabilities."""
        depolarizing = {k: float(v) for k, v in data.get("depolarizing", {}).items()}
        for kind, fidelity in data.get("fidelity", {}).items():
            if kind not in GATE_CLASSES:
                raise ArgumentError(f"unknown gate class '{kind}', expected one of {GATE_CLASSES}")
            if kind in depolarizing:
                raise ArgumentError(f"gate class '{kind}' has both a depolarizing probability and a fidelity")
            # single-qubit gates act alone, controlled and delay gates on (control, target)
            depolarizing[kind] = depolarizing_from_fidelity(fidelity, 1 if kind == "single" else 2)
        return cls(
            depolarizing=depolarizing,
            t1_us=float(data.get("t1_us", math.inf)),
            t2_us=float(data.get("t2_us", math.inf)),
            excited_population=float(data.get("excited_population", 0.0)),
            initial_excited=float(data.get("initial_excited", 0.0)),
            confusion=tuple(tuple(row) for row in data.get("confusion", ((1.0, 0.0), (0.0, 1.0)))),
        )

    def to_dict(self) -> dict:
        return {
            "depolarizing": dict(self.depolarizing),
            "t1_us": self.t1_us,
            "t2_us": self.t2_us,
            "excited_population": self.excited_population,
            "initial_excited": self.initial_excited,
            "confusion": [list(row) for row in self.confusion],
        }


@dataclass(frozen=True)
class NoiseModel:
    """Per-role qubit noise plus gate durations.

    Qubits whose role has no entry (bath spectators) are noiseless. The delay
    evolution lasts hbar * u microseconds.
    """
    qubits: Mapping[str, QubitNoise] = field(default_factory=dict)
    gate_durations_us: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for kind, t in self.gate_durations_us.items():
            if kind not in GATE_CLASSES:
                raise ArgumentError(f"unknown gate class '{kind}' in gate durations")
            if t < 0:
                raise ArgumentError(f"gate duration for '{kind}' must be >= 0")
        object.__setattr__(self, "qubits", dict(self.qubits))
        object.__setattr__(self, "gate_durations_us", dict(self.gate_durations_us))

    @classmethod
    def zero(cls, roles: Sequence[str] = ("system", "ancilla")) -> "NoiseModel":
        return cls(qubits={role: QubitNoise() for role in roles})

    def for_role(self, role: str) -> Optional[QubitNoise]:
        return self.qubits.get(role)

    def duration(self, gate_class: str, delay: float = 0.0) -> float:
        if gate_class == "delay":
            return HBAR_UEV_US * delay
        return float(self.gate_durations_us.get(gate_class, 0.0))

    def preparation_channels(self, roles: Sequence[str]) -> list[tuple[KrausChannel, tuple]]:
        return [(bit_flip_channel(noise.initial_excited), (q,))
                for q, role in enumerate(roles)
                if (noise := self.for_role(role)) is not None and noise.initial_excited > 0]

    def gate_channels(self, gate_class: str, qubits: Sequence[int], roles: Sequence[str],
                      delay: float = 0.0) -> list[tuple[KrausChannel, tuple]]:
        """Channels that follow one gate: depolarizing, then relaxation on every noisy qubit."""
        channels = []
        if gate_class == "single" or len(qubits) == 1:
            for q in qubits:
                noise = self.for_role(roles[q])
                if noise is not None and noise.error(gate_class) > 0:
                    channels.append((depolarizing_channel(noise.error(gate_class), 1), (q,)))
        else:
            # control and first target
            pair = (qubits[0], qubits[1])
            p = max((noise.error(gate_class) for q in pair if (noise := self.for_role(roles[q])) is not None),
                    default=0.0)
            if p > 0:
                channels.append((depolarizing_channel(p, 2), pair))

        duration = self.duration(gate_class, delay)
        if duration > 0:
            for q, role in enumerate(roles):
                noise = self.for_role(role)
                if noise is None or (math.isinf(noise.t1_us) and math.isinf(noise.t2_us)):
                    continue
                channels.append((thermal_relaxation_channel(noise.t1_us, noise.t2_us, duration,
                                                            noise.excited_population), (q,)))
        return channels

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "NoiseModel":
        qubits = {role: QubitNoise.from_dict(values) for role, values in data.items()
                  if isinstance(values, Mapping) and role not in ("gate_durations_us",)}
        return cls(qubits=qubits, gate_durations_us={k: float(v) for k, v in data.get("gate_durations_us", {}).items()})

    def to_dict(self) -> dict:
        data: dict[str, Any] = {role: noise.to_dict() for role, noise in self.qubits.items()}
        data["gate_durations_us"] = dict(self.gate_durations_us)
        return data


@dataclass(frozen=True)
class BathSpec:
    """Spectator qubits coupled to the system by excitation exchange.

    Frequencies and couplings in ueV, temperature in mK.
    """
    num_spectators: int
    frequencies: tuple = ()
    couplings: tuple = ()
    temperature_mk: float = 150.0
    equilibrate: bool = True

    def __post_init__(self):
        frequencies = tuple(float(f) for f in self.frequencies)
        couplings = tuple(float(g) for g in self.couplings)
        if self.num_spectators < 0:
            raise ArgumentError("num_spectators must be >= 0")
        if len(frequencies) != self.num_spectators or len(couplings) != self.num_spectators:
            raise ArgumentError(f"expected {self.num_spectators} frequencies and couplings, "
                                f"got {len(frequencies)} and {len(couplings)}")
        if any(f <= 0 for f in frequencies):
            raise ArgumentError("spectator frequencies must be positive")
        if any(g < 0 for g in couplings):
            raise ArgumentError("couplings must be >= 0")
        if self.temperature_mk == 0:
            raise ArgumentError("bath temperature must be non-zero")
        for f, g in zip(frequencies, couplings):
            if g / f > WEAK_COUPLING_RATIO:
                log.warning(f"Coupling g={g:g} ueV is not weak against w={f:g} ueV (g/w={g / f:.3f} > "
                            f"{WEAK_COUPLING_RATIO})")
        object.__setattr__(self, "frequencies", frequencies)
        object.__setattr__(self, "couplings", couplings)

    def bath_hamiltonian(self) -> HermitianOperator:
        """H_B = sum_k -(w_k/2) sigma_z on the spectators alone."""
        k = self.num_spectators
        h = np.zeros((2 ** k, 2 ** k), dtype=complex)
        for i, freq in enumerate(self.frequencies):
            h += embed_operator(-0.5 * freq * PAULI_Z, (i,), k)
        return HermitianOperator(h)


def system_hamiltonian(system_freq: float) -> HermitianOperator:
    """-(w/2) sigma_z, ground state |0>."""
    return HermitianOperator(-0.5 * system_freq * PAULI_Z)


def build_bath_hamiltonian(system_freq: float, bath: BathSpec) -> HermitianOperator:
    """H0^SB on (system, spectator_1, ..., spectator_k)."""
    n = 1 + bath.num_spectators
    # the ancilla joins this register in the interferometer
    if n + 1 > MAX_QUBITS:
        raise CapacityError(f"{bath.num_spectators} spectators plus system and ancilla exceed {MAX_QUBITS} qubits")
    h = embed_operator(-0.5 * system_freq * PAULI_Z, (0,), n)
    for k, (freq, g) in enumerate(zip(bath.frequencies, bath.couplings), start=1):
        h = h + embed_operator(-0.5 * freq * PAULI_Z, (k,), n)
        exchange = np.kron(SIGMA_PLUS, SIGMA_MINUS) + np.kron(SIGMA_MINUS, SIGMA_PLUS)
        h = h + g * embed_operator(exchange, (0, k), n)
    return HermitianOperator(h)
