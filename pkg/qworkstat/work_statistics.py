"""
Work statistics of a driven quantum system.

Holds the two-point-measurement work PDF, the quasi-probability matrix, the
characteristic function (analytic and swept through the interferometric
circuit) and its half-inverse-Fourier reconstruction on a work grid, plus the
peak and coherence diagnostics read off that reconstruction.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.integrate import trapezoid

from .circuit_model import (Basis, build_interferometric_circuit, default_roles, execute, extend_drive,
                            point_rng, prepare, read_ancilla)
from .constants import ENERGY_CLUSTER_TOL
from .errors import ArgumentError, NumericalError
from .linalg_core import (HermitianOperator, QuantumState, as_matrix, energy_projectors, matrix_exp_unitary,
                          product_state)
from .noise_channels import NoiseModel

log = logging.getLogger(__name__)

PDF_SUM_TOL = 1e-9
NEGATIVE_WEIGHT_TOL = 1e-12
ZERO_WEIGHT = 1e-15
DEFAULT_COHERENCE_THRESHOLD = 0.1
# windows holding less than this share of the strongest window's energy score 0
WINDOW_ENERGY_FLOOR = 1e-2
WINDOWS = ("none", "hann")


# ---------------------------------------------------------------- distributions

@dataclass(frozen=True, eq=False)
class DeltaComb:
    """Discrete work distribution: weights at positions (ueV)."""
    positions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        positions = np.array(self.positions, dtype=float).reshape(-1)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if positions.shape != weights.shape:
            raise ArgumentError(f"{positions.size} positions for {weights.size} weights")
        if not (np.all(np.isfinite(positions)) and np.all(np.isfinite(weights))):
            raise ArgumentError("delta comb entries must be finite")
        order = np.argsort(positions, kind="stable")
        positions, weights = positions[order], weights[order]
        positions.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "weights", weights)

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))

    def is_proper(self) -> bool:
        return abs(self.total - 1.0) <= PDF_SUM_TOL and bool(np.all(self.weights >= -NEGATIVE_WEIGHT_TOL))

    def weight_at(self, w: float, tol: float = ENERGY_CLUSTER_TOL) -> float:
        hit = np.abs(self.positions - w) <= tol
        return float(np.sum(self.weights[hit]))

    def as_pairs(self) -> list[tuple[float, float]]:
        return [(float(w), float(p)) for w, p in zip(self.positions, self.weights)]


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Work density sampled on a uniform grid (density per ueV)."""
    w: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float).reshape(-1)
        density = np.array(self.density, dtype=float).reshape(-1)
        if w.size < 2 or w.shape != density.shape:
            raise ArgumentError("grid density needs matching w and density arrays of length >= 2")
        steps = np.diff(w)
        if np.any(steps <= 0):
            raise ArgumentError("work grid must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ArgumentError("work grid must be uniformly spaced")
        w.setflags(write=False)
        density.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "density", density)

    @property
    def spacing(self) -> float:
        return float(self.w[1] - self.w[0])

    @property
    def total(self) -> float:
        return float(trapezoid(self.density, self.w))


WorkDistribution = Union[DeltaComb, GridDensity]


@dataclass(frozen=True, eq=False)
class QuasiProbMatrix:
    """q_mn indexed by final level m (rows) and initial level n (columns)."""
    entries: np.ndarray
    final_energies: np.ndarray
    initial_energies: np.ndarray

    @property
    def total(self) -> complex:
        return complex(np.sum(self.entries))

    def final_marginal(self) -> np.ndarray:
        return np.sum(self.entries, axis=1)

    def initial_marginal(self) -> np.ndarray:
        return np.sum(self.entries, axis=0)

    def max_imaginary(self) -> float:
        return float(np.max(np.abs(self.entries.imag)))

    def work_values(self) -> np.ndarray:
        return self.final_energies[:, None] - self.initial_energies[None, :]

    def char_fn(self, u: float) -> complex:
        """sum_mn exp(iu(E_m - E_n)) q_mn"""
        return complex(np.sum(np.exp(1j * u * self.work_values()) * self.entries))


@dataclass(frozen=True, eq=False)
class CharFnSamples:
    """g(u_j) on a uniform grid u_j = j * delta_u. ``shots`` 0 means exact."""
    u: np.ndarray
    values: np.ndarray
    shots: int = 0
    seed: Optional[int] = None

    def __post_init__(self):
        u = np.array(self.u, dtype=float).reshape(-1)
        values = np.array(self.values, dtype=complex).reshape(-1)
        if u.size == 0:
            raise ArgumentError("characteristic-function samples are empty")
        if u.shape != values.shape:
            raise ArgumentError(f"{u.size} u values for {values.size} samples")
        if abs(u[0]) > 1e-12:
            raise ArgumentError(f"u grid must start at 0, starts at {u[0]}")
        if u.size > 1:
            steps = np.diff(u)
            if steps[0] <= 0 or not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
                raise ArgumentError("u grid must be uniform and increasing")
        u.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "values", values)

    @property
    def delta_u(self) -> float:
        if self.u.size < 2:
            raise ArgumentError("a single sample has no step")
        return float(self.u[1] - self.u[0])

    @property
    def u_max(self) -> float:
        return float(self.u[-1])

    def __len__(self) -> int:
        return self.u.size


# ---------------------------------------------------------------- exact statistics

def _drive_for(h0: HermitianOperator, drive: np.ndarray) -> np.ndarray:
    return extend_drive(drive, h0.num_qubits)


def _check_dims(rho: np.ndarray, h0: HermitianOperator, unitary: np.ndarray):
    if rho.shape != (h0.dim, h0.dim) or unitary.shape != (h0.dim, h0.dim):
        raise ArgumentError(f"state {rho.shape}, Hamiltonian {h0.dim} and drive {unitary.shape} dimensions differ")


def _merge(positions: list, weights: list, keep_zero: bool) -> DeltaComb:
    order = np.argsort(positions, kind="stable")
    merged_w: list[float] = []
    merged_p: list[float] = []
    for i in order:
        if merged_w and abs(positions[i] - merged_w[-1]) <= ENERGY_CLUSTER_TOL:
            merged_p[-1] += weights[i]
        else:
            merged_w.append(positions[i])
            merged_p.append(weights[i])
    if not keep_zero:
        kept = [(w, p) for w, p in zip(merged_w, merged_p) if abs(p) > ZERO_WEIGHT]
        merged_w = [w for w, _ in kept]
        merged_p = [p for _, p in kept]
    return DeltaComb(np.array(merged_w), np.array(merged_p))


def tpm_work_pdf(rho: Union[QuantumState, np.ndarray], h0: HermitianOperator, drive: np.ndarray,
                 keep_zero: bool = False) -> DeltaComb:
    """Two-point-measurement work PDF.

    p_mn = Tr(P_m U P_n rho P_n U^dag) at work E_m - E_n. Levels closer than
    ENERGY_CLUSTER_TOL share a projector and equal work values are merged.
    Zero-weight positions are dropped unless ``keep_zero`` is set.
    """
    matrix = as_matrix(rho)
    unitary = _drive_for(h0, drive)
    _check_dims(matrix, h0, unitary)
    levels = energy_projectors(h0)
    positions, weights = [], []
    for n in levels:
        after = unitary @ (n.projector @ matrix @ n.projector) @ unitary.conj().T
        for m in levels:
            positions.append(m.energy - n.energy)
            weights.append(float(np.real(np.trace(m.projector @ after))))
    return _merge(positions, weights, keep_zero)


def quasiprob(rho: Union[QuantumState, np.ndarray], h0: HermitianOperator, drive: np.ndarray) -> QuasiProbMatrix:
    """q_mn = Tr(P_m U P_n rho U^dag)."""
    matrix = as_matrix(rho)
    unitary = _drive_for(h0, drive)
    _check_dims(matrix, h0, unitary)
    levels = energy_projectors(h0)
    entries = np.empty((len(levels), len(levels)), dtype=complex)
    for j, n in enumerate(levels):
        after = unitary @ n.projector @ matrix @ unitary.conj().T
        for i, m in enumerate(levels):
            entries[i, j] = np.trace(m.projector @ after)
    energies = np.array([level.energy for level in levels])
    return QuasiProbMatrix(entries, energies, energies.copy())


def char_fn_direct(rho: Union[QuantumState, np.ndarray], h0: HermitianOperator, drive: np.ndarray,
                   u: float) -> complex:
    """g(u) = Tr(U^dag e^{iuH} U e^{-iuH} rho); any real u."""
    matrix = as_matrix(rho)
    unitary = _drive_for(h0, drive)
    _check_dims(matrix, h0, unitary)
    forward = matrix_exp_unitary(h0, u)
    product = unitary.conj().T @ forward.conj().T @ unitary @ forward @ matrix
    return complex(np.trace(product))


def mean_work(dist: WorkDistribution) -> float:
    """First moment, normalised by the distribution's total mass."""
    if isinstance(dist, DeltaComb):
        mass = dist.total
        first = float(np.sum(dist.positions * dist.weights))
    else:
        mass = dist.total
        first = float(trapezoid(dist.w * dist.density, dist.w))
    if abs(mass) < 1e-12:
        raise NumericalError("distribution has zero mass")
    return first / mass


def work_variance(dist: WorkDistribution) -> float:
    mean = mean_work(dist)
    if isinstance(dist, DeltaComb):
        return float(np.sum((dist.positions - mean) ** 2 * dist.weights) / dist.total)
    return float(trapezoid((dist.w - mean) ** 2 * dist.density, dist.w) / dist.total)


# ---------------------------------------------------------------- circuit sweep

@dataclass(frozen=True, eq=False)
class InterferometricSystem:
    """What a sweep measures: H0 on the work register, the drive and the initial state.

    ``drive`` acts on the whole work register or on the system qubit alone
    (then extended as U (x) 1_B). ``ancilla_excited`` is the thermal excited
    population of the ancilla at preparation.
    """
    h0: HermitianOperator
    drive: np.ndarray
    initial: QuantumState
    roles: Optional[tuple] = None
    ancilla_excited: float = 0.0

    def __post_init__(self):
        if self.initial.dim != self.h0.dim:
            raise ArgumentError(f"initial state dimension {self.initial.dim} differs from H0 dimension {self.h0.dim}")
        if not 0.0 <= self.ancilla_excited <= 0.5:
            raise ArgumentError(f"ancilla excited population must lie in [0, 0.5], got {self.ancilla_excited}")
        roles = tuple(self.roles) if self.roles else default_roles(self.h0.num_qubits, self.drive)
        if roles[-1] != "ancilla":
            roles = roles + ("ancilla",)
        if len(roles) != self.h0.num_qubits + 1:
            raise ArgumentError(f"{len(roles)} roles for a {self.h0.num_qubits + 1}-qubit register")
        object.__setattr__(self, "roles", roles)
        object.__setattr__(self, "drive", np.array(self.drive, dtype=complex))

    @property
    def work_unitary(self) -> np.ndarray:
        return _drive_for(self.h0, self.drive)

    def register_state(self) -> QuantumState:
        p1 = self.ancilla_excited
        ancilla = QuantumState(np.diag([1.0 - p1, p1]).astype(complex), ("ancilla",))
        work = QuantumState(self.initial.matrix, self.roles[:-1])
        return product_state(work, ancilla)

    def char_fn(self, u: float) -> complex:
        return char_fn_direct(self.initial, self.h0, self.drive, u)


@dataclass(frozen=True)
class SweepMode:
    """Exact expectation values, or ``shots`` binomial readouts per point and basis."""
    shots: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.shots < 0:
            raise ArgumentError(f"shots must be >= 0, got {self.shots}")

    @classmethod
    def exact(cls) -> "SweepMode":
        return cls(0, 0)

    @classmethod
    def sampled(cls, shots: int, seed: int) -> "SweepMode":
        if shots < 1:
            raise ArgumentError(f"shots mode needs at least one shot, got {shots}")
        return cls(shots, seed)

    @property
    def is_exact(self) -> bool:
        return self.shots == 0

    @property
    def name(self) -> str:
        return "exact" if self.is_exact else "shots"


def u_grid(delta_u: float, u_max: Optional[float] = None, num_points: Optional[int] = None) -> np.ndarray:
    """u_j = j * delta_u; ``num_points`` wins over ``u_max`` when both are given."""
    if not delta_u > 0:
        raise ArgumentError(f"delta_u must be > 0, got {delta_u}")
    if num_points is None:
        if u_max is None:
            raise ArgumentError("either u_max or num_points is required")
        if u_max < delta_u:
            raise ArgumentError(f"u_max {u_max} is below delta_u {delta_u}")
        num_points = int(math.floor(u_max / delta_u + 1e-9)) + 1
    if num_points < 2:
        raise ArgumentError(f"a sweep needs at least two points, got {num_points}")
    return np.arange(num_points) * delta_u


def _sweep_point(system: InterferometricSystem, u: float, index: int, mode: SweepMode,
                 noise: Optional[NoiseModel], initial: QuantumState) -> complex:
    results = []
    for basis in (Basis.Z, Basis.Y):
        circuit = build_interferometric_circuit(system.h0, system.drive, u, basis, system.roles)
        final = execute(circuit, initial, noise)
        if mode.is_exact:
            results.append(read_ancilla(circuit, final))
        else:
            ancilla_noise = noise.for_role("ancilla") if noise is not None else None
            confusion = ancilla_noise.confusion_matrix if ancilla_noise is not None else None
            results.append(read_ancilla(circuit, final, mode.shots, point_rng(mode.seed, index, basis), confusion))
    return complex(results[0], results[1])


def sweep_char_fn(system: InterferometricSystem, delta_u: float, u_max: Optional[float] = None,
                  mode: Optional[SweepMode] = None, noise: Optional[NoiseModel] = None,
                  num_points: Optional[int] = None, workers: int = 1) -> CharFnSamples:
    """Run the interferometric circuit for both ancilla bases at every u_j.

    Points are independent and seeded by (seed, index, basis), so the result
    does not depend on ``workers``.
    """
    mode = mode or SweepMode.exact()
    if workers < 1:
        raise ArgumentError(f"workers must be >= 1, got {workers}")
    grid = u_grid(delta_u, u_max, num_points)
    initial = prepare(system.register_state(), system.roles, noise)
    log.debug(f"sweeping {grid.size} points, mode={mode.name}, workers={workers}")

    def run(index: int) -> complex:
        return _sweep_point(system, float(grid[index]), index, mode, noise, initial)

    if workers == 1:
        values = [run(i) for i in range(grid.size)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(run, range(grid.size)))
    return CharFnSamples(grid, np.array(values), shots=mode.shots, seed=None if mode.is_exact else mode.seed)


def correct_ancilla_damping(samples: CharFnSamples, ancilla_excited: float) -> CharFnSamples:
    """Undo the (1 - 2 p1) damping a thermally excited ancilla imposes on g(u)."""
    factor = 1.0 - 2.0 * ancilla_excited
    if abs(factor) < 1e-12:
        raise NumericalError("ancilla excited population 0.5 leaves no signal to correct")
    return CharFnSamples(samples.u, samples.values / factor, samples.shots, samples.seed)


# ---------------------------------------------------------------- reconstruction

def default_w_grid(omega: float, span: float = 2.5, points: int = 1001) -> np.ndarray:
    if omega <= 0 or span <= 0 or points < 2:
        raise ArgumentError("work grid needs omega > 0, span > 0 and at least two points")
    return np.linspace(-span * omega, span * omega, points)


def _window_weights(u: np.ndarray, window: str) -> np.ndarray:
    if window == "none":
        return np.ones_like(u)
    if window == "hann":
        return 0.5 * (1.0 + np.cos(np.pi * u / u[-1]))
    raise ArgumentError(f"unknown window '{window}', expected one of {WINDOWS}")


def half_inverse_fourier(samples: CharFnSamples, w: Sequence[float], window: str = "none") -> GridDensity:
    """2 Re q_>(w), q_>(w) = (du/2pi) sum_j c_j h_j exp(-i u_j w) g(u_j) with c_0 = 1/2."""
    if len(samples) < 2:
        raise ArgumentError("reconstruction needs at least two samples")
    w = np.asarray(w, dtype=float)
    weights = _window_weights(samples.u, window).astype(complex)
    weights[0] *= 0.5
    kernel = np.exp(-1j * np.outer(w, samples.u))
    q_half = samples.delta_u / (2.0 * np.pi) * (kernel @ (weights * samples.values))
    return GridDensity(w, 2.0 * q_half.real)


def synthesize_char_fn(comb: DeltaComb, u: Sequence[float]) -> CharFnSamples:
    """Exact chi(u) = sum_k p_k exp(i u w_k) of a delta comb."""
    u = np.asarray(u, dtype=float)
    values = np.exp(1j * np.outer(u, comb.positions)) @ comb.weights
    return CharFnSamples(u, values)


@dataclass(frozen=True)
class PeakWeight:
    position: float
    weight: float


def _check_windows(dist: GridDensity, positions: Sequence[float], half_width: float) -> np.ndarray:
    if half_width <= 0:
        raise ArgumentError(f"window half-width must be > 0, got {half_width}")
    positions = np.asarray(positions, dtype=float)
    ordered = np.sort(positions)
    if ordered.size and (ordered[0] - half_width < dist.w[0] - 1e-12 or ordered[-1] + half_width > dist.w[-1] + 1e-12):
        raise ArgumentError(f"peak windows of half-width {half_width} leave the work grid "
                            f"[{dist.w[0]:.6g}, {dist.w[-1]:.6g}]")
    if np.any(np.diff(ordered) < 2 * half_width - 1e-12):
        raise ArgumentError("peak windows overlap")
    return positions


def extract_peaks(dist: GridDensity, positions: Sequence[float], half_width: float) -> list[PeakWeight]:
    """Integrate the density over [pos - h, pos + h] for each expected peak."""
    positions = _check_windows(dist, positions, half_width)
    peaks = []
    for pos in positions:
        lo, hi = pos - half_width, pos + half_width
        inside = (dist.w > lo) & (dist.w < hi)
        x = np.concatenate(([lo], dist.w[inside], [hi]))
        y = np.interp(x, dist.w, dist.density)
        peaks.append(PeakWeight(float(pos), float(trapezoid(y, x))))
    return peaks


@dataclass(frozen=True)
class CoherenceReport:
    symmetric: bool
    scores: tuple
    threshold: float

    @property
    def asymmetry(self) -> float:
        return max(self.scores) if self.scores else 0.0


def detect_coherence_signature(dist: GridDensity, positions: Sequence[float], half_width: float,
                               threshold: float = DEFAULT_COHERENCE_THRESHOLD) -> CoherenceReport:
    """Share of odd (antisymmetric) energy of the density around each peak.

    Coherence in the initial state shows up as 1/x wings, odd about the peak;
    incoherent preparations leave each window even. Windows that hold only the
    tails of neighbouring peaks score 0.
    """
    positions = _check_windows(dist, positions, half_width)
    samples = max(int(math.ceil(half_width / dist.spacing)) * 2 + 1, 3)
    offsets = np.linspace(0.0, half_width, samples)
    energies = []
    for pos in positions:
        right = np.interp(pos + offsets, dist.w, dist.density)
        left = np.interp(pos - offsets, dist.w, dist.density)
        odd, even = 0.5 * (right - left), 0.5 * (right + left)
        energies.append((trapezoid(odd ** 2, offsets), trapezoid(even ** 2, offsets)))
    strongest = max((odd + even for odd, even in energies), default=0.0)
    scores = []
    for odd, even in energies:
        total = odd + even
        scores.append(float(odd / total) if total > WINDOW_ENERGY_FLOOR * strongest and total > 0 else 0.0)
    return CoherenceReport(all(s < threshold for s in scores), tuple(scores), threshold)


# ---------------------------------------------------------------- CSV

def _save(path: Path, columns: list, header: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.column_stack(columns), delimiter=",", header=header, comments="", fmt="%.17g")
    return path


def _load(path: Path, width: int) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as e:
        raise ArgumentError(f"cannot read {path}: {e}") from e
    if data.shape[1] != width:
        raise ArgumentError(f"{path} has {data.shape[1]} columns, expected {width}")
    return data


def write_char_fn_csv(samples: CharFnSamples, path: Path) -> Path:
    shots = np.full(len(samples), samples.shots)
    return _save(path, [samples.u, samples.values.real, samples.values.imag, shots], "u,re_g,im_g,shots")


def read_char_fn_csv(path: Path) -> CharFnSamples:
    data = _load(path, 4)
    return CharFnSamples(data[:, 0], data[:, 1] + 1j * data[:, 2], shots=int(data[0, 3]))


def write_density_csv(dist: GridDensity, path: Path) -> Path:
    return _save(path, [dist.w, dist.density], "w,density")


def read_density_csv(path: Path) -> GridDensity:
    data = _load(path, 2)
    return GridDensity(data[:, 0], data[:, 1])


def write_comb_csv(comb: DeltaComb, path: Path) -> Path:
    return _save(path, [comb.positions, comb.weights], "w,weight")


def read_comb_csv(path: Path) -> DeltaComb:
    data = _load(path, 2)
    return DeltaComb(data[:, 0], data[:, 1])
