"""
Thermometry through the Jarzynski equality.

For a cyclic drive, J(T) = <exp(-w / k_B T)> equals 1 at the temperature the
work statistics were generated at. Mixing the PDFs measured from two
preparations at T0 and T1 emulates any intermediate temperature T, so the root
of J(T) = 1 over such mixtures estimates the temperature of an unknown bath.
"""
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import expit

from .constants import K_B_UEV_PER_MK
from .errors import ArgumentError, DiagnosticError
from .linalg_core import HermitianOperator, QuantumState, eigh
from .work_statistics import DeltaComb, GridDensity, WorkDistribution

log = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-6
EXPONENT_CLIP = 50.0
DEFAULT_RESOLUTION_MK = 0.1
DEFAULT_CURVE_POINTS = 41


@dataclass(frozen=True)
class Temperature:
    """Signed temperature in mK. Negative values describe population inversion; +-inf is beta = 0."""
    value_mk: float

    def __post_init__(self):
        value = float(self.value_mk)
        if value == 0.0 or math.isnan(value):
            raise ArgumentError(f"temperature must be non-zero, got {self.value_mk}")
        object.__setattr__(self, "value_mk", value)

    @property
    def beta(self) -> float:
        """1 / (k_B T) in 1/ueV."""
        if math.isinf(self.value_mk):
            return 0.0
        return 1.0 / (K_B_UEV_PER_MK * self.value_mk)

    @classmethod
    def from_beta(cls, beta: float) -> "Temperature":
        if beta == 0.0:
            return cls(math.inf)
        return cls(1.0 / (K_B_UEV_PER_MK * beta))

    def __float__(self) -> float:
        return self.value_mk


def _as_temperature(temp) -> Temperature:
    return temp if isinstance(temp, Temperature) else Temperature(temp)


def thermal_state(h: HermitianOperator, temp, labels: tuple = ()) -> QuantumState:
    """exp(-beta h) / Z. Energies are shifted by the extreme level first so any beta stays finite."""
    beta = _as_temperature(temp).beta
    values, vectors = eigh(h)
    reference = values[0] if beta >= 0 else values[-1]
    boltzmann = np.exp(-beta * (values - reference))
    boltzmann /= boltzmann.sum()
    return QuantumState((vectors * boltzmann) @ vectors.conj().T, labels)


def population_ratio(omega: float, temp) -> float:
    """P1 / P0 = exp(-omega / k_B T) for a qubit of splitting ``omega``."""
    return math.exp(-omega * _as_temperature(temp).beta)


def ground_population(omega: float, temp) -> float:
    return float(expit(omega * _as_temperature(temp).beta))


def effective_temperature(omega: float, p_ground: float, p_excited: float) -> Temperature:
    """Temperature whose Boltzmann ratio reproduces the given qubit populations."""
    if p_ground <= 0 or p_excited <= 0:
        raise ArgumentError("both populations must be positive to define a temperature")
    log_ratio = math.log(p_ground / p_excited)
    if log_ratio == 0.0:
        return Temperature(math.inf)
    return Temperature.from_beta(log_ratio / omega)


def mixed_temperature(weight: float, t0, t1, omega: float) -> Temperature:
    """Temperature of the mixture r * rho(T0) + (1 - r) * rho(T1) of qubit thermal states.

    T = (omega / k_B) / ln(R0 / R1) with R0 = r f(-omega b0) + (1-r) f(-omega b1),
    R1 = r f(omega b0) + (1-r) f(omega b1) and f(x) = 1 / (1 + e^x).
    """
    t0, t1 = _as_temperature(t0), _as_temperature(t1)
    if not 0.0 <= weight <= 1.0:
        raise ArgumentError(f"mixing weight must lie in [0, 1], got {weight}")
    if weight == 1.0:
        return t0
    if weight == 0.0:
        return t1

    def f(x):
        return expit(-x)

    r0 = weight * f(-omega * t0.beta) + (1 - weight) * f(-omega * t1.beta)
    r1 = weight * f(omega * t0.beta) + (1 - weight) * f(omega * t1.beta)
    return effective_temperature(omega, r0, r1)


def _same_support(a: WorkDistribution, b: WorkDistribution) -> bool:
    if isinstance(a, DeltaComb) and isinstance(b, DeltaComb):
        return a.positions.shape == b.positions.shape and np.allclose(a.positions, b.positions, rtol=0.0, atol=1e-9)
    if isinstance(a, GridDensity) and isinstance(b, GridDensity):
        return a.w.shape == b.w.shape and np.array_equal(a.w, b.w)
    return False


@dataclass(frozen=True, eq=False)
class MixedPdfSpec:
    pdf_cold: WorkDistribution
    pdf_hot: WorkDistribution
    weight: float
    t0: Temperature
    t1: Temperature
    omega: float

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0:
            raise ArgumentError(f"mixing weight must lie in [0, 1], got {self.weight}")
        if not _same_support(self.pdf_cold, self.pdf_hot):
            raise ArgumentError("PDFs to mix must share the same support")
        object.__setattr__(self, "t0", _as_temperature(self.t0))
        object.__setattr__(self, "t1", _as_temperature(self.t1))


def mix_pdfs(spec: MixedPdfSpec) -> tuple[WorkDistribution, Temperature]:
    """Convex combination r * p_cold + (1 - r) * p_hot and the temperature it emulates."""
    temperature = mixed_temperature(spec.weight, spec.t0, spec.t1, spec.omega)
    if spec.weight == 1.0:
        return spec.pdf_cold, temperature
    if spec.weight == 0.0:
        return spec.pdf_hot, temperature
    r = spec.weight
    if isinstance(spec.pdf_cold, DeltaComb):
        mixed = DeltaComb(spec.pdf_cold.positions, r * spec.pdf_cold.weights + (1 - r) * spec.pdf_hot.weights)
    else:
        mixed = GridDensity(spec.pdf_cold.w, r * spec.pdf_cold.density + (1 - r) * spec.pdf_hot.density)
    return mixed, temperature


@dataclass(frozen=True)
class JarzynskiIntegral:
    value: float
    mass: float
    clipped_mass: float = 0.0


def jarzynski_terms(pdf: WorkDistribution, temp) -> JarzynskiIntegral:
    """J(T) together with the PDF mass and the |p| mass dropped by clipping."""
    beta = _as_temperature(temp).beta
    if isinstance(pdf, DeltaComb):
        value = float(np.sum(pdf.weights * np.exp(-beta * pdf.positions)))
        result = JarzynskiIntegral(value, pdf.total)
    else:
        exponent = -beta * pdf.w
        clipped = np.abs(exponent) > EXPONENT_CLIP
        integrand = np.where(clipped, 0.0, pdf.density * np.exp(np.where(clipped, 0.0, exponent)))
        clipped_mass = float(trapezoid(np.where(clipped, np.abs(pdf.density), 0.0), pdf.w))
        result = JarzynskiIntegral(float(trapezoid(integrand, pdf.w)), pdf.total, clipped_mass)
    if abs(result.mass - 1.0) > NORMALIZATION_TOL:
        log.warning(f"work PDF sums to {result.mass:.6f}, not 1")
    return result


def jarzynski_integral(pdf: WorkDistribution, temp) -> float:
    return jarzynski_terms(pdf, temp).value


class JarzynskiCurve(Protocol):
    def pdf_at(self, temp: Temperature) -> WorkDistribution: ...


@dataclass(frozen=True, eq=False)
class MixingCurve:
    """PDFs from two preparations, mixed to emulate a presumed temperature."""
    pdf_cold: WorkDistribution
    pdf_hot: WorkDistribution
    t0: Temperature
    t1: Temperature
    omega: float

    def __post_init__(self):
        if not _same_support(self.pdf_cold, self.pdf_hot):
            raise ArgumentError("PDFs to mix must share the same support")
        object.__setattr__(self, "t0", _as_temperature(self.t0))
        object.__setattr__(self, "t1", _as_temperature(self.t1))

    def weight_for(self, temp) -> float:
        """r such that r * rho(T0) + (1 - r) * rho(T1) has the populations of ``temp``."""
        p0, p1 = ground_population(self.omega, self.t0), ground_population(self.omega, self.t1)
        if p0 == p1:
            raise ArgumentError("T0 and T1 prepare identical populations; nothing to mix")
        r = (ground_population(self.omega, temp) - p1) / (p0 - p1)
        if r < -1e-12 or r > 1 + 1e-12:
            raise ArgumentError(f"temperature {float(_as_temperature(temp)):.6g} mK lies outside the range "
                                f"spanned by T0={self.t0.value_mk} mK and T1={self.t1.value_mk} mK")
        return min(max(r, 0.0), 1.0)

    def pdf_at(self, temp) -> WorkDistribution:
        spec = MixedPdfSpec(self.pdf_cold, self.pdf_hot, self.weight_for(temp), self.t0, self.t1, self.omega)
        return mix_pdfs(spec)[0]


@dataclass(frozen=True, eq=False)
class FixedCurve:
    """A single PDF evaluated at every presumed temperature."""
    pdf: WorkDistribution

    def pdf_at(self, temp) -> WorkDistribution:
        return self.pdf


@dataclass(frozen=True)
class BathTemperatureEstimate:
    root: Temperature
    bracket: tuple
    iterations: int
    curve: tuple

    @property
    def root_mk(self) -> float:
        return self.root.value_mk

    def to_dict(self) -> dict:
        return {
            "root_mK": self.root_mk,
            "bracket": list(self.bracket),
            "iterations": self.iterations,
            "curve_points": len(self.curve),
        }


def sample_curve(curve: JarzynskiCurve, temperatures: Sequence[float], workers: int = 1) -> list[tuple[float, float]]:
    def point(t: float) -> tuple[float, float]:
        return float(t), jarzynski_integral(curve.pdf_at(Temperature(t)), Temperature(t))

    if workers <= 1:
        return [point(t) for t in temperatures]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(point, temperatures))


def solve_bath_temperature(curve: JarzynskiCurve, t_low: float, t_high: float,
                           curve_points: int = DEFAULT_CURVE_POINTS,
                           resolution_mk: float = DEFAULT_RESOLUTION_MK,
                           workers: int = 1) -> BathTemperatureEstimate:
    """Root of J(T) = 1 on [t_low, t_high].

    J is sampled on ``curve_points`` temperatures first; it must decrease
    strictly and cross 1, otherwise a DiagnosticError carries what was seen.
    The bracketing interval is then bisected to ``resolution_mk``.
    """
    if not t_low < t_high or t_low * t_high <= 0 or math.isinf(t_low) or math.isinf(t_high):
        raise ArgumentError(f"search range [{t_low}, {t_high}] mK must be finite, ordered and of one sign")
    if curve_points < 2 or resolution_mk <= 0:
        raise ArgumentError("need at least two curve points and a positive resolution")

    sampled = tuple(sample_curve(curve, np.linspace(t_low, t_high, curve_points), workers))
    temps = np.array([t for t, _ in sampled])
    values = np.array([j for _, j in sampled])
    endpoints = (sampled[0], sampled[-1])
    if not np.all(np.diff(values) < 0):
        raise DiagnosticError("J(T) is not strictly decreasing on the search range", endpoints, sampled)
    if values[0] < 1.0 or values[-1] > 1.0:
        raise DiagnosticError(f"J(T) - 1 does not change sign on [{t_low}, {t_high}] mK: "
                              f"J={values[0]:.6g} .. {values[-1]:.6g}", endpoints, sampled)

    i = int(np.nonzero(values >= 1.0)[0][-1])
    if values[i] == 1.0 or i == len(values) - 1:
        return BathTemperatureEstimate(Temperature(temps[i]), (temps[i], temps[i]), 0, sampled)

    lo, hi = float(temps[i]), float(temps[i + 1])
    bracket = (lo, hi)
    iterations = 0
    while hi - lo > resolution_mk:
        mid = 0.5 * (lo + hi)
        j = jarzynski_integral(curve.pdf_at(Temperature(mid)), Temperature(mid))
        if j >= 1.0:
            lo = mid
        else:
            hi = mid
        iterations += 1
    root = Temperature(0.5 * (lo + hi))
    log.debug(f"J(T)=1 at {root.value_mk:.3f} mK after {iterations} bisection steps")
    return BathTemperatureEstimate(root, bracket, iterations, sampled)


def write_curve_csv(curve: Sequence[tuple[float, float]], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.asarray(curve, dtype=float).reshape(-1, 2), delimiter=",", header="T_mK,J", comments="",
               fmt="%.17g")
    return path


def read_curve_csv(path: Path) -> list[tuple[float, float]]:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as e:
        raise ArgumentError(f"cannot read {path}: {e}") from e
    return [(float(t), float(j)) for t, j in data]


def write_root_json(estimate: BathTemperatureEstimate, path: Path, curve_file: Optional[str] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    report = estimate.to_dict()
    report["curve_file"] = curve_file
    with open(path, "w") as f:
        json.dump(report, f, indent=2)
        f.write("\n")
    return path
