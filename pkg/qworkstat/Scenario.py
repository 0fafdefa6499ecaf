"""
Scenario pipelines and their CLI managers.

A scenario sweeps the interferometric circuit over u for both ancilla bases,
reconstructs the work density, reads peak weights and the coherence witness
off it and, when configured, estimates a temperature from the Jarzynski
equality. Every number in the report is recomputable from the CSVs written
next to it.
"""
import argparse
import dataclasses
import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .CustomEncoder import CustomEncoder
from .circuit_model import DRIVES, Basis, build_interferometric_circuit
from .config import get_config
from .errors import ConfigError, QworkstatError, StageError
from .experiment_config import ExperimentConfig, ensure_writable, list_presets, load_experiment_config
from .jarzynski import (FixedCurve, MixingCurve, Temperature, solve_bath_temperature, thermal_state,
                        write_curve_csv, write_root_json)
from .linalg_core import QuantumState, density_from_ket, dephase_in_eigenbasis, product_state
from .noise_channels import BathSpec, build_bath_hamiltonian, system_hamiltonian
from .qasm_export import write_circuit_series
from .run_logger import LogMode, RunLogger
from .terminal_output import terminal_output
from .work_statistics import (CoherenceReport, InterferometricSystem, PeakWeight, SweepMode, correct_ancilla_damping,
                              default_w_grid, detect_coherence_signature, extract_peaks, half_inverse_fourier,
                              mean_work, sweep_char_fn, tpm_work_pdf, u_grid, write_char_fn_csv, write_comb_csv,
                              write_density_csv)


# ---------------------------------------------------------------- system assembly

def bath_spec(config: ExperimentConfig) -> Optional[BathSpec]:
    bath = config.bath
    if not bath.enabled:
        return None
    omega = config.omega
    return BathSpec(
        num_spectators=len(bath.frequency_ratios),
        frequencies=tuple(r * omega for r in bath.frequency_ratios),
        couplings=tuple(r * omega for r in bath.coupling_ratios),
        temperature_mk=bath.temperature_mk,
        equilibrate=bath.equilibrate,
    )


def system_state(config: ExperimentConfig, temperature_mk: Optional[float] = None) -> QuantumState:
    """Initial state of the system qubit; ``temperature_mk`` forces a thermal preparation."""
    if temperature_mk is not None:
        return thermal_state(system_hamiltonian(config.omega), Temperature(temperature_mk), ("system",))
    preparation = config.system.preparation
    if preparation == "ground":
        return density_from_ket([1, 0], ("system",))
    if preparation == "excited":
        return density_from_ket([0, 1], ("system",))
    if preparation == "coherent-plus":
        return density_from_ket([1, 1], ("system",))
    return thermal_state(system_hamiltonian(config.omega), Temperature(config.system.temperature_mk), ("system",))


def build_system(config: ExperimentConfig, temperature_mk: Optional[float] = None,
                 with_bath: bool = True) -> InterferometricSystem:
    """System (and spectators) ready for a sweep.

    With a bath, the joint state rho_S (x) rho_B is optionally dephased onto the
    eigenspaces of H0^SB so the initial state commutes with the coupled Hamiltonian.
    """
    spec = bath_spec(config) if with_bath else None
    rho_s = system_state(config, temperature_mk)
    drive = DRIVES[config.system.drive]
    if spec is None:
        h0 = system_hamiltonian(config.omega)
        return InterferometricSystem(h0, drive, rho_s, ancilla_excited=config.system.ancilla_excited)

    h0 = build_bath_hamiltonian(config.omega, spec)
    rho_b = thermal_state(spec.bath_hamiltonian(), Temperature(spec.temperature_mk), ("bath",) * spec.num_spectators)
    joint = product_state(rho_s, rho_b)
    if spec.equilibrate:
        joint = dephase_in_eigenbasis(joint, h0)
    return InterferometricSystem(h0, drive, joint, ancilla_excited=config.system.ancilla_excited)


def sweep_mode(config: ExperimentConfig) -> SweepMode:
    if config.sweep.mode == "exact":
        return SweepMode.exact()
    return SweepMode.sampled(config.sweep.shots, config.sweep.seed)


# ---------------------------------------------------------------- report

@dataclass(frozen=True)
class ScenarioReport:
    scenario: str
    config: Dict[str, Any]
    out_dir: str
    files: Dict[str, str]
    peaks: List[PeakWeight]
    coherence: CoherenceReport
    total_mass: float
    peak_mass: float
    mean_work: float
    exact_pdf: List[tuple]
    exact_mean_work: float
    damping_factor: float
    baseline_peaks: Optional[List[PeakWeight]] = None
    jarzynski: Optional[Dict[str, Any]] = None
    reference: Dict[str, Any] = field(default_factory=dict)
    run_id: Optional[str] = None

    @property
    def mode(self) -> str:
        return self.config["sweep"]["mode"]

    def to_dict(self) -> dict:
        sweep = self.config["sweep"]
        data = {
            "scenario": self.scenario,
            "mode": sweep["mode"],
            "seed": sweep["seed"] if sweep["mode"] == "shots" else None,
            "shots": sweep["shots"] if sweep["mode"] == "shots" else 0,
            "out_dir": self.out_dir,
            "files": dict(self.files),
            "peaks": [dataclasses.asdict(p) for p in self.peaks],
            "coherence": {
                "symmetric": self.coherence.symmetric,
                "scores": list(self.coherence.scores),
                "threshold": self.coherence.threshold,
            },
            "total_mass": self.total_mass,
            "peak_mass": self.peak_mass,
            "mean_work": self.mean_work,
            "exact_pdf": [{"position": w, "weight": p} for w, p in self.exact_pdf],
            "exact_mean_work": self.exact_mean_work,
            "damping_factor": self.damping_factor,
            "baseline_peaks": ([dataclasses.asdict(p) for p in self.baseline_peaks]
                               if self.baseline_peaks is not None else None),
            "jarzynski": self.jarzynski,
            "reference": dict(self.reference),
            "config": self.config,
        }
        if self.run_id:
            data["run_id"] = self.run_id
        return data


def _stage(logger: RunLogger, name: str, fn, *args, **kwargs):
    """Run one pipeline stage; library errors come back labelled with the stage."""
    with logger.stage(name):
        try:
            return fn(*args, **kwargs)
        except (QworkstatError, ValueError, ArithmeticError, OSError) as e:
            if isinstance(e, (StageError, ConfigError)):
                raise
            raise StageError(name, e) from e


def _write_json(path: Path, data: dict) -> Path:
    with open(path, "w") as f:
        json.dump(data, f, indent=2, cls=CustomEncoder)
        f.write("\n")
    return path


def _write_peaks_csv(peaks: List[PeakWeight], path: Path) -> Path:
    rows = np.array([[p.position, p.weight] for p in peaks], dtype=float).reshape(-1, 2)
    np.savetxt(path, rows, delimiter=",", header="position,weight", comments="", fmt="%.17g")
    return path


def _config_echo(config: ExperimentConfig) -> dict:
    echo = config.to_dict()
    # worker count does not change results
    echo["sweep"].pop("workers", None)
    return echo


def _reconstruct(config: ExperimentConfig, system: InterferometricSystem, workers: int):
    samples = sweep_char_fn(system, config.sweep.delta_u, num_points=config.sweep.num_points,
                            mode=sweep_mode(config), noise=config.noise, workers=workers)
    if config.system.damping_correction and config.system.ancilla_excited > 0:
        samples = correct_ancilla_damping(samples, config.system.ancilla_excited)
    rec = config.reconstruction
    density = half_inverse_fourier(samples, default_w_grid(config.omega, rec.w_span, rec.w_points), rec.window)
    return samples, density


def _peak_table(config: ExperimentConfig, density):
    rec = config.reconstruction
    positions = [p * config.omega for p in rec.peaks]
    half_width = rec.peak_half_width * config.omega
    peaks = extract_peaks(density, positions, half_width)
    coherence = detect_coherence_signature(density, positions, half_width, rec.coherence_threshold)
    return peaks, coherence


def _thermometry(config: ExperimentConfig, out_dir: Path, workers: int, own_pdf=None) -> Dict[str, Any]:
    """J(T) = 1 root search. Returns the report fragment and writes the curve and root files."""
    jz = config.jarzynski

    def pdf_for(temperature_mk: float):
        system = build_system(config, temperature_mk)
        if jz.pdf_source == "exact":
            return tpm_work_pdf(system.initial, system.h0, system.drive, keep_zero=True)
        return _reconstruct(config, system, workers)[1]

    if jz.mixing:
        if jz.search_mk is None:
            raise ConfigError("mixing thermometry needs jarzynski.search_mk")
        curve = MixingCurve(pdf_for(jz.cold_temperature_mk), pdf_for(jz.hot_temperature_mk),
                            Temperature(jz.cold_temperature_mk), Temperature(jz.hot_temperature_mk), config.omega)
        search = jz.search_mk
    else:
        prepared = jz.cold_temperature_mk or config.system.temperature_mk
        if jz.search_mk is not None:
            search = jz.search_mk
        elif prepared and config.system.preparation == "thermal":
            search = (0.5 * prepared, 1.8 * prepared)
        else:
            raise ConfigError("thermometry on a single PDF needs a thermal preparation or jarzynski.search_mk")
        reuse = own_pdf is not None and jz.cold_temperature_mk is None and jz.pdf_source == "reconstructed"
        pdf = own_pdf if reuse else pdf_for(prepared)
        curve = FixedCurve(pdf)

    estimate = solve_bath_temperature(curve, search[0], search[1], jz.curve_points, jz.resolution_mk, workers)
    curve_file = write_curve_csv(estimate.curve, out_dir / "jarzynski_curve.csv")
    root_file = write_root_json(estimate, out_dir / "jarzynski_root.json", curve_file.name)
    report = estimate.to_dict()
    report.update({
        "search_mk": list(search),
        "mixing": jz.mixing,
        "t0_mk": jz.cold_temperature_mk,
        "t1_mk": jz.hot_temperature_mk,
        "bath_temperature_mk": config.bath.temperature_mk if config.bath.enabled else None,
        "curve_file": curve_file.name,
        "root_file": root_file.name,
    })
    return report


def run_scenario(config: ExperimentConfig, workers: Optional[int] = None,
                 logger: Optional[RunLogger] = None) -> ScenarioReport:
    """Sweep, reconstruct, read peaks and coherence, optionally run thermometry; write all files."""
    app = get_config()
    workers = workers or config.sweep.workers or app.get_workers()
    logger = logger or RunLogger(config.name)
    out_dir = ensure_writable(config.output_dir(app.get_output_root()))
    files: Dict[str, str] = {}

    system = _stage(logger, "prepare", build_system, config)
    samples, density = _stage(logger, "sweep", _reconstruct, config, system, workers)
    files["char_fn"] = write_char_fn_csv(samples, out_dir / "char_fn.csv").name
    files["density"] = write_density_csv(density, out_dir / "density.csv").name

    peaks, coherence = _stage(logger, "peaks", _peak_table, config, density)
    files["peaks"] = _write_peaks_csv(peaks, out_dir / "peaks.csv").name

    exact = _stage(logger, "exact", tpm_work_pdf, system.initial, system.h0, system.drive)
    files["exact_pdf"] = write_comb_csv(exact, out_dir / "exact_pdf.csv").name

    baseline_peaks = None
    if config.bath.enabled and config.bath.baseline:
        def baseline():
            closed = build_system(config, with_bath=False)
            _, closed_density = _reconstruct(config, closed, workers)
            return closed_density, _peak_table(config, closed_density)[0]

        baseline_density, baseline_peaks = _stage(logger, "baseline", baseline)
        files["baseline_density"] = write_density_csv(baseline_density, out_dir / "baseline_density.csv").name

    jarzynski = None
    if config.jarzynski.enabled:
        jarzynski = _stage(logger, "jarzynski", _thermometry, config, out_dir, workers, density)

    total_mass = density.total
    files["report"] = "report.json"
    report = ScenarioReport(
        scenario=config.name,
        config=_config_echo(config),
        out_dir=str(out_dir),
        files=files,
        peaks=peaks,
        coherence=coherence,
        total_mass=total_mass,
        peak_mass=float(sum(p.weight for p in peaks)),
        mean_work=mean_work(density),
        exact_pdf=exact.as_pairs(),
        exact_mean_work=mean_work(exact),
        damping_factor=1.0 - 2.0 * config.system.ancilla_excited,
        baseline_peaks=baseline_peaks,
        jarzynski=jarzynski,
        reference=dict(config.reference),
    )
    _write_json(out_dir / "report.json", report.to_dict())
    logger.log_info(f"{config.name}: total mass {total_mass:.4f}, files in {out_dir}")
    return report


def run_noisy_emulation(config: ExperimentConfig, workers: Optional[int] = None,
                        logger: Optional[RunLogger] = None) -> ScenarioReport:
    """run_scenario with the config's noise model active; the report's total mass shows the leakage."""
    if config.noise is None:
        raise ConfigError(f"scenario '{config.name}' has no [noise] section")
    logger = logger or RunLogger(config.name)
    report = run_scenario(config, workers, logger)
    if report.total_mass > 1.0 - 1e-3:
        logger.log_warning(f"noisy emulation kept total mass {report.total_mass:.4f}; no leakage visible")
    return report


def export_circuits(config: ExperimentConfig, directory: Optional[Path] = None) -> List[Path]:
    """One OpenQASM 3 file per u of the sweep; the ancilla basis is a runtime input."""
    app = get_config()
    directory = ensure_writable(Path(directory) if directory else config.output_dir(app.get_output_root()) / "qasm")
    system = build_system(config)
    grid = u_grid(config.sweep.delta_u, num_points=config.sweep.num_points)
    circuits = (build_interferometric_circuit(system.h0, system.drive, float(u), Basis.Y, system.roles)
                for u in grid)
    return write_circuit_series(circuits, directory)


# ---------------------------------------------------------------- CLI managers

def _add_experiment_arguments(parser: argparse.ArgumentParser, out_help: str = "Output directory",
                              sweep_flags: bool = True) -> None:
    parser.add_argument("--config", "-c", required=True, help="Experiment TOML file or preset name")
    parser.add_argument("--out", "-o", help=out_help)
    if not sweep_flags:
        return
    parser.add_argument("--seed", type=int, help="Override sweep.seed")
    parser.add_argument("--mode", choices=["exact", "shots"], help="Override sweep.mode")
    parser.add_argument("--shots", type=int, help="Override sweep.shots")
    parser.add_argument("--workers", type=int, help="Threads for the u sweep and the J(T) curve")


def _load(args: argparse.Namespace) -> ExperimentConfig:
    config = load_experiment_config(args.config)
    return config.with_overrides(seed=args.seed, out=args.out, mode=args.mode, shots=args.shots,
                                 workers=args.workers)


def _log_mode(args: argparse.Namespace) -> LogMode:
    return LogMode.DEBUG if getattr(args, "verbose", False) else LogMode.PRODUCTION


class ScenarioManager:
    """Handles run and list-scenarios."""

    @classmethod
    def register_cli(cls, parent_subparsers: argparse._SubParsersAction, parent_parser: argparse.ArgumentParser) -> None:
        run = parent_subparsers.add_parser(
            "run",
            aliases=["scenario"],
            parents=[parent_parser],
            help="Run a scenario end to end",
        )
        _add_experiment_arguments(run)
        run.add_argument("--record", action="store_true", help="Record the run in the run registry")

        parent_subparsers.add_parser(
            "list-scenarios",
            aliases=["scenarios"],
            parents=[parent_parser],
            help="List bundled scenario presets",
        )

    def __init__(self, args: argparse.Namespace):
        self.args = args

    def execute(self) -> Dict[str, Any]:
        if self.args.command in ("list-scenarios", "scenarios"):
            return {
                "success": True,
                "object_type": "scenario_list",
                "data": list_presets(),
                "timestamp": datetime.now().isoformat(),
            }

        config = _load(self.args)
        logger = RunLogger(config.name, _log_mode(self.args))
        runner = run_noisy_emulation if config.noise is not None else run_scenario
        report = runner(config, logger=logger)

        if getattr(self.args, "record", False) or get_config().is_recording_enabled():
            from .database import DatabaseManager
            run = DatabaseManager().save_run(report)
            report = dataclasses.replace(report, run_id=run.run_id)
            terminal_output.print(f"Recorded run {run.run_id}", markup=False)

        return {
            "success": True,
            "object_type": "scenario_report",
            "data": report.to_dict(),
            "timestamp": datetime.now().isoformat(),
        }


class CircuitManager:
    """Handles export-circuits."""

    @classmethod
    def register_cli(cls, parent_subparsers: argparse._SubParsersAction, parent_parser: argparse.ArgumentParser) -> None:
        parser = parent_subparsers.add_parser(
            "export-circuits",
            aliases=["export"],
            parents=[parent_parser],
            help="Write one OpenQASM 3 file per sweep point",
        )
        _add_experiment_arguments(parser, out_help="Directory for the .qasm files", sweep_flags=False)

    def __init__(self, args: argparse.Namespace):
        self.args = args

    def execute(self) -> Dict[str, Any]:
        config = load_experiment_config(self.args.config)
        files = export_circuits(config, self.args.out)
        return {
            "success": True,
            "object_type": "circuit_export",
            "data": {
                "scenario": config.name,
                "directory": str(files[0].parent) if files else None,
                "count": len(files),
                "files": [f.name for f in files],
            },
            "timestamp": datetime.now().isoformat(),
        }


class JarzynskiManager:
    """Handles jarzynski: the thermometry stage of a scenario on its own."""

    @classmethod
    def register_cli(cls, parent_subparsers: argparse._SubParsersAction, parent_parser: argparse.ArgumentParser) -> None:
        parser = parent_subparsers.add_parser(
            "jarzynski",
            aliases=["thermometry"],
            parents=[parent_parser],
            help="Estimate a temperature from J(T) = 1",
        )
        _add_experiment_arguments(parser)
        parser.add_argument("--search", nargs=2, type=float, metavar=("LOW_MK", "HIGH_MK"),
                            help="Override jarzynski.search_mk")

    def __init__(self, args: argparse.Namespace):
        self.args = args

    def execute(self) -> Dict[str, Any]:
        config = _load(self.args)
        changes = {"enabled": True}
        if self.args.search:
            changes["search_mk"] = tuple(self.args.search)
        config = dataclasses.replace(config, jarzynski=dataclasses.replace(config.jarzynski, **changes))

        app = get_config()
        workers = config.sweep.workers or app.get_workers()
        out_dir = ensure_writable(config.output_dir(app.get_output_root()))
        logger = RunLogger(config.name, _log_mode(self.args))
        report = _stage(logger, "jarzynski", _thermometry, config, out_dir, workers)
        report["scenario"] = config.name
        report["reference"] = dict(config.reference)
        return {
            "success": True,
            "object_type": "jarzynski_report",
            "data": report,
            "timestamp": datetime.now().isoformat(),
        }
