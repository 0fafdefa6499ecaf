"""
Experiment configuration: one TOML file per scenario.

A config is either a path to a TOML file or the name of a bundled preset under
``defaults/scenarios``. Energies given relative to the qubit splitting
(bath frequencies and couplings, work-grid span, peak positions and widths) are
ratios to omega; temperatures are in mK. See config.example.toml for every key.
"""
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Union

import toml

from .constants import ghz_to_uev
from .errors import ArgumentError, ConfigError
from .noise_channels import NoiseModel
from .work_statistics import WINDOWS

SCENARIO_DIR = Path(__file__).parent / "defaults" / "scenarios"

# short names accepted wherever a preset name is
PRESET_ALIASES = {
    "closed-ideal": "fig2a-closed-ideal",
    "closed-coherent": "fig2a-inset-coherent",
    "open-bath": "fig2b-open-bath",
    "jarzynski-sweep": "fig3-jarzynski-sweep",
    "noisy-emulation": "fig4-noisy-emulation",
}

PREPARATIONS = ("ground", "excited", "coherent-plus", "thermal")
DRIVES = ("sqrt_x", "x", "hadamard", "identity")
MODES = ("exact", "shots")


def _reject_unknown(section: str, data: Mapping, known: set):
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")


@dataclass(frozen=True)
class SystemSection:
    frequency_ghz: float = 4.85
    drive: str = "sqrt_x"
    preparation: str = "ground"
    temperature_mk: Optional[float] = None
    ancilla_excited: float = 0.0
    damping_correction: bool = False

    def __post_init__(self):
        if not self.frequency_ghz > 0:
            raise ConfigError(f"system.frequency_ghz must be > 0, got {self.frequency_ghz}")
        if self.drive not in DRIVES:
            raise ConfigError(f"unknown drive '{self.drive}', expected one of {DRIVES}")
        if self.preparation not in PREPARATIONS:
            raise ConfigError(f"unknown preparation '{self.preparation}', expected one of {PREPARATIONS}")
        if self.preparation == "thermal" and not self.temperature_mk:
            raise ConfigError("a thermal preparation needs a non-zero system.temperature_mk")
        if not 0.0 <= self.ancilla_excited < 0.5:
            raise ConfigError(f"system.ancilla_excited must lie in [0, 0.5), got {self.ancilla_excited}")


@dataclass(frozen=True)
class SweepSection:
    num_points: int = 900
    delta_u: float = 0.013
    mode: str = "exact"
    shots: int = 1000
    seed: int = 0
    workers: Optional[int] = None

    def __post_init__(self):
        if self.num_points < 2:
            raise ConfigError(f"sweep.num_points must be >= 2, got {self.num_points}")
        if not self.delta_u > 0:
            raise ConfigError(f"sweep.delta_u must be > 0, got {self.delta_u}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown sweep mode '{self.mode}', expected one of {MODES}")
        if self.mode == "shots" and self.shots < 1:
            raise ConfigError("shots mode needs sweep.shots >= 1")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("sweep.workers must be >= 1")


@dataclass(frozen=True)
class ReconstructionSection:
    w_span: float = 2.5
    w_points: int = 1001
    window: str = "none"
    peaks: tuple = (-1.0, 0.0, 1.0)
    peak_half_width: float = 0.5
    coherence_threshold: float = 0.1

    def __post_init__(self):
        if self.window not in WINDOWS:
            raise ConfigError(f"unknown window '{self.window}', expected one of {WINDOWS}")
        if not self.w_span > 0 or self.w_points < 2:
            raise ConfigError("reconstruction needs w_span > 0 and w_points >= 2")
        if not self.peak_half_width > 0:
            raise ConfigError("reconstruction.peak_half_width must be > 0")
        object.__setattr__(self, "peaks", tuple(float(p) for p in self.peaks))


@dataclass(frozen=True)
class BathSection:
    frequency_ratios: tuple = ()
    coupling_ratios: tuple = ()
    temperature_mk: float = 150.0
    equilibrate: bool = True
    baseline: bool = True

    def __post_init__(self):
        object.__setattr__(self, "frequency_ratios", tuple(float(f) for f in self.frequency_ratios))
        object.__setattr__(self, "coupling_ratios", tuple(float(g) for g in self.coupling_ratios))
        if len(self.frequency_ratios) != len(self.coupling_ratios):
            raise ConfigError("bath.frequency_ratios and bath.coupling_ratios must have the same length")
        if self.frequency_ratios and not self.temperature_mk:
            raise ConfigError("bath.temperature_mk must be non-zero")

    @property
    def enabled(self) -> bool:
        return bool(self.frequency_ratios)


@dataclass(frozen=True)
class JarzynskiSection:
    """Thermometry stage. Without ``hot_temperature_mk`` the scenario's own PDF is used as is."""
    enabled: bool = False
    cold_temperature_mk: Optional[float] = None
    hot_temperature_mk: Optional[float] = None
    search_mk: Optional[tuple] = None
    curve_points: int = 41
    resolution_mk: float = 0.1
    pdf_source: str = "reconstructed"

    def __post_init__(self):
        if self.pdf_source not in ("reconstructed", "exact"):
            raise ConfigError(f"jarzynski.pdf_source must be 'reconstructed' or 'exact', got '{self.pdf_source}'")
        if self.search_mk is not None:
            if len(self.search_mk) != 2:
                raise ConfigError("jarzynski.search_mk must be [low, high]")
            object.__setattr__(self, "search_mk", (float(self.search_mk[0]), float(self.search_mk[1])))
        if self.hot_temperature_mk is not None and not self.cold_temperature_mk:
            raise ConfigError("jarzynski.hot_temperature_mk needs jarzynski.cold_temperature_mk")
        if self.curve_points < 2 or self.resolution_mk <= 0:
            raise ConfigError("jarzynski needs curve_points >= 2 and resolution_mk > 0")

    @property
    def mixing(self) -> bool:
        return self.hot_temperature_mk is not None


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    description: str = ""
    system: SystemSection = field(default_factory=SystemSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    reconstruction: ReconstructionSection = field(default_factory=ReconstructionSection)
    bath: BathSection = field(default_factory=BathSection)
    noise: Optional[NoiseModel] = None
    jarzynski: JarzynskiSection = field(default_factory=JarzynskiSection)
    output_directory: Optional[str] = None
    reference: Mapping[str, Any] = field(default_factory=dict)

    @property
    def omega(self) -> float:
        """Qubit splitting in ueV."""
        return ghz_to_uev(self.system.frequency_ghz)

    @property
    def u_max(self) -> float:
        return (self.sweep.num_points - 1) * self.sweep.delta_u

    def output_dir(self, root: Union[str, Path] = "runs") -> Path:
        if self.output_directory:
            return Path(self.output_directory)
        return Path(root) / self.name

    def with_overrides(self, seed: Optional[int] = None, out: Optional[str] = None, mode: Optional[str] = None,
                       shots: Optional[int] = None, workers: Optional[int] = None) -> "ExperimentConfig":
        """Apply command-line flags; None leaves a value as configured."""
        sweep_changes = {k: v for k, v in (("seed", seed), ("mode", mode), ("shots", shots), ("workers", workers))
                         if v is not None}
        config = self
        if sweep_changes:
            config = dataclasses.replace(config, sweep=dataclasses.replace(config.sweep, **sweep_changes))
        if out is not None:
            config = dataclasses.replace(config, output_directory=str(out))
        return config

    def to_dict(self) -> dict:
        data = {
            "scenario": {"name": self.name, "description": self.description},
            "system": dataclasses.asdict(self.system),
            "sweep": dataclasses.asdict(self.sweep),
            "reconstruction": dataclasses.asdict(self.reconstruction),
            "bath": dataclasses.asdict(self.bath),
            "jarzynski": dataclasses.asdict(self.jarzynski),
            "output": {"directory": self.output_directory},
            "reference": dict(self.reference),
        }
        if self.noise is not None:
            data["noise"] = self.noise.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], default_name: str = "scenario") -> "ExperimentConfig":
        sections = {
            "scenario": {"name", "description"},
            "system": {f.name for f in dataclasses.fields(SystemSection)},
            "sweep": {f.name for f in dataclasses.fields(SweepSection)},
            "reconstruction": {f.name for f in dataclasses.fields(ReconstructionSection)},
            "bath": {f.name for f in dataclasses.fields(BathSection)},
            "jarzynski": {f.name for f in dataclasses.fields(JarzynskiSection)},
            "output": {"directory"},
            "noise": None,
            "reference": None,
        }
        unknown = set(data) - set(sections)
        if unknown:
            raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
        for section, known in sections.items():
            if known is not None and section in data:
                _reject_unknown(section, data[section], known)

        try:
            scenario = data.get("scenario", {})
            noise_data = data.get("noise")
            return cls(
                name=scenario.get("name", default_name),
                description=scenario.get("description", ""),
                system=SystemSection(**data.get("system", {})),
                sweep=SweepSection(**data.get("sweep", {})),
                reconstruction=ReconstructionSection(**data.get("reconstruction", {})),
                bath=BathSection(**data.get("bath", {})),
                noise=NoiseModel.from_dict(noise_data) if noise_data else None,
                jarzynski=JarzynskiSection(**data.get("jarzynski", {})),
                output_directory=data.get("output", {}).get("directory"),
                reference=dict(data.get("reference", {})),
            )
        except ArgumentError as e:
            raise ConfigError(f"invalid configuration: {e}") from e
        except TypeError as e:
            raise ConfigError(f"invalid configuration value: {e}") from e


def list_presets() -> list[dict]:
    """Bundled presets with their descriptions and short aliases, sorted by name."""
    aliases = {name: alias for alias, name in PRESET_ALIASES.items()}
    presets = []
    for path in sorted(SCENARIO_DIR.glob("*.toml")):
        data = toml.load(path)
        presets.append({
            "name": path.stem,
            "alias": aliases.get(path.stem),
            "description": data.get("scenario", {}).get("description", ""),
            "path": str(path),
        })
    return presets


def load_experiment_config(path_or_preset: Union[str, Path]) -> ExperimentConfig:
    """Read a config file, or a bundled preset by name."""
    path = Path(path_or_preset)
    if not path.exists():
        name = PRESET_ALIASES.get(str(path_or_preset), str(path_or_preset))
        preset = SCENARIO_DIR / f"{name}.toml"
        if not preset.exists():
            names = ", ".join(p["name"] for p in list_presets())
            raise ConfigError(f"no config file or preset named '{path_or_preset}' (presets: {names})")
        path = preset
    try:
        data = toml.load(path)
    except (OSError, toml.TomlDecodeError) as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    return ExperimentConfig.from_dict(data, default_name=path.stem)


def ensure_writable(directory: Path) -> Path:
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        marker = directory / ".write-check"
        marker.touch()
        marker.unlink()
    except OSError as e:
        raise ConfigError(f"output directory {directory} is not writable: {e}") from e
    return directory
