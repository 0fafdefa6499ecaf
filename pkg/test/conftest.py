"""Shared fixtures: isolated application config and seeded random operators."""
import dataclasses

import numpy as np
import pytest
from scipy.stats import unitary_group

from qworkstat.config import reset_config
from qworkstat.database import database_proxy
from qworkstat.experiment_config import ExperimentConfig, load_experiment_config
from qworkstat.linalg_core import HermitianOperator, QuantumState
from qworkstat.terminal_output import terminal_output


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Every test writes runs under its own tmp dir and records into an in-memory registry."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("QWORKSTAT_OUTPUT_ROOT", str(tmp_path / "runs"))
    monkeypatch.setenv("QWORKSTAT_DATABASE_URL", "sqlite:///:memory:")
    monkeypatch.delenv("QWORKSTAT_RECORD", raising=False)
    monkeypatch.delenv("QWORKSTAT_WORKERS", raising=False)
    reset_config()
    terminal_output.reset()
    terminal_output.configure("capture")
    database_proxy.initialize(None)
    yield
    reset_config()
    terminal_output.reset()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_unitary(rng, dim: int) -> np.ndarray:
    return unitary_group.rvs(dim, random_state=rng)


def random_hermitian(rng, dim: int, scale: float = 20.0) -> HermitianOperator:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return HermitianOperator(0.5 * scale * (a + a.conj().T) / np.sqrt(dim))


def random_density(rng, dim: int, labels: tuple = ()) -> QuantumState:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return QuantumState(rho / np.trace(rho), labels)


def random_diagonal_density(rng, dim: int) -> QuantumState:
    p = rng.random(dim)
    return QuantumState(np.diag(p / p.sum()).astype(complex))


@pytest.fixture
def unitary_factory(rng):
    return lambda dim: random_unitary(rng, dim)


@pytest.fixture
def hermitian_factory(rng):
    return lambda dim, scale=20.0: random_hermitian(rng, dim, scale)


@pytest.fixture
def density_factory(rng):
    return lambda dim, labels=(): random_density(rng, dim, labels)


def small_preset(name: str, num_points: int = 48, **sweep) -> ExperimentConfig:
    """A bundled preset with a short sweep, for tests that only need the pipeline to run."""
    config = load_experiment_config(name)
    return dataclasses.replace(config, sweep=dataclasses.replace(config.sweep, num_points=num_points, **sweep))
