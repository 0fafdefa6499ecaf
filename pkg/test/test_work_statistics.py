"""Tests for work distributions, the characteristic-function sweep and its reconstruction."""
import numpy as np
import pytest

from qworkstat.circuit_model import DRIVES
from qworkstat.errors import ArgumentError, NumericalError
from qworkstat.linalg_core import HermitianOperator, QuantumState, basis_density, density_from_ket
from qworkstat.noise_channels import system_hamiltonian
from qworkstat.work_statistics import (CharFnSamples, DeltaComb, GridDensity, InterferometricSystem, SweepMode,
                                       char_fn_direct, correct_ancilla_damping, default_w_grid,
                                       detect_coherence_signature, extract_peaks, half_inverse_fourier, mean_work,
                                       quasiprob, read_char_fn_csv, read_comb_csv, read_density_csv,
                                       sweep_char_fn, synthesize_char_fn, tpm_work_pdf, u_grid, work_variance,
                                       write_char_fn_csv, write_comb_csv, write_density_csv)

from conftest import random_diagonal_density, random_hermitian, random_unitary

OMEGA = 20.06
DELTA_U = 0.013
NUM_POINTS = 900


def assert_weights(peaks, expected, tol=0.02):
    got = [p.weight for p in peaks]
    assert np.allclose(got, expected, rtol=0.0, atol=tol), f"peak weights {got}, expected {expected}"


def reconstruct(comb: DeltaComb, window: str = "none") -> GridDensity:
    samples = synthesize_char_fn(comb, u_grid(DELTA_U, num_points=NUM_POINTS))
    return half_inverse_fourier(samples, default_w_grid(OMEGA), window)


PEAKS = [-OMEGA, 0.0, OMEGA]
HALF_WIDTH = 0.5 * OMEGA


class TestDistributions:
    def test_comb_is_sorted(self):
        comb = DeltaComb([1.0, -1.0], [0.3, 0.7])
        assert list(comb.positions) == [-1.0, 1.0]
        assert comb.weight_at(-1.0) == pytest.approx(0.7)
        assert comb.is_proper()

    def test_comb_rejects_mismatch(self):
        with pytest.raises(ArgumentError, match="positions for"):
            DeltaComb([0.0], [0.5, 0.5])

    def test_grid_must_be_uniform(self):
        with pytest.raises(ArgumentError, match="uniformly spaced"):
            GridDensity([0.0, 1.0, 3.0], [0.0, 1.0, 0.0])

    def test_moments(self):
        comb = DeltaComb([0.0, 2.0], [0.5, 0.5])
        assert mean_work(comb) == pytest.approx(1.0)
        assert work_variance(comb) == pytest.approx(1.0)
        with pytest.raises(NumericalError, match="zero mass"):
            mean_work(DeltaComb([0.0], [0.0]))

    def test_char_fn_samples_validation(self):
        with pytest.raises(ArgumentError, match="start at 0"):
            CharFnSamples([0.1, 0.2], [1, 1])
        with pytest.raises(ArgumentError, match="uniform"):
            CharFnSamples([0.0, 0.1, 0.3], [1, 1, 1])


class TestExactStatistics:
    def test_ideal_two_peaks(self):
        pdf = tpm_work_pdf(basis_density("0"), system_hamiltonian(OMEGA), DRIVES["sqrt_x"])
        assert np.allclose(pdf.positions, [0.0, OMEGA])
        assert np.allclose(pdf.weights, [0.5, 0.5])
        assert pdf.is_proper()

    def test_thermal_three_peaks(self):
        rho = QuantumState(np.diag([0.97, 0.03]))
        pdf = tpm_work_pdf(rho, system_hamiltonian(OMEGA), DRIVES["sqrt_x"])
        assert pdf.weight_at(-OMEGA) == pytest.approx(0.015)
        assert pdf.weight_at(0.0) == pytest.approx(0.5)
        assert pdf.weight_at(OMEGA) == pytest.approx(0.485)

    def test_keep_zero(self):
        h0 = system_hamiltonian(OMEGA)
        pdf = tpm_work_pdf(basis_density("0"), h0, DRIVES["identity"], keep_zero=True)
        assert len(pdf.positions) == 3
        bare = tpm_work_pdf(basis_density("0"), h0, DRIVES["identity"])
        assert len(bare.positions) == 1 and bare.weight_at(0.0) == pytest.approx(1.0)

    @pytest.mark.parametrize("instance", range(50))
    def test_commuting_state_collapses_quasiprob(self, instance):
        rng = np.random.default_rng(1000 + instance)
        dim = 2 ** (1 + instance % 3)
        h0 = HermitianOperator(np.diag(np.sort(rng.uniform(-30, 30, dim))).astype(complex))
        drive = random_unitary(rng, dim)
        rho = random_diagonal_density(rng, dim)
        q = quasiprob(rho, h0, drive)
        assert q.max_imaginary() < 1e-10
        pdf = tpm_work_pdf(rho, h0, drive, keep_zero=True)
        for w, p in pdf.as_pairs():
            mask = np.abs(q.work_values() - w) <= 1e-9
            assert abs(np.sum(q.entries[mask]).real - p) < 1e-10

    def test_quasiprob_marginals(self, rng):
        h0 = random_hermitian(rng, 4)
        drive = random_unitary(rng, 4)
        rho = density_from_ket(rng.normal(size=4) + 1j * rng.normal(size=4))
        q = quasiprob(rho, h0, drive)
        assert abs(q.total - 1.0) < 1e-10
        assert np.all(q.final_marginal().real >= -1e-10)
        for u in (0.0, 0.3, -0.7):
            assert abs(q.char_fn(u) - char_fn_direct(rho, h0, drive, u)) < 1e-10

    def test_coherent_state_has_imaginary_quasiprob(self):
        q = quasiprob(density_from_ket([1, 1]), system_hamiltonian(OMEGA), DRIVES["sqrt_x"])
        assert q.max_imaginary() > 0.1

    def test_char_fn_at_zero_is_one(self, rng):
        h0 = random_hermitian(rng, 4)
        rho = density_from_ket(rng.normal(size=4))
        assert abs(char_fn_direct(rho, h0, random_unitary(rng, 4), 0.0) - 1.0) < 1e-12


class TestSweep:
    def test_u_grid(self):
        assert len(u_grid(DELTA_U, num_points=NUM_POINTS)) == NUM_POINTS
        assert u_grid(0.5, u_max=2.0).tolist() == [0.0, 0.5, 1.0, 1.5, 2.0]
        with pytest.raises(ArgumentError, match="at least two points"):
            u_grid(0.5, num_points=1)
        with pytest.raises(ArgumentError, match="delta_u"):
            u_grid(0.0, num_points=4)

    def test_exact_sweep_matches_trace_formula(self):
        system = InterferometricSystem(system_hamiltonian(OMEGA), DRIVES["sqrt_x"], QuantumState(np.diag([0.9, 0.1])))
        samples = sweep_char_fn(system, DELTA_U, num_points=40)
        expected = [system.char_fn(u) for u in samples.u]
        assert np.max(np.abs(samples.values - expected)) < 1e-10
        assert samples.shots == 0

    def test_ancilla_damping_factor(self):
        h0, drive, rho = system_hamiltonian(OMEGA), DRIVES["sqrt_x"], basis_density("0")
        clean = sweep_char_fn(InterferometricSystem(h0, drive, rho), DELTA_U, num_points=60)
        damped = sweep_char_fn(InterferometricSystem(h0, drive, rho, ancilla_excited=0.01), DELTA_U, num_points=60)
        assert np.max(np.abs(damped.values - 0.98 * clean.values)) < 1e-10
        restored = correct_ancilla_damping(damped, 0.01)
        assert np.max(np.abs(restored.values - clean.values)) < 1e-10

    def test_damping_at_half_is_singular(self):
        samples = CharFnSamples([0.0, 0.1], [1.0, 1.0])
        with pytest.raises(NumericalError):
            correct_ancilla_damping(samples, 0.5)

    def test_sampled_sweep_is_worker_independent(self):
        system = InterferometricSystem(system_hamiltonian(OMEGA), DRIVES["sqrt_x"], basis_density("0"))
        mode = SweepMode.sampled(256, 5)
        serial = sweep_char_fn(system, DELTA_U, num_points=30, mode=mode)
        threaded = sweep_char_fn(system, DELTA_U, num_points=30, mode=mode, workers=4)
        assert np.array_equal(serial.values, threaded.values)
        assert serial.shots == 256 and serial.seed == 5
        other = sweep_char_fn(system, DELTA_U, num_points=30, mode=SweepMode.sampled(256, 6))
        assert not np.array_equal(serial.values, other.values)

    def test_sampled_sweep_converges_to_exact(self):
        system = InterferometricSystem(system_hamiltonian(OMEGA), DRIVES["sqrt_x"], QuantumState(np.diag([0.8, 0.2])))
        exact = sweep_char_fn(system, DELTA_U, num_points=12)
        sampled = sweep_char_fn(system, DELTA_U, num_points=12, mode=SweepMode.sampled(200_000, 3))
        assert np.max(np.abs(exact.values.imag)) > 0.25
        assert np.max(np.abs(sampled.values.real - exact.values.real)) < 0.015
        assert np.max(np.abs(sampled.values.imag - exact.values.imag)) < 0.015

    def test_g_zero_is_one_up_to_shot_noise(self):
        system = InterferometricSystem(system_hamiltonian(OMEGA), DRIVES["sqrt_x"], basis_density("0"))
        samples = sweep_char_fn(system, DELTA_U, num_points=2, mode=SweepMode.sampled(1024, 0))
        assert abs(samples.values[0] - 1.0) < 5 / np.sqrt(1024)

    def test_sweep_mode_validation(self):
        with pytest.raises(ArgumentError, match="at least one shot"):
            SweepMode.sampled(0, 1)
        assert SweepMode.exact().name == "exact"


class TestReconstruction:
    def test_two_peak_ideal(self):
        density = reconstruct(DeltaComb([0.0, OMEGA], [0.5, 0.5]))
        peaks = extract_peaks(density, PEAKS, HALF_WIDTH)
        assert_weights(peaks, [0.0, 0.5, 0.5])

    def test_single_delta_at_zero(self):
        samples = CharFnSamples(u_grid(DELTA_U, num_points=NUM_POINTS), np.ones(NUM_POINTS))
        density = half_inverse_fourier(samples, default_w_grid(OMEGA))
        (peak,) = extract_peaks(density, [0.0], HALF_WIDTH)
        assert peak.weight == pytest.approx(1.0, abs=0.02)

    @pytest.mark.parametrize("weights", [(0.2, 0.5, 0.3), (0.015, 0.5, 0.485), (0.1, 0.8, 0.1)])
    @pytest.mark.parametrize("window", ["none", "hann"])
    def test_comb_weights_recovered(self, weights, window):
        density = reconstruct(DeltaComb(PEAKS, weights), window)
        assert_weights(extract_peaks(density, PEAKS, HALF_WIDTH), weights)

    def test_unknown_window(self):
        samples = CharFnSamples([0.0, 0.1], [1.0, 1.0])
        with pytest.raises(ArgumentError, match="unknown window"):
            half_inverse_fourier(samples, [0.0, 1.0], "kaiser")

    def test_overlapping_windows_rejected(self):
        density = reconstruct(DeltaComb([0.0], [1.0]))
        with pytest.raises(ArgumentError, match="overlap"):
            extract_peaks(density, [0.0, 5.0], HALF_WIDTH)

    def test_window_outside_grid_rejected(self):
        density = reconstruct(DeltaComb([0.0], [1.0]))
        with pytest.raises(ArgumentError, match="leave the work grid"):
            extract_peaks(density, [2.3 * OMEGA], HALF_WIDTH)


class TestCoherence:
    def _density(self, rho: QuantumState) -> GridDensity:
        system = InterferometricSystem(system_hamiltonian(OMEGA), DRIVES["sqrt_x"], rho)
        grid = u_grid(DELTA_U, num_points=NUM_POINTS)
        samples = CharFnSamples(grid, [system.char_fn(u) for u in grid])
        return half_inverse_fourier(samples, default_w_grid(OMEGA))

    def test_ground_state_is_symmetric(self):
        report = detect_coherence_signature(self._density(basis_density("0")), PEAKS, HALF_WIDTH)
        assert report.symmetric
        assert report.threshold == 0.1

    def test_coherent_state_breaks_symmetry(self):
        report = detect_coherence_signature(self._density(density_from_ket([1, 1])), PEAKS, HALF_WIDTH)
        assert not report.symmetric
        assert report.asymmetry > 0.1

    def test_swept_circuit_keeps_the_signature(self):
        system = InterferometricSystem(system_hamiltonian(OMEGA), DRIVES["sqrt_x"], density_from_ket([1, 1]))
        density = half_inverse_fourier(sweep_char_fn(system, DELTA_U, num_points=NUM_POINTS), default_w_grid(OMEGA))
        assert not detect_coherence_signature(density, PEAKS, HALF_WIDTH).symmetric
        ground = InterferometricSystem(system_hamiltonian(OMEGA), DRIVES["sqrt_x"], basis_density("0"))
        density = half_inverse_fourier(sweep_char_fn(ground, DELTA_U, num_points=NUM_POINTS), default_w_grid(OMEGA))
        assert_weights(extract_peaks(density, PEAKS, HALF_WIDTH), [0.0, 0.5, 0.5])


class TestCsv:
    def test_files_reload(self, tmp_path):
        grid = u_grid(DELTA_U, num_points=8)
        samples = CharFnSamples(grid, np.exp(1j * grid), shots=64, seed=3)
        loaded = read_char_fn_csv(write_char_fn_csv(samples, tmp_path / "g.csv"))
        assert np.array_equal(loaded.values, samples.values) and loaded.shots == 64

        density = GridDensity([0.0, 1.0, 2.0], [0.1, 0.2, 0.3])
        assert np.array_equal(read_density_csv(write_density_csv(density, tmp_path / "d.csv")).density,
                              density.density)

        comb = DeltaComb([-1.0, 1.0], [0.25, 0.75])
        assert read_comb_csv(write_comb_csv(comb, tmp_path / "c.csv")).as_pairs() == comb.as_pairs()

    def test_headers(self, tmp_path):
        path = write_char_fn_csv(CharFnSamples([0.0, 0.5], [1.0, 0.5j]), tmp_path / "g.csv")
        assert path.read_text().splitlines()[0] == "u,re_g,im_g,shots"
        path = write_density_csv(GridDensity([0.0, 1.0], [0.0, 1.0]), tmp_path / "d.csv")
        assert path.read_text().splitlines()[0] == "w,density"

    def test_wrong_column_count(self, tmp_path):
        path = write_density_csv(GridDensity([0.0, 1.0], [0.0, 1.0]), tmp_path / "d.csv")
        with pytest.raises(ArgumentError, match="cannot read"):
            read_comb_csv(tmp_path / "missing.csv")
        with pytest.raises(ArgumentError, match="expected 4"):
            read_char_fn_csv(path)
