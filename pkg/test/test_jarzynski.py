"""Tests for temperatures, PDF mixing and J(T) = 1 root solving."""
import json
import math

import numpy as np
import pytest

from qworkstat.circuit_model import DRIVES
from qworkstat.constants import K_B_UEV_PER_MK
from qworkstat.errors import ArgumentError, DiagnosticError
from qworkstat.jarzynski import (FixedCurve, MixedPdfSpec, MixingCurve, Temperature, effective_temperature,
                                 ground_population, jarzynski_integral, jarzynski_terms, mix_pdfs,
                                 mixed_temperature, population_ratio, read_curve_csv, solve_bath_temperature,
                                 thermal_state, write_curve_csv, write_root_json)
from qworkstat.noise_channels import system_hamiltonian
from qworkstat.work_statistics import DeltaComb, GridDensity, tpm_work_pdf

OMEGA = 20.06


def thermal_pdf(temperature_mk: float) -> DeltaComb:
    h0 = system_hamiltonian(OMEGA)
    return tpm_work_pdf(thermal_state(h0, Temperature(temperature_mk)), h0, DRIVES["sqrt_x"], keep_zero=True)


def constructive_temperature(r: float, t0: float, t1: float) -> Temperature:
    """Mix the actual thermal density matrices and read the temperature off the populations."""
    h0 = system_hamiltonian(OMEGA)
    rho = r * thermal_state(h0, Temperature(t0)).matrix + (1 - r) * thermal_state(h0, Temperature(t1)).matrix
    p = np.real(np.diag(rho))
    return effective_temperature(OMEGA, p[0], p[1])


class TestTemperature:
    def test_zero_rejected(self):
        with pytest.raises(ArgumentError, match="non-zero"):
            Temperature(0.0)

    def test_beta(self):
        assert Temperature(100.0).beta == pytest.approx(1.0 / (K_B_UEV_PER_MK * 100.0))
        assert Temperature(math.inf).beta == 0.0
        assert Temperature.from_beta(0.0).value_mk == math.inf
        assert float(Temperature.from_beta(Temperature(-87.0).beta)) == pytest.approx(-87.0)

    def test_thermal_state_populations(self):
        rho = thermal_state(system_hamiltonian(OMEGA), Temperature(67.0))
        p = rho.populations()
        assert p[1] / p[0] == pytest.approx(population_ratio(OMEGA, 67.0))
        assert p[0] == pytest.approx(ground_population(OMEGA, 67.0))

    def test_negative_temperature_inverts_populations(self):
        p = thermal_state(system_hamiltonian(OMEGA), Temperature(-87.0)).populations()
        assert p[1] > p[0]

    def test_extreme_temperature_stays_finite(self):
        p = thermal_state(system_hamiltonian(OMEGA), Temperature(1e-3)).populations()
        assert p[0] == pytest.approx(1.0)

    def test_effective_temperature_round_trip(self):
        p0 = ground_population(OMEGA, 83.0)
        assert effective_temperature(OMEGA, p0, 1 - p0).value_mk == pytest.approx(83.0)
        assert effective_temperature(OMEGA, 0.5, 0.5).value_mk == math.inf


class TestMixing:
    @pytest.mark.parametrize("r", np.round(np.linspace(0.0, 1.0, 11), 10))
    def test_closed_form_matches_constructive_route(self, r):
        closed = mixed_temperature(float(r), 83.0, -87.0, OMEGA)
        constructive = constructive_temperature(float(r), 83.0, -87.0)
        if math.isinf(closed.value_mk) or math.isinf(constructive.value_mk):
            assert closed.beta == pytest.approx(constructive.beta, abs=1e-12)
        else:
            assert closed.value_mk == pytest.approx(constructive.value_mk, rel=1e-9)

    def test_endpoints(self):
        assert mixed_temperature(1.0, 83.0, -87.0, OMEGA).value_mk == 83.0
        assert mixed_temperature(0.0, 83.0, -87.0, OMEGA).value_mk == -87.0

    def test_weight_out_of_range(self):
        with pytest.raises(ArgumentError, match="mixing weight"):
            mixed_temperature(1.2, 83.0, -87.0, OMEGA)

    def test_mix_pdfs(self):
        cold, hot = thermal_pdf(83.0), thermal_pdf(-87.0)
        mixed, temp = mix_pdfs(MixedPdfSpec(cold, hot, 0.4, Temperature(83.0), Temperature(-87.0), OMEGA))
        assert np.allclose(mixed.weights, 0.4 * cold.weights + 0.6 * hot.weights)
        assert temp.value_mk == pytest.approx(mixed_temperature(0.4, 83.0, -87.0, OMEGA).value_mk)

    def test_mixing_needs_same_support(self):
        with pytest.raises(ArgumentError, match="same support"):
            MixedPdfSpec(DeltaComb([0.0], [1.0]), DeltaComb([1.0], [1.0]), 0.5, 83.0, -87.0, OMEGA)

    def test_weight_for_reproduces_temperature(self):
        curve = MixingCurve(thermal_pdf(83.0), thermal_pdf(-87.0), 83.0, -87.0, OMEGA)
        r = curve.weight_for(Temperature(150.0))
        assert mixed_temperature(r, 83.0, -87.0, OMEGA).value_mk == pytest.approx(150.0, rel=1e-9)

    def test_weight_for_outside_range(self):
        curve = MixingCurve(thermal_pdf(83.0), thermal_pdf(-87.0), 83.0, -87.0, OMEGA)
        with pytest.raises(ArgumentError, match="outside the range"):
            curve.weight_for(Temperature(40.0))


class TestJarzynskiIntegral:
    @pytest.mark.parametrize("temperature", [10.0, 67.0, 83.0, 290.0])
    def test_closed_qubit_exactness(self, temperature):
        assert abs(jarzynski_integral(thermal_pdf(temperature), temperature) - 1.0) < 1e-12

    def test_mixed_closed_pdfs_are_exact_at_emulated_temperature(self):
        curve = MixingCurve(thermal_pdf(83.0), thermal_pdf(-87.0), 83.0, -87.0, OMEGA)
        for temperature in (90.0, 150.0, 400.0):
            assert jarzynski_integral(curve.pdf_at(temperature), temperature) == pytest.approx(1.0, abs=1e-12)

    def test_grid_clipping_reports_mass(self):
        w = np.linspace(-100.0, 100.0, 2001)
        pdf = GridDensity(w, np.exp(-0.5 * (w / 30.0) ** 2) / (30.0 * np.sqrt(2 * np.pi)))
        terms = jarzynski_terms(pdf, 10.0)
        assert terms.clipped_mass > 0
        assert terms.mass == pytest.approx(1.0, abs=1e-3)

    def test_unnormalised_pdf_warns(self, caplog):
        jarzynski_terms(DeltaComb([0.0], [0.9]), 100.0)
        assert "sums to 0.900000" in caplog.text


class TestSolve:
    def test_closed_qubit_root_is_preparation_temperature(self):
        estimate = solve_bath_temperature(FixedCurve(thermal_pdf(67.0)), 33.5, 120.6)
        assert estimate.root_mk == pytest.approx(67.0, abs=0.1)
        assert estimate.bracket[0] <= estimate.root_mk <= estimate.bracket[1]
        assert len(estimate.curve) == 41

    def test_no_sign_change(self):
        with pytest.raises(DiagnosticError, match="does not change sign") as excinfo:
            solve_bath_temperature(FixedCurve(thermal_pdf(67.0)), 80.0, 120.0)
        assert len(excinfo.value.endpoints) == 2
        assert excinfo.value.curve

    def test_increasing_curve_is_rejected(self):
        # all work at +omega gives J(T) = exp(-omega / k_B T), rising with T
        with pytest.raises(DiagnosticError, match="not strictly decreasing"):
            solve_bath_temperature(FixedCurve(DeltaComb([OMEGA], [1.0])), 90.0, 400.0, curve_points=9)

    def test_range_validation(self):
        with pytest.raises(ArgumentError, match="one sign"):
            solve_bath_temperature(FixedCurve(thermal_pdf(67.0)), -10.0, 10.0)

    def test_worker_count_does_not_change_result(self):
        curve = FixedCurve(thermal_pdf(83.0))
        serial = solve_bath_temperature(curve, 41.5, 149.4)
        threaded = solve_bath_temperature(curve, 41.5, 149.4, workers=4)
        assert serial == threaded

    def test_curve_and_root_files(self, tmp_path):
        estimate = solve_bath_temperature(FixedCurve(thermal_pdf(83.0)), 41.5, 149.4, curve_points=11)
        curve_file = write_curve_csv(estimate.curve, tmp_path / "jarzynski_curve.csv")
        assert curve_file.read_text().splitlines()[0] == "T_mK,J"
        assert read_curve_csv(curve_file) == list(estimate.curve)
        root = json.loads(write_root_json(estimate, tmp_path / "root.json", curve_file.name).read_text())
        assert root["root_mK"] == pytest.approx(estimate.root_mk)
        assert root["curve_file"] == "jarzynski_curve.csv"
        assert root["curve_points"] == 11
