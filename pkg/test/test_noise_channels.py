"""Tests for Kraus channels, the noise model and the spectator bath."""
import math

import numpy as np
import pytest

from qworkstat.errors import ArgumentError, CapacityError
from qworkstat.linalg_core import PAULI_Z, basis_density, density_from_ket, expectation
from qworkstat.noise_channels import (BathSpec, KrausChannel, NoiseModel, QubitNoise, apply_channel,
                                      bit_flip_channel, build_bath_hamiltonian, depolarizing_channel,
                                      depolarizing_from_fidelity, system_hamiltonian, thermal_relaxation_channel,
                                      verify_cptp)


def assert_cptp(channel: KrausChannel):
    report = verify_cptp(channel)
    assert report.ok, f"{channel.label}: max violation {report.max_violation:.3e}"
    assert report.max_violation < 1e-10


class TestDepolarizing:
    def test_full_depolarizing_gives_maximally_mixed(self):
        out = apply_channel(density_from_ket([1, 1]), depolarizing_channel(1.0, 1), (0,))
        assert np.allclose(out.matrix, np.eye(2) / 2, atol=1e-12)

    def test_two_qubit_full_depolarizing(self):
        out = apply_channel(basis_density("01"), depolarizing_channel(1.0, 2), (0, 1))
        assert np.allclose(out.matrix, np.eye(4) / 4, atol=1e-12)

    def test_bloch_vector_shrinks_by_one_minus_p(self):
        out = apply_channel(basis_density("0"), depolarizing_channel(0.1, 1), (0,))
        assert expectation(out, PAULI_Z) == pytest.approx(0.9, abs=1e-12)

    @pytest.mark.parametrize("p", [-0.1, 1.5])
    def test_probability_out_of_range(self, p):
        with pytest.raises(ArgumentError, match="must lie in"):
            depolarizing_channel(p, 1)

    def test_only_one_or_two_qubits(self):
        with pytest.raises(ArgumentError, match="1 or 2 qubits"):
            depolarizing_channel(0.1, 3)

    def test_from_fidelity(self):
        assert depolarizing_from_fidelity(1.0, 1) == 0.0
        assert depolarizing_from_fidelity(0.985, 2) == pytest.approx(16 / 15 * 0.015)
        with pytest.raises(ArgumentError):
            depolarizing_from_fidelity(0.0, 1)


class TestThermalRelaxation:
    def test_relaxes_to_ground(self):
        channel = thermal_relaxation_channel(10.0, 15.0, 1000.0, 0.0)
        out = apply_channel(density_from_ket([0.6, 0.8]), channel, (0,))
        assert np.allclose(out.matrix, basis_density("0").matrix, atol=1e-6)

    @pytest.mark.parametrize("t,p_exc", [(0.5, 0.0), (3.0, 0.02), (40.0, 0.1)])
    def test_excited_population_decay(self, t, p_exc):
        t1 = 38.0
        out = apply_channel(basis_density("1"), thermal_relaxation_channel(t1, 30.0, t, p_exc), (0,))
        decay = math.exp(-t / t1)
        assert out.populations()[1] == pytest.approx(decay + (1 - decay) * p_exc, abs=1e-10)

    def test_coherence_decays_with_t2(self):
        t1, t2, t = 100.0, 60.0, 25.0
        out = apply_channel(density_from_ket([1, 1]), thermal_relaxation_channel(t1, t2, t, 0.0), (0,))
        assert abs(out.matrix[0, 1]) == pytest.approx(0.5 * math.exp(-t / t2), abs=1e-10)

    def test_t2_bound(self):
        with pytest.raises(ArgumentError, match="exceeds"):
            thermal_relaxation_channel(10.0, 25.0, 1.0, 0.0)

    def test_negative_duration(self):
        with pytest.raises(ArgumentError, match="duration"):
            thermal_relaxation_channel(10.0, 10.0, -1.0, 0.0)


class TestCptp:
    @pytest.mark.parametrize("p", np.linspace(0.0, 0.1, 5))
    @pytest.mark.parametrize("ratio", np.linspace(0.0, 3.0, 4))
    def test_channel_grid(self, p, ratio):
        t1 = 50.0
        assert_cptp(depolarizing_channel(float(p), 1))
        assert_cptp(depolarizing_channel(float(p), 2))
        assert_cptp(thermal_relaxation_channel(t1, 80.0, ratio * t1, float(p)))
        assert_cptp(bit_flip_channel(float(p)))

    def test_documented_examples(self):
        assert verify_cptp(depolarizing_channel(0.05, 1)).ok
        assert verify_cptp(thermal_relaxation_channel(100.0, 150.0, 1.0, 0.02)).ok

    def test_non_trace_preserving_detected(self):
        report = verify_cptp(KrausChannel((0.5 * np.eye(2),)))
        assert not report.trace_preserving
        assert report.max_violation == pytest.approx(0.75)

    def test_compose(self):
        both = bit_flip_channel(0.2).compose(depolarizing_channel(0.1, 1))
        assert_cptp(both)


class TestNoiseModel:
    def test_qubit_noise_validation(self):
        with pytest.raises(ArgumentError, match="unknown gate class"):
            QubitNoise(depolarizing={"measure": 0.1})
        with pytest.raises(ArgumentError, match="rows must sum to 1"):
            QubitNoise(confusion=((0.9, 0.2), (0.0, 1.0)))
        with pytest.raises(ArgumentError, match="exceeds"):
            QubitNoise(t1_us=10.0, t2_us=30.0)

    def test_round_trip_through_dict(self):
        model = NoiseModel.from_dict({
            "system": {"depolarizing": {"controlled": 0.02}, "t1_us": 38.0, "t2_us": 30.0},
            "ancilla": {"confusion": [[0.98, 0.02], [0.03, 0.97]]},
            "gate_durations_us": {"controlled": 0.5},
        })
        again = NoiseModel.from_dict(model.to_dict())
        assert again.for_role("system").t1_us == 38.0
        assert again.for_role("ancilla").confusion == ((0.98, 0.02), (0.03, 0.97))
        assert again.duration("controlled") == 0.5
        assert again.for_role("bath") is None

    def test_fidelities_become_depolarizing_probabilities(self):
        noise = QubitNoise.from_dict({"fidelity": {"single": 0.9995, "controlled": 0.985}, "t1_us": 38.0})
        assert noise.error("single") == pytest.approx(4 / 3 * 0.0005)
        assert noise.error("controlled") == pytest.approx(16 / 15 * 0.015)
        assert noise.error("delay") == 0.0

    def test_fidelity_table_validation(self):
        with pytest.raises(ArgumentError, match="both a depolarizing probability and a fidelity"):
            QubitNoise.from_dict({"depolarizing": {"single": 0.01}, "fidelity": {"single": 0.99}})
        with pytest.raises(ArgumentError, match="unknown gate class"):
            QubitNoise.from_dict({"fidelity": {"measure": 0.99}})
        with pytest.raises(ArgumentError):
            QubitNoise.from_dict({"fidelity": {"single": 0.1}})

    def test_delay_duration_is_hbar_u(self):
        assert NoiseModel().duration("delay", 10.0) == pytest.approx(6.582119569e-3)

    def test_two_qubit_error_takes_larger_probability(self):
        model = NoiseModel(qubits={
            "system": QubitNoise(depolarizing={"controlled": 0.01}),
            "ancilla": QubitNoise(depolarizing={"controlled": 0.03}),
        })
        channels = model.gate_channels("controlled", (1, 0), ("system", "ancilla"))
        assert len(channels) == 1
        channel, targets = channels[0]
        assert targets == (1, 0)
        assert channel is depolarizing_channel(0.03, 2)

    def test_bath_qubits_are_noiseless(self):
        model = NoiseModel(qubits={"system": QubitNoise(t1_us=10.0, t2_us=10.0)},
                           gate_durations_us={"single": 0.1})
        channels = model.gate_channels("single", (1,), ("system", "bath", "ancilla"))
        assert [targets for _, targets in channels] == [(0,)]

    def test_preparation_bit_flip(self):
        model = NoiseModel(qubits={"system": QubitNoise(initial_excited=0.05)})
        (channel, targets), = model.preparation_channels(("system", "ancilla"))
        assert targets == (0,)
        out = apply_channel(basis_density("0"), channel, (0,))
        assert out.populations()[1] == pytest.approx(0.05)


class TestBath:
    def test_uncoupled_hamiltonian_is_diagonal(self):
        spec = BathSpec(1, (20.0,), (0.0,))
        h = build_bath_hamiltonian(20.0, spec).matrix
        assert np.allclose(h, np.diag([-20.0, 0.0, 0.0, 20.0]))

    def test_exchange_coupling_splits_resonant_pair(self):
        spec = BathSpec(1, (20.0,), (0.2,))
        values = np.linalg.eigvalsh(build_bath_hamiltonian(20.0, spec).matrix)
        assert np.allclose(values, [-20.0, -0.2, 0.2, 20.0])

    def test_system_ground_state_is_zero_index(self):
        h = system_hamiltonian(20.0).matrix
        assert h[0, 0] == pytest.approx(-10.0)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            build_bath_hamiltonian(20.0, BathSpec(7, (20.0,) * 7, (0.1,) * 7))

    def test_spec_validation(self):
        with pytest.raises(ArgumentError, match="expected 2 frequencies"):
            BathSpec(2, (20.0,), (0.1,))
        with pytest.raises(ArgumentError, match="non-zero"):
            BathSpec(1, (20.0,), (0.1,), temperature_mk=0.0)

    def test_strong_coupling_warns(self, caplog):
        BathSpec(1, (20.0,), (5.0,))
        assert "not weak" in caplog.text
