"""Physical constants and unit conventions.

Energies are in ueV, delay times u in 1/ueV (hbar = 1), temperatures in mK and
wall-clock gate times in microseconds.
"""

# Boltzmann constant, ueV per mK
K_B_UEV_PER_MK = 0.08617333262

# Planck constant, ueV per GHz (4.85 GHz -> 20.06 ueV)
H_UEV_PER_GHZ = 4.1357

# hbar in ueV * us: converts a delay u [1/ueV] into wall-clock microseconds
HBAR_UEV_US = 6.582119569e-4

# Dense simulation limit
MAX_QUBITS = 8

# Eigenvalues closer than this are one energy level
ENERGY_CLUSTER_TOL = 1e-9


def ghz_to_uev(frequency_ghz: float) -> float:
    """Convert a transition frequency in GHz to an energy in ueV."""
    return frequency_ghz * H_UEV_PER_GHZ
