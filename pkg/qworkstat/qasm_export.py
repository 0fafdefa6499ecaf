"""
OpenQASM 3 rendering of interferometric circuits.

Fixed gates map onto stdgates.inc. Controlled unitaries and delay evolutions are
written as opaque gates over their control and targets, with the full matrix in
a ``#pragma unitary`` line so a consumer can rebuild them.
"""
import logging
from io import StringIO
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .circuit_model import Basis, CircuitSpec, Gate, GateKind

log = logging.getLogger(__name__)

_STD_NAMES = {
    GateKind.HADAMARD: "h",
    GateKind.PAULI_X: "x",
    GateKind.SQRT_X: "sx",
    GateKind.PHASE_DAG: "sdg",
}


def _number(z: complex) -> str:
    re, im = float(np.real(z)), float(np.imag(z))
    if im == 0.0:
        return format(re, ".12g")
    sign = "+" if im >= 0 else "-"
    return f"{re:.12g}{sign}{abs(im):.12g}im"


def _matrix_literal(m: np.ndarray) -> str:
    rows = ("[" + ", ".join(_number(z) for z in row) + "]" for row in m)
    return "[" + ", ".join(rows) + "]"


def _custom_name(gate: Gate, index: int) -> str:
    return f"{gate.label or gate.kind.value}_{index}"


def _operands(gate: Gate) -> str:
    return ", ".join(f"q[{q}]" for q in gate.qubits)


def circuit_to_qasm_io(circuit: CircuitSpec, out: TextIO, switchable_basis: bool = True) -> None:
    """Write ``circuit`` as OpenQASM 3.

    With ``switchable_basis`` the trailing Y-basis rotation is dropped from the
    gate list and emitted under ``if (measure_y)`` so one file covers both
    ancilla bases.
    """
    anc = circuit.ancilla
    gates = list(circuit.gates)
    if switchable_basis and circuit.measurements.get(anc) is Basis.Y:
        gates = gates[:-2]

    out.write("OPENQASM 3.0;\n")
    out.write('include "stdgates.inc";\n')
    out.write(f"// roles: {' '.join(circuit.roles)}\n")
    out.write(f"// u = {circuit.u:.12g} 1/ueV\n")
    if switchable_basis:
        out.write("input bit measure_y;\n")

    body = []
    for i, gate in enumerate(gates):
        if gate.kind in _STD_NAMES:
            body.append(f"{_STD_NAMES[gate.kind]} {_operands(gate)};")
            continue
        name = _custom_name(gate, i)
        args = ", ".join(f"a{k}" for k in range(len(gate.qubits)))
        out.write(f"#pragma unitary {name} {_matrix_literal(gate.unitary())}\n")
        out.write(f"gate {name} {args} {{ }}\n")
        body.append(f"{name} {_operands(gate)};")

    out.write(f"qubit[{circuit.num_qubits}] q;\n")
    out.write("bit c;\n")
    for line in body:
        out.write(line + "\n")
    if switchable_basis:
        out.write(f"if (measure_y) {{ sdg q[{anc}]; h q[{anc}]; }}\n")
    out.write(f"c = measure q[{anc}];\n")


def circuit_to_qasm_str(circuit: CircuitSpec, switchable_basis: bool = True) -> str:
    buffer = StringIO()
    circuit_to_qasm_io(circuit, buffer, switchable_basis)
    return buffer.getvalue()


def circuit_to_qasm(circuit: CircuitSpec, output_file: Path, switchable_basis: bool = True) -> Path:
    output_file = Path(output_file)
    output_file.parent.mkdir(parents=True, exist_ok=True)
    with open(output_file, "w") as out:
        circuit_to_qasm_io(circuit, out, switchable_basis)
    return output_file


def write_circuit_series(circuits: Iterable[CircuitSpec], directory: Path, stem: str = "circuit") -> list[Path]:
    """One file per delay value, named by sweep index."""
    directory = Path(directory)
    written = []
    for index, circuit in enumerate(circuits):
        written.append(circuit_to_qasm(circuit, directory / f"{stem}_{index:04d}.qasm"))
    log.info(f"wrote {len(written)} QASM file(s) to {directory}")
    return written
