"""Shared helpers for fault-injection tests."""

from ccz_distill.circuit import Circuit, Instruction, Kind
from ccz_distill.frames import fault_effects, mechanisms


def inject(circ: Circuit, step: int, qubit: int, pauli: str) -> Circuit:
    """Insert a certain X or Z flip on ``qubit`` after all operations of ``step``."""
    k = sum(1 for i in circ.instructions if i.time_step <= step)
    ins = list(circ.instructions)
    ins.insert(k, Instruction(Kind.NOISE_FLIP, (qubit,), step, 1.0, pauli))
    return Circuit(ins, circ.layout, circ.detectors, circ.observables, circ.metadata)


def single_fault_flips(circ: Circuit):
    """Detector and observable flips of the only mechanism in ``circ``."""
    det, obs, _ = fault_effects(circ, mechanisms(circ))
    return det[0], obs[0]


# Acceptance-criterion verdicts, printed in the terminal summary.
ACCEPTANCE: dict[int, str] = {}


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE[n] = line
    print(line)
