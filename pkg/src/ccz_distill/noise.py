"""Circuit-level noise model and its insertion into circuits."""

from __future__ import annotations

from dataclasses import dataclass

from .circuit import Circuit, Instruction, Kind, MEASUREMENTS, RESETS, SINGLE_QUBIT_GATES


@dataclass(frozen=True)
class NoiseModel:
    """Uniform circuit-level noise of strength ``p``.

    Every single-qubit gate and idle location is followed by single-qubit
    depolarizing noise, every CNOT by two-qubit depolarizing noise, and every
    reset / measurement suffers a classical flip, all with probability ``p``.

    Attributes:
        p: Physical error rate.
        idle_during_mr: Also apply idle noise in steps that contain only
            measurements and resets.
    """

    p: float
    idle_during_mr: bool = True

    def __post_init__(self):
        if not 0.0 <= self.p < 0.5:
            raise ValueError(f"p must lie in [0, 0.5), got {self.p}")


def idle_locations(circ: Circuit) -> dict[int, list[int]]:
    """Qubits that are alive but untouched, per time step.

    A qubit is alive from any non-measurement operation on it until (and
    excluding) the step in which it is measured, so a qubit reused after a
    measurement without a reset idles like any other.
    """
    ops = [i for i in circ.instructions if not i.is_noise and i.kind != Kind.TICK]
    if not ops:
        return {}
    steps = sorted({i.time_step for i in ops})
    by_step: dict[int, list[Instruction]] = {}
    for i in ops:
        by_step.setdefault(i.time_step, []).append(i)
    alive: set[int] = set()
    idle: dict[int, list[int]] = {}
    for t in steps:
        touched = {q for i in by_step[t] for q in i.targets}
        idle[t] = sorted(alive - touched)
        for i in by_step[t]:
            if i.kind in MEASUREMENTS:
                alive.discard(i.targets[0])
            else:
                alive.update(i.targets)
    return idle


def apply_noise(circ: Circuit, model: NoiseModel) -> Circuit:
    """Insert the noise channels of ``model`` into a noiseless circuit.

    Raises:
        ValueError: If the circuit already contains noise.
    """
    if circ.is_noisy():
        raise ValueError("circuit already contains noise channels")
    p = model.p
    idle = idle_locations(circ)
    out: list[Instruction] = []
    ops = [i for i in circ.instructions if i.kind != Kind.TICK]
    j = 0
    while j < len(ops):
        t = ops[j].time_step
        step = []
        while j < len(ops) and ops[j].time_step == t:
            step.append(ops[j])
            j += 1
        for ins in step:
            q = ins.targets
            if ins.kind in MEASUREMENTS:
                axis = "X" if ins.kind == Kind.MEAS_Z else "Z"
                out.append(Instruction(Kind.NOISE_FLIP, q, t, p, axis))
                out.append(ins)
            elif ins.kind in RESETS:
                out.append(ins)
                axis = "X" if ins.kind == Kind.RESET_Z else "Z"
                out.append(Instruction(Kind.NOISE_FLIP, q, t, p, axis))
            elif ins.kind == Kind.CNOT:
                out.append(ins)
                out.append(Instruction(Kind.NOISE_DEPOL2, q, t, p))
            elif ins.kind in SINGLE_QUBIT_GATES:
                out.append(ins)
                out.append(Instruction(Kind.NOISE_DEPOL1, q, t, p))
            else:
                raise ValueError(f"unsupported instruction {ins.kind.value}")
        if not model.idle_during_mr and all(i.kind in MEASUREMENTS or i.kind in RESETS for i in step):
            continue
        for q in idle.get(t, ()):
            out.append(Instruction(Kind.NOISE_DEPOL1, (q,), t, p))
    meta = dict(circ.metadata)
    meta["noise_p"] = repr(float(p))
    return Circuit(out, circ.layout, list(circ.detectors), list(circ.observables), meta)
