"""Pauli-frame propagation, scalar and bit-packed.

The batch engine stores one bit per shot (or per injected fault) in
``uint64`` words, so every Clifford gate is a handful of whole-row XORs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, Instruction, Kind, MEASUREMENTS, NON_CLIFFORD, NOISE
from .pauli import PauliFrame

# Two-qubit Pauli components in a fixed order: index = 4*p0 + p1 - 1 with
# p in {0: I, 1: X, 2: Y, 3: Z}; single-qubit components are X, Y, Z.
_XZ = {0: (0, 0), 1: (1, 0), 2: (1, 1), 3: (0, 1)}
DEPOL1_COMPONENTS = tuple(_XZ[p] for p in (1, 2, 3))
DEPOL2_COMPONENTS = tuple((_XZ[a], _XZ[b]) for a in range(4) for b in range(4) if a or b)


def frame_propagate(frame: PauliFrame, instr: Instruction, clifford_approx: bool = True) -> PauliFrame:
    """Conjugate a sign-free frame through one instruction.

    Resets clear the frame on their target; measurements leave it unchanged
    (use :func:`measurement_flip` for the recorded outcome flip). Noise
    instructions are ignored.
    """
    x, z = frame.x_mask, frame.z_mask
    k = instr.kind
    if k in NOISE or k == Kind.TICK:
        return frame
    if k in NON_CLIFFORD:
        if not clifford_approx:
            raise ValueError("non-Clifford instruction without the Clifford approximation")
        return frame
    if k == Kind.CNOT:
        c, t = instr.targets
        if x >> c & 1:
            x ^= 1 << t
        if z >> t & 1:
            z ^= 1 << c
        return PauliFrame(x, z)
    (q,) = instr.targets
    bit = 1 << q
    if k == Kind.H:
        xb, zb = x & bit, z & bit
        x = (x & ~bit) | zb
        z = (z & ~bit) | xb
    elif k == Kind.S:
        if x & bit:
            z ^= bit
    elif k in (Kind.RESET_Z, Kind.RESET_X):
        x &= ~bit
        z &= ~bit
    elif k in MEASUREMENTS:
        pass
    else:
        raise ValueError(f"unsupported instruction {k.value}")
    return PauliFrame(x, z)


def measurement_flip(frame: PauliFrame, instr: Instruction) -> bool:
    """Whether the frame flips the outcome of a measurement instruction."""
    (q,) = instr.targets
    if instr.kind == Kind.MEAS_Z:
        return bool(frame.x_mask >> q & 1)
    if instr.kind == Kind.MEAS_X:
        return bool(frame.z_mask >> q & 1)
    raise ValueError("not a measurement")


# -- batch engine ---------------------------------------------------------------

def n_words(n_bits: int) -> int:
    return max(1, (n_bits + 63) // 64)


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a boolean array along its last axis into little-endian uint64 words."""
    bits = np.asarray(bits, dtype=bool)
    n = bits.shape[-1]
    pad = n_words(n) * 64 - n
    if pad:
        bits = np.concatenate([bits, np.zeros(bits.shape[:-1] + (pad,), dtype=bool)], axis=-1)
    packed = np.packbits(bits, axis=-1, bitorder="little")
    return packed.view(np.uint64)


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`."""
    words = np.ascontiguousarray(words, dtype=np.uint64)
    bits = np.unpackbits(words.view(np.uint8), axis=-1, bitorder="little")
    return bits[..., :n].astype(bool)


@dataclass
class Mechanism:
    """A single elementary fault: one Pauli component of one noise channel.

    Attributes:
        channel: Index of the noise instruction in the circuit.
        qubits: Targets of the channel.
        paulis: ``(x, z)`` bit pair per target.
        probability: Probability that this component occurs.
    """

    channel: int
    qubits: tuple[int, ...]
    paulis: tuple[tuple[int, int], ...]
    probability: float


def channel_components(ins: Instruction) -> list[tuple[tuple[int, int], ...]]:
    """Pauli components of a noise channel (each equally likely)."""
    if ins.kind == Kind.NOISE_DEPOL1:
        return [(c,) for c in DEPOL1_COMPONENTS]
    if ins.kind == Kind.NOISE_DEPOL2:
        return list(DEPOL2_COMPONENTS)
    if ins.kind == Kind.NOISE_FLIP:
        return [((1, 0),)] if ins.pauli == "X" else [((0, 1),)]
    raise ValueError("not a noise instruction")


def mechanisms(circ: Circuit) -> list[Mechanism]:
    """Enumerate every elementary fault of a noisy circuit."""
    out = []
    for j, ins in enumerate(circ.instructions):
        if not ins.is_noise:
            continue
        comps = channel_components(ins)
        for comp in comps:
            out.append(Mechanism(j, ins.targets, comp, ins.p / len(comps)))
    return out


class BatchFrames:
    """Bit-packed frames for many shots (or many injected faults) at once."""

    def __init__(self, n_qubits: int, n_shots: int):
        self.n_shots = n_shots
        w = n_words(n_shots)
        self.x = np.zeros((n_qubits, w), dtype=np.uint64)
        self.z = np.zeros((n_qubits, w), dtype=np.uint64)

    def apply(self, ins: Instruction, clifford_approx: bool = True) -> np.ndarray | None:
        """Propagate through a non-noise instruction; return flip words for measurements."""
        k = ins.kind
        if k == Kind.TICK:
            return None
        if k in NON_CLIFFORD:
            if not clifford_approx:
                raise ValueError("non-Clifford instruction without the Clifford approximation")
            return None
        if k == Kind.CNOT:
            c, t = ins.targets
            self.x[t] ^= self.x[c]
            self.z[c] ^= self.z[t]
            return None
        (q,) = ins.targets
        if k == Kind.H:
            self.x[q], self.z[q] = self.z[q].copy(), self.x[q].copy()
        elif k == Kind.S:
            self.z[q] ^= self.x[q]
        elif k in (Kind.RESET_Z, Kind.RESET_X):
            self.x[q] = 0
            self.z[q] = 0
        elif k == Kind.MEAS_Z:
            return self.x[q].copy()
        elif k == Kind.MEAS_X:
            return self.z[q].copy()
        else:
            raise ValueError(f"unsupported instruction {k.value}")
        return None


def _annotation_matrix(circ: Circuit, meas_flips: np.ndarray):
    det = np.zeros((len(circ.detectors), meas_flips.shape[1]), dtype=np.uint64)
    for i, d in enumerate(circ.detectors):
        if d.measurements:
            det[i] = np.bitwise_xor.reduce(meas_flips[list(d.measurements)], axis=0)
    obs = np.zeros((len(circ.observables), meas_flips.shape[1]), dtype=np.uint64)
    for i, o in enumerate(circ.observables):
        if o.measurements:
            obs[i] = np.bitwise_xor.reduce(meas_flips[list(o.measurements)], axis=0)
    return det, obs


def fault_effects(circ: Circuit, mechs: list[Mechanism] | None = None,
                  clifford_approx: bool = True) -> tuple[np.ndarray, np.ndarray, list[Mechanism]]:
    """Detector and observable flips caused by each elementary fault alone.

    All faults are propagated together, one bit column each.

    Returns:
        ``(det, obs, mechs)`` with boolean matrices of shape
        ``(n_mechanisms, n_detectors)`` and ``(n_mechanisms, n_observables)``.
    """
    if mechs is None:
        mechs = mechanisms(circ)
    m_count = len(mechs)
    frames = BatchFrames(circ.num_qubits, m_count)
    inject: dict[int, list[tuple[int, Mechanism]]] = {}
    for col, mech in enumerate(mechs):
        inject.setdefault(mech.channel, []).append((col, mech))
    flips = []
    for j, ins in enumerate(circ.instructions):
        if ins.is_noise:
            for col, mech in inject.get(j, ()):
                word, bit = divmod(col, 64)
                mask = np.uint64(1 << bit)
                for q, (px, pz) in zip(mech.qubits, mech.paulis):
                    if px:
                        frames.x[q, word] ^= mask
                    if pz:
                        frames.z[q, word] ^= mask
            continue
        f = frames.apply(ins, clifford_approx)
        if f is not None:
            flips.append(f)
    meas = np.array(flips) if flips else np.zeros((0, n_words(m_count)), dtype=np.uint64)
    det, obs = _annotation_matrix(circ, meas)
    return unpack_bits(det, m_count).T.copy(), unpack_bits(obs, m_count).T.copy(), mechs


def sample_frames(circ: Circuit, shots: int, rng: np.random.Generator,
                  clifford_approx: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Direct per-channel Monte Carlo of a noisy circuit (reference sampler).

    Returns:
        Boolean ``(shots, n_detectors)`` and ``(shots, n_observables)`` flips.
    """
    frames = BatchFrames(circ.num_qubits, shots)
    flips = []
    for ins in circ.instructions:
        if ins.is_noise:
            comps = channel_components(ins)
            hit = rng.random(shots) < ins.p
            which = rng.integers(0, len(comps), size=shots)
            for ci, comp in enumerate(comps):
                sel = pack_bits(hit & (which == ci))
                for q, (px, pz) in zip(ins.targets, comp):
                    if px:
                        frames.x[q] ^= sel
                    if pz:
                        frames.z[q] ^= sel
            continue
        f = frames.apply(ins, clifford_approx)
        if f is not None:
            flips.append(f)
    meas = np.array(flips) if flips else np.zeros((0, n_words(shots)), dtype=np.uint64)
    det, obs = _annotation_matrix(circ, meas)
    return unpack_bits(det, shots).T.copy(), unpack_bits(obs, shots).T.copy()
