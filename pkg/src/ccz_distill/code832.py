"""The [[8,3,2]] code and the circuits acting on its block.

Qubit labels follow the cube picture: label ``q`` in ``0..7`` is a vertex of
the 3-cube (bits of ``q`` are its coordinates). X-stabilizers and logical X
operators are affine planes, so transversal ``T``/``T†`` by vertex parity
implements a logical CCZ.

All builders place the block on a fixed nearest-neighbour layout: the data
form a 2x4 ladder, and every data qubit has an ancilla directly above (top
row) or below (bottom row) it::

        col:   1   2   3   4   5   6
    row 1          a   a   a   a   g
    row 2          4   0   2   6   g
    row 3          5   1   3   7   g
    row 4          a   a   a   a   g

``a`` marks the per-data ancillas and ``g`` the bridge qubits that close the
GHZ chain used for the X-type check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, CircuitBuilder, Kind
from .pauli import PauliString, commutes

N = 8

# -- code definition -------------------------------------------------------------

_Z_PLANES = ((0, 1, 2, 3), (0, 1, 4, 5), (0, 2, 4, 6))
_LOGICAL_X = ((0, 1, 2, 3), (0, 1, 4, 5), (0, 2, 4, 6))
_LOGICAL_Z = ((0, 4), (0, 2), (0, 1))
T_QUBITS = (0, 3, 5, 6)
T_DAGGER_QUBITS = (1, 2, 4, 7)


@dataclass(frozen=True)
class CodeDefinition:
    """A stabilizer code with explicit logical operators.

    Attributes:
        n: Number of physical qubits.
        k: Number of logical qubits.
        stabilizers: Stabilizer generators.
        logical_x: Logical X operators, one per logical qubit.
        logical_z: Logical Z operators, paired with ``logical_x``.
    """

    n: int
    k: int
    stabilizers: tuple[PauliString, ...]
    logical_x: tuple[PauliString, ...]
    logical_z: tuple[PauliString, ...]

    def __post_init__(self):
        if len(self.logical_x) != self.k or len(self.logical_z) != self.k:
            raise ValueError("need exactly k logical X and k logical Z operators")
        for p in (*self.stabilizers, *self.logical_x, *self.logical_z):
            if p.n_qubits != self.n:
                raise ValueError("operator size does not match n")

    def check(self) -> list[str]:
        """Return a description of every violated commutation relation."""
        bad = []
        s = self.stabilizers
        for i in range(len(s)):
            for j in range(i + 1, len(s)):
                if not commutes(s[i], s[j]):
                    bad.append(f"stabilizers {s[i]} and {s[j]} anticommute")
        for lg in (*self.logical_x, *self.logical_z):
            for st in s:
                if not commutes(lg, st):
                    bad.append(f"logical {lg} anticommutes with stabilizer {st}")
        for i, lx in enumerate(self.logical_x):
            for j, lz in enumerate(self.logical_z):
                if commutes(lx, lz) != (i != j):
                    bad.append(f"logical pair X{i}/Z{j} has wrong commutation")
        for group in (self.logical_x, self.logical_z):
            for i in range(len(group)):
                for j in range(i + 1, len(group)):
                    if not commutes(group[i], group[j]):
                        bad.append(f"logicals {group[i]} and {group[j]} anticommute")
        return bad


def code_832() -> CodeDefinition:
    """The [[8,3,2]] cube code with Z-type planes and an all-X stabilizer."""
    allq = range(N)
    stabs = [PauliString.from_support(N, x=allq), PauliString.from_support(N, z=allq)]
    stabs += [PauliString.from_support(N, z=p) for p in _Z_PLANES]
    lx = [PauliString.from_support(N, x=p) for p in _LOGICAL_X]
    lz = [PauliString.from_support(N, z=p) for p in _LOGICAL_Z]
    return CodeDefinition(N, 3, tuple(stabs), tuple(lx), tuple(lz))


def _popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a) if hasattr(np, "bitwise_count") else np.vectorize(int.bit_count)(a)


def verify_distance(code: CodeDefinition, max_n: int = 12) -> int | None:
    """Minimum weight of a Pauli that commutes with all stabilizers but acts
    nontrivially on the logical algebra, by exhaustive enumeration.

    Returns:
        The distance, or ``None`` when the code has no logical qubits.

    Raises:
        ValueError: If ``code.n`` exceeds ``max_n``.
    """
    if code.n > max_n:
        raise ValueError(f"brute force limited to n <= {max_n}, got {code.n}")
    if code.k == 0:
        return None
    n = code.n
    vals = np.arange(1 << n, dtype=np.int64)
    x = np.repeat(vals, 1 << n)
    z = np.tile(vals, 1 << n)

    def anticommutes(p: PauliString) -> np.ndarray:
        return (_popcount((x & p.z_mask) ^ (z & p.x_mask)) & 1).astype(bool)

    ok = np.ones(x.shape, dtype=bool)
    for s in code.stabilizers:
        ok &= ~anticommutes(s)
    nontrivial = np.zeros(x.shape, dtype=bool)
    for lg in (*code.logical_x, *code.logical_z):
        nontrivial |= anticommutes(lg)
    sel = ok & nontrivial
    if not sel.any():
        return None
    return int(_popcount(x[sel] | z[sel]).min())


# -- layout -------------------------------------------------------------------------

DATA_POSITIONS: dict[int, tuple[int, int]] = {
    4: (2, 2), 0: (2, 3), 2: (2, 4), 6: (2, 5),
    5: (3, 2), 1: (3, 3), 3: (3, 4), 7: (3, 5),
}


def ancilla_position(label: int) -> tuple[int, int]:
    """Grid position of the ancilla paired with data qubit ``label``."""
    r, c = DATA_POSITIONS[label]
    return (r - 1, c) if r == 2 else (r + 1, c)


TOP_ROW = (4, 0, 2, 6)
BOTTOM_ROW = (5, 1, 3, 7)
# Chain closing the GHZ state around the right end of the block.
GHZ_CHAIN = ((1, 2), (1, 3), (1, 4), (1, 5), (1, 6), (2, 6),
             (3, 6), (4, 6), (4, 5), (4, 4), (4, 3), (4, 2))
GHZ_ROOT = 5

# Encoder: CNOT layers (control, target) on labels; inputs 0,1,5,7 start in |+>.
ENCODER_LAYERS = (
    ((0, 2), (1, 3), (5, 4), (7, 6)),
    ((1, 5), (3, 7), (4, 0), (6, 2)),
    ((0, 1), (2, 3)),
)
PLUS_INPUTS = (0, 1, 5, 7)
ZERO_INPUTS = (2, 3, 4, 6)


def data_qubits(b: CircuitBuilder) -> dict[int, int]:
    """Allocate (or look up) the eight data qubits; returns label -> qubit id."""
    return {q: b.qubit(DATA_POSITIONS[q]) for q in range(N)}


# -- emitters (append to a builder at a given time offset) ---------------------------

def emit_encoder(b: CircuitBuilder, d: dict[int, int], t0: int, inverse: bool = False) -> int:
    """Three CNOT layers of the encoder starting at step ``t0``; returns the next free step."""
    layers = ENCODER_LAYERS[::-1] if inverse else ENCODER_LAYERS
    for i, layer in enumerate(layers):
        b.cnots([(d[c], d[t]) for c, t in layer], t0 + i)
    return t0 + len(layers)


def emit_inputs(b: CircuitBuilder, d: dict[int, int], t: int) -> None:
    b.reset_x([d[q] for q in PLUS_INPUTS], t)
    b.reset_z([d[q] for q in ZERO_INPUTS], t)


def emit_ft_encoder(b: CircuitBuilder, t0: int) -> int:
    """Double-check encoder; returns the step of the final ancilla measurement.

    Sequence: encode, transversal CNOT from the ancillas (in |+>) onto the
    block, decode, X-measure the four |+> inputs, re-encode, second
    transversal CNOT, X-measure the ancillas. Z errors on the block before
    the first transversal CNOT are caught by the input measurements; Z errors
    between the two transversal CNOTs are copied onto the ancillas.
    """
    d = data_qubits(b)
    anc = {q: b.qubit(ancilla_position(q)) for q in range(N)}
    emit_inputs(b, d, t0)
    b.reset_x(anc.values(), t0)
    t = emit_encoder(b, d, t0 + 1)
    b.cnots([(anc[q], d[q]) for q in range(N)], t)
    t = emit_encoder(b, d, t + 1, inverse=True)
    for q in PLUS_INPUTS:
        h = b.measure_x(d[q], t)
        b.detector([h], "VERIFY_832", f"input{q}")
    t = emit_encoder(b, d, t + 1)
    b.cnots([(anc[q], d[q]) for q in range(N)], t)
    for q in range(N):
        h = b.measure_x(anc[q], t + 1)
        b.detector([h], "VERIFY_832", f"anc{q}")
    return t + 1


def emit_transversal_ccz(b: CircuitBuilder, t: int) -> None:
    d = data_qubits(b)
    for q in T_QUBITS:
        b.gate(Kind.T, d[q], t)
    for q in T_DAGGER_QUBITS:
        b.gate(Kind.T_DAGGER, d[q], t)


@dataclass
class SyndromeHandles:
    """Measurement handles of one syndrome-extraction block.

    Attributes:
        x_check: Handles whose parity is the X-type check.
        z_checks: One handle list per Z-type check.
        x_flags: Extra handle lists whose parities are flag checks.
        kickback: Handles of X-measured ancillas whose outcomes may enter
            later parities as Pauli-frame corrections.
        end: Last time step used.
    """

    x_check: list[int]
    z_checks: list[list[int]]
    x_flags: list[list[int]]
    kickback: list[int]
    end: int


def emit_superdense(b: CircuitBuilder, t0: int, free_from: dict | None = None) -> SyndromeHandles:
    """Syndrome extraction of the block with one GHZ state.

    1. A GHZ state grows along :data:`GHZ_CHAIN` from :data:`GHZ_ROOT`; each
       per-data ancilla copies the GHZ bit onto its data qubit (CNOT
       ancilla -> data) right after joining and forwarding.
    2. In each row ``a0 a1 a2 a3`` the inner pair is cleared by CNOTs from
       the outer pair, all four collect their data qubit (CNOT data ->
       ancilla), and the Z parity of the row is funnelled into ``a2``
       (``a0->a1, a3->a2`` then ``a1->a2``).
    3. ``a2`` is measured in Z (row Z check); every other chain qubit is
       measured in X. The product of those X outcomes is the all-X check,
       and it also flags Z faults on the collecting ancillas.

    Args:
        b: Builder.
        t0: Reset step of the GHZ root.
        free_from: Optional grid position -> first step at which that chain
            qubit may be reset (chain qubits still busy with earlier work).

    Returns:
        Handles and the last time step used.
    """
    d = data_qubits(b)
    owner = {ancilla_position(q): q for q in range(N)}
    chain = [b.qubit(p) for p in GHZ_CHAIN]
    index = {p: i for i, p in enumerate(GHZ_CHAIN)}
    n = len(chain)
    root = GHZ_ROOT
    free = {i: max(t0, (free_from or {}).get(p, t0)) for i, p in enumerate(GHZ_CHAIN)}
    b.reset_x([chain[root]], free[root])
    join = {root: free[root]}
    busy: dict[int, set[int]] = {}

    def use(i: int, t: int) -> None:
        busy.setdefault(i, set()).add(t)

    right = list(range(root + 1, n))
    left = list(range(root - 1, -1, -1))
    sides = (right, left) if len(right) >= len(left) else (left, right)
    for side in sides:
        prev = root
        for i in side:
            b.reset_z([chain[i]], free[i])
            t = max(join[prev], free[i]) + 1
            while t in busy.get(prev, ()):
                t += 1
            b.cnot(chain[prev], chain[i], t)
            use(prev, t)
            use(i, t)
            join[i] = t
            prev = i
    coupled = {}
    for i, pos in enumerate(GHZ_CHAIN):
        if pos in owner:
            t = join[i] + 1
            while t in busy.get(i, ()):
                t += 1
            b.cnot(chain[i], d[owner[pos]], t)
            use(i, t)
            coupled[i] = t
    hx, z_checks, end = [], [], t0
    for i, pos in enumerate(GHZ_CHAIN):
        if pos not in owner:
            hx.append(b.measure_x(chain[i], max(busy[i]) + 1))
    for row in (TOP_ROW, BOTTOM_ROW):
        a = [index[ancilla_position(q)] for q in row]
        q = [chain[i] for i in a]
        t = max(coupled[i] for i in a) + 1
        b.cnots([(q[0], q[1]), (q[3], q[2])], t)
        b.cnots([(d[row[k]], q[k]) for k in range(4)], t + 1)
        b.cnots([(q[0], q[1]), (q[3], q[2])], t + 2)
        b.cnot(q[1], q[2], t + 3)
        hx += [b.measure_x(q[0], t + 3), b.measure_x(q[3], t + 3), b.measure_x(q[1], t + 4)]
        z_checks.append([b.measure_z(q[2], t + 4)])
        end = max(end, t + 4)
    return SyndromeHandles(hx, z_checks, [], list(hx), end)


def annotate_superdense(b: CircuitBuilder, h: SyndromeHandles) -> None:
    b.detector(h.x_check, "SYNDROME_832", "X_all")
    for name, zc in zip(("Z_top", "Z_bottom"), h.z_checks):
        b.detector(zc, "SYNDROME_832", name)
    for k, fl in enumerate(h.x_flags):
        b.detector(fl, "SYNDROME_832", f"flag{k}")


def emit_block_readout(b: CircuitBuilder, t: int) -> dict[int, int]:
    """Destructive X measurement of the block; returns label -> handle."""
    d = data_qubits(b)
    return {q: b.measure_x(d[q], t) for q in range(N)}


# -- standalone circuits ---------------------------------------------------------------

def nonft_encoder() -> Circuit:
    """Encoder of |+++> from four |0> and four |+> inputs (no checks)."""
    b = CircuitBuilder(name="nonft_encoder")
    d = data_qubits(b)
    emit_inputs(b, d, 0)
    emit_encoder(b, d, 1)
    return b.build()


def ft_encoder() -> Circuit:
    """Double-check fault-tolerant encoder with VERIFY_832 detectors."""
    b = CircuitBuilder(name="ft_encoder")
    emit_ft_encoder(b, 0)
    return b.build()


def transversal_ccz() -> Circuit:
    """One step of T on {0,3,5,6} and T-dagger on {1,2,4,7}."""
    b = CircuitBuilder(name="transversal_ccz")
    emit_transversal_ccz(b, 0)
    return b.build()


def superdense_extraction(prepare: bool = True) -> Circuit:
    """Syndrome extraction block with SYNDROME_832 detectors.

    Args:
        prepare: Prefix the block with a (non-FT) encoding of |+++> so that
            every detector is deterministic. With ``False`` only the
            extraction itself is emitted (useful for depth accounting).
    """
    b = CircuitBuilder(name="superdense_extraction")
    t0 = 0
    if prepare:
        d = data_qubits(b)
        emit_inputs(b, d, 0)
        t0 = emit_encoder(b, d, 1)
    h = emit_superdense(b, t0)
    if prepare:
        annotate_superdense(b, h)
    return b.build()
