"""Rotated surface-code patches on a 45-degree nearest-neighbour embedding.

A patch of distance ``d`` has data qubits ``(i, j)`` with ``0 <= i, j < d``
mapped to grid position ``origin + j*u + i*v`` where ``u`` and ``v`` are
orthogonal diagonal unit steps, e.g. ``(-1, -1)`` and ``(-1, 1)``. The
ancilla of the plaquette with corners ``(i, j) .. (i+1, j+1)`` then sits at
``origin + (j+1/2)*u + (i+1/2)*v``, a grid neighbour of all four corners.

Plaquettes with ``i + j`` odd are X-type, even are Z-type. The logical Z runs
along row ``i = 0`` and the logical X along column ``j = 0``.

Injection (AIT) starts the first three columns (``j < 3``, which hold the
logical-X column and the ``3 x 3`` corner) in |+> and the remaining columns in
|0>, so the patch is in logical |+> with only the corner part of the row-0
logical Z unknown. The X plaquette straddling the corner boundary
on row 0 is withheld in the first round because it anticommutes with the
part of the row-0 logical Z that lies outside the corner.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import code832 as c832
from .circuit import Circuit, CircuitBuilder, DetectorDef
from .pauli import PauliString
from .tableau import tableau_simulate

Pos = tuple[int, int]
CORNER = 3


def _add(*vs) -> Pos:
    return (sum(v[0] for v in vs), sum(v[1] for v in vs))


def _scale(k: float, v: Pos) -> tuple[float, float]:
    return (k * v[0], k * v[1])


@dataclass(frozen=True)
class Stabilizer:
    """One plaquette.

    Attributes:
        kind: ``"X"`` or ``"Z"``.
        cell: Plaquette index ``(i, j)`` (corners ``(i, j) .. (i+1, j+1)``).
        schedule: Data coordinate per CNOT layer (``None`` for an absent corner).
        pos: Grid position of the ancilla.
    """

    kind: str
    cell: tuple[int, int]
    schedule: tuple[tuple[int, int] | None, ...]
    pos: Pos

    @property
    def support(self) -> list[tuple[int, int]]:
        return [c for c in self.schedule if c is not None]


@dataclass(frozen=True)
class PatchSpec:
    """Placement of one distance-``d`` patch.

    Attributes:
        d: Code distance (odd, at least 3).
        origin: Grid position of data qubit ``(0, 0)``.
        u: Grid step along ``j`` (the logical-Z row).
        v: Grid step along ``i`` (the logical-X column).
    """

    d: int
    origin: Pos
    u: Pos
    v: Pos

    def __post_init__(self):
        if self.d < 3 or self.d % 2 == 0:
            raise ValueError(f"distance must be odd and >= 3, got {self.d}")
        for w in (self.u, self.v):
            if abs(w[0]) != 1 or abs(w[1]) != 1:
                raise ValueError("u and v must be diagonal unit steps")
        if self.u[0] * self.v[0] + self.u[1] * self.v[1] != 0:
            raise ValueError("u and v must be orthogonal")

    @property
    def expanded(self) -> bool:
        return self.d > CORNER

    def data_pos(self, i: int, j: int) -> Pos:
        return _add(self.origin, _scale(j, self.u), _scale(i, self.v))

    @property
    def data(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.d) for j in range(self.d)]

    def in_corner(self, ij: tuple[int, int]) -> bool:
        return ij[0] < CORNER and ij[1] < CORNER

    @property
    def stabilizers(self) -> list[Stabilizer]:
        d = self.d
        out = []
        for i in range(-1, d):
            for j in range(-1, d):
                kind = "X" if (i + j) % 2 else "Z"
                a, b, c, e = (i, j), (i, j + 1), (i + 1, j), (i + 1, j + 1)
                inside = [0 <= p[0] < d and 0 <= p[1] < d for p in (a, b, c, e)]
                n_in = sum(inside)
                if n_in == 2:
                    boundary_row = i in (-1, d - 1)
                    if boundary_row != (kind == "X"):
                        continue
                elif n_in != 4:
                    continue
                order = (a, b, c, e) if kind == "X" else (a, c, b, e)
                sched = tuple(p if 0 <= p[0] < d and 0 <= p[1] < d else None for p in order)
                pos = self.data_pos(i, j)
                pos = (pos[0] + (self.u[0] + self.v[0]) // 2, pos[1] + (self.u[1] + self.v[1]) // 2)
                out.append(Stabilizer(kind, (i, j), sched, pos))
        return out

    @property
    def withheld(self) -> Stabilizer | None:
        """X plaquette skipped in the first round (``None`` without expansion)."""
        if not self.expanded:
            return None
        for s in self.stabilizers:
            if s.kind == "X" and (0, CORNER - 1) in s.support and (0, CORNER) in s.support:
                return s
        raise AssertionError("no junction plaquette")

    def logical_x(self) -> list[tuple[int, int]]:
        return [(i, 0) for i in range(self.d)]

    def logical_z(self) -> list[tuple[int, int]]:
        return [(0, j) for j in range(self.d)]

    def positions(self) -> set[Pos]:
        return {self.data_pos(*ij) for ij in self.data} | {s.pos for s in self.stabilizers}

    def region(self, s: Stabilizer) -> str:
        """Detector region of a plaquette (for all rounds after the first
        appearance of the withheld plaquette it is reported separately)."""
        w = self.withheld
        if w is not None and s.cell == w.cell:
            return "AIT_NEW_X"
        if all(self.in_corner(c) for c in s.support):
            return "AIT_D3" if s.kind == "Z" else "AIT_ADJACENT_X"
        if w is not None and s.kind == "X" and set(s.support) & set(w.support):
            return "AIT_ADJACENT_X"
        return "OUTPUT_PATCH"


@dataclass
class PatchState:
    """Measurement handles collected while a patch runs.

    Attributes:
        spec: Patch placement.
        qubits: Data coordinate -> qubit id.
        ancillas: Plaquette cell -> qubit id.
        history: Plaquette cell -> handles, one per measured round.
        readout: Data coordinate -> handle of the final X measurement.
    """

    spec: PatchSpec
    qubits: dict[tuple[int, int], int]
    ancillas: dict[tuple[int, int], int]
    history: dict[tuple[int, int], list[int]] = field(default_factory=dict)
    readout: dict[tuple[int, int], int] = field(default_factory=dict)


ROUND_STEPS = 6


def allocate(b: CircuitBuilder, spec: PatchSpec) -> PatchState:
    qubits = {ij: b.qubit(spec.data_pos(*ij)) for ij in spec.data}
    anc = {s.cell: b.qubit(s.pos) for s in spec.stabilizers}
    return PatchState(spec, qubits, anc)


def patch_round(b: CircuitBuilder, st: PatchState, t0: int, skip=()) -> int:
    """One syndrome round in steps ``t0 .. t0+5``; returns the measurement step."""
    for s in st.spec.stabilizers:
        if s.cell in skip:
            continue
        a = st.ancillas[s.cell]
        (b.reset_x if s.kind == "X" else b.reset_z)([a], t0)
        for k, c in enumerate(s.schedule):
            if c is None:
                continue
            q = st.qubits[c]
            if s.kind == "X":
                b.cnot(a, q, t0 + 1 + k)
            else:
                b.cnot(q, a, t0 + 1 + k)
        m = b.measure_x(a, t0 + 5) if s.kind == "X" else b.measure_z(a, t0 + 5)
        st.history.setdefault(s.cell, []).append(m)
    return t0 + 5


def emit_ait_init(b: CircuitBuilder, spec: PatchSpec, t0: int) -> PatchState:
    """Reset the data at ``t0`` and run the first (partial) round.

    Columns ``j < 3`` start in |+>, the rest in |0>. The first round occupies
    steps ``t0 .. t0+5``; data resets share step ``t0`` with ancilla resets.
    """
    st = allocate(b, spec)
    plus = [q for ij, q in st.qubits.items() if ij[1] < CORNER]
    zero = [q for ij, q in st.qubits.items() if ij[1] >= CORNER]
    b.reset_x(plus, t0)
    b.reset_z(zero, t0)
    w = spec.withheld
    patch_round(b, st, t0, skip=(w.cell,) if w else ())
    return st


def emit_ait_complete(b: CircuitBuilder, st: PatchState, t0: int, rounds: int) -> int:
    """Run ``rounds`` full rounds from ``t0``; returns the last step used.

    Raises:
        ValueError: If ``rounds < 1``.
    """
    if rounds < 1:
        raise ValueError("at least one round is required")
    t = t0 - 1
    for r in range(rounds):
        t = patch_round(b, st, t0 + r * ROUND_STEPS)
    return t


def readout_x(b: CircuitBuilder, st: PatchState, t: int) -> None:
    """Destructive X measurement of every data qubit."""
    for ij, q in st.qubits.items():
        st.readout[ij] = b.measure_x(q, t)


def patch_detectors(st: PatchState) -> list[tuple[list[int], str, str]]:
    """Candidate detectors ``(handles, region, label)``.

    Consecutive rounds of every plaquette are compared; the first round of a
    plaquette is a detector on its own (callers drop it when the reference
    run finds it random, e.g. Z plaquettes on |+> data). X plaquettes are
    finally compared with the product of their data readouts.
    """
    out = []
    spec = st.spec
    for s in spec.stabilizers:
        hs = st.history.get(s.cell, [])
        reg = spec.region(s)
        for r, h in enumerate(hs):
            prev = [hs[r - 1]] if r else []
            out.append(([h] + prev, reg, f"{s.kind}{s.cell[0]}_{s.cell[1]}r{r}"))
        if s.kind == "X" and st.readout and hs:
            data = [st.readout[c] for c in s.support]
            out.append((data + [hs[-1]], "OUTPUT_PATCH", f"{s.kind}{s.cell[0]}_{s.cell[1]}final"))
    return out


# -- lattice surgery ----------------------------------------------------------------

@dataclass(frozen=True)
class MergeSpec:
    """Cat-state ancilla chain measuring ``Z_block * Z_patch``.

    Attributes:
        members: Ancilla positions in chain order (adjacent consecutive).
        root: Index of the member prepared in |0>; the rest start in |+>.
        collects: Per member, the data positions it couples to.
    """

    members: tuple[Pos, ...]
    root: int
    collects: tuple[tuple[Pos, ...], ...]

    def __post_init__(self):
        if len(self.collects) != len(self.members):
            raise ValueError("one collect list per member")
        for a, c in zip(self.members, self.members[1:]):
            if abs(a[0] - c[0]) + abs(a[1] - c[1]) != 1:
                raise ValueError(f"members {a} and {c} are not adjacent")
        for m, cs in zip(self.members, self.collects):
            for p in cs:
                if abs(m[0] - p[0]) + abs(m[1] - p[1]) != 1:
                    raise ValueError(f"member {m} is not adjacent to {p}")


def emit_merge(b: CircuitBuilder, spec: MergeSpec, t0: int, collect_from: int = 0,
               prepared=()) -> tuple[list[int], int, int]:
    """Even-parity cat on the chain, data collection, and Z measurement.

    The cat (stabilized by ``X_a X_b`` and the all-Z string) is built by
    CNOTs from each |+> member onto its neighbour towards the root, nearest
    edges first. Collections start no earlier than ``collect_from``.
    Members listed in ``prepared`` are already in |+> (e.g. just measured in
    X with a deterministic outcome) and are not reset.

    Returns:
        ``(handles, first_collect, end)``: measurement handles (their parity
        is the merge outcome), the first collection step and the last step.
    """
    q = [b.qubit(p) for p in spec.members]
    n = len(q)
    r = spec.root
    prepared = set(prepared)
    if spec.members[r] in prepared:
        raise ValueError("the root must be freshly reset to |0>")
    b.reset_z([q[r]], t0)
    b.reset_x([q[i] for i in range(n) if i != r and spec.members[i] not in prepared], t0)
    t = t0 + 1
    # Edges ordered by distance from the root; each fires once both ends are free.
    edges = sorted(((i, i + 1 if i < r else i - 1) for i in range(n) if i != r),
                   key=lambda e: abs(e[0] - r))
    ready = {i: t for i in range(n)}
    for child, parent in edges:
        s = max(ready[child], ready[parent])
        b.cnot(q[child], q[parent], s)
        ready[child] = ready[parent] = s + 1
    handles = []
    end = t0
    first = None
    for i in range(n):
        s = max(ready[i], collect_from)
        if spec.collects[i]:
            first = s if first is None else min(first, s)
        for p in spec.collects[i]:
            b.cnot(b.qubit(p), q[i], s)
            s += 1
        handles.append(b.measure_z(q[i], s))
        end = max(end, s)
    return handles, first, end


# -- standalone circuits ----------------------------------------------------------------

@dataclass(frozen=True)
class AitSchedule:
    """Initialization plan of one AIT patch.

    Attributes:
        spec: Patch placement.
        zero_init_set: Data coordinates prepared in |0>.
        plus_init_set: Data coordinates prepared in |+>.
        withheld_stabilizer: Cell of the X plaquette skipped in the first
            round (``None`` for ``d == 3``).
        adjacent_x_set: Cells of X plaquettes tagged ``AIT_ADJACENT_X``.
        d3_region: Cells of plaquettes tagged ``AIT_D3``.
        rounds: Rounds run by the completion.
        merge: Ancilla chain of the logical ZZ merge, if any.
    """

    spec: PatchSpec
    zero_init_set: frozenset
    plus_init_set: frozenset
    withheld_stabilizer: tuple[int, int] | None
    adjacent_x_set: frozenset
    d3_region: frozenset
    rounds: int = 3
    merge: MergeSpec | None = None

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be positive")

    def unknown_support(self) -> list[tuple[int, int]]:
        """Part of the row-0 logical Z on |+> data (its value is unknown)."""
        return [c for c in self.spec.logical_z() if c in self.plus_init_set]


def ait_schedule(spec: PatchSpec, rounds: int = 3, merge: MergeSpec | None = None) -> AitSchedule:
    """Schedule used by :func:`emit_ait_init` for ``spec``."""
    plus = frozenset(ij for ij in spec.data if ij[1] < CORNER)
    w = spec.withheld
    regions = {s.cell: spec.region(s) for s in spec.stabilizers}
    return AitSchedule(spec, frozenset(spec.data) - plus, plus, w.cell if w else None,
                       frozenset(c for c, r in regions.items() if r == "AIT_ADJACENT_X"),
                       frozenset(c for c, r in regions.items() if r == "AIT_D3"), rounds, merge)


def _with_deterministic(b: CircuitBuilder, cand, extra=()) -> Circuit:
    """Build ``b`` keeping the candidate detectors whose reference value is fixed."""
    draft = b.build()
    rec = tableau_simulate(draft)
    idx = b.handle_index
    dets = list(extra)
    for hs, region, label in cand:
        ms = [idx[h] for h in hs]
        if rec.parity(ms)[1]:
            dets.append(DetectorDef(tuple(ms), region, label))
    return Circuit(draft.instructions, draft.layout, dets, [], dict(b.metadata))


def ait_init(spec: PatchSpec) -> tuple[Circuit, AitSchedule]:
    """Product-state preparation plus the first partial round, with the
    deterministic first-round outcomes as detectors."""
    b = CircuitBuilder(name="ait_init")
    st = emit_ait_init(b, spec, 0)
    return _with_deterministic(b, patch_detectors(st)), ait_schedule(spec)


def ait_complete(spec: PatchSpec, schedule: AitSchedule | None = None) -> Circuit:
    """AIT initialization followed by ``schedule.rounds`` full rounds and an
    X readout of the data (the completed patch is in logical |+>)."""
    schedule = schedule or ait_schedule(spec)
    b = CircuitBuilder(name="ait_complete")
    st = emit_ait_init(b, spec, 0)
    end = emit_ait_complete(b, st, ROUND_STEPS, schedule.rounds)
    readout_x(b, st, end + 1)
    return _with_deterministic(b, patch_detectors(st))


def patch_rounds(spec: PatchSpec, n: int) -> Circuit:
    """A patch prepared in |0> followed by ``n`` standard rounds.

    Raises:
        ValueError: If ``n < 1``.
    """
    if n < 1:
        raise ValueError("at least one round is required")
    b = CircuitBuilder(name="patch_rounds")
    st = allocate(b, spec)
    b.reset_z(list(st.qubits.values()), 0)
    t = 1
    for _ in range(n):
        t = patch_round(b, st, t) + 1
    cand = [(hs, "OUTPUT_PATCH", label) for hs, _, label in patch_detectors(st)]
    return _with_deterministic(b, cand)


def zz_merge(code_logical: PauliString, schedule: AitSchedule, basis: str = "X") -> Circuit:
    """Logical ``Z_block Z_patch`` measurement between the code block and a patch.

    With ``basis="X"`` the block is encoded in logical |+++> and the patch is
    AIT-initialized (logical |+>), so the outcome is random; with
    ``basis="Z"`` both start in |0...0> and the outcome is fixed. The
    outcome is a detector in region ``MERGE`` (random for ``"X"``).

    Raises:
        ValueError: If ``code_logical`` is not a weight-2 Z operator on the
            data collected by ``schedule.merge``.
    """
    if schedule.merge is None:
        raise ValueError("schedule has no merge chain")
    if basis not in ("X", "Z"):
        raise ValueError("basis must be 'X' or 'Z'")
    sup = list(code_logical.support)
    if code_logical.n_qubits != c832.N or len(sup) != 2 or not code_logical.is_z_type():
        raise ValueError("code_logical must be a weight-2 Z operator on the block")
    spec = schedule.spec
    patch_pos = spec.positions()
    collected = {p for cs in schedule.merge.collects for p in cs}
    if {c832.DATA_POSITIONS[q] for q in sup} != collected - patch_pos:
        raise ValueError("code_logical does not match the merge chain")
    b = CircuitBuilder(name="zz_merge")
    d = c832.data_qubits(b)
    if basis == "X":
        c832.emit_inputs(b, d, 0)
        t = c832.emit_encoder(b, d, 1)
        st = emit_ait_init(b, spec, 0)
        t = max(t, ROUND_STEPS)
    else:
        b.reset_z(list(d.values()), 0)
        st = allocate(b, spec)
        b.reset_z(list(st.qubits.values()), 0)
        t = 1
    hs, _, _ = emit_merge(b, schedule.merge, t)
    b.detector(hs, "MERGE", "ZZ")
    return b.build()
