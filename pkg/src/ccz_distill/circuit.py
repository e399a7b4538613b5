"""Circuit intermediate representation.

Instructions carry an explicit ``time_step``; detectors and observables refer
to measurements by their index in instruction order. Circuits are normally
produced with :class:`CircuitBuilder`, which hands out measurement handles so
that sub-circuits can be scheduled out of order and still be annotated.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class Kind(str, enum.Enum):
    RESET_Z = "RESET_Z"
    RESET_X = "RESET_X"
    MEAS_Z = "MEAS_Z"
    MEAS_X = "MEAS_X"
    H = "H"
    S = "S"
    T = "T"
    T_DAGGER = "T_DAGGER"
    CNOT = "CNOT"
    NOISE_DEPOL1 = "NOISE_DEPOL1"
    NOISE_DEPOL2 = "NOISE_DEPOL2"
    NOISE_FLIP = "NOISE_FLIP"
    TICK = "TICK"


RESETS = frozenset({Kind.RESET_Z, Kind.RESET_X})
MEASUREMENTS = frozenset({Kind.MEAS_Z, Kind.MEAS_X})
NOISE = frozenset({Kind.NOISE_DEPOL1, Kind.NOISE_DEPOL2, Kind.NOISE_FLIP})
SINGLE_QUBIT_GATES = frozenset({Kind.H, Kind.S, Kind.T, Kind.T_DAGGER})
NON_CLIFFORD = frozenset({Kind.T, Kind.T_DAGGER})
TWO_QUBIT = frozenset({Kind.CNOT, Kind.NOISE_DEPOL2})

REGIONS = (
    "VERIFY_832",
    "SYNDROME_832",
    "READOUT_832",
    "AIT_D3",
    "AIT_ADJACENT_X",
    "AIT_NEW_X",
    "MERGE",
    "OUTPUT_PATCH",
)
OBSERVABLE_LABELS = ("L1", "L2", "L3")


class CircuitError(ValueError):
    """Raised for malformed circuits or circuit text."""


@dataclass(frozen=True)
class Instruction:
    """A single operation.

    Attributes:
        kind: Operation kind.
        targets: Qubit ids (two for CNOT/NOISE_DEPOL2, one otherwise, none for TICK).
        time_step: Scheduling slot. Noise shares the slot of the operation it decorates.
        p: Channel probability for noise kinds.
        pauli: Flip axis ("X" or "Z") for NOISE_FLIP.
    """

    kind: Kind
    targets: tuple[int, ...]
    time_step: int = 0
    p: float | None = None
    pauli: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        n = len(self.targets)
        if self.kind == Kind.TICK:
            if n:
                raise CircuitError("TICK takes no targets")
        elif self.kind in TWO_QUBIT:
            if n != 2:
                raise CircuitError(f"{self.kind.value} needs exactly 2 targets, got {n}")
            if self.targets[0] == self.targets[1]:
                raise CircuitError(f"{self.kind.value} targets must differ")
        elif n != 1:
            raise CircuitError(f"{self.kind.value} needs exactly 1 target, got {n}")
        if self.kind in NOISE:
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise CircuitError(f"{self.kind.value} needs a probability in [0, 1]")
        if self.kind == Kind.NOISE_FLIP and self.pauli not in ("X", "Z"):
            raise CircuitError("NOISE_FLIP needs pauli 'X' or 'Z'")

    @property
    def is_noise(self) -> bool:
        return self.kind in NOISE


@dataclass
class GridLayout:
    """Map from qubit id to integer ``(row, col)`` grid position."""

    coords: dict[int, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        self.coords = {int(q): (int(r), int(c)) for q, (r, c) in self.coords.items()}
        seen: dict[tuple[int, int], int] = {}
        for q, rc in self.coords.items():
            if rc in seen:
                raise CircuitError(f"qubits {seen[rc]} and {q} share position {rc}")
            seen[rc] = q

    def position(self, q: int) -> tuple[int, int]:
        try:
            return self.coords[q]
        except KeyError:
            raise CircuitError(f"qubit {q} has no grid position") from None

    def adjacent(self, a: int, b: int) -> bool:
        (r1, c1), (r2, c2) = self.position(a), self.position(b)
        return abs(r1 - r2) + abs(c1 - c2) == 1

    def shifted(self, dr: int, dc: int) -> "GridLayout":
        return GridLayout({q: (r + dr, c + dc) for q, (r, c) in self.coords.items()})

    def qubit_at(self) -> dict[tuple[int, int], int]:
        return {rc: q for q, rc in self.coords.items()}


@dataclass(frozen=True)
class DetectorDef:
    """Parity of measurement outcomes that is fixed in the noiseless run."""

    measurements: tuple[int, ...]
    region: str
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "measurements", tuple(sorted(int(m) for m in self.measurements)))
        if self.region not in REGIONS:
            raise CircuitError(f"unknown detector region {self.region!r}")


@dataclass(frozen=True)
class ObservableDef:
    """Logical outcome defined as a parity of measurement outcomes."""

    label: str
    measurements: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "measurements", tuple(sorted(int(m) for m in self.measurements)))
        if self.label not in OBSERVABLE_LABELS:
            raise CircuitError(f"unknown observable label {self.label!r}")


@dataclass
class Circuit:
    """Time-ordered instruction list with layout and annotations."""

    instructions: list[Instruction] = field(default_factory=list)
    layout: GridLayout = field(default_factory=GridLayout)
    detectors: list[DetectorDef] = field(default_factory=list)
    observables: list[ObservableDef] = field(default_factory=list)
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        last = -1
        busy: dict[int, set[int]] = {}
        for ins in self.instructions:
            if ins.time_step < last:
                raise CircuitError("time steps must be non-decreasing")
            last = ins.time_step
            if ins.is_noise or ins.kind == Kind.TICK:
                continue
            used = busy.setdefault(ins.time_step, set())
            for q in ins.targets:
                if q in used:
                    raise CircuitError(f"qubit {q} used twice in time step {ins.time_step}")
                used.add(q)
        n_meas = self.num_measurements
        for ann in [*self.detectors, *self.observables]:
            for m in ann.measurements:
                if not 0 <= m < n_meas:
                    raise CircuitError(f"measurement index {m} out of range ({n_meas})")

    @property
    def num_measurements(self) -> int:
        return sum(1 for ins in self.instructions if ins.kind in MEASUREMENTS)

    @property
    def qubits(self) -> list[int]:
        qs = {q for ins in self.instructions for q in ins.targets}
        return sorted(qs | set(self.layout.coords))

    @property
    def num_qubits(self) -> int:
        qs = self.qubits
        return (max(qs) + 1) if qs else 0

    def measurement_instructions(self) -> list[Instruction]:
        return [ins for ins in self.instructions if ins.kind in MEASUREMENTS]

    def count(self, kind: Kind) -> int:
        return sum(1 for ins in self.instructions if ins.kind == kind)

    def is_noisy(self) -> bool:
        return any(ins.is_noise for ins in self.instructions)

    def without_noise(self) -> "Circuit":
        return Circuit([i for i in self.instructions if not i.is_noise], self.layout,
                       list(self.detectors), list(self.observables), dict(self.metadata))


# -- structural queries -------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    instruction: Instruction
    reason: str


def validate_connectivity(circ: Circuit) -> list[Violation]:
    """Return every CNOT whose endpoints are not grid nearest neighbours."""
    out = []
    for ins in circ.instructions:
        if ins.kind != Kind.CNOT:
            continue
        a, b = ins.targets
        if not circ.layout.adjacent(a, b):
            out.append(Violation(ins, f"CNOT {a}-{b} between {circ.layout.position(a)} "
                                      f"and {circ.layout.position(b)} is not nearest-neighbour"))
    for ins in circ.instructions:
        for q in ins.targets:
            circ.layout.position(q)
    return out


def circuit_depth(circ: Circuit) -> int:
    """Number of time steps holding at least one non-noise operation."""
    return len({ins.time_step for ins in circ.instructions
                if not ins.is_noise and ins.kind != Kind.TICK})


# -- builder --------------------------------------------------------------------

class CircuitBuilder:
    """Accumulates instructions in any time order.

    Measurement methods return opaque handles; :meth:`build` sorts the
    instructions by time step and rewrites handles into measurement indices.
    """

    def __init__(self, layout: GridLayout | dict | None = None, name: str = ""):
        coords = layout.coords if isinstance(layout, GridLayout) else (layout or {})
        self.coords: dict[int, tuple[int, int]] = dict(coords)
        self._at: dict[tuple[int, int], int] = {rc: q for q, rc in self.coords.items()}
        self._ops: list[tuple[int, int, Instruction, int | None]] = []
        self._n_handles = 0
        self.detectors: list[tuple[tuple[int, ...], str, str]] = []
        self.observables: dict[str, list[int]] = {}
        self.metadata: dict[str, str] = {"name": name} if name else {}

    def place(self, q: int, row: int, col: int) -> None:
        self.coords[q] = (row, col)
        self._at[(row, col)] = q

    def qubit(self, pos: tuple[int, int]) -> int:
        """Id of the qubit at grid position ``pos``, allocating a new one if needed."""
        pos = (int(pos[0]), int(pos[1]))
        if pos in self._at:
            return self._at[pos]
        q = max(self.coords, default=-1) + 1
        self.place(q, *pos)
        return q

    def last_use(self, q: int) -> int:
        """Latest time step at which qubit ``q`` is touched (-1 if never)."""
        return max((t for t, _, ins, _ in self._ops if q in ins.targets), default=-1)

    def op(self, kind: Kind | str, targets: Sequence[int], t: int) -> int | None:
        kind = Kind(kind)
        handle = None
        if kind in MEASUREMENTS:
            handle = self._n_handles
            self._n_handles += 1
        self._ops.append((t, len(self._ops), Instruction(kind, tuple(targets), t), handle))
        return handle

    def reset_z(self, qs: Iterable[int], t: int) -> None:
        for q in qs:
            self.op(Kind.RESET_Z, [q], t)

    def reset_x(self, qs: Iterable[int], t: int) -> None:
        for q in qs:
            self.op(Kind.RESET_X, [q], t)

    def measure_z(self, q: int, t: int) -> int:
        return self.op(Kind.MEAS_Z, [q], t)

    def measure_x(self, q: int, t: int) -> int:
        return self.op(Kind.MEAS_X, [q], t)

    def cnot(self, c: int, tgt: int, t: int) -> None:
        self.op(Kind.CNOT, [c, tgt], t)

    def cnots(self, pairs: Iterable[tuple[int, int]], t: int) -> None:
        for c, tgt in pairs:
            self.cnot(c, tgt, t)

    def gate(self, kind: Kind | str, q: int, t: int) -> None:
        self.op(kind, [q], t)

    def detector(self, handles: Iterable[int], region: str, label: str = "") -> None:
        self.detectors.append((tuple(handles), region, label))

    def observable(self, label: str, handles: Iterable[int]) -> None:
        self.observables.setdefault(label, []).extend(handles)

    def build(self) -> Circuit:
        ordered = sorted(self._ops, key=lambda r: (r[0], r[1]))
        index: dict[int, int] = {}
        instructions = []
        for _, _, ins, handle in ordered:
            if handle is not None:
                index[handle] = len(index)
            instructions.append(ins)

        def remap(hs):
            # Repeated handles cancel in a parity.
            counts: dict[int, int] = {}
            for h in hs:
                counts[index[h]] = counts.get(index[h], 0) ^ 1
            return tuple(sorted(m for m, c in counts.items() if c))

        self.handle_index = index
        detectors = [DetectorDef(remap(hs), region, label) for hs, region, label in self.detectors]
        observables = [ObservableDef(lab, remap(hs)) for lab, hs in sorted(self.observables.items())]
        return Circuit(instructions, GridLayout(self.coords), detectors, observables,
                       dict(self.metadata))


# -- text format --------------------------------------------------------------------

_NOISE_RE = re.compile(r"^(NOISE_DEPOL1|NOISE_DEPOL2|NOISE_FLIP)\(([^)]*)\)$")


def _fmt_p(p: float) -> str:
    return repr(float(p))


def emit_text(circ: Circuit) -> str:
    """Serialise a circuit to the line-oriented text format."""
    lines = []
    name = circ.metadata.get("name")
    if name:
        lines.append(f"# circuit: {name}")
    for k in sorted(circ.metadata):
        lines.append(f"META {k}={circ.metadata[k]}")
    for q in sorted(circ.layout.coords):
        r, c = circ.layout.coords[q]
        lines.append(f"QUBIT {q} {r} {c}")
    step = 0
    for ins in circ.instructions:
        if ins.kind == Kind.TICK:
            continue
        while step < ins.time_step:
            lines.append("TICK")
            step += 1
        if ins.kind == Kind.NOISE_FLIP:
            head = f"{ins.kind.value}({_fmt_p(ins.p)},{ins.pauli})"
        elif ins.is_noise:
            head = f"{ins.kind.value}({_fmt_p(ins.p)})"
        else:
            head = ins.kind.value
        lines.append(" ".join([head, *map(str, ins.targets)]))
    for det in circ.detectors:
        label = f" label={det.label}" if det.label else ""
        lines.append(f"DETECTOR region={det.region}{label} "
                     + " ".join(f"m{m}" for m in det.measurements))
    for obs in circ.observables:
        lines.append(f"OBSERVABLE {obs.label} " + " ".join(f"m{m}" for m in obs.measurements))
    return "\n".join(lines) + "\n"


def _parse_int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise CircuitError(f"line {lineno}: expected integer, got {tok!r}") from None


def _parse_meas_refs(toks: list[str], lineno: int) -> list[int]:
    out = []
    for tok in toks:
        if not tok.startswith("m"):
            raise CircuitError(f"line {lineno}: expected measurement reference, got {tok!r}")
        out.append(_parse_int(tok[1:], lineno))
    return out


def parse_text(text: str) -> Circuit:
    """Parse the text format produced by :func:`emit_text`."""
    instructions: list[Instruction] = []
    coords: dict[int, tuple[int, int]] = {}
    detectors: list[DetectorDef] = []
    observables: list[ObservableDef] = []
    metadata: dict[str, str] = {}
    step = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        head, rest = toks[0], toks[1:]
        try:
            if head == "TICK":
                if rest:
                    raise CircuitError(f"line {lineno}: TICK takes no arguments")
                step += 1
            elif head == "META":
                for tok in rest:
                    k, _, v = tok.partition("=")
                    metadata[k] = v
            elif head == "QUBIT":
                if len(rest) != 3:
                    raise CircuitError(f"line {lineno}: QUBIT needs id row col")
                q, r, c = (_parse_int(t, lineno) for t in rest)
                coords[q] = (r, c)
            elif head == "DETECTOR":
                region, label, refs = None, "", []
                for tok in rest:
                    if tok.startswith("region="):
                        region = tok[7:]
                    elif tok.startswith("label="):
                        label = tok[6:]
                    else:
                        refs.append(tok)
                if region is None:
                    raise CircuitError(f"line {lineno}: DETECTOR needs region=<tag>")
                detectors.append(DetectorDef(tuple(_parse_meas_refs(refs, lineno)), region, label))
            elif head == "OBSERVABLE":
                if not rest:
                    raise CircuitError(f"line {lineno}: OBSERVABLE needs a label")
                observables.append(ObservableDef(rest[0], tuple(_parse_meas_refs(rest[1:], lineno))))
            else:
                m = _NOISE_RE.match(head)
                p = pauli = None
                if m:
                    kind = Kind(m.group(1))
                    args = m.group(2).split(",")
                    try:
                        p = float(args[0])
                    except ValueError:
                        raise CircuitError(f"line {lineno}: bad probability {args[0]!r}") from None
                    if kind == Kind.NOISE_FLIP:
                        pauli = args[1] if len(args) > 1 else None
                else:
                    try:
                        kind = Kind(head)
                    except ValueError:
                        raise CircuitError(f"line {lineno}: unknown instruction {head!r}") from None
                targets = tuple(_parse_int(t, lineno) for t in rest)
                instructions.append(Instruction(kind, targets, step, p, pauli))
        except CircuitError as exc:
            msg = str(exc)
            raise CircuitError(msg if msg.startswith("line ") else f"line {lineno}: {msg} "
                               f"(token {head!r})") from None
    return Circuit(instructions, GridLayout(coords), detectors, observables, metadata)
