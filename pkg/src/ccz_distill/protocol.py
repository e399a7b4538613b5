"""Assembly of the full zero-level distillation circuit.

Timeline (time steps for the default parameters):

* fault-tolerant encoding of |+++> into the [[8,3,2]] block, transversal
  ``T``/``T†`` in the step of the final encoder check;
* three cat-state ZZ merges, each joining one logical qubit of the block to
  an injected surface-code patch (patches run their first round beforehand);
* syndrome extraction on the block (all-X check, then two Z planes) while
  the patches run their remaining rounds;
* destructive X readout of the block and of the patches.

Every check except the patch output region is postselected. Observables
are the products of block and patch logical X operators, i.e. the logical
states that the three patches carry after the block is measured out.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from . import code832 as c832
from .circuit import (Circuit, CircuitBuilder, DetectorDef, Kind, ObservableDef,
                      circuit_depth, validate_connectivity)
from .surface import (MergeSpec, PatchSpec, ROUND_STEPS, emit_ait_complete, emit_ait_init,
                      emit_merge, patch_detectors, readout_x)
from .tableau import NonDeterministicError, determinize, tableau_simulate

OUTPUT_REGIONS = frozenset({"OUTPUT_PATCH"})

# Per output: merge chain, block logical-X support, patch placement (origin, u, v).
MERGES: dict[str, MergeSpec] = {
    "L1": MergeSpec(((1, 5), (1, 4), (1, 3), (0, 3), (-1, 3)), 3,
                    (((2, 5), (0, 5)), ((2, 4),), (), (), ((-1, 4), (-2, 3)))),
    "L2": MergeSpec(((4, 4), (4, 3), (4, 2), (5, 2), (6, 2)), 3,
                    (((3, 4), (5, 4)), ((3, 3),), (), (), ((6, 3), (7, 2)))),
    "L3": MergeSpec(((2, 1), (3, 1), (4, 1), (4, 0), (4, -1)), 2,
                    (((2, 2), (2, 0)), ((3, 2),), (), (), ((3, -1), (4, -2)))),
}
BLOCK_LOGICAL_X = {"L1": (0, 1, 2, 3), "L2": (0, 1, 4, 5), "L3": (0, 2, 4, 6)}
PATCHES = {
    "L1": ((0, 5), (-1, -1), (-1, 1)),
    "L2": ((5, 4), (1, -1), (1, 1)),
    "L3": ((2, 0), (1, -1), (-1, -1)),
}


@dataclass(frozen=True)
class ProtocolParams:
    """Parameters of the distillation circuit.

    Attributes:
        d: Distance of the output patches (odd, >= 3).
        rounds: Patch rounds after the merge; ``None`` means ``d``.
        clifford_approx: Treat the transversal ``T`` layer as identity in
            the reference run (required for stabilizer simulation).
    """

    d: int = 3
    rounds: int | None = None
    clifford_approx: bool = True
    ghz_lead: int = 2

    def __post_init__(self):
        if self.d < 3 or self.d % 2 == 0:
            raise ValueError(f"d must be odd and >= 3, got {self.d}")
        if self.ghz_lead < 0:
            raise ValueError("ghz_lead must be non-negative")
        if self.rounds is not None and self.rounds < 1:
            raise ValueError("rounds must be positive")

    @property
    def expansion(self) -> bool:
        """Whether the output patches are grown beyond the ``3 x 3`` corner."""
        return self.d > 3

    @property
    def n_rounds(self) -> int:
        return self.d if self.rounds is None else self.rounds

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AnnotatedCircuit:
    """Noiseless protocol circuit with acceptance metadata.

    Attributes:
        circuit: The circuit with detectors and observables.
        params: Parameters it was built from.
        postselect: Boolean mask over detectors that must all be silent.
        decode: Boolean mask over detectors passed to the output decoder.
        stages: Named ``(first_step, last_step)`` windows.
        stage_cnots: CNOT count per stage.
    """

    circuit: Circuit
    params: ProtocolParams
    postselect: np.ndarray
    decode: np.ndarray
    stages: dict[str, tuple[int, int]] = field(default_factory=dict)
    stage_cnots: dict[str, int] = field(default_factory=dict)

    @property
    def accept_detectors(self) -> set[int]:
        return acceptance_spec(self)

    @property
    def stats(self) -> dict:
        return circuit_stats(self.circuit, self.params.d)


def patch_specs(d: int) -> dict[str, PatchSpec]:
    return {k: PatchSpec(d, *v) for k, v in PATCHES.items()}


def block_positions() -> set[tuple[int, int]]:
    pos = set(c832.DATA_POSITIONS.values())
    pos |= {c832.ancilla_position(q) for q in range(c832.N)}
    return pos | set(c832.GHZ_CHAIN)


def check_layout(d: int) -> None:
    """Raise if patches overlap each other, the block, or a merge chain."""
    used = block_positions()
    merge_pos = {p for m in MERGES.values() for p in m.members}
    specs = patch_specs(d)
    seen: dict[tuple[int, int], str] = {}
    for name, spec in specs.items():
        for p in spec.positions():
            if p in used or p in merge_pos:
                raise ValueError(f"patch {name} collides with the block layout at {p}")
            if p in seen:
                raise ValueError(f"patches {seen[p]} and {name} overlap at {p}")
            seen[p] = name
    for name, m in MERGES.items():
        d0 = specs[name].data_pos(0, 0)
        wanted = {d0, specs[name].data_pos(0, 1), specs[name].data_pos(0, 2)}
        got = {p for cs in m.collects for p in cs} - set(c832.DATA_POSITIONS.values())
        if got != wanted:
            raise ValueError(f"merge {name} does not couple to the patch logical-Z row")


def _stage_cnots(circ: Circuit, stages: dict[str, tuple[int, int]], qubits: set[int]) -> dict[str, int]:
    out = {}
    for name, (lo, hi) in stages.items():
        out[name] = sum(1 for i in circ.instructions if i.kind == Kind.CNOT
                        and lo <= i.time_step <= hi and set(i.targets) <= qubits)
    return out


def assemble(params: ProtocolParams | None = None) -> AnnotatedCircuit:
    """Build the annotated (noiseless) protocol circuit.

    Raises:
        ValueError: For an inconsistent layout.
        NonDeterministicError: If a check cannot be made deterministic.
    """
    params = params or ProtocolParams()
    check_layout(params.d)
    b = CircuitBuilder(name="zero_level_ccz")
    cand: list[tuple[list[int], str, str]] = []

    # Block: FT encoding and transversal CCZ.
    t_ccz = c832.emit_ft_encoder(b, 0)
    c832.emit_transversal_ccz(b, t_ccz)
    stages = {"encoder": (0, t_ccz)}

    # Merges; block ancillas just measured in X are reused as |+>.
    b_anc = {c832.ancilla_position(q) for q in range(c832.N)}
    merge_meas, merge_end, first_collect = {}, {}, {}
    for name, m in MERGES.items():
        prepared = b_anc & set(m.members)
        t0 = t_ccz if prepared else t_ccz - 3
        hs, first, end = emit_merge(b, m, t0, collect_from=t_ccz + 1, prepared=prepared)
        merge_meas[name], merge_end[name], first_collect[name] = hs, end, first
    stages["merge"] = (t_ccz + 1, max(merge_end.values()))

    # Patches: first round before the merge, remaining rounds after it.
    specs = patch_specs(params.d)
    states, patch_end = {}, {}
    for name, spec in specs.items():
        st = emit_ait_init(b, spec, first_collect[name] - ROUND_STEPS)
        patch_end[name] = emit_ait_complete(b, st, merge_end[name] + 1, params.n_rounds)
        states[name] = st

    # Block syndrome extraction after the merges that use the block ancillas.
    # Chain qubits start as soon as they are free; the root fixes the start.
    free = {p: b.last_use(b.qubit(p)) + 1 for p in c832.GHZ_CHAIN}
    t_sd = max(free.values()) - params.ghz_lead
    free = {p: max(t, t_sd) for p, t in free.items()}
    sd = c832.emit_superdense(b, t_sd, free)
    c832.annotate_superdense(b, sd)
    stages["superdense"] = (t_sd, sd.end)

    # Readout.
    block = c832.emit_block_readout(b, sd.end + 1)
    b.detector(list(block.values()), "READOUT_832", "X_all")
    stages["readout"] = (sd.end + 1, sd.end + 1)
    for name, st in states.items():
        readout_x(b, st, patch_end[name] + 1)
        cand.extend(patch_detectors(st))
    obs = {}
    for name, st in states.items():
        obs[name] = [block[q] for q in BLOCK_LOGICAL_X[name]] + [st.readout[c] for c in st.spec.logical_x()]

    draft = b.build()
    idx = b.handle_index
    rec = tableau_simulate(draft, params.clifford_approx)
    allowed = {idx[h] for h in sd.kickback}

    detectors = []
    for det in draft.detectors:
        detectors.append(DetectorDef(tuple(determinize(rec, det.measurements, allowed)),
                                     det.region, det.label))
    for hs, region, label in cand:
        ms = [idx[h] for h in hs]
        try:
            ms = determinize(rec, ms, allowed)
        except NonDeterministicError:
            # First appearance of a plaquette whose value is random by design.
            if label.endswith("r0"):
                continue
            raise NonDeterministicError(f"patch detector {region} {label} is random") from None
        detectors.append(DetectorDef(tuple(ms), region, label))
    observables = [ObservableDef(name, tuple(determinize(rec, [idx[h] for h in hs], allowed)))
                   for name, hs in sorted(obs.items())]
    meta = {"name": "zero_level_ccz", "d": str(params.d), "rounds": str(params.n_rounds)}
    circ = Circuit(draft.instructions, draft.layout, detectors, observables, meta)
    circ.validate()

    regions = np.array([dd.region for dd in circ.detectors])
    decode = np.isin(regions, list(OUTPUT_REGIONS))
    block_qubits = {b.qubit(p) for p in block_positions()}
    return AnnotatedCircuit(circ, params, ~decode, decode, stages,
                            _stage_cnots(circ, stages, block_qubits))


def acceptance_spec(ann: AnnotatedCircuit) -> set[int]:
    """Indices of the detectors that must all be silent for acceptance."""
    return {int(i) for i in np.nonzero(ann.postselect)[0]}


@dataclass
class StructureReport:
    """Resource summary of the distillation circuit.

    Attributes:
        distillation_qubits: Qubits used outside the output patches.
        total_qubits: All qubits including the patches.
        logical_outputs: Number of output logical qubits.
        depth: Time steps from the first operation to the block readout.
        encoder_depth: CNOT layers of the non-FT encoder.
        encoder_cnots: CNOTs of the non-FT encoder.
        superdense_depth: Time steps of the block syndrome extraction.
        superdense_cnots: CNOTs of the block syndrome extraction.
        connectivity_violations: Two-qubit gates between non-neighbours.
    """

    distillation_qubits: int
    total_qubits: int
    logical_outputs: int
    depth: int
    encoder_depth: int
    encoder_cnots: int
    superdense_depth: int
    superdense_cnots: int
    connectivity_violations: int

    def to_dict(self) -> dict:
        return asdict(self)


def report_stats(ann: AnnotatedCircuit) -> StructureReport:
    circ = ann.circuit
    base = circuit_stats(circ, ann.params.d)
    enc = c832.nonft_encoder()
    t_lo, t_hi = ann.stages["superdense"]
    return StructureReport(
        distillation_qubits=base["distillation_qubits"],
        total_qubits=base["total_qubits"],
        logical_outputs=base["logical_outputs"],
        depth=base["depth"],
        encoder_depth=len(c832.ENCODER_LAYERS),
        encoder_cnots=enc.count(Kind.CNOT),
        superdense_depth=t_hi - t_lo + 1,
        superdense_cnots=ann.stage_cnots["superdense"],
        connectivity_violations=base["connectivity_violations"],
    )


def circuit_stats(circ: Circuit, d: int | None = None) -> dict:
    """Structure statistics computable from a protocol circuit alone.

    ``d`` defaults to the circuit's ``d`` metadata; the depth is counted up to
    the destructive readout of the block data qubits (or the last step if the
    circuit has no such readout).
    """
    d = int(circ.metadata.get("d", 3)) if d is None else d
    patch_pos = set().union(*(s.positions() for s in patch_specs(d).values()))
    coords = circ.layout.coords
    used = set(circ.qubits)
    data_pos = set(c832.DATA_POSITIONS.values())
    reads = [i.time_step for i in circ.instructions
             if i.kind == Kind.MEAS_X and coords.get(i.targets[0]) in data_pos]
    last = max(reads) if reads else circuit_depth(circ) - 1
    return {
        "distillation_qubits": sum(1 for q in used if coords.get(q) not in patch_pos),
        "total_qubits": len(used),
        "logical_outputs": len(circ.observables),
        "depth": last + 1,
        "connectivity_violations": len(validate_connectivity(circ)),
    }
