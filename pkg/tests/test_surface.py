import numpy as np
import pytest

from ccz_distill.circuit import Circuit, CircuitBuilder, DetectorDef, validate_connectivity
from ccz_distill.code832 import N as N_BLOCK
from ccz_distill.pauli import PauliString, commutes
from ccz_distill.protocol import MERGES, PATCHES
from ccz_distill.surface import (MergeSpec, PatchSpec, ROUND_STEPS, ait_complete, ait_init,
                                 ait_schedule, emit_ait_complete, emit_ait_init, emit_merge,
                                 patch_detectors, patch_rounds, readout_x, zz_merge)
from ccz_distill.tableau import NonDeterministicError, certify, determinize, tableau_simulate

from helpers import inject, single_fault_flips

SPEC = dict(origin=(0, 0), u=(1, 1), v=(1, -1))


def spec(d):
    return PatchSpec(d, **SPEC)


def _pauli(sp, support, kind):
    idx = {ij: k for k, ij in enumerate(sp.data)}
    qs = [idx[c] for c in support]
    n = len(sp.data)
    return PauliString.from_support(n, x=qs) if kind == "X" else PauliString.from_support(n, z=qs)


def test_spec_validation():
    with pytest.raises(ValueError):
        PatchSpec(4, **SPEC)
    with pytest.raises(ValueError):
        PatchSpec(3, (0, 0), (1, 0), (0, 1))
    with pytest.raises(ValueError):
        PatchSpec(3, (0, 0), (1, 1), (1, 1))


@pytest.mark.parametrize("d", [3, 5, 7])
def test_patch_code(d):
    sp = spec(d)
    stabs = sp.stabilizers
    assert len(stabs) == d * d - 1
    assert sum(s.kind == "X" for s in stabs) == (d * d - 1) // 2
    ops = [_pauli(sp, s.support, s.kind) for s in stabs]
    lx, lz = _pauli(sp, sp.logical_x(), "X"), _pauli(sp, sp.logical_z(), "Z")
    for a in ops:
        assert commutes(a, lx) and commutes(a, lz)
        for b in ops:
            assert commutes(a, b)
    assert not commutes(lx, lz)
    # Ancillas are grid neighbours of their data and positions are distinct.
    pos = [sp.data_pos(*ij) for ij in sp.data] + [s.pos for s in stabs]
    assert len(set(pos)) == len(pos)
    for s in stabs:
        for c in s.support:
            p = sp.data_pos(*c)
            assert abs(p[0] - s.pos[0]) + abs(p[1] - s.pos[1]) == 1


def test_withheld_and_unknown_support():
    assert spec(3).withheld is None
    sp = spec(5)
    w = sp.withheld
    assert w.kind == "X"
    # The row-0 logical Z is known (|0>) outside the first three columns;
    # its unknown part has weight 3.
    unknown = [c for c in sp.logical_z() if c[1] < 3]
    assert len(unknown) == 3
    # The withheld plaquette is the only X plaquette anticommuting with that segment.
    seg = _pauli(sp, unknown, "Z")
    anti = [s for s in sp.stabilizers if s.kind == "X" and not commutes(_pauli(sp, s.support, "X"), seg)]
    assert [s.cell for s in anti] == [w.cell]
    assert sp.region(w) == "AIT_NEW_X"


def _standalone(d, rounds, readout=True):
    sp = spec(d)
    b = CircuitBuilder()
    st = emit_ait_init(b, sp, 0)
    end = emit_ait_complete(b, st, ROUND_STEPS, rounds)
    if readout:
        readout_x(b, st, end + 1)
    draft = b.build()
    rec = tableau_simulate(draft)
    idx = b.handle_index
    dets = []
    for hs, region, label in patch_detectors(st):
        ms = [idx[h] for h in hs]
        if rec.parity(ms)[1]:
            dets.append(DetectorDef(tuple(ms), region, label))
        else:
            assert label.endswith("r0"), label
    return Circuit(draft.instructions, draft.layout, dets), sp, st


@pytest.mark.parametrize("d", [3, 5])
def test_ait_noiseless_and_complete(d):
    circ, sp, st = _standalone(d, 3)
    rec = certify(circ)
    for det in circ.detectors:
        assert rec.parity(det.measurements) == (0, True)
    assert validate_connectivity(circ) == []
    # After completion every stabilizer of the full patch is stable round to round.
    labels = {det.label for det in circ.detectors}
    for s in sp.stabilizers:
        n = len(st.history[s.cell])
        assert n == (3 if s == sp.withheld else 4)
        for r in range(1, n):
            assert f"{s.kind}{s.cell[0]}_{s.cell[1]}r{r}" in labels
    # Random first outcomes are exactly the Z plaquettes touching the |+>
    # columns and, for d > 3, X plaquettes touching the |0> columns.
    first = {det.label for det in circ.detectors if det.label.endswith("r0")}
    for s in sp.stabilizers:
        lab = f"{s.kind}{s.cell[0]}_{s.cell[1]}r0"
        if s.kind == "Z":
            expect = all(c[1] >= 3 for c in s.support)
        else:
            expect = all(c[1] < 3 for c in s.support) and s != sp.withheld
        assert (lab in first) == expect, lab
    # The patch is prepared in logical |+>.
    assert rec.parity([st.readout[c] for c in sp.logical_x()]) == (0, True)


def test_regions_d3():
    sp = spec(3)
    regions = {sp.region(s) for s in sp.stabilizers}
    assert regions == {"AIT_D3", "AIT_ADJACENT_X"}


def test_zero_rounds_rejected():
    b = CircuitBuilder()
    st = emit_ait_init(b, spec(3), 0)
    with pytest.raises(ValueError):
        emit_ait_complete(b, st, ROUND_STEPS, 0)


def test_bulk_data_fault_two_z_plaquettes():
    circ, sp, st = _standalone(5, 3, readout=False)
    q = st.qubits[(2, 2)]
    # Between round 1 (ends at step 11) and round 2.
    det, _ = single_fault_flips(inject(circ, 2 * ROUND_STEPS - 1, q, "X"))
    fired = [circ.detectors[i].label for i in np.nonzero(det)[0]]
    assert len(fired) == 2 and all(f.startswith("Z") and f.endswith("r2") for f in fired)
    cells = {c.cell for c in sp.stabilizers if c.kind == "Z" and (2, 2) in c.support}
    assert {f[1:f.index("r")] for f in fired} == {f"{i}_{j}" for i, j in cells}


def test_x_fault_in_d3_region_detected():
    circ, sp, st = _standalone(3, 3)
    for ij in sp.data:
        det, _ = single_fault_flips(inject(circ, ROUND_STEPS, st.qubits[ij], "X"))
        regions = {circ.detectors[i].region for i in np.nonzero(det)[0]}
        assert "AIT_D3" in regions


def _merge_circuit(basis: str, flip=None):
    """Chain of three ancillas measuring Z of four data qubits below it."""
    b = CircuitBuilder()
    data = [(1, 0), (1, 1), (1, 2), (1, 3)]
    qs = [b.qubit(p) for p in data]
    (b.reset_x if basis == "X" else b.reset_z)(qs, 0)
    m = MergeSpec(((0, 0), (0, 1), (0, 2)), 1, (((1, 0),), ((1, 1),), ((1, 2), (0, 3))))
    b.qubit((0, 3))
    b.reset_z([b.qubit((0, 3))], 0)
    hs, first, end = emit_merge(b, m, 1, collect_from=3)
    circ = b.build()
    ms = [b.handle_index[h] for h in hs]
    if flip is not None:
        circ = inject(circ, 1, qs[flip], "X")
    return circ, ms


def test_merge_outcome_statistics():
    circ, ms = _merge_circuit("X")
    assert validate_connectivity(circ) == []
    assert not tableau_simulate(circ).parity(ms)[1]
    circ, ms = _merge_circuit("Z")
    assert tableau_simulate(circ).parity(ms) == (0, True)


def test_merge_linearity():
    for k, expect in ((0, True), (1, True), (2, True), (3, False)):
        circ, ms = _merge_circuit("Z", flip=k)
        circ = Circuit(circ.instructions, circ.layout, [DetectorDef(tuple(ms), "MERGE")])
        det, _ = single_fault_flips(circ)
        assert bool(det[0]) == expect


def test_merge_spec_validation():
    with pytest.raises(ValueError):
        MergeSpec(((0, 0), (0, 2)), 0, ((), ()))
    with pytest.raises(ValueError):
        MergeSpec(((0, 0), (0, 1)), 0, (((2, 2),), ()))


# -- standalone builders ------------------------------------------------------------


@pytest.mark.parametrize("d", [3, 5, 7])
def test_standalone_ait(d):
    circ, sched = ait_init(spec(d))
    assert sched.zero_init_set | sched.plus_init_set == set(spec(d).data)
    assert not sched.zero_init_set & sched.plus_init_set
    assert len(sched.unknown_support()) == 3
    assert (sched.withheld_stabilizer is None) == (d == 3)
    rec = certify(circ)
    assert all(rec.parity(det.measurements) == (0, True) for det in circ.detectors)
    full = ait_complete(spec(d), sched)
    certify(full)
    assert validate_connectivity(full) == []
    assert {det.region for det in full.detectors} >= {"AIT_D3", "OUTPUT_PATCH"}


def test_patch_rounds():
    with pytest.raises(ValueError):
        patch_rounds(spec(3), 0)
    circ = patch_rounds(spec(5), 2)
    certify(circ)
    sp = spec(5)
    z_first = [d for d in circ.detectors if d.label.startswith("Z") and d.label.endswith("r0")]
    assert len(z_first) == sum(s.kind == "Z" for s in sp.stabilizers)


def _l1():
    return ait_schedule(PatchSpec(3, *PATCHES["L1"]), merge=MERGES["L1"])


def test_zz_merge_statistics():
    z26 = PauliString.from_support(N_BLOCK, z=(2, 6))
    rnd = zz_merge(z26, _l1(), "X")
    assert validate_connectivity(rnd) == []
    (det,) = rnd.detectors
    assert det.region == "MERGE"
    assert not tableau_simulate(rnd).parity(det.measurements)[1]
    fixed = zz_merge(z26, _l1(), "Z")
    assert tableau_simulate(fixed).parity(fixed.detectors[0].measurements) == (0, True)


def test_zz_merge_linearity():
    z26 = PauliString.from_support(N_BLOCK, z=(2, 6))
    base = zz_merge(z26, _l1(), "Z")
    layout = base.layout.qubit_at()
    for pos, flips in (((2, 5), True), ((2, 3), False), ((0, 5), True)):
        det, _ = single_fault_flips(inject(base, 0, layout[pos], "X"))
        assert bool(det[0]) == flips, pos


def test_zz_merge_rejects_bad_logical():
    with pytest.raises(ValueError):
        zz_merge(PauliString.from_support(N_BLOCK, z=(0, 1, 2)), _l1())
    with pytest.raises(ValueError):
        zz_merge(PauliString.from_support(N_BLOCK, z=(0, 4)), _l1())
    with pytest.raises(ValueError):
        zz_merge(PauliString.from_support(N_BLOCK, z=(2, 6)), ait_schedule(spec(3)))
