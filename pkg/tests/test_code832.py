import numpy as np
import pytest

from ccz_distill import code832 as c832
from ccz_distill.circuit import (Circuit, CircuitBuilder, DetectorDef, Kind, ObservableDef,
                                 circuit_depth, validate_connectivity)
from ccz_distill.code832 import CodeDefinition, code_832, verify_distance
from ccz_distill.frames import fault_effects, mechanisms
from ccz_distill.noise import NoiseModel, apply_noise
from ccz_distill.pauli import PauliString, commutes
from ccz_distill.tableau import certify, determinize, tableau_simulate

from helpers import inject, single_fault_flips


def test_code_definition():
    code = code_832()
    assert (code.n, code.k) == (8, 3)
    assert code.logical_z[0] == PauliString.from_support(8, z=(0, 4))
    assert code.logical_x[0] == PauliString.from_support(8, x=(0, 1, 2, 3))
    assert code.check() == []


def test_commutation_relations():
    code = code_832()
    gens = list(code.stabilizers) + list(code.logical_x) + list(code.logical_z)
    for s in code.stabilizers:
        for g in gens:
            assert commutes(s, g)
    for i, lx in enumerate(code.logical_x):
        for j, lz in enumerate(code.logical_z):
            assert commutes(lx, lz) == (i != j)
    for a in code.logical_x:
        for b in code.logical_x:
            assert commutes(a, b)


def test_distance_two():
    assert verify_distance(code_832()) == 2


def test_distance_small_codes():
    rep = CodeDefinition(3, 1, (PauliString.from_str("ZZI"), PauliString.from_str("IZZ")),
                         (PauliString.from_str("XXX"),), (PauliString.from_str("ZII"),))
    assert verify_distance(rep) == 1
    trivial = CodeDefinition(1, 0, (PauliString.from_str("Z"),), (), ())
    assert verify_distance(trivial) is None
    with pytest.raises(ValueError):
        verify_distance(rep, max_n=2)


def test_transversal_pattern():
    c = c832.transversal_ccz()
    assert circuit_depth(c) == 1
    assert c.count(Kind.T) == 4 and c.count(Kind.T_DAGGER) == 4
    coords = c.layout.coords
    label = {v: k for k, v in c832.DATA_POSITIONS.items()}
    t_labels = {label[coords[i.targets[0]]] for i in c.instructions if i.kind == Kind.T}
    assert t_labels == {0, 3, 5, 6}


def test_transversal_is_identity_under_approximation():
    """With the Clifford approximation the T layer changes no frame."""
    b = CircuitBuilder()
    d = c832.data_qubits(b)
    c832.emit_inputs(b, d, 0)
    c832.emit_transversal_ccz(b, 1)
    hs = [b.measure_x(d[q], 2) for q in range(8)]
    noisy = inject(b.build(), 0, d[0], "Z")
    det, _ = single_fault_flips(Circuit(noisy.instructions, noisy.layout,
                                        [DetectorDef((m,), "MERGE") for m in range(8)]))
    assert det.tolist() == [True] + [False] * 7


def _encoded_parities(readout_basis: str):
    b = CircuitBuilder()
    d = c832.data_qubits(b)
    c832.emit_inputs(b, d, 0)
    t = c832.emit_encoder(b, d, 1)
    meas = b.measure_x if readout_basis == "X" else b.measure_z
    hs = {q: meas(d[q], t) for q in range(8)}
    circ = b.build()
    return tableau_simulate(circ), {q: b.handle_index[h] for q, h in hs.items()}


def test_nonft_encoder_structure():
    enc = c832.nonft_encoder()
    assert enc.count(Kind.RESET_Z) == 4 and enc.count(Kind.RESET_X) == 4
    assert enc.count(Kind.CNOT) == 10
    assert len({i.time_step for i in enc.instructions if i.kind == Kind.CNOT}) == 3
    assert validate_connectivity(enc) == []


def test_nonft_encoder_output_state():
    code = code_832()
    rec, idx = _encoded_parities("X")
    for op in [s for s in code.stabilizers if s.is_x_type()] + list(code.logical_x):
        value, det = rec.parity([idx[q] for q in op.support])
        assert det and value == 0
    rec, idx = _encoded_parities("Z")
    for op in [s for s in code.stabilizers if s.is_z_type()]:
        value, det = rec.parity([idx[q] for q in op.support])
        assert det and value == 0


def test_ten_cnots_are_minimal():
    """Exhaustive search: no CNOT circuit shorter than 10 gates maps four |+>
    and four |0> inputs to the code state, for any input assignment."""
    def span(gens):
        s = {0}
        for g in gens:
            s |= {x ^ g for x in s}
        return tuple(sorted(s))

    target = span([sum(1 << q for q in op.support) for op in code_832().logical_x] + [255])
    pairs = [(c, t) for c in range(8) for t in range(8) if c != t]
    frontier, seen, depth = {target}, {target}, 0
    while True:
        depth += 1
        nxt = set()
        for s in frontier:
            for c, t in pairs:
                mc, mt = 1 << c, 1 << t
                u = tuple(sorted(x ^ mt if x & mc else x for x in s))
                if u not in seen:
                    seen.add(u)
                    nxt.add(u)
        # A product |+>/|0> input has an X-span generated by unit vectors.
        if any(sum(1 for x in s if x and x & (x - 1) == 0) == 4 for s in nxt):
            break
        frontier = nxt
    assert depth == 10


def test_ft_encoder_noiseless():
    c = c832.ft_encoder()
    rec = certify(c)
    assert sum(d.region == "VERIFY_832" for d in c.detectors) == 12
    for d in c.detectors:
        assert rec.parity(d.measurements) == (0, True)
    # The ancillas are returned to |+>: their X outcomes are deterministic +1.
    anc = [d for d in c.detectors if d.label.startswith("anc")]
    assert len(anc) == 8


def _with_logical_readout(build):
    """Circuit ``build`` followed by ideal X readout, with logical observables."""
    b = CircuitBuilder()
    end = build(b)
    h = c832.emit_block_readout(b, end + 1)
    b.detector(list(h.values()), "READOUT_832", "X_all")
    circ = b.build()
    idx = b.handle_index
    rec = tableau_simulate(circ)
    obs = [ObservableDef(f"L{i + 1}", tuple(determinize(rec, [idx[h[q]] for q in op.support])))
           for i, op in enumerate(code_832().logical_x)]
    dets = [DetectorDef(tuple(determinize(rec, d.measurements)), d.region, d.label) for d in circ.detectors]
    out = Circuit(circ.instructions, circ.layout, dets, obs, {})
    certify(out)
    return out


def _undetected_logical(circ, t_lo, t_hi):
    noisy = apply_noise(circ, NoiseModel(1e-3))
    ms = [m for m in mechanisms(noisy) if t_lo <= noisy.instructions[m.channel].time_step <= t_hi]
    det, obs, _ = fault_effects(noisy, ms)
    return int((obs.any(axis=1) & ~det.any(axis=1)).sum()), len(ms)


def test_ft_encoder_single_faults():
    circ = _with_logical_readout(lambda b: c832.emit_ft_encoder(b, 0))
    end = max(i.time_step for i in circ.instructions)
    bad, n = _undetected_logical(circ, 0, end - 1)
    assert n > 0 and bad == 0


def test_ft_encoder_z_fault_caught():
    """A Z fault on any data qubit after the first encoding is either caught
    or equivalent to a stabilizer."""
    base = _with_logical_readout(lambda b: c832.emit_ft_encoder(b, 0))
    coords = base.layout.qubit_at()
    for q in range(8):
        circ = inject(base, 3, coords[c832.DATA_POSITIONS[q]], "Z")
        det, obs = single_fault_flips(circ)
        assert det.any() or not obs.any()


def test_logical_x_fault_harmless():
    base = _with_logical_readout(lambda b: c832.emit_ft_encoder(b, 0))
    coords = base.layout.qubit_at()
    circ = base
    for q in code_832().logical_x[0].support:
        circ = inject(circ, 13, coords[c832.DATA_POSITIONS[q]], "X")
    det, obs, _ = fault_effects(circ, mechanisms(circ))
    assert not det.any() and not obs.any()


def _superdense_build(b):
    d = c832.data_qubits(b)
    c832.emit_inputs(b, d, 0)
    t = c832.emit_encoder(b, d, 1)
    h = c832.emit_superdense(b, t)
    c832.annotate_superdense(b, h)
    return h.end


def test_superdense_noiseless():
    c = c832.superdense_extraction()
    rec = certify(c)
    labels = {d.label for d in c.detectors if d.region == "SYNDROME_832"}
    assert labels == {"X_all", "Z_top", "Z_bottom"}
    for d in c.detectors:
        assert rec.parity(d.measurements) == (0, True)
    assert validate_connectivity(c) == []


def test_superdense_depth():
    c = c832.superdense_extraction(prepare=False)
    assert circuit_depth(c) == 13


def test_superdense_x_fault_fires_z_check():
    base = c832.superdense_extraction()
    coords = base.layout.qubit_at()
    t0 = max(i.time_step for i in c832.nonft_encoder().instructions)
    for q in range(8):
        det, _ = single_fault_flips(inject(base, t0, coords[c832.DATA_POSITIONS[q]], "X"))
        fired = {base.detectors[i].label for i in np.nonzero(det)[0]}
        assert fired == ({"Z_top"} if q in c832.TOP_ROW else {"Z_bottom"})


def test_superdense_z_fault_fires_x_check():
    base = c832.superdense_extraction()
    coords = base.layout.qubit_at()
    t0 = max(i.time_step for i in c832.nonft_encoder().instructions)
    det, _ = single_fault_flips(inject(base, t0, coords[c832.DATA_POSITIONS[0]], "Z"))
    assert {base.detectors[i].label for i in np.nonzero(det)[0]} == {"X_all"}


def test_superdense_single_faults():
    circ = _with_logical_readout(_superdense_build)
    t0 = max(i.time_step for i in c832.nonft_encoder().instructions) + 1
    end = max(i.time_step for i in circ.instructions)
    bad, n = _undetected_logical(circ, t0, end - 1)
    assert n > 0 and bad == 0
