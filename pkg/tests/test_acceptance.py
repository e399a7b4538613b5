"""Acceptance criteria 1-8; each test records one PASS/FAIL line."""

import time

import pytest

from ccz_distill import code832 as c832
from ccz_distill.analysis import (ProtocolId, RatePoint, baseline_pl, build_models, dominance,
                                  fit_power_law)
from ccz_distill.cli import main
from ccz_distill.code832 import code_832, verify_distance
from ccz_distill.noise import NoiseModel, apply_noise
from ccz_distill.protocol import assemble, report_stats
from ccz_distill.sampler import Sampler, enumerate_faults, estimate_rates
from helpers import record

MC_PS = (2e-4, 5e-4, 1e-3)
MC_SHOTS = 10_000_000
SEED = 2024


@pytest.fixture(scope="module")
def mc(protocol):
    """Large Monte Carlo runs shared by criteria 4, 5 and 7."""
    out = {}
    for p in MC_PS:
        s = Sampler(apply_noise(protocol.circuit, NoiseModel(p)))
        out[p] = s.sample(MC_SHOTS, SEED, threads=8)
    return out


def test_criterion_1_algebra():
    t = time.perf_counter()
    bad = code_832().check()
    dist = verify_distance(code_832())
    dt = time.perf_counter() - t
    ok = not bad and dist == 2 and dt < 1.0
    record(1, ok, f"{len(bad)} violated relations, distance {dist}, {dt:.2f} s")
    assert ok


def test_criterion_2_structure():
    t = time.perf_counter()
    r = report_stats(assemble())
    dt = time.perf_counter() - t
    checks = {
        "distillation qubits": (r.distillation_qubits, 22),
        "logical outputs": (r.logical_outputs, 3),
        "depth": (r.depth, 24),
        "encoder depth": (r.encoder_depth, 3),
        "encoder CNOTs": (r.encoder_cnots, 8),
        "superdense depth": (r.superdense_depth, 8),
        "connectivity violations": (r.connectivity_violations, 0),
    }
    off = [f"{k} {got} (target {want})" for k, (got, want) in checks.items() if got != want]
    ok = not off and dt < 1.0
    record(2, ok, ("mismatches: " + "; ".join(off) if off else "all targets met") + f", {dt:.2f} s")
    assert ok, off


def test_criterion_3_fault_distance(protocol):
    t = time.perf_counter()
    rep = enumerate_faults(apply_noise(protocol.circuit, NoiseModel(1e-3)), 1)
    dt = time.perf_counter() - t
    ok = rep.accepted_fail == 0 and dt < 300
    record(3, ok, f"{rep.configurations} single faults, {rep.accepted_fail} accepted failures, {dt:.1f} s")
    assert ok


def test_criterion_4_quadratic_scaling(mc):
    pts = []
    for p, t in mc.items():
        e = estimate_rates(t)
        pts.append(RatePoint(p, e.p_L, e.pl_ci, e.p_accept, e.accept_ci, t.logical_fail))
    fit = fit_power_law(pts)
    b_ok = abs(fit.b - 2.0) <= 0.3
    a_ok = 100 <= fit.A <= 900
    record(4, b_ok and a_ok,
           f"b = {fit.b:.3f} +- {fit.b_err:.3f} ({'ok' if b_ok else 'off'}), "
           f"A = {fit.A:.0f} ({'within' if a_ok else 'outside'} [100, 900]), {MC_SHOTS:.0e} shots per point")
    assert b_ok, fit.b
    assert a_ok, fit.A


def test_criterion_5_point_checks(protocol, mc):
    e3 = estimate_rates(mc[1e-3])
    pl_ok = e3.pl_ci[0] <= 9e-4 and e3.pl_ci[1] >= 1e-4
    acc_ok = 0.2 <= e3.p_accept <= 0.55
    s4 = Sampler(apply_noise(protocol.circuit, NoiseModel(1e-4)))
    e4 = estimate_rates(s4.sample(1_000_000, SEED, threads=8))
    low_ok = e4.p_accept >= 0.8
    record(5, pl_ok and acc_ok and low_ok,
           f"p=1e-3: p_L CI [{e3.pl_ci[0]:.2e}, {e3.pl_ci[1]:.2e}] "
           f"({'overlaps' if pl_ok else 'misses'} [1e-4, 9e-4]), acceptance {e3.p_accept:.3f}; "
           f"p=1e-4: acceptance {e4.p_accept:.3f}")
    assert acc_ok and low_ok
    assert pl_ok, e3.pl_ci


def test_criterion_6_baselines():
    got = {pid: baseline_pl(pid, 1e-3) for pid in (ProtocolId.FOUR_T, ProtocolId.SEVEN_T, ProtocolId.EIGHT_T)}
    want = {ProtocolId.FOUR_T: 4e-4, ProtocolId.SEVEN_T: 7e-4, ProtocolId.EIGHT_T: 2.8e-5}
    ok = all(abs(got[k] - want[k]) <= 1e-12 * want[k] for k in want)
    record(6, ok, ", ".join(f"{k.value} {v:.3g}" for k, v in got.items()))
    assert ok


def test_criterion_7_overhead(protocol, mc):
    success = estimate_rates(mc[1e-3]).p_accept
    depth = report_stats(protocol).depth
    models = build_models(success, zero_depth=depth)
    r = dominance(models[ProtocolId.ZERO_CCZ], models[ProtocolId.SEVEN_T], k_max=32, factor=5.0)
    record(7, r.holds, f"measured success {success:.3f}, minimum SEVEN_T/ZERO_CCZ cost ratio "
                       f"{r.min_ratio:.2f} over k <= 32 (need >= 5)")
    assert r.holds


def test_criterion_8_determinism(tmp_path, capsys, sampler_1e3):
    args = ["simulate", "--p", "0.001,0.0005", "--shots", "100000", "--seed", "17"]
    main(args + ["--out-dir", str(tmp_path / "a")])
    main(args + ["--out-dir", str(tmp_path / "b")])
    capsys.readouterr()
    same_csv = (tmp_path / "a" / "simulate.csv").read_bytes() == (tmp_path / "b" / "simulate.csv").read_bytes()
    tallies = {n: sampler_1e3.sample(300_000, 17, threads=n) for n in (1, 4, 8)}
    same_threads = tallies[1] == tallies[4] == tallies[8]
    record(8, same_csv and same_threads,
           f"CSV byte-identical: {same_csv}; thread sweep 1/4/8 identical: {same_threads}")
    assert same_csv and same_threads
