import math

import numpy as np
import pytest

from ccz_distill.analysis import (BaselineAssumptions, ProtocolId, RatePoint, baseline_pl,
                                  build_models, dominance, fit_power_law, overhead_curve,
                                  overhead_table, with_measured, zero_ccz_rounds)

PS = [1e-4, 2e-4, 5e-4, 1e-3, 2e-3]


def _points(f, rel=0.1):
    return [RatePoint(p, f(p), (f(p) * (1 - rel), f(p) * (1 + rel))) for p in PS]


def test_exact_quadratic():
    fit = fit_power_law(_points(lambda p: 300 * p * p))
    assert fit.A == pytest.approx(300, rel=1e-9)
    assert fit.b == pytest.approx(2, abs=1e-9)
    assert max(abs(r) for r in fit.residuals) < 1e-9


def test_linear():
    assert fit_power_law(_points(lambda p: 7 * p)).b == pytest.approx(1, abs=1e-9)


def test_scale_consistency():
    a = fit_power_law(_points(lambda p: 50 * p ** 2))
    b = fit_power_law(_points(lambda p: 500 * p ** 2))
    assert b.A / a.A == pytest.approx(10, rel=1e-9)


def test_fixed_exponent():
    fit = fit_power_law(_points(lambda p: 120 * p ** 2.1), fixed_exponent=2)
    assert fit.fixed_exponent and fit.b == 2 and fit.b_err == 0
    assert fit.predict(1e-3) == pytest.approx(fit.A * 1e-6)


def test_weights_prefer_tight_points():
    pts = _points(lambda p: 300 * p * p, rel=0.01)
    pts[0] = RatePoint(1e-4, 3e-6, (1e-7, 1e-4))  # noisy outlier, wide interval
    fit = fit_power_law(pts)
    assert fit.b == pytest.approx(2, abs=0.02)


def test_zero_failure_points_dropped():
    pts = _points(lambda p: 300 * p * p) + [RatePoint(5e-5, 0.0)]
    with pytest.warns(UserWarning):
        fit = fit_power_law(pts)
    assert 5e-5 not in fit.used
    with pytest.raises(ValueError):
        fit_power_law(pts[:2])


def test_ratepoint_validation():
    with pytest.raises(ValueError):
        RatePoint(0.0, 1e-3)


def test_baseline_values():
    assert baseline_pl("FOUR_T", 1e-3) == pytest.approx(4e-4)
    assert baseline_pl(ProtocolId.SEVEN_T, 1e-3) == pytest.approx(7e-4)
    assert baseline_pl(ProtocolId.EIGHT_T, 1e-3) == pytest.approx(2.8e-5)
    assert baseline_pl(ProtocolId.ZERO_CCZ, 1e-3) == pytest.approx(3e-4)
    with pytest.raises(ValueError):
        baseline_pl("NINE_T", 1e-3)


def test_zero_ccz_rounds():
    assert zero_ccz_rounds(24) == 3
    assert zero_ccz_rounds(25) == 4
    assert zero_ccz_rounds(0) == 1


def test_overhead_curve_properties():
    m = build_models(0.3)[ProtocolId.ZERO_CCZ]
    pts = overhead_curve(m, range(1, 40))
    assert all(b.spacetime > a.spacetime and b.success >= a.success for a, b in zip(pts, pts[1:]))
    assert pts[1].spacetime == 2 * pts[0].spacetime
    assert pts[0].success == pytest.approx(0.3)
    assert pts[1].success == pytest.approx(1 - 0.7 ** 2)
    with pytest.raises(ValueError):
        overhead_curve(m, 0)


def test_models_structure():
    ms = build_models(0.3, zero_depth=24)
    z = ms[ProtocolId.ZERO_CCZ]
    assert z.logical_qubits == 3 and z.rounds == 3 and z.needs_teleport_rounds
    assert not ms[ProtocolId.SEVEN_T].needs_teleport_rounds
    a = BaselineAssumptions()
    assert ms[ProtocolId.FOUR_T].success == pytest.approx(a.t_factory_success ** 4)
    with pytest.raises(ValueError):
        BaselineAssumptions(t_factory_success=0)


def test_dominance_clear_cases():
    ms = build_models(0.3)
    cheap = with_measured(ms, success=0.9)[ProtocolId.ZERO_CCZ]
    r = dominance(cheap, ms[ProtocolId.SEVEN_T])
    assert r.holds and r.min_ratio >= 5 and set(r.ratios) == set(range(1, 33))
    never = with_measured(ms, success=0.0)[ProtocolId.ZERO_CCZ]
    r = dominance(never, ms[ProtocolId.SEVEN_T])
    assert not r.holds and r.min_ratio == 0


def test_dominance_ratio_by_hand():
    ms = build_models(0.5, zero_depth=24)
    z, s = ms[ProtocolId.ZERO_CCZ], ms[ProtocolId.SEVEN_T]
    r = dominance(z, s, k_max=1)
    # Baseline k=1 success 0.7^7 < 0.5, so one zero-level copy suffices.
    assert r.ratios[1] == pytest.approx(s.spacetime_per_copy / z.spacetime_per_copy)


def test_overhead_table_rows():
    rows = overhead_table(build_models(0.3), [1, 2])
    assert len(rows) == 8 and {r["protocol"] for r in rows} == {p.value for p in ProtocolId}
