import math
from fractions import Fraction

import pytest

from detwork.approx import (
    bounded_fluctuation_protocol,
    plan_bounded_fluctuation,
    snap_to_lattice,
    verify_band,
)
from detwork.errors import GroundOccupiedError, SpectrumError
from detwork.protocol import ProtocolTable, build_protocol, identity_protocol, verify_protocol
from detwork.rate import max_det_shift, rate_n
from detwork.spectrum import SpectrumSpec, to_lattice

from conftest import spec

IRR = spec(("0", "1.41421356", "3.14159265"))


def test_snap_pinned_ground_example():
    plan = snap_to_lattice(spec(("0", "1.0", "2.5")), "0.5", ground="pinned")
    assert plan.unit == Fraction(1, 2) and plan.snapped.m == (0, 3, 6)


def test_snap_lifted_ground_example():
    plan = snap_to_lattice(spec(("0", "1.0", "2.5")), "0.5")
    assert plan.snapped.m == (1, 3, 6)
    assert plan.max_snap_error() <= plan.delta


def test_snap_splits_degenerate_level():
    s = SpectrumSpec.build(["0", "1.0", "3"], [1, 2, 1], [0, 2, 1])
    plan = snap_to_lattice(s, "0.5", ground="pinned")
    assert plan.d_star == 2 and plan.unit == Fraction(1, 4)
    assert plan.snapped.m[1:3] == (5, 6)
    assert plan.snapped.energies[1:3] == (Fraction(5, 4), Fraction(3, 2))
    assert plan.origin[1:3] == ((1, 0), (1, 1))
    assert plan.snapped.occupied == (0, 1, 1, 1)


def test_snap_partial_occupation_uses_first_sublevels():
    s = SpectrumSpec.build(["0", "2"], [1, 3], [0, 2])
    plan = snap_to_lattice(s, "0.3")
    assert plan.snapped.occupied == (0, 1, 1, 0)


@pytest.mark.parametrize("delta", ["0", "-0.1", "1.41421356", "2"])
def test_snap_rejects_bad_delta(delta):
    with pytest.raises(SpectrumError):
        snap_to_lattice(IRR, delta)


@pytest.mark.parametrize("ground", ["lifted", "pinned"])
@pytest.mark.parametrize("delta", ["0.3", "0.05", "0.001"])
def test_snap_accuracy_and_order(ground, delta):
    s = SpectrumSpec.build(["0", "0.7", "1.41421356", "3.14159265"], [2, 1, 3, 2], [0, 1, 2, 2])
    plan = snap_to_lattice(s, delta, ground)
    assert plan.max_snap_error() <= plan.delta
    assert list(plan.snapped.m) == sorted(set(plan.snapped.m))


def test_plan_constants():
    plan = plan_bounded_fluctuation(IRR, "0.05", 0.5)
    assert plan.d_star == 1
    expect = 1 / (1 / Fraction("1.41421356") + 1 / Fraction("3.14159265"))
    assert plan.e_frak == expect
    assert float(plan.e_frak) == pytest.approx(0.975213, abs=1e-6)
    k = 2
    A = 0.5 / 0.5 * k * (float(Fraction("3.14159265")) + 1) ** (k - 1)
    assert plan.A_const == pytest.approx(A)
    assert plan.n_min == pytest.approx(A * 0.05 ** (-k + 1))
    assert plan.w_target == pytest.approx(0.5 * float(expect) - 0.1)
    assert plan.band == Fraction(1, 5)


def test_plan_zero_confidence():
    plan = plan_bounded_fluctuation(IRR, "0.05", 0.0)
    assert plan.n_min == 0 and plan.w_target == 0


def test_plan_warns_on_huge_threshold():
    s = SpectrumSpec.build(["0", "1.3", "2.9", "4.1"], [1, 2, 2, 2], [0, 2, 2, 2])
    plan = plan_bounded_fluctuation(s, "0.01", 0.9)
    assert plan.warnings and plan.n_min > 1e6


def test_plan_rejects_occupied_ground():
    with pytest.raises(GroundOccupiedError):
        plan_bounded_fluctuation(spec(("0", "1.5"), occupied=[1, 1]), "0.1", 0.5)
    with pytest.raises(ValueError):
        plan_bounded_fluctuation(IRR, "0.05", 1.0)


def test_one_copy_has_no_deterministic_work():
    plan = plan_bounded_fluctuation(IRR, "0.05", 0.5)
    pt, summary = bounded_fluctuation_protocol(plan, 1)
    assert not summary.positive and pt.shift == 0
    assert summary.band.passed and summary.band.w_min == summary.band.w_max == 0


def test_band_on_irrational_spectrum_explicit():
    plan = plan_bounded_fluctuation(IRR, "0.3", 0.5)
    n = next(k for k in range(1, 12) if max_det_shift(plan.snapped, k) > 0)
    pt, summary = bounded_fluctuation_protocol(plan, n)
    assert summary.positive and pt.explicit_map is not None
    band = summary.band
    assert band.passed and band.method == "explicit"
    assert band.spread <= 4 * plan.delta
    assert abs(band.mean - summary.w_prime) <= 2 * plan.delta


def test_envelope_contains_explicit_works():
    plan = plan_bounded_fluctuation(IRR, "0.3", 0.5)
    n = next(k for k in range(1, 12) if max_det_shift(plan.snapped, k) > 0)
    pt, summary = bounded_fluctuation_protocol(plan, n)
    shell_only = ProtocolTable(pt.n, pt.shift, pt.lattice, pt.shell_plan)
    env = verify_band(shell_only, IRR, summary.w_prime, plan.delta, plan.level_map)
    assert env.passed and env.method == "shell envelope"
    assert env.w_min <= summary.band.w_min and summary.band.w_max <= env.w_max


def test_band_with_degenerate_levels():
    s = SpectrumSpec.build(["0", "1.1", "2.35"], [1, 2, 2], [0, 2, 1])
    plan = plan_bounded_fluctuation(s, "0.2", 0.5)
    for n in range(1, 7):
        pt, summary = bounded_fluctuation_protocol(plan, n)
        assert summary.band.passed
        assert summary.band.spread <= 4 * plan.delta


def test_identity_band():
    plan = plan_bounded_fluctuation(IRR, "0.05", 0.5)
    pt = identity_protocol(plan.snapped, 2, emit_explicit=True)
    report = verify_band(pt, IRR, 0, plan.delta, plan.level_map)
    assert report.passed and report.w_min == report.w_max == 0


def test_corrupted_table_fails():
    plan = plan_bounded_fluctuation(IRR, "0.3", 0.5)
    n = next(k for k in range(1, 12) if max_det_shift(plan.snapped, k) > 0)
    pt, summary = bounded_fluctuation_protocol(plan, n)
    rows = list(pt.explicit_map)
    src, _ = rows[0]
    top = len(pt.lattice.m) - 1
    rows[0] = (src, ((top, 0),) * pt.n)
    bad = ProtocolTable(pt.n, pt.shift, pt.lattice, pt.shell_plan, tuple(rows))
    report = verify_band(bad, IRR, summary.w_prime, plan.delta, plan.level_map)
    assert not report.passed
    assert report.offending[0][0] == src


def test_verify_protocol_on_true_spectrum_matches_band():
    plan = plan_bounded_fluctuation(IRR, "0.3", 0.5)
    n = next(k for k in range(1, 12) if max_det_shift(plan.snapped, k) > 0)
    pt, summary = bounded_fluctuation_protocol(plan, n)
    support = verify_protocol(pt, IRR, plan.level_map)
    assert support.w_min / n == summary.band.w_min
    assert support.w_max / n == summary.band.w_max


@pytest.mark.parametrize("energies", [(0, 2, 3), (0, 1, 3), (0, Fraction(2, 3), 1)])
def test_lifted_snapping_preserves_rational_rates(energies):
    s = spec(energies)
    unit = to_lattice(s).unit
    # deltas dividing the lattice unit keep every energy on the fine lattice
    for delta in (unit / 10, unit / 100, unit / 1000):
        plan = snap_to_lattice(s, delta)
        for n in (2, 3, 4, 6):
            assert rate_n(plan.snapped, n).rate == rate_n(s, n).rate


def test_pinned_snapping_loses_small_n_rates():
    plan = snap_to_lattice(spec((0, 2, 3)), "0.1", ground="pinned")
    assert all(rate_n(plan.snapped, n).rate == 0 for n in (2, 3, 4))
