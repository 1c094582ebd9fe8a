import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slicesim.oracle import brute_force_oracle, oracle_check, random_problem
from slicesim.solver import (InfeasibleError, Mode, SliceProblem, SlotProblem, SolverWeights,
                             Status, phase1_objective, phase2_objective, solve_fallback,
                             solve_phase1, solve_phase2, solve_slot)

SE = (1e5, 2e5, 4e5)
ALPHA = (0.01, 0.03, 0.09)


def slice_problem(**kw):
    base = dict(h=1e-10, se_eff=SE, alpha=ALPHA, mask=(True, True, True), r_min=1e5,
                r_ideal=3e5, b_cap=10.0, p_cap=10.0, beta=1.0)
    base.update(kw)
    return SliceProblem(**base)


def slot(*slices, psd_min=0.0, lb=1e-3, lp=1e-3):
    return SlotProblem(tuple(slices), psd_min=psd_min, weights=SolverWeights(lb, lp))


def check_constraints(problem, alloc, rtol=1e-9):
    for sp, a in zip(problem.slices, alloc.slices):
        assert a.bw_prb <= sp.b_cap * (1 + rtol)
        assert a.power_w <= sp.p_cap * (1 + rtol)
        if a.cqi == 0:
            assert a.bw_prb == a.power_w == a.rate_bps == 0.0
            continue
        m = a.cqi - 1
        assert sp.mask[m]
        slope = max(sp.alpha[m], problem.psd_min)
        assert a.power_w >= slope * a.bw_prb * (1 - rtol)
        assert a.rate_bps == pytest.approx(sp.se_eff[m] * a.bw_prb, rel=rtol)


def test_phase1_closed_form():
    # cost per bit: (1e-3 + 1e-3 * alpha) / se, lowest at the top CQI
    p = slot(slice_problem())
    a = solve_phase1(p).slices[0]
    assert a.cqi == 3
    assert a.bw_prb == pytest.approx(1e5 / 4e5)
    assert a.power_w == pytest.approx(0.09 * 0.25)
    assert a.rate_bps == pytest.approx(1e5)


def test_phase1_prefers_cheap_power_when_power_weight_dominates():
    p = slot(slice_problem(alpha=(0.01, 0.03, 10.0), b_cap=2.0, p_cap=30.0), lb=1e-9, lp=1.0)
    a = solve_phase1(p).slices[0]
    # cost/bit: 0.01/1e5 = 1e-7, 0.03/2e5 = 1.5e-7, 10/4e5 = 2.5e-5; CQI 1 needs B = 1 <= 2
    assert a.cqi == 1


def test_psd_floor_lifts_power():
    p = slot(slice_problem(), psd_min=0.5)
    a = solve_phase1(p).slices[0]
    assert a.power_w == pytest.approx(0.5 * a.bw_prb)


def test_zero_floor_gives_idle_slice():
    p = slot(slice_problem(r_min=0.0), slice_problem(r_min=0.0))
    alloc = solve_phase1(p)
    assert all(a.cqi == 0 and a.bw_prb == 0 and a.power_w == 0 for a in alloc.slices)
    assert alloc.objective == 0.0


def test_ties_go_to_lowest_cqi():
    sp = slice_problem(se_eff=(2e5, 2e5, 2e5), alpha=(0.05, 0.05, 0.05))
    assert solve_phase1(slot(sp)).slices[0].cqi == 1


def test_infeasible_names_slices():
    p = slot(slice_problem(), slice_problem(r_min=1e9))
    with pytest.raises(InfeasibleError) as info:
        solve_phase1(p)
    assert info.value.slices == (1,)


def test_masked_cqi_not_used():
    p = slot(slice_problem(mask=(True, True, False)))
    assert solve_phase1(p).slices[0].cqi == 2


def test_all_masked_is_infeasible():
    with pytest.raises(InfeasibleError):
        solve_phase1(slot(slice_problem(mask=(False,) * 3)))


def test_phase2_hits_ideal_when_reachable():
    p = slot(slice_problem(r_ideal=2e6))
    a2 = solve_phase2(p, solve_phase1(p)).slices[0]
    assert a2.rate_bps == pytest.approx(2e6)
    assert a2.deviation == pytest.approx(0.0, abs=1e-6)


def test_phase2_saturates_at_capacity_corner():
    # top CQI: B limited by min(b_cap, p_cap / alpha) = min(10, 10/0.09) = 10 PRB -> 4 Mb/s
    p = slot(slice_problem(r_ideal=1e8))
    a2 = solve_phase2(p, solve_phase1(p)).slices[0]
    assert a2.cqi == 3
    assert a2.bw_prb == pytest.approx(10.0)
    assert a2.deviation == pytest.approx(1e8 - 4e6)


def test_phase2_power_corner():
    p = slot(slice_problem(r_ideal=1e8, p_cap=0.45, alpha=(0.01, 0.03, 0.045)))
    a2 = solve_phase2(p, solve_phase1(p)).slices[0]
    assert a2.power_w == pytest.approx(0.45)
    assert a2.bw_prb == pytest.approx(10.0)


def test_phase2_requires_phase1_status():
    p = slot(slice_problem(r_min=1e9))
    fb = solve_fallback(p)
    with pytest.raises(ValueError):
        solve_phase2(p, fb)


def test_objectives_recompute():
    p = slot(slice_problem(), slice_problem(r_min=2e5, beta=2.0))
    a1 = solve_phase1(p)
    assert phase1_objective(p, a1) == pytest.approx(a1.objective, rel=1e-12)
    a2 = solve_phase2(p, a1)
    assert phase2_objective(p, a2) == pytest.approx(a2.objective, rel=1e-12)


def test_fallback_slack_equals_shortfall_at_max_rate():
    deep = slice_problem(r_min=1e7)  # max rate 4e6 at the top CQI
    p = slot(slice_problem(), deep)
    fb = solve_fallback(p)
    assert fb.status is Status.FALLBACK_RELAXED
    assert fb.slices[0].slack == 0.0
    assert fb.slices[0].rate_bps == pytest.approx(1e5)
    assert fb.slices[1].slack == pytest.approx(1e7 - 4e6)
    assert fb.total_slack == pytest.approx(6e6)
    assert fb.objective == pytest.approx(6e6)


def test_fallback_all_masked_slack_is_floor():
    p = slot(slice_problem(mask=(False,) * 3))
    fb = solve_fallback(p)
    assert fb.slices[0].cqi == 0
    assert fb.slices[0].slack == 1e5


def test_solve_slot_dispatch():
    p = slot(slice_problem())
    assert solve_slot(p, Mode.BASELINE).status is Status.PHASE1_FEASIBLE
    assert solve_slot(p, "chaser").status is Status.PHASE2_OPTIMAL
    bad = slot(slice_problem(r_min=1e9))
    assert solve_slot(bad, "chaser").status is Status.FALLBACK_RELAXED
    assert solve_slot(bad, "baseline").status is Status.FALLBACK_RELAXED


def test_invalid_slice_problem():
    with pytest.raises(ValueError):
        slice_problem(b_cap=0.0)
    with pytest.raises(ValueError):
        slice_problem(mask=(True,))
    with pytest.raises(ValueError):
        SolverWeights(0.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_solver_never_beaten_by_oracle(seed):
    problem = random_problem(np.random.default_rng(seed), n_slices=2)
    try:
        p1 = solve_phase1(problem)
    except InfeasibleError as exc:
        assert not np.isfinite(brute_force_oracle(problem, 1, 2000).objective)
        fb = solve_fallback(problem)
        ref = brute_force_oracle(problem, "fallback", 2000).objective
        assert fb.objective <= ref * (1 + 1e-9) + 1e-9
        assert set(exc.slices) == {s for s, a in enumerate(fb.slices) if a.slack > 0}
        return
    check_constraints(problem, p1)
    p2 = solve_phase2(problem, p1)
    check_constraints(problem, p2)
    for sp, a in zip(problem.slices, p2.slices):
        assert a.rate_bps >= sp.r_min * (1 - 1e-9)
    assert p1.objective <= brute_force_oracle(problem, 1, 2000).objective * (1 + 1e-9)
    assert p2.objective <= brute_force_oracle(problem, 2, 2000).objective * (1 + 1e-9)


def test_oracle_check_small():
    report = oracle_check(30, seed=3, grid_points=1000)
    assert report.passed
    assert report.count == 30
    assert report.max_abs_gap < 1e-6


def test_oracle_check_rejects_zero_count():
    with pytest.raises(ValueError):
        oracle_check(0)


def test_oracle_rejects_coarse_grid():
    with pytest.raises(ValueError):
        brute_force_oracle(slot(slice_problem()), 1, grid_points=10)
