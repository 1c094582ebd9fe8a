"""Exact per-slot solver for the two-phase lexicographic allocation MILP.

No constraint couples two slices, so the MILP separates: for each slice the
binary CQI choice is enumerated and the continuous inner problem (bandwidth,
power) is solved in closed form. This gives the global optimum of every phase
in O(S * M) without a generic MILP backend.

Units: bandwidth in PRBs, power in W, rates in bit/s. ``se_eff`` entries are
bit/s per PRB (spectral efficiency already multiplied by the PRB width).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence


class Mode(str, Enum):
    BASELINE = "baseline"
    CHASER = "chaser"


class Status(str, Enum):
    PHASE1_FEASIBLE = "Phase1Feasible"
    PHASE2_OPTIMAL = "Phase2Optimal"
    FALLBACK_RELAXED = "FallbackRelaxed"


@dataclass(frozen=True)
class SolverWeights:
    lambda_b: float = 1e-3
    lambda_p: float = 1e-3

    def __post_init__(self):
        for name in ("lambda_b", "lambda_p"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class SliceProblem:
    """One slice's share of a slot problem."""

    h: float
    se_eff: tuple[float, ...]
    alpha: tuple[float, ...]
    mask: tuple[bool, ...]
    r_min: float
    r_ideal: float
    b_cap: float
    p_cap: float
    beta: float = 1.0

    def __post_init__(self):
        if not len(self.se_eff) == len(self.alpha) == len(self.mask):
            raise ValueError("se_eff, alpha and mask must have equal length")
        if self.b_cap <= 0 or self.p_cap <= 0:
            raise ValueError("caps must be positive")
        if self.r_min < 0 or self.r_ideal < 0:
            raise ValueError("rate targets must be non-negative")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")


@dataclass(frozen=True)
class SlotProblem:
    slices: tuple[SliceProblem, ...]
    psd_min: float = 0.0
    weights: SolverWeights = SolverWeights()


@dataclass(frozen=True)
class SliceAllocation:
    cqi: int  # 1-based; 0 means no CQI active
    bw_prb: float
    power_w: float
    rate_bps: float
    deviation: float | None = None
    slack: float | None = None


@dataclass(frozen=True)
class Allocation:
    slices: tuple[SliceAllocation, ...]
    status: Status
    objective: float

    @property
    def total_slack(self) -> float:
        return sum(s.slack or 0.0 for s in self.slices)


class InfeasibleError(Exception):
    """Phase 1 has no solution; ``slices`` lists the offending slice indices."""

    def __init__(self, slices: Sequence[int]):
        self.slices = tuple(slices)
        super().__init__(f"rate floor unreachable for slice(s) {list(self.slices)}")


_IDLE = SliceAllocation(0, 0.0, 0.0, 0.0)


def _slopes(sp: SliceProblem, psd_min: float) -> list[float]:
    return [a if a > psd_min else psd_min for a in sp.alpha]


def _usable(sp: SliceProblem) -> list[int]:
    return [m for m in range(len(sp.se_eff)) if sp.mask[m] and sp.se_eff[m] > 0.0]


def _floor_feasible(sp: SliceProblem, se: float, slope: float) -> bool:
    b = sp.r_min / se
    return b <= sp.b_cap and slope * b <= sp.p_cap


def _phase1_slice(sp: SliceProblem, psd_min: float, w: SolverWeights):
    if sp.r_min == 0.0:
        return 0.0, _IDLE
    slopes = _slopes(sp, psd_min)
    best = None
    for m in _usable(sp):
        se, slope = sp.se_eff[m], slopes[m]
        if not _floor_feasible(sp, se, slope):
            continue
        b = sp.r_min / se
        p = slope * b
        cost = w.lambda_b * b + w.lambda_p * p
        if best is None or cost < best[0]:
            best = (cost, SliceAllocation(m + 1, b, p, se * b))
    return best


def _phase2_slice(sp: SliceProblem, psd_min: float, w: SolverWeights):
    slopes = _slopes(sp, psd_min)
    best = None
    if sp.r_min == 0.0:
        best = (sp.beta * sp.r_ideal, SliceAllocation(0, 0.0, 0.0, 0.0, deviation=sp.r_ideal))
    for m in _usable(sp):
        se, slope = sp.se_eff[m], slopes[m]
        if not _floor_feasible(sp, se, slope):
            continue
        b_lo = sp.r_min / se
        b_hi = max(b_lo, min(sp.b_cap, sp.p_cap / slope))
        candidates = [b_lo]
        b_kink = sp.r_ideal / se
        if b_lo < b_kink < b_hi:
            candidates.append(b_kink)
        if b_hi > b_lo:
            candidates.append(b_hi)
        unit = w.lambda_b + w.lambda_p * slope
        for b in candidates:
            rate = se * b
            dev = abs(rate - sp.r_ideal)
            cost = sp.beta * dev + unit * b
            if best is None or cost < best[0]:
                alloc = (SliceAllocation(m + 1, b, slope * b, rate, deviation=dev) if b > 0.0
                         else SliceAllocation(0, 0.0, 0.0, 0.0, deviation=sp.r_ideal))
                best = (cost, alloc)
    return best


def _max_rate_slice(sp: SliceProblem, psd_min: float) -> SliceAllocation:
    slopes = _slopes(sp, psd_min)
    best = _IDLE
    for m in _usable(sp):
        se, slope = sp.se_eff[m], slopes[m]
        b = min(sp.b_cap, sp.p_cap / slope)
        if se * b > best.rate_bps:
            best = SliceAllocation(m + 1, b, slope * b, se * b)
    return best


def solve_phase1(problem: SlotProblem) -> Allocation:
    """Minimum-resource allocation meeting every rate floor.

    Raises :class:`InfeasibleError` naming the slices whose floor cannot be met.
    """
    results = [_phase1_slice(sp, problem.psd_min, problem.weights) for sp in problem.slices]
    failed = [s for s, r in enumerate(results) if r is None]
    if failed:
        raise InfeasibleError(failed)
    return Allocation(tuple(r[1] for r in results), Status.PHASE1_FEASIBLE,
                      sum(r[0] for r in results))


def solve_phase2(problem: SlotProblem, phase1: Allocation) -> Allocation:
    """Weighted ideal-rate tracking over the Phase 1 constraint set.

    Per CQI the objective is convex piecewise linear in B, so its minimum sits
    at the rate floor, the capacity corner, or the point hitting the target.
    """
    if phase1.status is not Status.PHASE1_FEASIBLE:
        raise ValueError("Phase 2 requires a Phase 1 feasible allocation")
    results = [_phase2_slice(sp, problem.psd_min, problem.weights) for sp in problem.slices]
    if any(r is None for r in results):
        raise ValueError("problem changed between phases: Phase 2 found no feasible point")
    return Allocation(tuple(r[1] for r in results), Status.PHASE2_OPTIMAL,
                      sum(r[0] for r in results))


def solve_fallback(problem: SlotProblem) -> Allocation:
    """Least total shortfall below the rate floors; always succeeds."""
    out = []
    for sp in problem.slices:
        res = _phase1_slice(sp, problem.psd_min, problem.weights)
        if res is not None:
            a = res[1]
            out.append(SliceAllocation(a.cqi, a.bw_prb, a.power_w, a.rate_bps, slack=0.0))
            continue
        a = _max_rate_slice(sp, problem.psd_min)
        out.append(SliceAllocation(a.cqi, a.bw_prb, a.power_w, a.rate_bps,
                                   slack=max(sp.r_min - a.rate_bps, 0.0)))
    return Allocation(tuple(out), Status.FALLBACK_RELAXED, sum(a.slack for a in out))


def solve_slot(problem: SlotProblem, mode: Mode | str = Mode.BASELINE) -> Allocation:
    mode = Mode(mode)
    try:
        phase1 = solve_phase1(problem)
    except InfeasibleError:
        return solve_fallback(problem)
    if mode is Mode.BASELINE:
        return phase1
    return solve_phase2(problem, phase1)


def phase1_objective(problem: SlotProblem, alloc: Allocation) -> float:
    w = problem.weights
    return sum(w.lambda_b * a.bw_prb + w.lambda_p * a.power_w for a in alloc.slices)


def phase2_objective(problem: SlotProblem, alloc: Allocation) -> float:
    tracking = sum(sp.beta * abs(a.rate_bps - sp.r_ideal)
                   for sp, a in zip(problem.slices, alloc.slices))
    return tracking + phase1_objective(problem, alloc)
