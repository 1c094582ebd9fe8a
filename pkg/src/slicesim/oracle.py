"""Brute-force reference for the slot solver, plus a random instance generator.

The oracle enumerates every joint CQI choice (including "none") across slices
and grid-searches bandwidth for each, so it shares no closed-form reasoning
with :mod:`slicesim.solver` beyond the constraint definitions themselves.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .phy import NR_CQI_EFFICIENCY
from .solver import (Allocation, InfeasibleError, SliceAllocation, SliceProblem, SlotProblem,
                     SolverWeights, Status, solve_fallback, solve_phase1, solve_phase2)

# Constraint slack granted to the oracle so analytically exact points survive roundoff.
_FEAS_RTOL = 1e-12


@dataclass(frozen=True)
class OracleResult:
    objective: float
    allocation: Allocation | None


def _grid(sp: SliceProblem, se: float, slope: float, grid_points: int) -> np.ndarray:
    extra = [sp.r_min / se, sp.r_ideal / se, sp.b_cap, sp.p_cap / slope]
    b = np.concatenate([np.linspace(0.0, sp.b_cap, grid_points), extra])
    return b[(b >= 0.0) & (b <= sp.b_cap)]


def _slice_options(sp: SliceProblem, psd_min: float, w: SolverWeights, phase,
                   grid_points: int):
    """Best (cost, allocation) for "none" and for each CQI; inf cost if infeasible."""
    inf = float("inf")
    if phase == "fallback":
        none_cost = sp.r_min
    elif sp.r_min <= 0.0:
        none_cost = 0.0 if phase == 1 else sp.beta * sp.r_ideal
    else:
        none_cost = inf
    options = [(none_cost, SliceAllocation(0, 0.0, 0.0, 0.0))]
    for m, se in enumerate(sp.se_eff):
        if not sp.mask[m] or se <= 0.0:
            options.append((inf, None))
            continue
        slope = max(sp.alpha[m], psd_min)
        b = _grid(sp, se, slope, grid_points)
        p = slope * b
        rate = se * b
        ok = p <= sp.p_cap * (1 + _FEAS_RTOL)
        if phase == "fallback":
            cost = np.maximum(sp.r_min - rate, 0.0)
        else:
            ok &= rate >= sp.r_min * (1 - _FEAS_RTOL)
            cost = w.lambda_b * b + w.lambda_p * p
            if phase == 2:
                cost = cost + sp.beta * np.abs(rate - sp.r_ideal)
        cost = np.where(ok, cost, inf)
        i = int(np.argmin(cost))
        if not np.isfinite(cost[i]):
            options.append((inf, None))
        else:
            options.append((float(cost[i]), SliceAllocation(m + 1, float(b[i]), float(p[i]),
                                                            float(rate[i]))))
    return options


def brute_force_oracle(problem: SlotProblem, phase=1, grid_points: int = 10_000) -> OracleResult:
    """Exhaustive search over all (M+1)**S CQI combinations.

    ``phase`` is 1, 2, or ``"fallback"`` (minimize total rate shortfall).
    Returns ``inf`` objective and no allocation when nothing is feasible.
    """
    if phase not in (1, 2, "fallback"):
        raise ValueError(f"unknown phase {phase!r}")
    if grid_points < 1000:
        raise ValueError("grid_points must be >= 1000")
    per_slice = [_slice_options(sp, problem.psd_min, problem.weights, phase, grid_points)
                 for sp in problem.slices]
    costs = [np.array([c for c, _ in opts]) for opts in per_slice]
    total = reduce(np.add.outer, costs)
    flat = int(np.argmin(total))
    best = float(total.flat[flat])
    if not np.isfinite(best):
        return OracleResult(float("inf"), None)
    choice = np.unravel_index(flat, total.shape)
    status = {1: Status.PHASE1_FEASIBLE, 2: Status.PHASE2_OPTIMAL,
              "fallback": Status.FALLBACK_RELAXED}[phase]
    slices = tuple(per_slice[s][int(k)][1] for s, k in enumerate(choice))
    return OracleResult(best, Allocation(slices, status, best))


def random_problem(rng: np.random.Generator, n_slices: int = 3,
                   prb_width_hz: float = 180e3) -> SlotProblem:
    """Random but well-formed slot problem covering loose, tight and masked regimes."""
    se_base = np.asarray(NR_CQI_EFFICIENCY)
    gamma = 2.0 ** se_base - 1.0
    psd_min = float(rng.choice([0.0, 10 ** rng.uniform(-4, -1)]))
    weights = SolverWeights(lambda_b=float(10 ** rng.uniform(-6, 0)),
                            lambda_p=float(10 ** rng.uniform(-6, 0)))
    slices = []
    for _ in range(n_slices):
        b_cap = float(rng.uniform(1.0, 20.0))
        p_cap = float(rng.uniform(0.5, 20.0))
        penalty = rng.uniform(0.0, 0.5) if rng.random() < 0.4 else 0.0
        se_eff = np.maximum(se_base - penalty, 0.0) * prb_width_hz
        # alpha level chosen so the mask threshold p_cap/b_cap lands anywhere in the table
        alpha = gamma * (p_cap / b_cap) * 10 ** rng.uniform(-3.0, 0.5)
        if rng.random() < 0.05:
            alpha = alpha * 1e6
        mask = np.maximum(alpha, psd_min) <= p_cap / b_cap
        if rng.random() < 0.2:
            mask &= rng.random(mask.size) < 0.7
        cap_rate = float(se_eff.max() * b_cap)
        u = rng.random()
        r_min = 0.0 if u < 0.1 else float(rng.uniform(0.0, 1.3) * cap_rate * rng.uniform(0.01, 1.0))
        r_ideal = r_min + float(rng.uniform(0.0, 2.0) * cap_rate)
        beta = 0.0 if rng.random() < 0.1 else float(10 ** rng.uniform(-9, -2))
        slices.append(SliceProblem(
            h=float(10 ** rng.uniform(-13, -9)),
            se_eff=tuple(float(x) for x in se_eff),
            alpha=tuple(float(x) for x in alpha),
            mask=tuple(bool(x) for x in mask),
            r_min=r_min, r_ideal=r_ideal, b_cap=b_cap, p_cap=p_cap, beta=beta,
        ))
    return SlotProblem(tuple(slices), psd_min=psd_min, weights=weights)


@dataclass(frozen=True)
class OracleCheckReport:
    count: int
    feasible: int
    max_abs_gap: float  # largest |oracle - solver| / |solver|
    min_gap: float  # most negative (oracle - solver) / |solver|; < 0 means the oracle won
    failures: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.failures


def _beats(oracle: float, solver: float, rtol: float) -> bool:
    return oracle < solver - rtol * max(abs(solver), 1e-12)


def _gap(oracle: float, solver: float) -> float:
    return (oracle - solver) / max(abs(solver), 1e-12)


def oracle_check(count: int, seed: int = 0, grid_points: int = 10_000,
                 rtol: float = 1e-9) -> OracleCheckReport:
    """Compare the exact solver with the brute-force oracle on random instances.

    Every tenth instance has all CQIs masked so the fallback path is exercised.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    failures, feasible, gaps = [], 0, []
    for i in range(count):
        problem = random_problem(rng)
        if i % 10 == 9:
            problem = SlotProblem(
                tuple(SliceProblem(**{**sp.__dict__, "mask": (False,) * len(sp.mask)})
                      for sp in problem.slices),
                problem.psd_min, problem.weights)
        try:
            p1 = solve_phase1(problem)
        except InfeasibleError:
            if np.isfinite(brute_force_oracle(problem, 1, grid_points).objective):
                failures.append(f"instance {i}: solver infeasible but oracle found a point")
            fb = solve_fallback(problem)
            ref = brute_force_oracle(problem, "fallback", grid_points).objective
            gaps.append(_gap(ref, fb.objective))
            if _beats(ref, fb.objective, rtol):
                failures.append(f"instance {i}: fallback slack {fb.objective!r} > oracle {ref!r}")
            continue
        feasible += 1
        for phase, sol in ((1, p1), (2, solve_phase2(problem, p1))):
            ref = brute_force_oracle(problem, phase, grid_points).objective
            gaps.append(_gap(ref, sol.objective))
            if _beats(ref, sol.objective, rtol):
                failures.append(f"instance {i} phase {phase}: oracle {ref!r} < solver {sol.objective!r}")
    return OracleCheckReport(count, feasible, max(abs(g) for g in gaps), min(gaps),
                             tuple(failures))
