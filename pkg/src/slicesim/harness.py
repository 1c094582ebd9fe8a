"""Monte Carlo driver: trials of slot-by-slot environment, solver and queues.

Slot order is fixed so seeds reproduce exactly: traffic step, fading step,
problem assembly, solve, queue update. Trials are independent and can run in
worker processes; results are always returned in trial order.
"""

from __future__ import annotations

import dataclasses
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

from . import env as envmod
from .config import ScenarioConfig, SliceConfig
from .kpi import (KpiReport, QueueState, aggregate_trials, crlb_timing, energy_efficiency,
                  jain_index, jain_normalized, little_delay, task_completion_ratio,
                  update_queue)
from .phy import effective_se_table, feasibility_mask, power_slopes
from .solver import Allocation, SliceProblem, SlotProblem, Status, solve_slot


@dataclass(frozen=True)
class SlotRecord:
    slot: int
    h_db: tuple[float, ...]
    burst: tuple[int, ...]
    arrival_bps: tuple[float, ...]
    r_min_t: tuple[float, ...]
    r_ideal_t: tuple[float, ...]
    allocation: Allocation


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    slots: tuple[SlotRecord, ...]
    kpis: dict
    solve_seconds: tuple[float, ...]  # wall time per slot solve; excluded from outputs


class _SliceStatic:
    """Per-slice quantities that do not change from slot to slot."""

    def __init__(self, cfg: SliceConfig, scenario: ScenarioConfig):
        link = scenario.link
        se = effective_se_table(1.0, scenario.cqi_table, link, cfg.fbl)
        self.se_eff = tuple(x * link.prb_width_hz for x in se)
        self.cfg = cfg


def build_slice_problem(cfg: SliceConfig, scenario: ScenarioConfig, h: float,
                        r_min_t: float, r_ideal_t: float,
                        se_eff: tuple[float, ...] | None = None) -> SliceProblem:
    link = scenario.link
    if se_eff is None:
        se = effective_se_table(h, scenario.cqi_table, link, cfg.fbl)
        se_eff = tuple(x * link.prb_width_hz for x in se)
    return SliceProblem(
        h=h, se_eff=se_eff,
        alpha=tuple(power_slopes(h, scenario.cqi_table, link)),
        mask=tuple(feasibility_mask(h, scenario.cqi_table, link, cfg.b_cap, cfg.p_cap)),
        r_min=r_min_t, r_ideal=r_ideal_t, b_cap=cfg.b_cap, p_cap=cfg.p_cap, beta=cfg.beta,
    )


def build_slot_problem(scenario: ScenarioConfig, h: Sequence[float], burst: Sequence[int],
                       statics: Sequence[_SliceStatic] | None = None):
    """SlotProblem plus per-slice (arrival, r_ideal_t, r_min_t) for given gains and bursts."""
    demands, slices = [], []
    for s, cfg in enumerate(scenario.slices):
        demand = envmod.slot_demand(cfg.r_min, cfg.r_ideal, cfg.traffic.kappa, burst[s])
        demands.append(demand)
        se_eff = statics[s].se_eff if statics is not None else None
        slices.append(build_slice_problem(cfg, scenario, h[s], demand[2], demand[1], se_eff))
    problem = SlotProblem(tuple(slices), psd_min=scenario.link.psd_min, weights=scenario.weights)
    return problem, demands


def run_trial(config: ScenarioConfig, trial_index: int) -> TrialRecord:
    statics = [_SliceStatic(c, config) for c in config.slices]
    state = envmod.make_env(config.master_seed, trial_index,
                            [c.fading for c in config.slices], [c.traffic for c in config.slices])
    n = len(config.slices)
    dt = config.sim.delta_t
    queues = [QueueState() for _ in range(n)]
    q_hist = [[] for _ in range(n)]
    a_hist = [[] for _ in range(n)]
    slots, solve_times = [], []
    crlb_samples = [[] for _ in range(n)]
    for t in range(config.sim.slots_per_trial):
        bursts = [int(envmod.step_traffic(se, c.traffic)) for se, c in zip(state.slices, config.slices)]
        fades = [envmod.step_fading(se, c.fading) for se, c in zip(state.slices, config.slices)]
        gains = [h for _, h in fades]
        problem, demands = build_slot_problem(config, gains, bursts, statics)
        t0 = time.perf_counter()
        alloc = solve_slot(problem, config.mode)
        solve_times.append(time.perf_counter() - t0)
        for s, a in enumerate(alloc.slices):
            arrival = demands[s][0]
            queues[s] = update_queue(queues[s], arrival, a.rate_bps, a.power_w, dt)
            q_hist[s].append(queues[s].q_bits)
            a_hist[s].append(arrival)
            if a.bw_prb > 0 and a.power_w > 0:
                snr = gains[s] * a.power_w / (config.link.n0_per_prb * a.bw_prb)
                crlb_samples[s].append(crlb_timing(a.bw_prb * config.link.prb_width_hz, snr))
        slots.append(SlotRecord(
            slot=t, h_db=tuple(d for d, _ in fades), burst=tuple(bursts),
            arrival_bps=tuple(d[0] for d in demands), r_min_t=tuple(d[2] for d in demands),
            r_ideal_t=tuple(d[1] for d in demands), allocation=alloc,
        ))
    kpis = _trial_kpis(config, slots, queues, q_hist, a_hist, crlb_samples)
    return TrialRecord(trial_index, tuple(slots), kpis, tuple(solve_times))


def _mean(xs):
    return math.fsum(xs) / len(xs) if xs else None


def _trial_kpis(config, slots, queues, q_hist, a_hist, crlb_samples) -> dict:
    feasible = [r.allocation.status is not Status.FALLBACK_RELAXED for r in slots]
    out = {}
    mean_rates = []
    for s, cfg in enumerate(config.slices):
        allocs = [r.allocation.slices[s] for r in slots]
        q = queues[s]
        mean_rate = _mean([a.rate_bps for a in allocs])
        mean_rates.append(mean_rate)
        feas_rates = [a.rate_bps for a, ok in zip(allocs, feasible) if ok]
        out[cfg.name] = {
            "mean_delay_s": little_delay(q_hist[s], a_hist[s]),
            "tcr": task_completion_ratio(q.cum_served_bits, q.cum_arrivals_bits),
            "tcr_raw": task_completion_ratio(q.cum_rate_bits, q.cum_arrivals_bits),
            "energy_eff_bits_per_joule": energy_efficiency(q.cum_rate_bits, q.cum_energy_joule),
            "crlb_tau_s2": _mean(crlb_samples[s]),
            "bw_util_frac": _mean([a.bw_prb for a in allocs]) / cfg.b_cap,
            "power_util_frac": _mean([a.power_w for a in allocs]) / cfg.p_cap,
            "mean_rate_bps": mean_rate,
            "expected_rate_given_feasible_bps": _mean(feas_rates),
        }
    ideals = [c.r_ideal for c in config.slices]
    out["all"] = {
        "feasibility_rate": sum(feasible) / len(feasible),
        "jain_absolute": jain_index(mean_rates),
        "jain_normalized": (jain_normalized(mean_rates, ideals)
                            if all(x > 0 for x in ideals) else None),
    }
    return out


@dataclass(frozen=True)
class CampaignResult:
    report: KpiReport
    trials: tuple[TrialRecord, ...]

    @property
    def solve_seconds(self) -> list[float]:
        return [x for t in self.trials for x in t.solve_seconds]


def _run_trial_star(args):
    return run_trial(*args)


def run_campaign(config: ScenarioConfig, workers: int = 1) -> CampaignResult:
    """Run ``config.sim.trials`` trials, optionally across worker processes."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    jobs = [(config, k) for k in range(config.sim.trials)]
    if workers == 1 or len(jobs) == 1:
        trials = [run_trial(*j) for j in jobs]
    else:
        chunk = max(1, len(jobs) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trials = list(pool.map(_run_trial_star, jobs, chunksize=chunk))
    report = aggregate_trials(config.slice_names, [t.kpis for t in trials])
    return CampaignResult(report, tuple(trials))


# ------------------------------------------------------------------ sweeps

def _scale_slices(config: ScenarioConfig, attr: str, factor: float) -> ScenarioConfig:
    slices = tuple(dataclasses.replace(s, **{attr: getattr(s, attr) * factor}) for s in config.slices)
    return config.replace(slices=slices)


def _set_weight(attr):
    def apply(config, value):
            return config.replace(weights=dataclasses.replace(config.weights, **{attr: float(value)}))
    return apply


def _lambda_scale(config, value):
    w = config.weights
    return config.replace(weights=dataclasses.replace(
        w, lambda_b=w.lambda_b * float(value), lambda_p=w.lambda_p * float(value)))


SWEEP_KNOBS: dict[str, Callable[[ScenarioConfig, object], ScenarioConfig]] = {
    "mode": lambda c, v: c.replace(mode=v),
    "beta_scale": lambda c, v: _scale_slices(c, "beta", float(v)),
    "lambda_scale": _lambda_scale,
    "lambda_b": _set_weight("lambda_b"),
    "lambda_p": _set_weight("lambda_p"),
    "p_cap_scale": lambda c, v: _scale_slices(c, "p_cap", float(v)),
    "b_cap_scale": lambda c, v: _scale_slices(c, "b_cap", float(v)),
}


class UnknownKnobError(KeyError):
    pass


def apply_knob(config: ScenarioConfig, knob: str, value) -> ScenarioConfig:
    try:
        fn = SWEEP_KNOBS[knob]
    except KeyError:
        raise UnknownKnobError(f"unknown sweep knob {knob!r}; choose from {sorted(SWEEP_KNOBS)}") from None
    return fn(config, value)


def run_sweep(base: ScenarioConfig, knob: str, values: Sequence, workers: int = 1):
    """One campaign per knob value, all with the base master seed.

    Returns a list of ``(value, KpiReport)`` pairs in input order.
    """
    if knob not in SWEEP_KNOBS:
        raise UnknownKnobError(f"unknown sweep knob {knob!r}; choose from {sorted(SWEEP_KNOBS)}")
    return [(v, run_campaign(apply_knob(base, knob, v), workers).report) for v in values]
