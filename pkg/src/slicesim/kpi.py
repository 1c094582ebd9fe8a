"""Queue bookkeeping and the KPI suite (delay, TCR, energy efficiency, CRLB, Jain).

Undefined metrics (no arrivals, no energy, no transmission) are ``None``,
never 0, so they drop out of averages rather than distorting them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class QueueState:
    q_bits: float = 0.0
    cum_arrivals_bits: float = 0.0
    cum_served_bits: float = 0.0
    cum_rate_bits: float = 0.0  # sum of R*dt, may exceed what the queue held
    cum_energy_joule: float = 0.0
    slots: int = 0


@dataclass(frozen=True)
class SimParams:
    delta_t: float = 1e-3
    slots_per_trial: int = 40
    trials: int = 200

    def __post_init__(self):
        if self.delta_t <= 0:
            raise ValueError("delta_t must be positive")
        for name in ("slots_per_trial", "trials"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


def update_queue(q: QueueState, arrival_bps: float, served_bps: float, power_w: float,
                 delta_t: float) -> QueueState:
    """One slot of Q <- max(Q + (A - R) dt, 0) with served-bit accounting."""
    if min(arrival_bps, served_bps, power_w) < 0:
        raise ValueError("arrival, service and power must be non-negative")
    arrived = arrival_bps * delta_t
    offered = served_bps * delta_t
    served = min(offered, q.q_bits + arrived)
    return replace(
        q,
        q_bits=max(q.q_bits + arrived - offered, 0.0),
        cum_arrivals_bits=q.cum_arrivals_bits + arrived,
        cum_served_bits=q.cum_served_bits + served,
        cum_rate_bits=q.cum_rate_bits + offered,
        cum_energy_joule=q.cum_energy_joule + power_w * delta_t,
        slots=q.slots + 1,
    )


def little_delay(q_history: Sequence[float], a_history: Sequence[float]) -> float | None:
    """Mean backlog (bits) over mean arrival rate (bit/s), in seconds."""
    if len(q_history) == 0 or len(a_history) == 0:
        raise ValueError("histories must be non-empty")
    mean_a = math.fsum(a_history) / len(a_history)
    if mean_a <= 0:
        return None
    return (math.fsum(q_history) / len(q_history)) / mean_a


def task_completion_ratio(cum_served: float, cum_arrived: float) -> float | None:
    if cum_arrived <= 0:
        return None
    return min(cum_served / cum_arrived, 1.0)


def energy_efficiency(cum_bits: float, cum_energy_joule: float) -> float | None:
    if cum_energy_joule <= 0:
        return None
    return cum_bits / cum_energy_joule


def crlb_timing(bandwidth_hz: float, snr_linear: float) -> float:
    """Time-delay variance bound 1/(8 pi^2 beta^2 SNR) for a flat spectrum."""
    if bandwidth_hz <= 0 or snr_linear <= 0:
        raise ValueError("bandwidth and SNR must be positive")
    return 1.0 / (8.0 * math.pi ** 2 * bandwidth_hz ** 2 * snr_linear)


def jain_index(rates: Sequence[float]) -> float | None:
    if len(rates) == 0:
        raise ValueError("need at least one rate")
    top = max(abs(r) for r in rates)
    if top == 0:
        return None
    scaled = [r / top for r in rates]  # scale-free, and avoids under/overflow in r*r
    total = math.fsum(scaled)
    return total * total / (len(scaled) * math.fsum(r * r for r in scaled))


def jain_normalized(rates: Sequence[float], ideals: Sequence[float]) -> float | None:
    if len(rates) != len(ideals):
        raise ValueError("rates and ideals differ in length")
    if any(x <= 0 for x in ideals):
        raise ValueError("ideal rates must be positive")
    return jain_index([r / x for r, x in zip(rates, ideals)])


@dataclass(frozen=True)
class Stat:
    mean: float | None
    ci95: float | None
    n: int


def summarize(values: Sequence[float | None]) -> Stat:
    """Across-trial mean and 1.96*s/sqrt(n) half-width, skipping absent values."""
    present = np.array([v for v in values if v is not None], dtype=float)
    n = present.size
    if n == 0:
        return Stat(None, None, 0)
    mean = float(present.mean())
    if n < 2:
        return Stat(mean, None, n)
    return Stat(mean, float(1.96 * present.std(ddof=1) / math.sqrt(n)), n)


# Per-slice KPI names, in report order.
SLICE_KPIS = (
    "mean_delay_s", "tcr", "tcr_raw", "energy_eff_bits_per_joule", "crlb_tau_s2",
    "bw_util_frac", "power_util_frac", "mean_rate_bps", "expected_rate_given_feasible_bps",
)
GLOBAL_KPIS = ("feasibility_rate", "jain_absolute", "jain_normalized")


@dataclass(frozen=True)
class KpiReport:
    slice_names: tuple[str, ...]
    per_slice: Mapping[str, Mapping[str, Stat]]
    global_kpis: Mapping[str, Stat]
    trials: int

    def stat(self, slice_name: str, kpi: str) -> Stat:
        return self.per_slice[slice_name][kpi]

    def mean(self, slice_name: str, kpi: str) -> float | None:
        return self.per_slice[slice_name][kpi].mean

    def rows(self):
        """(slice, kpi, Stat) rows; global KPIs use slice label ``all``."""
        for name in self.slice_names:
            for kpi in SLICE_KPIS:
                yield name, kpi, self.per_slice[name][kpi]
        for kpi in GLOBAL_KPIS:
            yield "all", kpi, self.global_kpis[kpi]


def aggregate_trials(slice_names: Sequence[str],
                     trial_kpis: Sequence[Mapping[str, Mapping[str, float | None]]]) -> KpiReport:
    """Fold per-trial KPI dicts into a :class:`KpiReport`.

    Each trial dict maps slice name (and ``"all"`` for global KPIs) to a
    ``{kpi: value}`` mapping.
    """
    per_slice = {
        name: {kpi: summarize([t[name][kpi] for t in trial_kpis]) for kpi in SLICE_KPIS}
        for name in slice_names
    }
    global_kpis = {kpi: summarize([t["all"][kpi] for t in trial_kpis]) for kpi in GLOBAL_KPIS}
    return KpiReport(tuple(slice_names), per_slice, global_kpis, len(trial_kpis))
