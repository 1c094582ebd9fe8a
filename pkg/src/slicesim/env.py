"""Per-slot random environment: AR(1) fading in dB and ON/OFF burst traffic.

Random streams derive from ``numpy.random.SeedSequence(master_seed,
spawn_key=(trial, slice, process))`` with process 0 = fading, 1 = traffic.
Every (trial, slice, process) triple thus owns an independent PCG64 stream
regardless of how trials are scheduled across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Sequence

import numpy as np

FADING_STREAM = 0
TRAFFIC_STREAM = 1


class Burst(IntEnum):
    OFF = 0
    ON = 1


@dataclass(frozen=True)
class FadingParams:
    rho: float = 0.9
    sigma_db: float = 2.0
    mean_db: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must be in [0, 1)")
        if self.sigma_db < 0:
            raise ValueError("sigma_db must be non-negative")


@dataclass(frozen=True)
class TrafficParams:
    p_on_to_off: float = 0.5
    p_off_to_on: float = 0.5
    kappa: float = 1.5
    initial_state: Burst = Burst.OFF

    def __post_init__(self):
        for name in ("p_on_to_off", "p_off_to_on"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.kappa < 1:
            raise ValueError("kappa must be >= 1")
        object.__setattr__(self, "initial_state", Burst(self.initial_state))

    @property
    def on_fraction(self) -> float:
        """Stationary probability of the ON state."""
        total = self.p_on_to_off + self.p_off_to_on
        return 0.5 if total == 0 else self.p_off_to_on / total


@dataclass
class SliceEnv:
    h_db: float
    burst: Burst
    fading_rng: np.random.Generator = field(repr=False)
    traffic_rng: np.random.Generator = field(repr=False)

    @property
    def h(self) -> float:
        return 10.0 ** (self.h_db / 10.0)


@dataclass
class EnvState:
    slices: list[SliceEnv]


def substream(master_seed: int, trial: int, slice_index: int, process: int) -> np.random.Generator:
    seq = np.random.SeedSequence(master_seed, spawn_key=(trial, slice_index, process))
    return np.random.Generator(np.random.PCG64(seq))


def make_env(seed: int, trial: int, fading: Sequence[FadingParams],
             traffic: Sequence[TrafficParams]) -> EnvState:
    """Fresh environment for one trial; gains start at each slice's mean."""
    if len(fading) != len(traffic):
        raise ValueError("fading and traffic parameter lists differ in length")
    return EnvState([
        SliceEnv(h_db=f.mean_db, burst=t.initial_state,
                 fading_rng=substream(seed, trial, s, FADING_STREAM),
                 traffic_rng=substream(seed, trial, s, TRAFFIC_STREAM))
        for s, (f, t) in enumerate(zip(fading, traffic))
    ])


def step_fading(state: SliceEnv, params: FadingParams) -> tuple[float, float]:
    """Advance the mean-centred AR(1) gain; returns (h_db, h_linear)."""
    xi = state.fading_rng.standard_normal()
    innovation = math.sqrt(1.0 - params.rho ** 2) * params.sigma_db * xi
    state.h_db = params.mean_db + params.rho * (state.h_db - params.mean_db) + innovation
    return state.h_db, state.h


def step_traffic(state: SliceEnv, params: TrafficParams) -> Burst:
    # one draw per step in either state keeps the stream position slot-aligned
    u = state.traffic_rng.random()
    if state.burst is Burst.ON:
        if u < params.p_on_to_off:
            state.burst = Burst.OFF
    elif u < params.p_off_to_on:
        state.burst = Burst.ON
    return state.burst


def slot_demand(r_min: float, r_ideal: float, kappa: float, burst: int) -> tuple[float, float, float]:
    """Return (arrival_bps, r_ideal_t, r_min_t) for the given burst flag."""
    if burst:
        return r_min + kappa * r_ideal, kappa * r_ideal, r_min
    return r_min, r_ideal, r_min
