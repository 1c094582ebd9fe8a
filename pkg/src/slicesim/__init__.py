"""Slot-level RAN slicing simulator with an exact two-phase per-slot allocator."""

__version__ = "0.1.0"

from .config import ScenarioConfig, SliceConfig, load_config, preset  # noqa: E402
from .harness import run_campaign, run_sweep, run_trial  # noqa: E402
from .solver import (Allocation, InfeasibleError, Mode, SlotProblem, Status,  # noqa: E402
                     solve_fallback, solve_phase1, solve_phase2, solve_slot)

__all__ = [
    "Allocation", "InfeasibleError", "Mode", "ScenarioConfig", "SliceConfig", "SlotProblem",
    "Status", "load_config", "preset", "run_campaign", "run_sweep", "run_trial",
    "solve_fallback", "solve_phase1", "solve_phase2", "solve_slot",
]
