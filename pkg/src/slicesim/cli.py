"""Command line entry point: ``slicesim run|solve|sweep|oracle-check``.

Exit codes: 0 success, 2 configuration or usage error, 3 oracle-check failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import io
from .config import ConfigError, ScenarioConfig, config_from_dict, locate_line, preset
from .env import Burst, slot_demand
from .harness import SWEEP_KNOBS, build_slice_problem, run_campaign, run_sweep
from .kpi import SimParams
from .oracle import oracle_check
from .solver import Allocation, Mode, SlotProblem, solve_slot

EXIT_OK, EXIT_USAGE, EXIT_ORACLE = 0, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _scenario_flags(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", type=Path, help="scenario JSON or a manifest.json from a previous run")
    src.add_argument("--preset", choices=("baseline", "chaser"))
    p.add_argument("--mode", choices=[m.value for m in Mode])
    p.add_argument("--trials", type=int)
    p.add_argument("--slots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slicesim", description="Slot-level RAN slicing simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="Monte Carlo campaign")
    _scenario_flags(run)
    run.add_argument("--out", type=Path, required=True)
    run.add_argument("--trace", action="store_true", help="also write slot_trace.csv")

    sw = sub.add_parser("sweep", help="one campaign per knob value")
    _scenario_flags(sw)
    sw.add_argument("--out", type=Path, required=True)
    sw.add_argument("--knob", help=f"one of {', '.join(SWEEP_KNOBS)}")
    sw.add_argument("--values", help="comma separated knob values")

    solve = sub.add_parser("solve", help="solve a single slot snapshot")
    _scenario_flags(solve)
    solve.add_argument("--snapshot", required=True,
                       help="inline JSON or a path to a JSON file: "
                            '{"slices": [{"h_db": -110, "burst": "ON"}, ...]}')

    oc = sub.add_parser("oracle-check", help="compare solver with brute force")
    oc.add_argument("--count", type=int, default=100)
    oc.add_argument("--seed", type=int, default=0)
    oc.add_argument("--grid", type=int, default=10_000)
    return parser


# ------------------------------------------------------------- scenario i/o

def _load_document(path: Path):
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return text, json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError((), f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno,
                          str(path)) from None


def load_scenario(args) -> tuple[ScenarioConfig, dict]:
    """Scenario after CLI overrides, plus the raw manifest fields (empty for plain configs)."""
    extras = {}
    if args.config is not None:
        text, doc = _load_document(args.config)
        try:
            config = config_from_dict(doc)
        except ConfigError as exc:
            raise ConfigError(exc.path, exc.message, locate_line(text, exc.path),
                              str(args.config)) from None
        if isinstance(doc, dict) and "scenario" in doc:
            extras = {k: doc[k] for k in ("trace", "sweep") if k in doc}
    else:
        config = preset(args.preset or "baseline")
    sim = config.sim
    try:
        if args.trials is not None or args.slots is not None:
            sim = SimParams(sim.delta_t,
                            args.slots if args.slots is not None else sim.slots_per_trial,
                            args.trials if args.trials is not None else sim.trials)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    changes = {"sim": sim}
    if args.mode is not None:
        changes["mode"] = Mode(args.mode)
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    return config.replace(**changes), extras


# ------------------------------------------------------------------ tables

def _cell(x, scale=1.0, digits=4):
    return "-" if x is None else f"{x * scale:.{digits}g}"


SUMMARY_COLUMNS = (
    ("Delay (ms)", "mean_delay_s", 1e3),
    ("TCR", "tcr", 1.0),
    ("TCR raw", "tcr_raw", 1.0),
    ("EE (bit/J)", "energy_eff_bits_per_joule", 1.0),
    ("BW util (%)", "bw_util_frac", 100.0),
    ("P util (%)", "power_util_frac", 100.0),
    ("E[R|feas] (b/s)", "expected_rate_given_feasible_bps", 1.0),
    ("CRLB (s^2)", "crlb_tau_s2", 1.0),
)


def summary_table(report, title: str) -> str:
    header = ["Slice"] + [c[0] for c in SUMMARY_COLUMNS]
    rows = [[name] + [_cell(report.mean(name, k), scale) for _, k, scale in SUMMARY_COLUMNS]
            for name in report.slice_names]
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = [title, "  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
    g = report.global_kpis
    lines.append(f"feasibility rate {_cell(g['feasibility_rate'].mean)}   "
                 f"Jain (abs) {_cell(g['jain_absolute'].mean)}   "
                 f"Jain (norm) {_cell(g['jain_normalized'].mean)}   trials {report.trials}")
    return "\n".join(lines)


def allocation_table(names, allocation: Allocation) -> str:
    header = ("Slice", "CQI", "B (PRB)", "P (W)", "R (b/s)", "v (b/s)", "d (b/s)")
    rows = [(n, str(a.cqi), io.fmt(a.bw_prb), io.fmt(a.power_w), io.fmt(a.rate_bps),
             io.fmt(a.deviation) or "-", io.fmt(a.slack) or "-")
            for n, a in zip(names, allocation.slices)]
    widths = [max(len(r[i]) for r in (header,) + tuple(rows)) for i in range(len(header))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
    lines.append(f"status {allocation.status.value}   objective {io.fmt(allocation.objective)}")
    return "\n".join(lines)


# ---------------------------------------------------------------- commands

def cmd_run(args) -> int:
    config, extras = load_scenario(args)
    trace = args.trace or bool(extras.get("trace", False))
    result = run_campaign(config, args.workers)
    args.out.mkdir(parents=True, exist_ok=True)
    io.write_kpi_summary(result.report, args.out)
    if trace:
        io.write_slot_trace(config, result.trials, args.out)
    io.write_manifest(io.manifest_doc(config, "run", trace=trace), args.out)
    print(summary_table(result.report, f"mode {config.mode.value}, seed {config.master_seed}"))
    return EXIT_OK


def _parse_values(knob: str, raw: str) -> list:
    items = [v.strip() for v in raw.split(",") if v.strip()]
    if not items:
        raise UsageError("--values is empty")
    if knob == "mode":
        bad = [v for v in items if v not in {m.value for m in Mode}]
        if bad:
            raise UsageError(f"invalid mode value(s) {bad}")
        return items
    try:
        return [float(v) for v in items]
    except ValueError:
        raise UsageError(f"--values for {knob} must be numbers") from None


def cmd_sweep(args) -> int:
    config, extras = load_scenario(args)
    saved = extras.get("sweep") or {}
    knob = args.knob or saved.get("knob")
    if knob is None:
        raise UsageError("--knob is required")
    if knob not in SWEEP_KNOBS:
        raise UsageError(f"unknown sweep knob {knob!r}; choose from {', '.join(SWEEP_KNOBS)}")
    if args.values is not None:
        values = _parse_values(knob, args.values)
    elif "values" in saved and knob == saved.get("knob"):
        values = list(saved["values"])
    else:
        raise UsageError("--values is required")
    sweep = run_sweep(config, knob, values, args.workers)
    args.out.mkdir(parents=True, exist_ok=True)
    io.write_sweep_table(sweep, args.out)
    io.write_manifest(io.manifest_doc(config, "sweep", sweep={"knob": knob, "values": values}),
                      args.out)
    for value, report in sweep:
        print(summary_table(report, f"{knob} = {value}"))
        print()
    return EXIT_OK


def _read_snapshot(raw: str):
    path = Path(raw)
    text = raw
    if not raw.lstrip().startswith("{") and path.exists():
        text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(("snapshot",), f"invalid JSON: {exc.msg} (column {exc.colno})",
                          exc.lineno) from None
    return text, doc


def _num(entry, key, path, required=False):
    if key not in entry:
        if required:
            raise ConfigError(path + (key,), "missing")
        return None
    v = entry[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path + (key,), "expected a number")
    return float(v)


def snapshot_problem(config: ScenarioConfig, doc) -> SlotProblem:
    """SlotProblem from a snapshot; per slice ``h_db`` or ``h``, optional ``burst``,
    ``r_min``, ``r_ideal`` (slot targets), ``b_cap``, ``p_cap``."""
    if not isinstance(doc, dict) or not isinstance(doc.get("slices"), list):
        raise ConfigError(("slices",), "snapshot needs a \"slices\" list")
    entries = doc["slices"]
    if len(entries) != len(config.slices):
        raise ConfigError(("slices",), f"expected {len(config.slices)} entries, got {len(entries)}")
    known = {"name", "h_db", "h", "burst", "r_min", "r_ideal", "b_cap", "p_cap"}
    slices = []
    for s, (cfg, e) in enumerate(zip(config.slices, entries)):
        path = ("slices", s)
        if not isinstance(e, dict):
            raise ConfigError(path, "expected an object")
        for k in e:
            if k not in known:
                raise ConfigError(path + (k,), "unknown key")
        h_db, h = _num(e, "h_db", path), _num(e, "h", path)
        if (h_db is None) == (h is None):
            raise ConfigError(path, "give exactly one of h_db or h")
        if h is None:
            h = 10.0 ** (h_db / 10.0)
        elif h <= 0:
            raise ConfigError(path + ("h",), "must be positive")
        burst = e.get("burst", "OFF")
        if isinstance(burst, str) and burst.upper() in Burst.__members__:
            burst = Burst[burst.upper()]
        elif burst in (0, 1) and not isinstance(burst, bool):
            burst = Burst(burst)
        else:
            raise ConfigError(path + ("burst",), "expected \"ON\", \"OFF\", 0 or 1")
        _, r_ideal_t, r_min_t = slot_demand(cfg.r_min, cfg.r_ideal, cfg.traffic.kappa, burst)
        overrides = {k: _num(e, k, path) for k in ("r_min", "r_ideal", "b_cap", "p_cap")}
        caps = {k: overrides[k] for k in ("b_cap", "p_cap") if overrides[k] is not None}
        try:
            cfg = dataclasses.replace(cfg, **caps) if caps else cfg
            r_min_t = overrides["r_min"] if overrides["r_min"] is not None else r_min_t
            r_ideal_t = overrides["r_ideal"] if overrides["r_ideal"] is not None else max(r_ideal_t, r_min_t)
            slices.append(build_slice_problem(cfg, config, h, r_min_t, r_ideal_t))
        except ValueError as exc:
            raise ConfigError(path, str(exc)) from None
    return SlotProblem(tuple(slices), psd_min=config.link.psd_min, weights=config.weights)


def allocation_doc(names, allocation: Allocation) -> dict:
    return {
        "status": allocation.status.value,
        "objective": allocation.objective,
        "slices": [dict(name=n, **dataclasses.asdict(a)) for n, a in zip(names, allocation.slices)],
    }


def cmd_solve(args) -> int:
    config, _ = load_scenario(args)
    text, doc = _read_snapshot(args.snapshot)
    try:
        problem = snapshot_problem(config, doc)
    except ConfigError as exc:
        raise ConfigError(("snapshot",) + exc.path, exc.message, locate_line(text, exc.path)) from None
    allocation = solve_slot(problem, config.mode)
    print(allocation_table(config.slice_names, allocation))
    print(json.dumps(allocation_doc(config.slice_names, allocation), indent=2))
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    if args.grid < 1000:
        raise UsageError("--grid must be >= 1000")
    report = oracle_check(args.count, seed=args.seed, grid_points=args.grid)
    print(f"instances {report.count} (phase-1 feasible {report.feasible})")
    print(f"max |relative gap| {report.max_abs_gap:.3e}   min signed gap {report.min_gap:.3e}")
    for line in report.failures[:20]:
        print("  " + line)
    print("PASS" if report.passed else f"FAIL ({len(report.failures)} instances)")
    return EXIT_OK if report.passed else EXIT_ORACLE


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "solve": cmd_solve, "oracle-check": cmd_oracle_check}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"slicesim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"slicesim: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
