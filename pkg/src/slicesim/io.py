"""Output files: KPI summary (CSV/JSON), slot trace, sweep table, run manifest.

Floats are written with 9 significant digits; absent values are empty CSV
cells and JSON ``null``.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

from . import __version__
from .config import ScenarioConfig
from .harness import TrialRecord
from .kpi import GLOBAL_KPIS, SLICE_KPIS, KpiReport

KPI_SUMMARY_COLUMNS = ("slice", "kpi", "mean", "ci95")
SLOT_TRACE_COLUMNS = ("trial", "slot", "slice", "h_db", "burst", "arrival_bps", "cqi", "bw_prb",
                      "power_w", "rate_bps", "deviation", "slack", "status")
SWEEP_COLUMNS = ("knob_value", "slice", "kpi_name", "mean", "ci_half_width", "mean_norm")

_STAT = {
    "type": "object",
    "required": ["mean", "ci95", "n"],
    "additionalProperties": False,
    "properties": {
        "mean": {"type": ["number", "null"]},
        "ci95": {"type": ["number", "null"]},
        "n": {"type": "integer", "minimum": 0},
    },
}

KPI_SUMMARY_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "slicesim KPI summary",
    "type": "object",
    "required": ["format", "trials", "slices", "global"],
    "additionalProperties": False,
    "properties": {
        "format": {"const": "slicesim.kpi_summary/1"},
        "trials": {"type": "integer", "minimum": 1},
        "slices": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": list(SLICE_KPIS),
                "additionalProperties": False,
                "properties": {k: _STAT for k in SLICE_KPIS},
            },
        },
        "global": {
            "type": "object",
            "required": list(GLOBAL_KPIS),
            "additionalProperties": False,
            "properties": {k: _STAT for k in GLOBAL_KPIS},
        },
    },
}


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    return format(x, ".9g")


def _round(x):
    return None if x is None else float(format(x, ".9g"))


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def kpi_summary_rows(report: KpiReport):
    for name, kpi, st in report.rows():
        yield [name, kpi, fmt(st.mean), fmt(st.ci95)]


def kpi_summary_doc(report: KpiReport) -> dict:
    def stat(st):
        return {"mean": _round(st.mean), "ci95": _round(st.ci95), "n": st.n}

    return {
        "format": "slicesim.kpi_summary/1",
        "trials": report.trials,
        "slices": {name: {k: stat(v) for k, v in report.per_slice[name].items()}
                   for name in report.slice_names},
        "global": {k: stat(v) for k, v in report.global_kpis.items()},
    }


def write_kpi_summary(report: KpiReport, out_dir: Path) -> None:
    _write_csv(out_dir / "kpi_summary.csv", KPI_SUMMARY_COLUMNS, kpi_summary_rows(report))
    _write_json(out_dir / "kpi_summary.json", kpi_summary_doc(report))


def slot_trace_rows(config: ScenarioConfig, trials: Sequence[TrialRecord]):
    names = config.slice_names
    for tr in trials:
        for rec in tr.slots:
            for s, a in enumerate(rec.allocation.slices):
                yield [tr.trial, rec.slot, names[s], fmt(rec.h_db[s]), rec.burst[s],
                       fmt(rec.arrival_bps[s]), a.cqi, fmt(a.bw_prb), fmt(a.power_w),
                       fmt(a.rate_bps), fmt(a.deviation), fmt(a.slack),
                       rec.allocation.status.value]


def write_slot_trace(config: ScenarioConfig, trials: Sequence[TrialRecord], out_dir: Path) -> None:
    _write_csv(out_dir / "slot_trace.csv", SLOT_TRACE_COLUMNS, slot_trace_rows(config, trials))


def sweep_rows(sweep: Sequence[tuple[object, KpiReport]]):
    """Long-format rows with per-(slice, kpi) min-max normalized means."""
    table = []
    for value, report in sweep:
        for name, kpi, st in report.rows():
            table.append((value, name, kpi, st))
    bounds = {}
    for _, name, kpi, st in table:
        if st.mean is not None:
            lo, hi = bounds.get((name, kpi), (st.mean, st.mean))
            bounds[(name, kpi)] = (min(lo, st.mean), max(hi, st.mean))
    for value, name, kpi, st in table:
        norm = None
        if st.mean is not None:
            lo, hi = bounds[(name, kpi)]
            norm = (st.mean - lo) / (hi - lo) if hi > lo else 0.0
        yield [value if isinstance(value, str) else fmt(value), name, kpi,
               fmt(st.mean), fmt(st.ci95), fmt(norm)]


def write_sweep_table(sweep, out_dir: Path) -> None:
    _write_csv(out_dir / "sweep_table.csv", SWEEP_COLUMNS, sweep_rows(sweep))


def manifest_doc(config: ScenarioConfig, command: str, **extra) -> dict:
    doc = {
        "artifact": "slicesim",
        "version": __version__,
        "command": command,
        "master_seed": config.master_seed,
    }
    doc.update(extra)
    doc["scenario"] = config.to_dict()
    return doc


def write_manifest(doc: dict, out_dir: Path) -> None:
    _write_json(out_dir / "manifest.json", doc)
