"""Scenario configuration: dataclasses, presets, JSON (de)serialization.

A config document is a JSON object with sections ``slices``, ``link``,
``weights``, ``sim``, ``mode``, ``master_seed`` and optionally ``cqi_table``.
``"base": "baseline" | "chaser"`` starts from a preset and overlays the
document on top of it (slices merge by position). Validation failures raise
:class:`ConfigError` carrying the JSON path and, when the source text is
known, the line of the offending entry.
"""

from __future__ import annotations

import copy
import dataclasses
import json
import typing
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .env import Burst, FadingParams, TrafficParams
from .kpi import SimParams
from .phy import CqiEntry, FblParams, LinkBudget, default_cqi_table, validate_cqi_table
from .solver import Mode, SolverWeights


class ConfigError(ValueError):
    def __init__(self, path: tuple, message: str, line: int | None = None,
                 source: str | None = None):
        self.path = tuple(path)
        self.message = message
        self.line = line
        self.source = source
        super().__init__(str(self))

    def __str__(self):
        where = format_path(self.path) or "<root>"
        prefix = f"{self.source}: " if self.source else ""
        if self.line is not None:
            prefix += f"line {self.line}: "
        return f"{prefix}{where}: {self.message}"


def format_path(path) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


@dataclass(frozen=True)
class SliceConfig:
    name: str
    b_cap: float
    p_cap: float
    r_min: float
    r_ideal: float
    beta: float = 1.0
    fbl: FblParams = FblParams()
    fading: FadingParams = FadingParams()
    traffic: TrafficParams = TrafficParams()

    def __post_init__(self):
        for name in ("b_cap", "p_cap"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 <= self.r_min <= self.r_ideal:
            raise ValueError("need 0 <= r_min <= r_ideal")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")


@dataclass(frozen=True)
class ScenarioConfig:
    slices: tuple[SliceConfig, ...]
    link: LinkBudget
    weights: SolverWeights = SolverWeights()
    sim: SimParams = SimParams()
    mode: Mode = Mode.BASELINE
    master_seed: int = 42
    cqi_table: tuple[CqiEntry, ...] = field(default_factory=default_cqi_table)

    def __post_init__(self):
        if not self.slices:
            raise ValueError("at least one slice is required")
        names = [s.name for s in self.slices]
        if len(set(names)) != len(names):
            raise ValueError("slice names must be unique")
        if len(self.cqi_table) != 15:
            raise ValueError("cqi_table must have 15 entries")
        validate_cqi_table(self.cqi_table)
        object.__setattr__(self, "mode", Mode(self.mode))

    @property
    def slice_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.slices)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return to_jsonable(self)


# ---------------------------------------------------------------- presets

PRESET_NOISE_DBM_PER_HZ = -174.0


def _preset_slices() -> tuple[SliceConfig, ...]:
    return (
        SliceConfig(
            name="eMBB", b_cap=9.0, p_cap=9.0, r_min=50e3, r_ideal=8.4e6, beta=1.0,
            fbl=FblParams(168, 1e-5, enabled=False),
            fading=FadingParams(rho=0.95, sigma_db=2.0, mean_db=-114.0),
            traffic=TrafficParams(p_on_to_off=0.2, p_off_to_on=0.2, kappa=1.5),
        ),
        SliceConfig(
            name="URLLC", b_cap=7.0, p_cap=8.5, r_min=40e3, r_ideal=62e3, beta=1.0,
            fbl=FblParams(168, 1e-5, enabled=True),
            fading=FadingParams(rho=0.8, sigma_db=4.0, mean_db=-116.0),
            traffic=TrafficParams(p_on_to_off=0.5, p_off_to_on=0.3, kappa=2.0),
        ),
        SliceConfig(
            name="mMTC", b_cap=4.0, p_cap=4.0, r_min=20e3, r_ideal=48e3, beta=1.0,
            fbl=FblParams(168, 1e-5, enabled=False),
            fading=FadingParams(rho=0.85, sigma_db=3.0, mean_db=-118.0),
            traffic=TrafficParams(p_on_to_off=0.4, p_off_to_on=0.05, kappa=3.0),
        ),
    )


def preset(name: str) -> ScenarioConfig:
    """``baseline`` or ``chaser``; the two differ only in operating mode."""
    try:
        mode = {"baseline": Mode.BASELINE, "chaser": Mode.CHASER}[name]
    except KeyError:
        raise ConfigError(("preset",), f"unknown preset {name!r}") from None
    link = LinkBudget.from_noise_density(
        PRESET_NOISE_DBM_PER_HZ, prb_width_hz=180e3, noise_figure_db=9.0,
        interference_margin_db=6.0, misreport_inflation=1.12, psd_min=1.0,
    )
    return ScenarioConfig(
        slices=_preset_slices(), link=link, weights=SolverWeights(1e-3, 1e-3),
        sim=SimParams(delta_t=1e-3, slots_per_trial=40, trials=200),
        mode=mode, master_seed=42,
    )


PRESETS = ("baseline", "chaser")


# ---------------------------------------------------------- serialization

def to_jsonable(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Burst):
        return obj.name
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    return obj


def _convert(tp, value, path):
    origin = typing.get_origin(tp)
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path)
    if origin is tuple:
        (item_tp, _) = typing.get_args(tp)
        if not isinstance(value, list):
            raise ConfigError(path, "expected a list")
        return tuple(_convert(item_tp, v, path + (i,)) for i, v in enumerate(value))
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, "expected true/false")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, "expected an integer")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, "expected a number")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(path, "expected a string")
        return value
    if tp is Burst:
        if isinstance(value, str) and value.upper() in Burst.__members__:
            return Burst[value.upper()]
        raise ConfigError(path, "expected \"ON\" or \"OFF\"")
    if tp is Mode:
        try:
            return Mode(value)
        except ValueError:
            raise ConfigError(path, f"mode must be one of {[m.value for m in Mode]}") from None
    raise TypeError(f"unsupported config type {tp!r}")


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(path, "expected an object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    if cls is LinkBudget and "noise_density_dbm_per_hz" in data:
        data = dict(data)
        density = _convert(float, data.pop("noise_density_dbm_per_hz"),
                           path + ("noise_density_dbm_per_hz",))
        width = _convert(float, data.get("prb_width_hz", 180e3), path + ("prb_width_hz",))
        if "n0_per_prb" in data:
            raise ConfigError(path, "give either n0_per_prb or noise_density_dbm_per_hz")
        data["n0_per_prb"] = 10.0 ** ((density - 30.0) / 10.0) * width
    for key in data:
        if key not in names:
            raise ConfigError(path + (key,), "unknown key")
    kwargs = {k: _convert(hints[k], v, path + (k,)) for k, v in data.items()}
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(path, str(exc)) from None
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path + _blamed_key(str(exc), data), str(exc)) from None


def _blamed_key(message: str, data: dict) -> tuple:
    # point at a key the document actually set when the message names it
    words = set(message.replace(",", " ").split())
    for key in data:
        if key in words:
            return (key,)
    return ()


def _merge(base, over):
    if isinstance(base, dict) and isinstance(over, dict):
        out = dict(base)
        for k, v in over.items():
            out[k] = _merge(base[k], v) if k in base else v
        return out
    if isinstance(base, list) and isinstance(over, list) and all(isinstance(x, dict) for x in over):
        merged = [_merge(b, o) for b, o in zip(base, over)]
        return merged + over[len(base):]
    return over


def config_from_dict(doc: dict) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigError((), "config must be a JSON object")
    doc = copy.deepcopy(doc)
    if "scenario" in doc:  # a run manifest
        doc = doc["scenario"]
        if not isinstance(doc, dict):
            raise ConfigError(("scenario",), "expected an object")
        prefix = ("scenario",)
    else:
        prefix = ()
    base = doc.pop("base", None)
    if base is not None:
        if base not in PRESETS:
            raise ConfigError(prefix + ("base",), f"base must be one of {list(PRESETS)}")
        doc = _merge(preset(base).to_dict(), doc)
    if "cqi_table" not in doc:
        doc["cqi_table"] = to_jsonable(default_cqi_table())
    for required in ("slices", "link"):
        if required not in doc:
            raise ConfigError(prefix + (required,), "missing required section")
    return _build(ScenarioConfig, doc, prefix)


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text)


def parse_config(text: str) -> ScenarioConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError((), f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno) from None
    try:
        return config_from_dict(doc)
    except ConfigError as exc:
        raise ConfigError(exc.path, exc.message, locate_line(text, exc.path)) from None


def locate_line(text: str, path) -> int | None:
    """Line (1-based) of the JSON value, or nearest existing parent, at ``path``."""
    decoder = json.JSONDecoder()

    def skip_ws(i):
        while i < len(text) and text[i] in " \t\r\n":
            i += 1
        return i

    def walk(i, remaining):
        # returns (line_of_target, end_index)
        i = skip_ws(i)
        found = None
        if remaining == ():
            found = text.count("\n", 0, i) + 1
        ch = text[i] if i < len(text) else ""
        if ch == "{":
            i = skip_ws(i + 1)
            if text[i] == "}":
                return found, i + 1
            while True:
                key, i = decoder.raw_decode(text, skip_ws(i))
                i = skip_ws(i) + 1  # colon
                target = bool(remaining) and remaining[0] == key
                line, i = walk(i, remaining[1:] if target else None)
                if target:
                    found = line if line is not None else text.count("\n", 0, i) + 1
                i = skip_ws(i)
                if text[i] == ",":
                    i += 1
                    continue
                return found, i + 1
        if ch == "[":
            i = skip_ws(i + 1)
            if text[i] == "]":
                return found, i + 1
            k = 0
            while True:
                target = bool(remaining) and remaining[0] == k
                line, i = walk(i, remaining[1:] if target else None)
                if target:
                    found = line
                i = skip_ws(i)
                k += 1
                if text[i] == ",":
                    i += 1
                    continue
                return found, i + 1
        _, end = decoder.raw_decode(text, i)
        return found, end

    try:
        line, _ = walk(0, tuple(path) if path is not None else ())
    except (ValueError, IndexError):
        return None
    if line is None and path:
        return locate_line(text, tuple(path)[:-1])
    return line
