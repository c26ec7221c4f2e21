"""Scenario configuration: a strict TOML subset with per-section key checks.

Layout (every key optional except ``seed``)::

    scenario = "case1"        # nominal | case1 | case2 | case3
    seed = 42
    T_end = 300.0
    output_stride = 20

    [params]      # TrafficParams fields; C_gamma = "consistent" | "paper" | number
    [grid]        # n_cells, cfl
    [noise]       # sigma_phys, sigma_gps, p_dropout, delay_max
    [initial]     # amplitude, center, width (units of L), filter_ic = "plant" | "zero"
    [inlet]       # a_in, period
    [vehicles]    # count, entry_times, exit_x (units of L), report_period, p_text, corrupt_fraction
    [gains]       # d_min, gamma_slack, beta_magnitude, staleness_max
    [thresholds]  # mode = "calibrate" | "explicit", r_th_p, r_th_s, safety_factor, runs, ...
    [[attacks]]   # explicit AttackSpec list; replaces the preset when present
    [[landmarks]] # name, x
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import tomli_w

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .attacks import CASE_IDS, PRESET_T_START, AttackSpec, AttackUsageError, scenario_preset
from .model import ConfigError, TrafficParams
from .plant import InletDrive, NoiseSpec
from .social import Landmark, LandmarkTable


@dataclass(frozen=True)
class GridConfig:
    n_cells: int = 200
    cfl: float = 1.0


@dataclass(frozen=True)
class InitialConfig:
    amplitude: float = 0.5
    center: float = 0.3
    width: float = 0.1
    filter_ic: str = "plant"  # filters start from the true initial state, or from zero


def default_inlet() -> InletDrive:
    return InletDrive(a_in=0.2, period=120.0)


def default_entry_times() -> tuple:
    return (60.0, 70.0, 80.0, 90.0, 100.0, 110.0, 120.0, 130.0)


@dataclass(frozen=True)
class VehicleConfig:
    count: int = 8
    entry_times: tuple = field(default_factory=default_entry_times)
    exit_x: float = 0.8
    report_period: float = 1.0
    p_text: float = 0.2
    corrupt_fraction: float = 0.1


@dataclass(frozen=True)
class GainConfig:
    d_min: float = 100.0
    gamma_slack: float | None = None  # None: k3 / 2
    beta_magnitude: float = 5.0
    staleness_max: float = 5.0


@dataclass(frozen=True)
class ThresholdConfig:
    mode: str = "calibrate"
    r_th_p: float | None = None
    r_th_s: float | None = None
    safety_factor: float = 1.2
    runs: int = 50
    calibration_seed: int = 1000
    window_start: float = 0.0
    window_end: float | None = None  # None: T_end


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    scenario: str = "nominal"
    T_end: float = 300.0
    output_stride: int = 20
    params: TrafficParams = field(default_factory=TrafficParams)
    c_gamma_mode: str = "consistent"  # "consistent" | "paper" | "explicit"
    grid: GridConfig = field(default_factory=GridConfig)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    initial: InitialConfig = field(default_factory=InitialConfig)
    inlet: InletDrive = field(default_factory=default_inlet)
    vehicles: VehicleConfig = field(default_factory=VehicleConfig)
    gains: GainConfig = field(default_factory=GainConfig)
    thresholds: ThresholdConfig = field(default_factory=ThresholdConfig)
    attacks: tuple | None = None  # None: use the scenario preset
    landmarks: tuple | None = None  # None: default table

    def attack_list(self) -> list[AttackSpec]:
        if self.attacks is not None:
            return list(self.attacks)
        return scenario_preset(self.scenario, self.params.L)

    def landmark_table(self) -> LandmarkTable:
        if self.landmarks is None:
            return LandmarkTable.default(self.params.L)
        return LandmarkTable([Landmark(n, x) for n, x in self.landmarks], self.params.L)

    @property
    def t_start(self) -> float | None:
        attacks = self.attack_list()
        return min(a.t_start for a in attacks) if attacks else None

    def nominal_twin(self, seed: int) -> "ScenarioConfig":
        return dataclasses.replace(self, seed=seed, scenario="nominal", attacks=(),
                                   noise=dataclasses.replace(self.noise, seed=seed))

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return dataclasses.replace(self, seed=seed, noise=dataclasses.replace(self.noise, seed=seed))


class ConfigParseError(ConfigError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


_TOP = {"scenario", "seed", "T_end", "output_stride"}
_SECTIONS = {
    "params": {f.name for f in dataclasses.fields(TrafficParams)},
    "grid": {f.name for f in dataclasses.fields(GridConfig)},
    "noise": {f.name for f in dataclasses.fields(NoiseSpec)} - {"seed"},
    "initial": {f.name for f in dataclasses.fields(InitialConfig)},
    "inlet": {f.name for f in dataclasses.fields(InletDrive)},
    "vehicles": {f.name for f in dataclasses.fields(VehicleConfig)},
    "gains": {f.name for f in dataclasses.fields(GainConfig)},
    "thresholds": {f.name for f in dataclasses.fields(ThresholdConfig)},
}
_ATTACK_KEYS = {f.name for f in dataclasses.fields(AttackSpec)}
_LANDMARK_KEYS = {"name", "x"}


def _build(cls, data: dict, section: str, errors: list):
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        errors.append(f"[{section}] {exc}")
        return None


def config_from_dict(doc: dict) -> ScenarioConfig:
    """Validate a parsed document; collects every violation before raising."""
    errors = []
    for key, value in doc.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                errors.append(f"{key!r} must be a section")
                continue
            for sub in value:
                if sub not in _SECTIONS[key]:
                    errors.append(f"unknown key {sub!r} in [{key}]")
        elif key == "attacks":
            for i, row in enumerate(value if isinstance(value, list) else [value]):
                for sub in (row if isinstance(row, dict) else {}):
                    if sub not in _ATTACK_KEYS:
                        errors.append(f"unknown key {sub!r} in [[attacks]] #{i + 1}")
        elif key == "landmarks":
            for i, row in enumerate(value if isinstance(value, list) else [value]):
                for sub in (row if isinstance(row, dict) else {}):
                    if sub not in _LANDMARK_KEYS:
                        errors.append(f"unknown key {sub!r} in [[landmarks]] #{i + 1}")
        elif key not in _TOP:
            errors.append(f"unknown key {key!r}")

    if "seed" not in doc:
        errors.append("missing mandatory key 'seed'")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        errors.append("seed must be an integer")
        seed = 0
    scenario = doc.get("scenario", "nominal")
    if scenario not in CASE_IDS:
        errors.append(f"unknown scenario {scenario!r}; expected one of {CASE_IDS}")

    p = dict(doc.get("params", {}))
    c_mode = "consistent"
    if "C_gamma" in p:
        if p["C_gamma"] in ("consistent", "paper"):
            c_mode = p.pop("C_gamma")
        else:
            c_mode = "explicit"
    if c_mode == "paper":
        p["C_gamma"] = None
    params = _build(TrafficParams, p, "params", errors)

    noise_data = dict(doc.get("noise", {}))
    noise_data["seed"] = seed
    noise = _build(NoiseSpec, noise_data, "noise", errors)

    veh = dict(doc.get("vehicles", {}))
    if "entry_times" in veh:
        veh["entry_times"] = tuple(float(t) for t in veh["entry_times"])
    vehicles = _build(VehicleConfig, veh, "vehicles", errors)
    if vehicles is not None:
        if vehicles.count != len(vehicles.entry_times):
            errors.append(f"[vehicles] count={vehicles.count} but {len(vehicles.entry_times)} entry_times")
        if not vehicles.report_period > 0:
            errors.append("[vehicles] report_period must be > 0")

    grid = _build(GridConfig, doc.get("grid", {}), "grid", errors)
    initial = _build(InitialConfig, doc.get("initial", {}), "initial", errors)
    if initial is not None and initial.filter_ic not in ("plant", "zero"):
        errors.append("[initial] filter_ic must be 'plant' or 'zero'")
    inlet = _build(InletDrive, {**dataclasses.asdict(default_inlet()), **doc.get("inlet", {})},
                   "inlet", errors)
    gains = _build(GainConfig, doc.get("gains", {}), "gains", errors)
    thresholds = _build(ThresholdConfig, doc.get("thresholds", {}), "thresholds", errors)
    if thresholds is not None:
        if thresholds.mode not in ("calibrate", "explicit"):
            errors.append("[thresholds] mode must be 'calibrate' or 'explicit'")
        elif thresholds.mode == "explicit" and (thresholds.r_th_p is None or thresholds.r_th_s is None):
            errors.append("[thresholds] explicit mode needs r_th_p and r_th_s")

    attacks = None
    if "attacks" in doc:
        attacks = []
        for i, row in enumerate(doc["attacks"]):
            try:
                attacks.append(AttackSpec(**row))
            except (TypeError, AttackUsageError) as exc:
                errors.append(f"[[attacks]] #{i + 1}: {exc}")
        attacks = tuple(attacks)
    landmarks = None
    if "landmarks" in doc:
        landmarks = tuple((str(r.get("name", "")), float(r.get("x", math.nan))) for r in doc["landmarks"])

    T_end = doc.get("T_end", 300.0)
    if not (isinstance(T_end, (int, float)) and T_end >= 0):
        errors.append("T_end must be >= 0")
    stride = doc.get("output_stride", 20)
    if not (isinstance(stride, int) and stride >= 1):
        errors.append("output_stride must be a positive integer")

    if not errors and landmarks is not None:
        try:
            LandmarkTable([Landmark(n, x) for n, x in landmarks], params.L)
        except ValueError as exc:
            errors.append(f"[[landmarks]] {exc}")
    if errors:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))
    return ScenarioConfig(
        seed=seed, scenario=scenario, T_end=float(T_end), output_stride=stride,
        params=params, c_gamma_mode=c_mode, grid=grid, noise=noise, initial=initial,
        inlet=inlet, vehicles=vehicles, gains=gains, thresholds=thresholds,
        attacks=attacks, landmarks=landmarks,
    )


def parse_config_text(text: str) -> ScenarioConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParseError(f"parse error: {exc.msg}", exc.lineno, exc.colno) from exc
    return config_from_dict(doc)


def parse_config(path) -> ScenarioConfig:
    return parse_config_text(Path(path).read_text())


def _clean(d: dict) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items() if v is not None}


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Canonical document: every key spelled out, sections in a fixed order."""
    params = dataclasses.asdict(cfg.params)
    if cfg.c_gamma_mode != "explicit":
        params["C_gamma"] = cfg.c_gamma_mode
    noise = dataclasses.asdict(cfg.noise)
    noise.pop("seed")
    doc = {
        "scenario": cfg.scenario,
        "seed": cfg.seed,
        "T_end": cfg.T_end,
        "output_stride": cfg.output_stride,
        "params": _clean(params),
        "grid": _clean(dataclasses.asdict(cfg.grid)),
        "noise": _clean(noise),
        "initial": _clean(dataclasses.asdict(cfg.initial)),
        "inlet": _clean(dataclasses.asdict(cfg.inlet)),
        "vehicles": _clean(dataclasses.asdict(cfg.vehicles)),
        "gains": _clean(dataclasses.asdict(cfg.gains)),
        "thresholds": _clean(dataclasses.asdict(cfg.thresholds)),
    }
    if cfg.attacks is not None:
        doc["attacks"] = [dataclasses.asdict(a) for a in cfg.attacks]
    if cfg.landmarks is not None:
        doc["landmarks"] = [{"name": n, "x": x} for n, x in cfg.landmarks]
    return doc


def emit_config(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


def default_config(scenario: str = "nominal", seed: int = 0, **overrides) -> ScenarioConfig:
    """Programmatic equivalent of a file holding only ``scenario`` and ``seed``."""
    cfg = config_from_dict({"scenario": scenario, "seed": seed})
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


__all__ = [
    "ScenarioConfig", "GridConfig", "InitialConfig", "VehicleConfig", "GainConfig",
    "ThresholdConfig", "ConfigParseError", "parse_config", "parse_config_text",
    "config_from_dict", "config_to_dict", "emit_config", "default_config", "PRESET_T_START",
]
