"""Parametric attack signals and the scenario presets.

An in-domain attack is a Gaussian source added to the velocity equation; an
inlet attack is added to the boundary value of ``w``.  Both switch on at
``t_start`` with either a step or a half-cosine ramp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KINDS = ("in_domain", "inlet")
PROFILES = ("step", "smooth_ramp")


class AttackUsageError(ValueError):
    pass


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    amplitude: float
    t_start: float = 0.0
    x_center: float = 0.0
    x_width: float = 1.0
    profile: str = "step"
    tau_ramp: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise AttackUsageError(f"unknown attack kind {self.kind!r}")
        if self.profile not in PROFILES:
            raise AttackUsageError(f"unknown attack profile {self.profile!r}")
        if not math.isfinite(self.amplitude):
            raise AttackUsageError("amplitude must be finite")
        if self.t_start < 0:
            raise AttackUsageError("t_start must be >= 0")
        if self.kind == "in_domain" and not self.x_width > 0:
            raise AttackUsageError("x_width must be > 0")
        if self.profile == "smooth_ramp" and not self.tau_ramp > 0:
            raise AttackUsageError("smooth_ramp needs tau_ramp > 0")

    def scaled(self, factor: float) -> "AttackSpec":
        return AttackSpec(self.kind, self.amplitude * factor, self.t_start,
                          self.x_center, self.x_width, self.profile, self.tau_ramp)


def ramp(spec: AttackSpec, t: float) -> float:
    """Time envelope in [0, 1]; exactly zero before ``t_start``."""
    s = t - spec.t_start
    if s < 0:
        return 0.0
    if spec.profile == "step" or s >= spec.tau_ramp:
        return 1.0
    return 0.5 * (1.0 - math.cos(math.pi * s / spec.tau_ramp))


def eval_delta1(spec: AttackSpec, x, t: float):
    if spec.kind != "in_domain":
        raise AttackUsageError("eval_delta1 needs an in_domain attack")
    r = ramp(spec, t)
    x = np.asarray(x, dtype=float)
    if r == 0.0:
        out = np.zeros_like(x)
    else:
        out = spec.amplitude * r * np.exp(-((x - spec.x_center) ** 2) / (2.0 * spec.x_width**2))
    return float(out) if out.ndim == 0 else out


def eval_delta2(spec: AttackSpec, t: float) -> float:
    if spec.kind != "inlet":
        raise AttackUsageError("eval_delta2 needs an inlet attack")
    return spec.amplitude * ramp(spec, t)


def total_delta1(attacks, x: np.ndarray, t: float) -> np.ndarray:
    out = np.zeros_like(x, dtype=float)
    for a in attacks:
        if a.kind == "in_domain":
            out += eval_delta1(a, x, t)
    return out


def total_delta2(attacks, t: float) -> float:
    return sum(eval_delta2(a, t) for a in attacks if a.kind == "inlet")


# Amplitudes (m/s^2) come from scripts/calibrate_amplitudes.py at default
# noise; geometry is in units of L.
PRESET_TABLE = {
    "case1": dict(x_center=0.35, x_width=0.05, amplitude=0.0015),
    "case2": dict(x_center=0.95, x_width=0.03, amplitude=0.1),
    "case3": dict(x_center=0.50, x_width=0.30, amplitude=0.03),
}
PRESET_T_START = 100.0
CASE_IDS = ("nominal", "case1", "case2", "case3")


def scenario_preset(case_id: str, L: float = 1000.0) -> list[AttackSpec]:
    if case_id == "nominal":
        return []
    if case_id not in PRESET_TABLE:
        raise KeyError(f"unknown scenario preset {case_id!r}; expected one of {CASE_IDS}")
    row = PRESET_TABLE[case_id]
    return [AttackSpec(
        kind="in_domain",
        amplitude=row["amplitude"],
        t_start=PRESET_T_START,
        x_center=row["x_center"] * L,
        x_width=row["x_width"] * L,
    )]
