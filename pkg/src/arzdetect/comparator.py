"""Threshold calibration and the two-residual decision table."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

THRESHOLD_FLOOR = 1e-12


@dataclass(frozen=True)
class Thresholds:
    r_th_p: float
    r_th_s: float
    safety_factor: float = 1.2

    def __post_init__(self):
        if not (self.r_th_p > 0 and self.r_th_s > 0):
            raise ValueError("thresholds must be > 0")
        if not self.safety_factor >= 1.0:
            raise ValueError("safety_factor must be >= 1")


@dataclass(frozen=True)
class Decision:
    t: float
    verdict: str  # "attack" | "no_attack"
    physical_high: bool
    social_high: bool
    social_available: bool

    @property
    def attack(self) -> bool:
        return self.verdict == "attack"


def _windowed_max(traces, window) -> float:
    lo, hi = window if window is not None else (-np.inf, np.inf)
    best = 0.0
    for t, r in traces:
        t = np.asarray(t, dtype=float)
        r = np.asarray(r, dtype=float)
        sel = (t >= lo) & (t <= hi) & np.isfinite(r)
        if np.any(sel):
            best = max(best, float(r[sel].max()))
    return best


def calibrate_threshold(physical_traces, social_traces, safety_factor: float = 1.2,
                        window=None) -> Thresholds:
    """``safety_factor * max`` of each filter's nominal residual inside ``window``.

    Each trace is a ``(t, r)`` pair of sequences.  Social samples taken while
    no sensor was available should be passed as NaN (or left out).  A
    residual that is identically zero yields the floor ``1e-12 * factor``.
    """
    physical_traces, social_traces = list(physical_traces), list(social_traces)
    if not physical_traces or not social_traces:
        raise ValueError("need at least one nominal trace per filter")
    if not safety_factor >= 1.0:
        raise ValueError("safety_factor must be >= 1")
    floor = THRESHOLD_FLOOR
    p = max(_windowed_max(physical_traces, window), floor)
    s = max(_windowed_max(social_traces, window), floor)
    return Thresholds(safety_factor * p, safety_factor * s, safety_factor)


def decide(r_p: float, r_s: float, thresholds: Thresholds, social_available: bool = True,
           t: float = 0.0) -> Decision:
    """Attack iff either residual reaches its threshold; an unavailable
    social residual counts as low."""
    physical_high = r_p >= thresholds.r_th_p
    social_high = bool(social_available) and r_s >= thresholds.r_th_s
    verdict = "attack" if (physical_high or social_high) else "no_attack"
    return Decision(t, verdict, bool(physical_high), social_high, bool(social_available))
