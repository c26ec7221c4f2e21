"""Attacked linearized ARZ plant in (w, v) perturbation coordinates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .attacks import total_delta1, total_delta2
from .model import ConfigError, Grid, LinearizationConstants


@dataclass
class FieldState:
    t: float
    w: np.ndarray
    v: np.ndarray

    def copy(self) -> "FieldState":
        return FieldState(self.t, self.w.copy(), self.v.copy())

    def check(self, grid: Grid) -> None:
        if self.w.shape != (grid.n_cells,) or self.v.shape != (grid.n_cells,):
            raise ConfigError("field length does not match grid")
        if not (np.all(np.isfinite(self.w)) and np.all(np.isfinite(self.v))):
            raise FloatingPointError(f"non-finite field at t={self.t}")


@dataclass(frozen=True)
class NoiseSpec:
    sigma_phys: float = 0.05
    sigma_gps: float = 0.0
    p_dropout: float = 0.1
    delay_max: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if min(self.sigma_phys, self.sigma_gps, self.delay_max) < 0:
            raise ValueError("noise magnitudes must be nonnegative")
        if not 0.0 <= self.p_dropout <= 1.0:
            raise ValueError("p_dropout must lie in [0, 1]")

    @classmethod
    def off(cls, seed: int = 0) -> "NoiseSpec":
        return cls(0.0, 0.0, 0.0, 0.0, seed)


@dataclass(frozen=True)
class InletDrive:
    """Measured inlet velocity perturbation ``v(0, t) = a_in * sin(2 pi t / period)``."""

    a_in: float = 0.0
    period: float = 120.0

    def __call__(self, t: float) -> float:
        if self.a_in == 0.0:
            return 0.0
        return self.a_in * math.sin(2.0 * math.pi * t / self.period)


def bump(x: np.ndarray, amplitude: float, center: float, width: float) -> np.ndarray:
    return amplitude * np.exp(-((x - center) ** 2) / (2.0 * width**2))


def bump_state(grid: Grid, L: float, amplitude: float = 0.5,
               center: float = 0.3, width: float = 0.1) -> FieldState:
    """Scenario initial condition: equal Gaussian bumps in w and v (geometry in units of L)."""
    b = bump(grid.x, amplitude, center * L, width * L)
    return FieldState(0.0, b.copy(), b.copy())


def zero_state(grid: Grid) -> FieldState:
    return FieldState(0.0, np.zeros(grid.n_cells), np.zeros(grid.n_cells))


def transport(u: np.ndarray, ghost: float, courant: float) -> np.ndarray:
    """One first-order upwind step for a rightward transport speed."""
    upstream = np.empty_like(u)
    upstream[0] = ghost
    upstream[1:] = u[:-1]
    if courant == 1.0:
        return upstream
    return u - courant * (u - upstream)


def relax(w: np.ndarray, v: np.ndarray, k2: float, dt: float):
    """Exact flow of ``w' = -k2 w, v' = -k2 w`` over one step."""
    lost = w * (-math.expm1(-k2 * dt))
    return w - lost, v - lost


def plant_step(state: FieldState, attacks, consts: LinearizationConstants,
               grid: Grid, inlet_v: float = 0.0) -> FieldState:
    """Advance the attacked plant by one ``grid.dt``.

    Transport is upwinded with ghost values ``w(0) = v(0) + delta2`` and
    ``v(0) = inlet_v``; relaxation is integrated exactly; the in-domain
    attack enters as a frozen source over the step.
    """
    t = state.t
    delta2 = total_delta2(attacks, t)
    w = transport(state.w, inlet_v + delta2, grid.courant(consts.k1))
    v = transport(state.v, inlet_v, grid.courant(consts.k3))
    w, v = relax(w, v, consts.k2, grid.dt)
    if attacks:
        v = v + grid.dt * total_delta1(attacks, grid.x, t)
    return FieldState(t + grid.dt, w, v)


def measure_outlet(state: FieldState, noise: NoiseSpec, rng: np.random.Generator) -> float:
    y = float(state.v[-1])
    if noise.sigma_phys > 0:
        y += noise.sigma_phys * float(rng.standard_normal())
    return y


@dataclass
class PlantRun:
    snapshots: list = field(default_factory=list)
    t: list = field(default_factory=list)
    y_p: list = field(default_factory=list)
    v_outlet: list = field(default_factory=list)


def run_plant(initial: FieldState, attacks, consts: LinearizationConstants, grid: Grid,
              T_end: float, noise: NoiseSpec | None = None, inlet=None,
              output_stride: int = 1, rng: np.random.Generator | None = None) -> PlantRun:
    """Fixed-step plant loop recording snapshots every ``output_stride`` steps."""
    grid.check_cfl(consts)
    if consts.k3 <= 0:
        raise ConfigError("plant needs k3 > 0")
    noise = noise or NoiseSpec.off()
    rng = rng if rng is not None else np.random.default_rng(noise.seed)
    inlet = inlet or InletDrive()
    n_steps = int(round(T_end / grid.dt))
    state = initial.copy()
    out = PlantRun()

    def record(k):
        out.t.append(state.t)
        out.v_outlet.append(float(state.v[-1]))
        out.y_p.append(measure_outlet(state, noise, rng))
        if k % output_stride == 0:
            out.snapshots.append(state.copy())

    record(0)
    for k in range(1, n_steps + 1):
        state = plant_step(state, attacks, consts, grid, inlet(state.t))
        record(k)
    return out
