"""Traffic parameters, the Greenshields closure and the linearized ARZ constants.

All quantities are SI: positions in m, densities in veh/m, speeds in m/s.
The perturbation variables used everywhere else are deviations from the
nominal operating point (rho_star, v_star).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a closure."""


class RegimeError(ValueError):
    """Raised when the operating point is not in free flow (k3 <= 0)."""

    def __init__(self, k3: float):
        self.k3 = k3
        super().__init__(
            f"operating point is not free-flow: k3 = {k3:.6g} m/s must be > 0"
        )


class ConfigError(ValueError):
    """Invalid grid or run configuration."""


@dataclass(frozen=True)
class TrafficParams:
    L: float = 1000.0
    rho_max: float = 0.12
    v_free: float = 30.0
    rho_star: float = 0.03
    T_r: float = 60.0
    dX: float = 5.0
    gamma_exp: float = 1.0
    # None means the car-following constant is derived as v* * dX**gamma
    C_gamma: float | None = field(default=None)

    def __post_init__(self):
        problems = []
        if not self.L > 0:
            problems.append("L must be > 0")
        if not self.v_free > 0:
            problems.append("v_free must be > 0")
        if not self.T_r > 0:
            problems.append("T_r must be > 0")
        if not self.dX > 0:
            problems.append("dX must be > 0")
        if not self.gamma_exp >= 0:
            problems.append("gamma_exp must be >= 0")
        if not 0 <= self.rho_star < self.rho_max:
            problems.append("need 0 <= rho_star < rho_max")
        if self.C_gamma is not None and not self.C_gamma > 0:
            problems.append("C_gamma must be > 0")
        if problems:
            raise ValueError("invalid TrafficParams: " + "; ".join(problems))

    @property
    def v_star(self) -> float:
        return v_opt(self.rho_star, self)

    @property
    def c_gamma(self) -> float:
        if self.C_gamma is not None:
            return self.C_gamma
        return self.v_star * self.dX**self.gamma_exp


@dataclass(frozen=True)
class LinearizationConstants:
    k1: float
    k2: float
    k3: float
    dVopt_star: float


def v_opt(rho, params: TrafficParams):
    """Greenshields equilibrium speed ``v_free * (1 - rho / rho_max)``.

    Accepts scalars or arrays; raises DomainError outside ``[0, rho_max]``.
    """
    if isinstance(rho, (float, int)):
        if not 0.0 <= rho <= params.rho_max:
            raise DomainError(f"density outside [0, {params.rho_max}]")
        return params.v_free * (1.0 - rho / params.rho_max)
    r = np.asarray(rho, dtype=float)
    if np.any(r < 0) or np.any(r > params.rho_max) or not np.all(np.isfinite(r)):
        raise DomainError(f"density outside [0, {params.rho_max}]")
    out = params.v_free * (1.0 - r / params.rho_max)
    return float(out) if out.ndim == 0 else out


def v_opt_inverse(v, params: TrafficParams):
    """Exact inverse of :func:`v_opt` on ``[0, v_free]``."""
    u = np.asarray(v, dtype=float)
    if np.any(u < 0) or np.any(u > params.v_free) or not np.all(np.isfinite(u)):
        raise DomainError(f"speed outside [0, {params.v_free}]")
    out = params.rho_max * (1.0 - u / params.v_free)
    return float(out) if out.ndim == 0 else out


def dv_opt(params: TrafficParams) -> float:
    """Slope of the Greenshields closure (constant, negative)."""
    return -params.v_free / params.rho_max


def linearization_constants(params: TrafficParams) -> LinearizationConstants:
    v_star = params.v_star
    dv = dv_opt(params)
    return LinearizationConstants(
        k1=v_star,
        k2=1.0 / params.T_r,
        k3=v_star + params.rho_star * dv,
        dVopt_star=dv,
    )


def check_regime(params: TrafficParams) -> LinearizationConstants:
    """Return the constants if both characteristic speeds are positive."""
    consts = linearization_constants(params)
    if not consts.k3 > 0:
        raise RegimeError(consts.k3)
    return consts


def to_riemann(rho, v, consts: LinearizationConstants):
    """Map perturbations (rho, v) to (w, v) with ``w = v - rho * V'(rho*)``."""
    rho = np.asarray(rho, dtype=float)
    v = np.asarray(v, dtype=float)
    return v - rho * consts.dVopt_star, v


def from_riemann(w, v, consts: LinearizationConstants):
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    return (v - w) / consts.dVopt_star, v


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``n_cells`` nodes at ``x_i = (i + 1) * dx``.

    Node ``n_cells - 1`` sits at the outlet ``x = L``; the inlet ``x = 0`` is
    a ghost node holding boundary data.
    """

    n_cells: int
    dx: float
    dt: float

    @classmethod
    def from_cfl(cls, L: float, n_cells: int, consts: LinearizationConstants,
                 cfl: float = 1.0) -> "Grid":
        if n_cells < 1:
            raise ConfigError("n_cells must be positive")
        if not 0 < cfl <= 1:
            raise ConfigError("cfl must lie in (0, 1]")
        dx = L / n_cells
        return cls(n_cells, dx, cfl * dx / max(consts.k1, consts.k3))

    @property
    def x(self) -> np.ndarray:
        return self.dx * np.arange(1, self.n_cells + 1)

    @property
    def length(self) -> float:
        return self.dx * self.n_cells

    def courant(self, speed: float) -> float:
        c = speed * self.dt / self.dx
        # dt built from cfl=1 can land one ulp off the exact shift
        return 1.0 if abs(c - 1.0) < 1e-12 else c

    def check_cfl(self, consts: LinearizationConstants) -> None:
        if self.dt <= 0 or self.dx <= 0:
            raise ConfigError("dx and dt must be positive")
        worst = max(self.courant(consts.k1), self.courant(consts.k3))
        if worst > 1.0:
            raise ConfigError(
                f"CFL violation: dt={self.dt:.6g} s exceeds dx/max(k1,k3)="
                f"{self.dx / max(consts.k1, consts.k3):.6g} s"
            )

    def cell_of(self, z: float) -> int:
        """Index of the node cell containing position ``z`` (cell i covers (x_i - dx, x_i])."""
        i = math.ceil(z / self.dx) - 1
        return min(max(i, 0), self.n_cells - 1)

    def interp(self, field_values: np.ndarray, z: float, inlet: float) -> float:
        """Linear interpolation of a nodal field, with ``inlet`` as the value at x=0."""
        if z <= 0:
            return float(inlet)
        if z >= self.length:
            return float(field_values[-1])
        s = z / self.dx
        j = int(math.floor(s))
        frac = s - j
        left = inlet if j == 0 else field_values[j - 1]
        right = field_values[j] if j < self.n_cells else field_values[-1]
        return float(left + frac * (right - left))
