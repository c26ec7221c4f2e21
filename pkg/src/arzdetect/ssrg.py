"""Social-data filter: collocated output injection at probe positions.

The filter is a copy of the plant transport dynamics driven by the measured
inlet velocity.  Each fresh probe density measurement injects its
innovation into the grid cell containing the probe, scaled by ``1/dx`` as a
discrete Dirac.  Gain design follows the Lyapunov argument: the per-sensor
matrices ``P_i`` are at best negative semidefinite, so the decay rate is
certified by ``Q`` and checked on ``P_i + Q``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .model import Grid, LinearizationConstants, check_regime
from .plant import FieldState, relax, transport

log = logging.getLogger(__name__)


class InfeasibleDesign(ValueError):
    pass


@dataclass(frozen=True)
class Sensor:
    """One probe density measurement; ``y`` is the deviation from rho* (veh/m)."""

    id: int
    z: float
    y: float
    age: float = 0.0


@dataclass
class SensorSnapshot:
    sensors: list
    rejected: int = 0

    @classmethod
    def fresh(cls, sensors, L: float, staleness_max: float = 5.0) -> "SensorSnapshot":
        kept, rejected = [], 0
        for s in sensors:
            if s.age > staleness_max:
                continue
            if not 0.0 <= s.z <= L:
                rejected += 1
                continue
            kept.append(s)
        if rejected:
            log.warning("dropped %d sensor(s) outside [0, L]", rejected)
        return cls(kept, rejected)

    def __len__(self):
        return len(self.sensors)


@dataclass(frozen=True)
class SocialGainDesign:
    alpha: float
    beta: float
    lambda_s: float
    gamma_slack: float
    d_min: float
    q_eigenvalues: tuple
    p_eigenvalues: tuple

    def as_row(self) -> dict:
        return dict(alpha=self.alpha, beta=self.beta, lambda_s=self.lambda_s,
                    gamma_slack=self.gamma_slack, d_min=self.d_min)


def build_Q(consts: LinearizationConstants, gamma_slack: float):
    """Return ``(Q, eigenvalues)``; raises InfeasibleDesign unless Q < 0."""
    k1, k2, k3 = consts.k1, consts.k2, consts.k3
    if not 0 < gamma_slack < k3:
        raise InfeasibleDesign(f"gamma_slack must lie in (0, k3={k3:.6g})")
    a = k1 / 2 + k2
    c = (k3 - gamma_slack) / 2
    Q = np.array([[-a, -k2 / 2], [-k2 / 2, -c]])
    if not a * c > k2**2 / 4:
        raise InfeasibleDesign(
            "Q is not negative definite: need (k1/2 + k2)(k3 - gamma)/2 > k2^2/4, "
            f"got {a * c:.6g} <= {k2**2 / 4:.6g}"
        )
    return Q, np.linalg.eigvalsh(Q)


def build_Pi(alpha_i: float, beta_i: float, spacing: float) -> np.ndarray:
    if not spacing > 0:
        raise ValueError("spacing must be > 0")
    off = -0.5 * (alpha_i - beta_i)
    return np.array([[alpha_i, off], [off, -beta_i]]) / spacing


def design_social_gains(consts: LinearizationConstants, d_min: float,
                        gamma_slack: float, beta_magnitude: float) -> SocialGainDesign:
    """Symmetric choice alpha = -beta = -beta_magnitude with a lambda_s certificate."""
    if consts.k3 <= 0:
        raise InfeasibleDesign(f"not free-flow (k3={consts.k3})")
    if not d_min > 0:
        raise ValueError("d_min must be > 0")
    if beta_magnitude < 0:
        raise ValueError("beta_magnitude must be >= 0")
    Q, q_eig = build_Q(consts, gamma_slack)
    alpha, beta = -beta_magnitude, beta_magnitude
    P = build_Pi(alpha, beta, d_min)
    worst = max(q_eig.max(), np.linalg.eigvalsh(P + Q).max())
    return SocialGainDesign(
        alpha=alpha, beta=beta, lambda_s=float(-worst), gamma_slack=gamma_slack,
        d_min=d_min, q_eigenvalues=tuple(q_eig), p_eigenvalues=tuple(np.linalg.eigvalsh(P)),
    )


def predicted_density(state: FieldState, z: float, consts: LinearizationConstants,
                      grid: Grid) -> float:
    i = grid.cell_of(z)
    return (state.v[i] - state.w[i]) / consts.dVopt_star


def step_social_filter(state: FieldState, sensors: SensorSnapshot, gains: SocialGainDesign,
                       inlet_v: float, consts: LinearizationConstants,
                       grid: Grid) -> FieldState:
    """Inject the innovations measured at ``state.t``, then transport and relax.

    Injecting before the transport step lets each correction ride along with
    the parcel it was computed from.
    """
    w, v = state.w.copy(), state.v.copy()
    spread = gains.beta - gains.alpha
    for s in sensors.sensors:
        i = grid.cell_of(s.z)
        # innovation in velocity units: V'(y - y_tilde)
        e0 = consts.dVopt_star * s.y - (v[i] - w[i])
        if spread == 0.0:
            w[i] += grid.dt * gains.alpha * e0 / grid.dx
            v[i] += grid.dt * gains.beta * e0 / grid.dx
            continue
        # exact solution of the cell's injection ODE over dt
        taken = e0 * -math.expm1(-spread * grid.dt / grid.dx)
        w[i] += gains.alpha / spread * taken
        v[i] += gains.beta / spread * taken
    w = transport(w, inlet_v, grid.courant(consts.k1))
    v = transport(v, inlet_v, grid.courant(consts.k3))
    w, v = relax(w, v, consts.k2, grid.dt)
    return FieldState(state.t + grid.dt, w, v)


def social_residual(sensors: SensorSnapshot, state: FieldState,
                    consts: LinearizationConstants, grid: Grid):
    """Mean squared innovation ``(V'(y_i - y~_i))^2`` over fresh sensors.

    Returns ``(r_s, n_sensors, available)``; ``r_s`` is 0.0 when unavailable.
    """
    n = len(sensors)
    if n == 0:
        return 0.0, 0, False
    total = 0.0
    for s in sensors.sensors:
        e = consts.dVopt_star * (s.y - predicted_density(state, s.z, consts, grid))
        total += e * e
    return total / n, n, True


def default_design(params, d_min=100.0, gamma_slack=None, beta_magnitude=5.0) -> SocialGainDesign:
    consts = check_regime(params)
    if gamma_slack is None:
        gamma_slack = consts.k3 / 2
    return design_social_gains(consts, d_min, gamma_slack, beta_magnitude)
