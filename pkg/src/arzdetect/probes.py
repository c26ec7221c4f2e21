"""Probe vehicles, the micro-macro interface ODE and message emission.

Probes ride the macroscopic velocity field.  On the receiving side only
their (noisy, delayed, gappy) position reports are known; a
:class:`ProbeTrack` differentiates the track and integrates the interface
ODE to turn spacing into a local density sample.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .model import DomainError, Grid, TrafficParams, v_opt
from .plant import FieldState, NoiseSpec
from .social import (CORRUPTIONS, LANDMARK_RADIUS, LandmarkTable, SocialMessage,
                     fake_text, legit_text)
from .ssrg import Sensor


class SpacingError(ValueError):
    """Interface at or behind the vehicle (b <= z)."""


@dataclass
class ProbeVehicle:
    id: int
    z: float
    z_dot: float = 0.0
    b: float = math.nan
    active: bool = True
    exit_x: float = math.inf

    def clone(self) -> "ProbeVehicle":
        return ProbeVehicle(self.id, self.z, self.z_dot, self.b, self.active, self.exit_x)


def advect_vehicle(vehicle: ProbeVehicle, state: FieldState, grid: Grid, v_star: float,
                   inlet_v: float, dt: float) -> ProbeVehicle:
    """Explicit Euler step with speed ``v* + v(z)``; deactivates at the exit."""
    if not vehicle.active:
        return vehicle
    vehicle.z_dot = v_star + grid.interp(state.v, vehicle.z, inlet_v)
    vehicle.z += dt * vehicle.z_dot
    if vehicle.z >= min(grid.length, vehicle.exit_x):
        vehicle.active = False
    return vehicle


def local_density(b: float, z: float, dX: float) -> float:
    """Local density ``dX / (b - z)``, the probe's estimate of rho(z, t)."""
    gap = b - z
    if not gap > 0:
        raise SpacingError(f"interface not ahead of vehicle (b - z = {gap:.6g})")
    return dX / gap


def interface_rhs(b: float, z: float, z_dot: float, z_ddot: float,
                  params: TrafficParams, c_gamma: float | None = None) -> float:
    """Rate of the interface position, solved from the car-following law

    ``z'' = C (b' - z') / (b - z)^(g+1) + (V_opt(dX / (b - z)) - z') / T_r``.
    """
    gap = b - z
    if not gap > 0:
        raise SpacingError(f"interface not ahead of vehicle (b - z = {gap:.6g})")
    rho = params.dX / gap
    if rho > params.rho_max:
        raise DomainError(f"local density {rho:.6g} exceeds rho_max")
    C = params.c_gamma if c_gamma is None else c_gamma
    relax_term = (v_opt(rho, params) - z_dot) / params.T_r
    return z_dot + gap ** (params.gamma_exp + 1) / C * (z_ddot - relax_term)


def consistent_c_gamma(params: TrafficParams) -> float:
    """Car-following constant whose linearization matches the macroscopic
    plant: ``C = -V'(rho*) dX^g rho*^(1-g)``."""
    rho = params.rho_star if params.rho_star > 0 else params.rho_max
    return params.v_free / params.rho_max * params.dX**params.gamma_exp * rho ** (1 - params.gamma_exp)


def integrate_interface(b0: float, t0: float, t1: float, kinematics, params: TrafficParams,
                        c_gamma: float | None = None, max_substep: float = 0.05) -> float:
    """Classical RK4 for ``b' = interface_rhs(b, z(t), z'(t), z''(t))`` from t0 to t1.

    ``kinematics(t)`` returns ``(z, z_dot, z_ddot)``.
    """
    n = max(1, math.ceil((t1 - t0) / max_substep - 1e-9))
    h = (t1 - t0) / n

    def f(t, b):
        z, zd, zdd = kinematics(t)
        return interface_rhs(b, z, zd, zdd, params, c_gamma)

    b, t = b0, t0
    for k in range(n):
        k1 = f(t, b)
        k2 = f(t + h / 2, b + h / 2 * k1)
        k3 = f(t + h / 2, b + h / 2 * k2)
        k4 = f(t + h, b + h * k3)
        b += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (k + 1) * h
    return b


def emit_messages(vehicle: ProbeVehicle, landmarks: LandmarkTable, noise: NoiseSpec,
                  rng: np.random.Generator, t: float, next_id: int = 0,
                  p_text: float = 0.2, corrupt_fraction: float = 0.0,
                  corrupt_rng: np.random.Generator | None = None) -> list[SocialMessage]:
    """At most one message per call (one reporting period).

    A genuine message is a GPS fix, or with probability ``p_text`` a
    present-location text when a landmark lies within 150 m.  With
    probability ``corrupt_fraction`` it is then replaced by a fake drawn
    from the corruption taxonomy.  Corruption draws come from
    ``corrupt_rng`` when given, so toggling corruption leaves the genuine
    stream untouched.
    """
    if not vehicle.active or rng.random() < noise.p_dropout:
        return []
    t_recv = t + (rng.uniform(0.0, noise.delay_max) if noise.delay_max > 0 else 0.0)
    lm = landmarks.nearest(vehicle.z, LANDMARK_RADIUS)
    if lm is not None and rng.random() < p_text:
        text, cat = legit_text(lm, rng, present=True)
        msg = SocialMessage(next_id, vehicle.id, t, t_recv, "text", text, "legit", vehicle.z, cat)
    else:
        z = vehicle.z + (noise.sigma_gps * rng.standard_normal() if noise.sigma_gps > 0 else 0.0)
        msg = SocialMessage(next_id, vehicle.id, t, t_recv, "gps", float(z), "legit", vehicle.z, "gps")
    crng = corrupt_rng if corrupt_rng is not None else rng
    if corrupt_fraction > 0 and crng.random() < corrupt_fraction:
        lm = lm or landmarks.entries[int(crng.integers(len(landmarks)))]
        cat = CORRUPTIONS[int(crng.integers(len(CORRUPTIONS)))]
        msg = SocialMessage(next_id, vehicle.id, t, t_recv, "text", fake_text(cat, lm, crng),
                            "fake", vehicle.z, cat)
    return [msg]


def derivatives_3pt(t, z):
    """First and second derivative at the middle of three (possibly uneven) samples."""
    (t0, t1, t2), (z0, z1, z2) = t, z
    h0, h1 = t1 - t0, t2 - t1
    d0, d1 = (z1 - z0) / h0, (z2 - z1) / h1
    z_dot = (h1 * d0 + h0 * d1) / (h0 + h1)
    z_ddot = 2.0 * (d1 - d0) / (h0 + h1)
    return z_dot, z_ddot


@dataclass
class ProbeTrack:
    """Receiving-side state for one probe.

    Accepts position fixes in any arrival order and finalizes them once no
    earlier-emitted fix can still arrive.  Each finalized interior fix
    becomes a kinematic node ``(t, z, z_dot, z_ddot)``.  The interface is
    seeded at the first node from the receiver's density estimate at that
    time, then integrated node to node; ``samples`` holds ``(t, z, rho)``.
    """

    vehicle: int
    params: TrafficParams
    c_gamma: float
    max_substep: float = 0.05
    max_sigma: float = 10.0
    times: list = field(default_factory=list)
    positions: list = field(default_factory=list)
    n_final: int = 0
    nodes: list = field(default_factory=list)
    samples: list = field(default_factory=list)
    b: float = math.nan

    def add(self, t_emit: float, z: float, x_sigma: float = 0.0) -> bool:
        if x_sigma > self.max_sigma:
            return False
        k = bisect.bisect(self.times, t_emit)
        if k < self.n_final:
            return False  # arrived after its slot was finalized
        self.times.insert(k, t_emit)
        self.positions.insert(k, z)
        return True

    def finalize(self, watermark: float) -> None:
        """Turn every fix emitted at or before ``watermark`` into a node."""
        while self.n_final < len(self.times) and self.times[self.n_final] <= watermark:
            self.n_final += 1
            k = self.n_final - 2
            if k >= 1:
                tt = self.times[k - 1:k + 2]
                zz = self.positions[k - 1:k + 2]
                if tt[1] > tt[0] and tt[2] > tt[1]:
                    self.nodes.append((tt[1], zz[1], *derivatives_3pt(tt, zz)))

    def integrate(self, t_now: float, density_hint) -> None:
        """Advance the interface through all pending nodes.

        The seed waits until ``t_now`` reaches the first node, so that
        ``density_hint(z)`` describes the field at the node's own time.
        """
        n_done = len(self.samples)
        if n_done == 0:
            if not self.nodes or self.nodes[0][0] > t_now:
                return
            t0, z0 = self.nodes[0][:2]
            rho0 = min(max(density_hint(z0), 1e-6), self.params.rho_max)
            self.b = z0 + self.params.dX / rho0
            self.samples.append((t0, z0, rho0))
            n_done = 1
        for k in range(n_done, len(self.nodes)):
            self.b = self._integrate(self.nodes[k - 1], self.nodes[k])
            t, z = self.nodes[k][:2]
            self.samples.append((t, z, local_density(self.b, z, self.params.dX)))

    def _integrate(self, a, c) -> float:
        """RK4 across one sample interval with linearly interpolated kinematics."""
        t0, t1 = a[0], c[0]

        def kin(t):
            s = (t - t0) / (t1 - t0)
            return (a[1] + s * (c[1] - a[1]), a[2] + s * (c[2] - a[2]), a[3] + s * (c[3] - a[3]))

        return integrate_interface(self.b, t0, t1, kin, self.params, self.c_gamma,
                                   self.max_substep)

    def sensor_at(self, tau: float, staleness_max: float, rho_star: float):
        """Sensor interpolated to time ``tau`` between bracketing samples, or None."""
        s = self.samples
        if not s or tau < s[0][0] or tau > s[-1][0]:
            return None
        k = bisect.bisect_right([row[0] for row in s], tau)
        if k == len(s):
            t0, z0, r0 = s[-1]
            return Sensor(self.vehicle, z0, r0 - rho_star, 0.0)
        (t0, z0, r0), (t1, z1, r1) = s[k - 1], s[k]
        age = min(tau - t0, t1 - tau)
        if age > staleness_max:
            return None
        w = (tau - t0) / (t1 - t0)
        return Sensor(self.vehicle, z0 + w * (z1 - z0), r0 + w * (r1 - r0) - rho_star, age)
