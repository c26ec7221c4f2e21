"""Physical-data filter driven by the outlet velocity measurement.

Gains come from backstepping kernels ``F, G, H`` on the triangle
``0 <= x <= y <= L``.  With zero data on ``x = 0`` the kernels vanish, the
gains vanish, and the filter is an open-loop copy whose error is flushed
out by transport.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Mapping

import numpy as np

from .model import Grid, LinearizationConstants
from .plant import FieldState, relax, transport


@dataclass
class KernelSet:
    """Kernels on nodes ``x_i = y_i = i*h`` (i = 0..n); entries with j < i are unused (NaN)."""

    F: np.ndarray
    G: np.ndarray
    H: np.ndarray
    h: float

    @property
    def nodes(self) -> np.ndarray:
        return self.h * np.arange(self.F.shape[0])

    def rows(self):
        """Yield ``(x, y, F, G, H)`` for every node of the triangle."""
        s = self.nodes
        n = len(s)
        for i in range(n):
            for j in range(i, n):
                yield s[i], s[j], self.F[i, j], self.G[i, j], self.H[i, j]


def march_transport(boundary: np.ndarray, h: float, a: float, b: float,
                    c: float = 0.0, source: np.ndarray | None = None,
                    diagonal: float = 0.0) -> np.ndarray:
    """Solve ``a K_x + b K_y = c K + S`` on the triangle, marching in x.

    First-order upwind differences in both directions with the y-sweep done
    implicitly, so the march is stable for any slope ``b/a > 0``.  Inflow
    data: ``K(0, y) = boundary`` and ``K = diagonal`` just below ``y = x``.
    """
    n = len(boundary)
    K = np.full((n, n), np.nan)
    K[0, :] = boundary
    ax, by = a / h, b / h
    denom = ax + by - c
    if denom <= 0:
        raise ValueError("kernel march unstable: refine the grid")
    for i in range(1, n):
        below = diagonal
        for j in range(i, n):
            rhs = ax * K[i - 1, j] + by * below
            if source is not None:
                rhs += source[i, j]
            K[i, j] = rhs / denom
            below = K[i, j]
    return K


def solve_kernels(grid: Grid, consts: LinearizationConstants,
                  boundary_data_override: Mapping[str, Callable] | None = None) -> KernelSet:
    """Kernels on the grid's node set.

    Default boundary data is zero for all three kernels, which makes the
    solution identically zero.  ``boundary_data_override`` maps ``"F"``,
    ``"G"`` or ``"H"`` to a function of y, for manufactured-solution checks.
    """
    over = dict(boundary_data_override or {})
    unknown = set(over) - {"F", "G", "H"}
    if unknown:
        raise KeyError(f"unknown kernel(s) {sorted(unknown)}")
    y = grid.dx * np.arange(grid.n_cells + 1)

    def data(name):
        f = over.get(name)
        return np.zeros_like(y) if f is None else np.asarray(f(y), dtype=float)

    F = march_transport(data("F"), grid.dx, 1.0, 1.0)
    G = march_transport(data("G"), grid.dx, 1.0, 1.0)
    src = consts.k2 * np.nan_to_num(F)
    H = march_transport(data("H"), grid.dx, consts.k3, consts.k1, c=consts.k2, source=src)
    return KernelSet(F, G, H, grid.dx)


@dataclass(frozen=True)
class PhysicalGains:
    gamma1: np.ndarray
    gamma2: np.ndarray

    @cached_property
    def is_zero(self) -> bool:
        return not (np.any(self.gamma1) or np.any(self.gamma2))


def physical_gains(kernels: KernelSet, consts: LinearizationConstants,
                   rho_star: float) -> PhysicalGains:
    """``gamma1 = -F(x, L) k1 / rho*``, ``gamma2 = -G(x, L) k3 / rho*`` on x_1..x_n."""
    if not rho_star > 0:
        raise ValueError("physical gains need rho_star > 0")
    F_L = kernels.F[1:, -1]
    G_L = kernels.G[1:, -1]
    return PhysicalGains(-F_L * consts.k1 / rho_star, -G_L * consts.k3 / rho_star)


def step_physical_filter(state: FieldState, y_p: float, inlet_v: float, gains: PhysicalGains,
                         consts: LinearizationConstants, grid: Grid) -> FieldState:
    innovation = y_p - state.v[-1]
    w = transport(state.w, inlet_v, grid.courant(consts.k1))
    v = transport(state.v, inlet_v, grid.courant(consts.k3))
    w, v = relax(w, v, consts.k2, grid.dt)
    if not gains.is_zero:
        w = w + grid.dt * gains.gamma1 * innovation
        v = v + grid.dt * gains.gamma2 * innovation
    return FieldState(state.t + grid.dt, w, v)


def physical_residual(y_p: float, state: FieldState) -> float:
    e = y_p - float(state.v[-1])
    return e * e


def step_target_system(phi: np.ndarray, psi: np.ndarray, delta2: float,
                       delta1_tilde: np.ndarray | None, consts: LinearizationConstants,
                       grid: Grid):
    """One step of the target system ``phi_t = -k1 phi_x - k2 phi``,
    ``psi_t = -k3 psi_x + delta1~`` with ``phi(0) = delta2``, ``psi(0) = 0``."""
    phi = transport(phi, delta2, grid.courant(consts.k1))
    psi = transport(psi, 0.0, grid.courant(consts.k3))
    phi, _ = relax(phi, np.zeros_like(phi), consts.k2, grid.dt)
    if delta1_tilde is not None:
        psi = psi + grid.dt * delta1_tilde
    return phi, psi
