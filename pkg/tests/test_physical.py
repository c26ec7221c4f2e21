import math

import numpy as np
import pytest

from arzdetect.attacks import AttackSpec, scenario_preset, total_delta1
from arzdetect.model import Grid
from arzdetect.physical import (KernelSet, march_transport, physical_gains, physical_residual,
                                solve_kernels, step_physical_filter, step_target_system)
from arzdetect.plant import (InletDrive, NoiseSpec, bump_state, measure_outlet, plant_step,
                             transport, zero_state)


def manufactured_error(n, params, consts):
    g = Grid.from_cfl(params.L, n, consts)
    K = solve_kernels(g, consts, {"F": lambda y: np.sin(np.pi * y / params.L)})
    x, y = np.meshgrid(K.nodes, K.nodes, indexing="ij")
    exact = np.sin(np.pi * (y - x) / params.L)
    upper = y >= x
    return g.dx, np.max(np.abs(K.F[upper] - exact[upper]))


class TestKernels:
    def test_paper_boundary_data_gives_zero(self, consts, grid):
        K = solve_kernels(grid, consts)
        for A in (K.F, K.G, K.H):
            upper = A[np.triu_indices_from(A)]
            assert np.all(upper == 0.0)

    def test_boundary_rows(self, consts, grid):
        K = solve_kernels(grid, consts, {"F": lambda y: 0 * y, "H": lambda y: 0 * y})
        assert not K.F[0].any() and not K.G[0].any() and not K.H[0].any()

    def test_first_order_convergence(self, params, consts):
        (h1, e1), (h2, e2), (h3, e3) = (manufactured_error(n, params, consts) for n in (100, 200, 400))
        orders = [math.log(e1 / e2) / math.log(h1 / h2), math.log(e2 / e3) / math.log(h2 / h3)]
        assert min(orders) >= 0.9
        assert e3 < 0.02

    def test_linearity(self, consts, grid):
        f = lambda y: np.cos(3 * y / 1000.0) + y / 1000.0
        a = solve_kernels(grid, consts, {"F": f, "G": f, "H": f})
        b = solve_kernels(grid, consts, {k: (lambda y: -2.5 * f(y)) for k in "FGH"})
        for name in "FGH":
            A, B = getattr(a, name), getattr(b, name)
            upper = np.triu_indices_from(A)
            assert np.max(np.abs(B[upper] + 2.5 * A[upper])) < 1e-12

    def test_H_unforced_is_zero(self, consts, grid):
        K = solve_kernels(grid, consts, {"G": lambda y: np.ones_like(y)})
        assert not np.any(K.H[np.triu_indices_from(K.H)])

    def test_constant_data_is_transported(self):
        K = march_transport(np.full(11, 2.0), 0.1, 1.0, 1.0, diagonal=2.0)
        assert np.allclose(K[np.triu_indices(11)], 2.0)

    def test_unknown_override(self, consts, grid):
        with pytest.raises(KeyError):
            solve_kernels(grid, consts, {"Z": np.sin})

    def test_rows(self, consts):
        g = Grid.from_cfl(1000.0, 4, consts)
        rows = list(solve_kernels(g, consts).rows())
        assert len(rows) == 15 and all(x <= y for x, y, *_ in rows)


class TestGains:
    def test_paper_gains_vanish(self, params, consts, grid):
        assert physical_gains(solve_kernels(grid, consts), consts, params.rho_star).is_zero

    def test_formula_and_sign(self, params, consts, grid):
        c = 0.3
        K = solve_kernels(grid, consts)
        n = K.F.shape[0]
        F = np.where(np.triu(np.ones((n, n))) > 0, 0.0, np.nan)
        F[:, -1] = c
        g = physical_gains(KernelSet(F, K.G, K.H, K.h), consts, params.rho_star)
        assert np.allclose(g.gamma1, -c * consts.k1 / params.rho_star)
        assert np.all(g.gamma1 < 0)
        assert not g.gamma2.any()

    def test_rho_star_zero(self, consts, grid):
        with pytest.raises(ValueError):
            physical_gains(solve_kernels(grid, consts), consts, 0.0)


class TestFilter:
    def gains(self, params, consts, grid):
        return physical_gains(solve_kernels(grid, consts), consts, params.rho_star)

    def test_zero_error_stays_zero(self, params, consts, grid):
        gains = self.gains(params, consts, grid)
        inlet = InletDrive(0.2, 60.0)
        plant = bump_state(grid, params.L)
        filt = plant.copy()
        for _ in range(300):
            y = plant.v[-1]
            assert physical_residual(y, filt) == 0.0
            filt = step_physical_filter(filt, y, inlet(plant.t), gains, consts, grid)
            plant = plant_step(plant, [], consts, grid, inlet(plant.t))
        assert np.array_equal(filt.w, plant.w) and np.array_equal(filt.v, plant.v)

    def test_error_flushes_after_exit_time(self, params, consts, grid):
        gains = self.gains(params, consts, grid)
        inlet = InletDrive(0.2, 120.0)
        plant, filt = bump_state(grid, params.L), zero_state(grid)
        t_exit = params.L / consts.k1 + params.L / consts.k3
        assert t_exit == pytest.approx(111.111, abs=1e-3)
        while plant.t <= t_exit + 60:
            y = plant.v[-1]
            if plant.t > t_exit:
                err = np.sqrt(np.sum((plant.w - filt.w) ** 2 + (plant.v - filt.v) ** 2) * grid.dx)
                assert err < 1e-10
                assert physical_residual(y, filt) < 1e-10
            filt = step_physical_filter(filt, y, inlet(plant.t), gains, consts, grid)
            plant = plant_step(plant, [], consts, grid, inlet(plant.t))

    @pytest.mark.xfail(strict=True, reason="the steady velocity deviation of a Case I source "
                       "reaches the outlet undiminished; see decisions ledger")
    def test_case1_innovation_small(self, params, consts, grid):
        gains = self.gains(params, consts, grid)
        attacks = scenario_preset("case1", params.L)
        plant, filt = zero_state(grid), zero_state(grid)
        worst = 0.0
        while plant.t < 300:
            y = plant.v[-1]
            worst = max(worst, abs(y - filt.v[-1]) / max(np.abs(plant.v - filt.v).max(), 1e-300))
            filt = step_physical_filter(filt, y, 0.0, gains, consts, grid)
            plant = plant_step(plant, attacks, consts, grid, 0.0)
        assert worst < 0.1


class TestResidual:
    def test_values(self, grid):
        s = zero_state(grid)
        s.v[-1] = 0.25
        assert physical_residual(0.25, s) == 0.0
        assert physical_residual(0.75, s) == 0.25

    def test_recount(self, params, consts, grid):
        gains = physical_gains(solve_kernels(grid, consts), consts, params.rho_star)
        rng = np.random.default_rng(8)
        noise = NoiseSpec(sigma_phys=0.05)
        plant, filt = bump_state(grid, params.L), zero_state(grid)
        ys, vhat, streamed = [], [], []
        for _ in range(400):
            y = measure_outlet(plant, noise, rng)
            streamed.append(physical_residual(y, filt))
            ys.append(y)
            vhat.append(filt.v[-1])
            filt = step_physical_filter(filt, y, 0.0, gains, consts, grid)
            plant = plant_step(plant, [], consts, grid)
        recount = (np.array(ys) - np.array(vhat)) ** 2
        assert np.max(np.abs(recount - streamed)) < 1e-12


class TestTargetSystem:
    """With zero kernels the backstepping map is the identity."""

    def run(self, params, consts, grid, init_w_err):
        attacks = [AttackSpec("in_domain", 0.05, 20.0, 400.0, 80.0),
                   AttackSpec("inlet", 0.1 if init_w_err else 0.0, 30.0)]
        gains = physical_gains(solve_kernels(grid, consts), consts, params.rho_star)
        inlet = InletDrive(0.2, 50.0)
        plant = bump_state(grid, params.L)
        filt = plant.copy()
        if init_w_err:
            filt.w = filt.w * 0.5
        else:
            filt.v = filt.v * 0.5
        phi, psi = plant.w - filt.w, plant.v - filt.v
        chi = np.zeros(grid.n_cells)  # accumulated -k2 coupling into the v error
        out = []
        for _ in range(400):
            t = plant.t
            d2 = sum(a.amplitude for a in attacks if a.kind == "inlet" and t >= a.t_start)
            phi_prev = phi
            phi, psi = step_target_system(phi, psi, d2, total_delta1(attacks, grid.x, t), consts, grid)
            chi = transport(chi, 0.0, grid.courant(consts.k3))
            chi -= transport(phi_prev, d2, grid.courant(consts.k1)) * (-math.expm1(-consts.k2 * grid.dt))
            filt = step_physical_filter(filt, plant.v[-1], inlet(t), gains, consts, grid)
            plant = plant_step(plant, attacks, consts, grid, inlet(t))
            out.append((plant.w - filt.w - phi, plant.v - filt.v - psi - chi, chi))
        return out

    def test_w_error_matches_phi(self, params, consts, grid):
        for dw, _, _ in self.run(params, consts, grid, True):
            assert np.max(np.abs(dw)) < 1e-12

    def test_v_error_matches_psi_without_w_error(self, params, consts, grid):
        for dw, dv, chi in self.run(params, consts, grid, False):
            assert np.max(np.abs(dw)) < 1e-12
            assert not chi.any()
            assert np.max(np.abs(dv)) < 1e-12

    def test_coupling_is_the_only_gap(self, params, consts, grid):
        rows = self.run(params, consts, grid, True)
        assert max(np.abs(chi).max() for _, _, chi in rows) > 1e-4
        assert max(np.abs(dv).max() for _, dv, _ in rows) < 1e-12
