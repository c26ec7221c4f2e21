"""End-to-end scenario loop: plant -> probes -> pipeline -> filters -> comparator.

The social filter runs on a fixed lag behind real time so that every
position fix it needs has been delivered, differentiated and turned into a
density sample before it is used.  The physical filter runs in real time.
Decisions at time ``t`` combine ``r_p(t)`` with ``r_s(t - lag)``.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import physical, ssrg
from .comparator import Thresholds, calibrate_threshold, decide
from .config import ScenarioConfig
from .model import Grid, check_regime
from .plant import FieldState, bump_state, measure_outlet, plant_step, zero_state
from .probes import ProbeTrack, ProbeVehicle, advect_vehicle, consistent_c_gamma, emit_messages
from .social import ClassifierMetrics, evaluate_classifier, process_message

STREAMS = ("plant", "messages", "corruption")


def rng_streams(seed: int) -> dict:
    """Independent generators per subsystem, all derived from one seed."""
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(s) for name, s in zip(STREAMS, children)}


def social_lag(cfg: ScenarioConfig) -> float:
    """Lag after which every fix that brackets ``t - lag`` has been processed."""
    return 4.0 * cfg.vehicles.report_period + cfg.noise.delay_max


@lru_cache(maxsize=16)
def _physical_gains(grid: Grid, consts, rho_star: float) -> physical.PhysicalGains:
    """Kernel solve is a pure precomputation shared by every run on the same grid."""
    return physical.physical_gains(physical.solve_kernels(grid, consts), consts, rho_star)


def c_gamma_for(cfg: ScenarioConfig) -> float:
    if cfg.c_gamma_mode == "consistent":
        return consistent_c_gamma(cfg.params)
    return cfg.params.c_gamma


@dataclass
class Trace:
    t: list = field(default_factory=list)
    y_p: list = field(default_factory=list)
    r_p: list = field(default_factory=list)
    t_social: list = field(default_factory=list)
    r_s: list = field(default_factory=list)
    n_sensors: list = field(default_factory=list)
    social_available: list = field(default_factory=list)

    def social_nan(self) -> np.ndarray:
        r = np.asarray(self.r_s, dtype=float)
        return np.where(np.asarray(self.social_available, dtype=bool), r, np.nan)


@dataclass
class RunReport:
    config: ScenarioConfig
    trace: Trace
    decisions: list
    thresholds: Thresholds | None
    t_start: float | None
    detection_latency: float | None
    physical_fired: bool
    social_fired: bool
    first_physical: float | None
    first_social: float | None
    pre_attack_alarm: bool
    social_lag: float
    design: ssrg.SocialGainDesign
    messages: list
    classifier: ClassifierMetrics | None
    snapshots: list
    wall_clock: float

    @property
    def which_filter_fired(self) -> str:
        names = [n for n, f in (("physical", self.physical_fired), ("social", self.social_fired)) if f]
        return "+".join(names) if names else "none"

    def summary(self) -> dict:
        """Deterministic run summary (wall-clock time is deliberately left out)."""
        th = self.thresholds
        return {
            "scenario": self.config.scenario,
            "seed": self.config.seed,
            "t_start": self.t_start,
            "detection_latency": self.detection_latency,
            "which_filter_fired": self.which_filter_fired,
            "physical_fired": self.physical_fired,
            "social_fired": self.social_fired,
            "first_physical_crossing": self.first_physical,
            "first_social_crossing": self.first_social,
            "pre_attack_alarm": self.pre_attack_alarm,
            "social_lag": self.social_lag,
            "r_th_p": th.r_th_p if th else None,
            "r_th_s": th.r_th_s if th else None,
            "safety_factor": th.safety_factor if th else None,
            "max_r_p": float(np.max(self.trace.r_p)) if self.trace.r_p else 0.0,
            "max_r_s": float(np.nanmax(self.trace.social_nan())) if np.any(self.trace.social_available) else 0.0,
            "gains": self.design.as_row(),
            "classifier": None if self.classifier is None else {
                "tp": self.classifier.tp, "fp": self.classifier.fp, "tn": self.classifier.tn,
                "fn": self.classifier.fn, "accuracy": self.classifier.accuracy,
                "sensitivity": self.classifier.sensitivity,
            },
            "n_messages": len(self.messages),
        }


class Scenario:
    """Mutable run state for one configuration; advance with :meth:`step`."""

    def __init__(self, cfg: ScenarioConfig, thresholds: Thresholds | None = None):
        self.cfg = cfg
        p = cfg.params
        self.consts = check_regime(p)
        self.grid = Grid.from_cfl(p.L, cfg.grid.n_cells, self.consts, cfg.grid.cfl)
        self.grid.check_cfl(self.consts)
        self.attacks = cfg.attack_list()
        self.landmarks = cfg.landmark_table()
        self.rng = rng_streams(cfg.seed)
        self.design = ssrg.design_social_gains(
            self.consts, cfg.gains.d_min,
            cfg.gains.gamma_slack if cfg.gains.gamma_slack is not None else self.consts.k3 / 2,
            cfg.gains.beta_magnitude)
        self.phys_gains = _physical_gains(self.grid, self.consts, max(p.rho_star, 1e-12))
        self.c_gamma = c_gamma_for(cfg)
        self.lag = social_lag(cfg)
        self.thresholds = thresholds

        ini = cfg.initial
        self.plant = bump_state(self.grid, p.L, ini.amplitude, ini.center, ini.width)
        start = self.plant if ini.filter_ic == "plant" else zero_state(self.grid)
        self.phys = start.copy()
        self.social = start.copy()
        self.social.t = -self.lag

        v = cfg.vehicles
        self.vehicles = [ProbeVehicle(i, 0.0, p.v_star, exit_x=v.exit_x * p.L) for i in range(v.count)]
        self.entered = [False] * v.count
        self.next_report = list(v.entry_times)
        self.tracks = [ProbeTrack(i, p, self.c_gamma) for i in range(v.count)]
        self.inbox: list = []  # heap of (t_recv, id, message)
        self.messages: list = []
        self.trace = Trace()
        self.decisions: list = []
        self.snapshots: list = []
        self.n_steps = int(round(cfg.T_end / self.grid.dt))
        self.k = 0

    # -- social side -----------------------------------------------------

    def _density_hint(self, z: float) -> float:
        return self.cfg.params.rho_star + ssrg.predicted_density(self.social, z, self.consts, self.grid)

    def _emit(self, t: float) -> None:
        v = self.cfg.vehicles
        eps = 1e-9
        for i, veh in enumerate(self.vehicles):
            if not self.entered[i] and t + eps >= v.entry_times[i]:
                self.entered[i] = True
            if not (self.entered[i] and veh.active) or t + eps < self.next_report[i]:
                continue
            self.next_report[i] += v.report_period
            for m in emit_messages(veh, self.landmarks, self.cfg.noise, self.rng["messages"], t,
                                   len(self.messages), v.p_text, v.corrupt_fraction,
                                   self.rng["corruption"]):
                self._post(m)

    def _post(self, m) -> None:
        self.messages.append(m)
        heapq.heappush(self.inbox, (m.t_recv, m.id, m))

    def _receive(self, t: float) -> None:
        p = self.cfg.params
        while self.inbox and self.inbox[0][0] <= t + 1e-9:
            _, _, m = heapq.heappop(self.inbox)
            process_message(m, self.landmarks, self.cfg.noise.sigma_gps, p.L)
            if m.x_est is not None and m.vehicle >= 0:
                self.tracks[m.vehicle].add(m.t_emit, m.x_est, m.x_sigma)
        watermark = t - self.cfg.noise.delay_max
        for tr in self.tracks:
            tr.finalize(watermark)
            tr.integrate(self.social.t, self._density_hint)

    def sensors(self, tau: float) -> ssrg.SensorSnapshot:
        st = self.cfg.gains.staleness_max
        raw = [s for tr in self.tracks if (s := tr.sensor_at(tau, st, self.cfg.params.rho_star))]
        return ssrg.SensorSnapshot.fresh(raw, self.cfg.params.L, st)

    # -- main loop -------------------------------------------------------

    def record(self) -> None:
        t = self.plant.t
        y_p = measure_outlet(self.plant, self.cfg.noise, self.rng["plant"])
        r_p = physical.physical_residual(y_p, self.phys)
        tau = self.social.t
        snap = self.sensors(tau) if tau >= 0 else ssrg.SensorSnapshot([])
        r_s, n, avail = ssrg.social_residual(snap, self.social, self.consts, self.grid)
        self._snap, self._y_p = snap, y_p
        tr = self.trace
        tr.t.append(t); tr.y_p.append(y_p); tr.r_p.append(r_p)
        tr.t_social.append(tau); tr.r_s.append(r_s); tr.n_sensors.append(n)
        tr.social_available.append(avail)
        if self.thresholds is not None:
            self.decisions.append(decide(r_p, r_s, self.thresholds, avail, t))
        if self.k % self.cfg.output_stride == 0:
            self.snapshots.append((self.plant.copy(), self.phys.copy()))

    def step(self) -> None:
        cfg, g, c = self.cfg, self.grid, self.consts
        t = self.plant.t
        inlet_v = cfg.inlet(t)
        for veh, entered in zip(self.vehicles, self.entered):
            if entered:
                advect_vehicle(veh, self.plant, g, cfg.params.v_star, inlet_v, g.dt)
        self.plant = plant_step(self.plant, self.attacks, c, g, inlet_v)
        self.phys = physical.step_physical_filter(self.phys, self._y_p, inlet_v, self.phys_gains, c, g)
        tau = self.social.t
        if tau >= 0:
            self.social = ssrg.step_social_filter(self.social, self._snap, self.design,
                                                  cfg.inlet(tau), c, g)
        else:
            self.social = FieldState(tau + g.dt, self.social.w, self.social.v)
        self.k += 1
        # pin clocks to k*dt so long runs do not accumulate rounding drift
        self.plant.t = self.phys.t = self.k * g.dt
        self.social.t = self.k * g.dt - self.lag
        self._emit(self.plant.t)
        self._receive(self.plant.t)

    def run(self) -> "Scenario":
        """Sample and step on ``t_k = k dt`` for every ``t_k < T_end``."""
        self._emit(0.0)
        self._receive(0.0)
        for _ in range(self.n_steps):
            self.record()
            self.step()
        return self


def _first(ts, flags, t0):
    for t, f in zip(ts, flags):
        if f and t >= t0:
            return float(t)
    return None


def nominal_traces(cfg: ScenarioConfig, runs: int, seed0: int):
    phys, soc = [], []
    for i in range(runs):
        s = Scenario(cfg.nominal_twin(seed0 + i)).run()
        phys.append((s.trace.t, s.trace.r_p))
        soc.append((s.trace.t, s.trace.social_nan()))
    return phys, soc


@lru_cache(maxsize=64)
def calibrate(cfg: ScenarioConfig) -> Thresholds:
    """Thresholds from nominal twins of ``cfg`` (cached per configuration)."""
    th = cfg.thresholds
    if th.mode == "explicit":
        return Thresholds(th.r_th_p, th.r_th_s, th.safety_factor)
    phys, soc = nominal_traces(cfg, th.runs, th.calibration_seed)
    end = th.window_end if th.window_end is not None else cfg.T_end
    return calibrate_threshold(phys, soc, th.safety_factor, (th.window_start, end))


def _calibration_key(cfg: ScenarioConfig) -> ScenarioConfig:
    return cfg.nominal_twin(0)


def run_scenario(cfg: ScenarioConfig, thresholds: Thresholds | None = None,
                 corpus_metrics: bool = True) -> RunReport:
    """Run one scenario; thresholds default to the configured calibration."""
    t0 = time.perf_counter()
    if thresholds is None:
        thresholds = calibrate(_calibration_key(cfg))
    s = Scenario(cfg, thresholds).run()
    tr = s.trace
    t_start = cfg.t_start
    ts = tr.t
    ph = [d.physical_high for d in s.decisions]
    so = [d.social_high for d in s.decisions]
    att = [d.attack for d in s.decisions]
    origin = t_start if t_start is not None else 0.0
    first_p, first_s = _first(ts, ph, origin), _first(ts, so, origin)
    first_any = _first(ts, att, origin)
    pre = any(a for t, a in zip(ts, att) if t_start is not None and t < t_start)
    texts = [m for m in s.messages if m.kind == "text"]
    metrics = evaluate_classifier(texts) if (corpus_metrics and texts) else None
    return RunReport(
        config=cfg, trace=tr, decisions=s.decisions, thresholds=thresholds, t_start=t_start,
        detection_latency=(first_any - t_start) if (first_any is not None and t_start is not None) else None,
        physical_fired=first_p is not None, social_fired=first_s is not None,
        first_physical=first_p, first_social=first_s, pre_attack_alarm=pre,
        social_lag=s.lag, design=s.design, messages=s.messages, classifier=metrics,
        snapshots=s.snapshots, wall_clock=time.perf_counter() - t0,
    )
