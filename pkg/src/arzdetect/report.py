"""Run artifacts on disk.

Output directory layout (column order is part of the contract)::

    residuals.csv   t, r_p, t_social, r_s, n_sensors, social_available
    decisions.csv   t, r_p, r_s, physical_high, social_high, verdict
    fields.csv      t, x, w, v, w_hat, v_hat      (every output_stride steps)
    gains.csv       alpha, beta, lambda_s, gamma_slack, d_min
    messages.jsonl  one SocialMessage per line, in emission order
    summary.json    latency, which filter fired, thresholds, classifier metrics
    config.toml     canonical form of the configuration that produced the run

Floats are written with ``repr`` so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .config import emit_config
from .harness import RunReport

RESIDUAL_COLUMNS = ("t", "r_p", "t_social", "r_s", "n_sensors", "social_available")
DECISION_COLUMNS = ("t", "r_p", "r_s", "physical_high", "social_high", "verdict")
FIELD_COLUMNS = ("t", "x", "w", "v", "w_hat", "v_hat")
GAIN_COLUMNS = ("alpha", "beta", "lambda_s", "gamma_slack", "d_min")
KERNEL_COLUMNS = ("x", "y", "F", "G", "H")


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def emit_report(report: RunReport, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tr = report.trace
    _write_csv(out / "residuals.csv", RESIDUAL_COLUMNS,
               zip(tr.t, tr.r_p, tr.t_social, tr.r_s, tr.n_sensors, tr.social_available))
    _write_csv(out / "decisions.csv", DECISION_COLUMNS,
               ((d.t, r_p, r_s, d.physical_high, d.social_high, d.verdict)
                for d, r_p, r_s in zip(report.decisions, tr.r_p, tr.r_s)))

    def field_rows():
        for plant, est in report.snapshots:
            for i, x in enumerate(report_grid_x(report, len(plant.w))):
                yield plant.t, x, float(plant.w[i]), float(plant.v[i]), float(est.w[i]), float(est.v[i])

    _write_csv(out / "fields.csv", FIELD_COLUMNS, field_rows())
    g = report.design.as_row()
    _write_csv(out / "gains.csv", GAIN_COLUMNS, [[g[k] for k in GAIN_COLUMNS]])
    with (out / "messages.jsonl").open("w") as fh:
        for m in report.messages:
            fh.write(m.to_json() + "\n")
    (out / "summary.json").write_text(json.dumps(report.summary(), indent=2) + "\n")
    (out / "config.toml").write_text(emit_config(report.config))
    return out


def report_grid_x(report: RunReport, n: int):
    dx = report.config.params.L / n
    return [dx * (i + 1) for i in range(n)]


def write_kernels(kernels, path) -> None:
    _write_csv(Path(path), KERNEL_COLUMNS, kernels.rows())


def read_decisions(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def first_attack_time(rows, t_start: float):
    """First decision time at or after ``t_start`` with an attack verdict."""
    for row in rows:
        t = float(row["t"])
        if t >= t_start and row["verdict"] == "attack":
            return t
    return None


def load_summary(out_dir) -> dict:
    return json.loads((Path(out_dir) / "summary.json").read_text())
