"""Command-line entry point: ``arzdetect <subcommand> ...``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import harness, ssrg
from .config import parse_config
from .model import ConfigError, check_regime
from .report import emit_report, first_attack_time, load_summary, read_decisions
from .social import ClassifierMetrics, LandmarkTable, evaluate_classifier, generate_corpus


def cmd_simulate(args) -> int:
    cfg = parse_config(args.config)
    rep = harness.run_scenario(cfg)
    emit_report(rep, args.out)
    s = rep.summary()
    lat = "none" if s["detection_latency"] is None else f"{s['detection_latency']:.2f} s"
    print(f"{cfg.scenario} seed={cfg.seed}: fired={s['which_filter_fired']} latency={lat} "
          f"wall={rep.wall_clock:.2f} s -> {args.out}")
    return 0


def cmd_design_gains(args) -> int:
    cfg = parse_config(args.config)
    consts = check_regime(cfg.params)
    g = cfg.gains
    design = ssrg.design_social_gains(
        consts, g.d_min, g.gamma_slack if g.gamma_slack is not None else consts.k3 / 2, g.beta_magnitude)
    row = design.as_row()
    print(",".join(row))
    print(",".join(repr(v) for v in row.values()))
    print(f"# Q eigenvalues: {[round(float(e), 6) for e in design.q_eigenvalues]}")
    print(f"# P_i eigenvalues at d_min: {[round(float(e), 6) for e in design.p_eigenvalues]}")
    return 0


def cmd_calibrate(args) -> int:
    cfg = parse_config(args.config)
    th = dataclasses.replace(cfg.thresholds, mode="calibrate", runs=args.runs)
    if args.safety_factor is not None:
        th = dataclasses.replace(th, safety_factor=args.safety_factor)
    cal = harness.calibrate(dataclasses.replace(cfg, thresholds=th).nominal_twin(0))
    print(json.dumps({"r_th_p": cal.r_th_p, "r_th_s": cal.r_th_s,
                      "safety_factor": cal.safety_factor, "runs": args.runs}, indent=2))
    return 0


def cmd_classify_corpus(args) -> int:
    landmarks = LandmarkTable.default()
    corpus = generate_corpus(args.n, args.fake_fraction, landmarks, args.seed)
    metrics = evaluate_classifier(corpus, landmarks=landmarks)
    if args.out:
        with Path(args.out).open("w") as fh:
            for m in corpus:
                fh.write(m.to_json() + "\n")
    print(ClassifierMetrics.CSV_HEADER)
    print(metrics.csv_row())
    return 0


def cmd_report(args) -> int:
    s = load_summary(args.in_dir)
    rows = read_decisions(Path(args.in_dir) / "decisions.csv")
    print(f"scenario       {s['scenario']} (seed {s['seed']})")
    print(f"thresholds     r_th_p={s['r_th_p']!r} r_th_s={s['r_th_s']!r}")
    print(f"filters fired  {s['which_filter_fired']}")
    print(f"pre-attack     {'ALARM' if s['pre_attack_alarm'] else 'silent'}")
    if s["t_start"] is not None:
        t = first_attack_time(rows, s["t_start"])
        recount = None if t is None else t - s["t_start"]
        print(f"latency        {s['detection_latency']} s (recount from decisions.csv: {recount})")
        if recount != s["detection_latency"]:
            print("warning: summary latency disagrees with decisions.csv", file=sys.stderr)
            return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="arzdetect", description="Dual-filter traffic attack detection")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario and write its artifacts")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("design-gains", help="print the social filter gain design and certificate")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_design_gains)

    p = sub.add_parser("calibrate", help="calibrate thresholds on nominal twins")
    p.add_argument("--config", required=True)
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--safety-factor", type=float, default=None)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("classify-corpus", help="generate a synthetic corpus and score the classifier")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--fake-fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="optional JSON-lines dump of the corpus")
    p.set_defaults(func=cmd_classify_corpus)

    p = sub.add_parser("report", help="summarize a simulate output directory")
    p.add_argument("--in", dest="in_dir", required=True)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
