"""Pick preset attack amplitudes at default noise.

For each case, sweep a 1-1.5-2-3-5 grid and keep the smallest amplitude for
which every intended residual reaches ``RATIO`` times its threshold within
``WINDOW`` seconds of the attack start on every calibration seed.  Case I
additionally requires the physical residual to stay below its threshold for
the whole run (it is meant to be invisible at the outlet sensor).

    python scripts/calibrate_amplitudes.py [--seeds 10]
"""

import argparse
import dataclasses

import numpy as np

from arzdetect.attacks import PRESET_T_START, PRESET_TABLE, AttackSpec
from arzdetect.config import default_config
from arzdetect.harness import calibrate, run_scenario

RATIO = 5.0
WINDOW = 30.0
GRID = [m * 10.0**e for e in (-4, -3, -2, -1) for m in (1, 1.5, 2, 3, 5)]
INTENDED = {"case1": ("social",), "case2": ("physical",), "case3": ("physical", "social")}


def peak_ratios(case, amplitude, seed, thresholds):
    row = PRESET_TABLE[case]
    L = default_config().params.L
    attack = AttackSpec("in_domain", amplitude, PRESET_T_START, row["x_center"] * L, row["x_width"] * L)
    cfg = dataclasses.replace(default_config(case, seed), attacks=(attack,))
    rep = run_scenario(cfg, thresholds, corpus_metrics=False)
    t = np.asarray(rep.trace.t)
    sel = (t >= PRESET_T_START) & (t <= PRESET_T_START + WINDOW)
    r_p = np.asarray(rep.trace.r_p)[sel].max() / thresholds.r_th_p
    r_s = np.nan_to_num(rep.trace.social_nan()[sel], nan=0.0).max() / thresholds.r_th_s
    return {"physical": r_p, "social": r_s}, rep.physical_fired


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--seed0", type=int, default=500)
    args = ap.parse_args()
    thresholds = calibrate(default_config().nominal_twin(0))
    print(f"thresholds: r_th_p={thresholds.r_th_p:.4g} r_th_s={thresholds.r_th_s:.4g}")
    for case, intended in INTENDED.items():
        for amp in GRID:
            worst = {k: np.inf for k in intended}
            ok = True
            for seed in range(args.seed0, args.seed0 + args.seeds):
                ratios, phys_fired = peak_ratios(case, amp, seed, thresholds)
                for k in intended:
                    worst[k] = min(worst[k], ratios[k])
                if case == "case1" and phys_fired:
                    ok = False
                if not ok or any(worst[k] < RATIO for k in intended):
                    ok = False
                    break
            if ok:
                detail = ", ".join(f"{k} >= {v:.1f}x" for k, v in worst.items())
                print(f"{case}: amplitude={amp:g} ({detail})")
                break
        else:
            print(f"{case}: no amplitude on the grid satisfies the rule")


if __name__ == "__main__":
    main()
