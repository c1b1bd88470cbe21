"""Delay-model error against input transition time and seed.

The delay surface is indexed by saturation current only. With a finite
input ramp, part of the delay is spent while the gate is still rising, and
that part depends on V_th and not just on idsat. This script shows how the
held-out error grows with t_rise.

    python3 scripts/ramp_study.py --t-rise 0 2 5 10 --seeds 42 43 44
"""

import argparse
import warnings

from invdelay.config import PS, ExperimentConfig
from invdelay.delay_model import DelaySurfaceWarning
from invdelay.harness import build_current, build_delay, validate_delay


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--t-rise", type=float, nargs="+", default=[0.0, 2.0, 5.0, 10.0],
                    help="ps")
    ap.add_argument("--seeds", type=int, nargs="+", default=[42])
    ap.add_argument("--selection", choices=("stratified", "random"), default="stratified")
    args = ap.parse_args()

    print(f"{'t_rise_ps':>9} {'seed':>5} {'avg_%':>8} {'max_%':>9} {'extrap':>6} {'nonmono':>7}")
    for tr in args.t_rise:
        for seed in args.seeds:
            config = ExperimentConfig(t_rise=tr * PS, rng_seed=seed,
                                      build_selection=args.selection)
            cm = build_current(config)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", DelaySurfaceWarning)
                dm = build_delay(cm, config)
            report = validate_delay(config, cm, dm)
            print(f"{tr:>9g} {seed:>5} {report.avg_error:>8.3f} {report.max_error:>9.3f} "
                  f"{report.n_extrapolated:>6} {len(caught):>7}")


if __name__ == "__main__":
    main()
