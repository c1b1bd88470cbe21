"""Full experiment: build both models, validate them, write everything to one directory.

    python3 scripts/run_experiment.py [--config configs/default.toml] [--out-dir results]
"""

import argparse
import sys
import time
from pathlib import Path

from invdelay.config import ExperimentConfig, load_config
from invdelay.harness import run_pipeline


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()

    config = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        config = config.replace(rng_seed=args.seed)
    t0 = time.perf_counter()
    result = run_pipeline(config, Path(args.out_dir))
    elapsed = time.perf_counter() - t0

    t = config.thresholds
    ok = True
    for key, (lo, hi) in (("current_report", (t.current_avg, t.current_max)),
                          ("delay_report", (t.delay_avg, t.delay_max))):
        r = result[key]
        passed = r.passes(lo, hi)
        ok &= passed
        print(f"{r.title}\n  avg {r.avg_error:.3f} % (<= {lo}), max {r.max_error:.3f} % "
              f"(<= {hi}), extrapolated {r.n_extrapolated}  {'ok' if passed else 'FAIL'}")
    print(f"wrote {args.out_dir}/ in {elapsed:.2f} s")
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
