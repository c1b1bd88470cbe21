"""Command-line entry point: ``invdelay <subcommand>``.

Device parameters on the command line use nm (L, t_ox), um (W), V and
cm^2/Vs; loads are in fF and times in ps.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from invdelay.config import (
    FF,
    PS,
    ExperimentConfig,
    from_si,
    load_config,
    load_sweeps,
    params_from_units,
    params_to_units,
)
from invdelay.current_model import (
    CurrentModel,
    SweepSpec,
    eval_current_model,
    run_parameter_sweep,
)
from invdelay.delay_model import DelayModel, eval_delay_model
from invdelay.device import PARAM_NAMES, idsat_reference
from invdelay.harness import (
    build_current,
    build_delay,
    run_pipeline,
    trace_export,
    validate_current,
    validate_delay,
)
from invdelay.transient import InputRamp, simulate_discharge, simulate_tplh_mirrored

EXIT_THRESHOLD = 2


def _common_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="experiment config (JSON or TOML)")
    parser.add_argument("--seed", type=int, default=default, help="override the config seed")
    parser.add_argument("--out-dir", default=default, help="directory for written files")
    parser.add_argument("--format", choices=("text", "csv", "json"),
                        default=argparse.SUPPRESS if suppress else "text")


def _device_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("device (defaults: reference device)")
    group.add_argument("--L", type=float, help="channel length, nm")
    group.add_argument("--W", type=float, help="channel width, um")
    group.add_argument("--t-ox", dest="t_ox", type=float, help="oxide thickness, nm")
    group.add_argument("--vth0", dest="V_th0", type=float, help="threshold voltage, V")
    group.add_argument("--u0", type=float, help="mobility, cm^2/Vs")


def _config(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        config = config.replace(rng_seed=args.seed)
    if args.out_dir is not None:
        config = config.replace(out_dir=args.out_dir)
    return config


def _device(args, config: ExperimentConfig):
    values = params_to_units(config.reference)
    for name in PARAM_NAMES:
        if getattr(args, name, None) is not None:
            values[name] = getattr(args, name)
    return params_from_units(values)


def _out_dir(config: ExperimentConfig) -> Path:
    out = Path(config.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_simulate(args, config):
    p = _device(args, config)
    ramp = InputRamp(args.t_rise * PS if args.t_rise is not None else config.t_rise)
    sim = simulate_tplh_mirrored if args.rise else simulate_discharge
    res = sim(p, config.constants, config.surrogate, args.cl * FF, ramp,
              dt_max=config.dt_max, tol=config.sim_tol)
    name = "t_plh" if args.rise else "t_phl"
    record = {"params": params_to_units(p), "C_L_fF": args.cl, "t_rise_ps": ramp.t_rise / PS,
              f"{name}_ps": res.t_phl / PS, "steps": len(res.t) - 1}
    if args.trace:
        res.to_csv(args.trace)
        record["trace"] = str(args.trace)
    if args.format == "json":
        _emit(json.dumps(record, indent=2, sort_keys=True))
    elif args.format == "csv":
        _emit(f"C_L_fF,{name}_ps\n{args.cl!r},{res.t_phl / PS!r}")
    else:
        _emit(f"{name} = {res.t_phl / PS:.4f} ps  (C_L = {args.cl:g} fF)")
    return 0


def cmd_sweep(args, config):
    sweeps = load_sweeps(args.sweeps) if args.sweeps else config.sweeps
    names = PARAM_NAMES if args.parameter == "all" else (args.parameter,)
    ref = config.reference
    idsat_ref = idsat_reference(ref, config.constants, config.surrogate)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["parameter", "value", "ratio", "idsat_A", "current_ratio"])
    for name in names:
        spec = SweepSpec(name, sweeps[name])
        for value, idsat in run_parameter_sweep(ref, config.constants, config.surrogate, spec):
            writer.writerow([name, repr(from_si(name, value)), repr(value / getattr(ref, name)),
                             repr(idsat), repr(idsat / idsat_ref)])
    if config.out_dir:
        path = _out_dir(config) / "sweep.csv"
        path.write_text(buf.getvalue())
        _emit(f"wrote {path}")
    else:
        _emit(buf.getvalue())
    return 0


def cmd_fit_current(args, config):
    if args.sweeps:
        config = config.replace(sweeps={**config.sweeps, **load_sweeps(args.sweeps)})
    cm = build_current(config)
    path = cm.save(Path(args.output) if args.output else _out_dir(config) / "current_model.json")
    if args.format == "json":
        _emit(cm.to_json())
    else:
        _emit(f"wrote {path}")
        _emit(f"idsat_ref = {cm.idsat_ref * 1e6:.3f} uA, "
              f"{cm.n_sweep_evaluations} sweep evaluations + 1 reference")
        for f in cm.fits:
            coeffs = ", ".join(f"{a:.6g}" for a in f.poly.coeffs)
            _emit(f"  {f.parameter:6s} coeffs=({coeffs})  rmse={f.gof.rmse:.3e}  "
                  f"r2={f.gof.r2:.6f}")
    return 0


def _load_or_build_current(args, config):
    if getattr(args, "current_model", None):
        return CurrentModel.load(args.current_model)
    return build_current(config)


def cmd_fit_delay(args, config):
    cm = _load_or_build_current(args, config)
    dm = build_delay(cm, config)
    path = dm.save(Path(args.output) if args.output else _out_dir(config) / "delay_model.json")
    if args.format == "json":
        _emit(dm.to_json())
    else:
        _emit(f"wrote {path}")
        _emit(f"surface: {len(dm.surface.xs)} currents x {len(dm.surface.ys)} loads = "
              f"{dm.surface.n_coefficients} coefficients")
    return 0


def cmd_eval(args, config):
    cm = _load_or_build_current(args, config)
    p = _device(args, config)
    idsat, extrap_i = eval_current_model(cm, p)
    record = {"params": params_to_units(p), "idsat_A": idsat, "idsat_extrapolated": extrap_i}
    if args.delay_model:
        dm = DelayModel.load(args.delay_model)
        t_phl, extrap = eval_delay_model(dm, cm, p, args.cl * FF,
                                         allow_mismatch=args.allow_mismatch)
        record.update({"C_L_fF": args.cl, "t_phl_ps": t_phl / PS, "t_phl_extrapolated": extrap})
    if args.format == "json":
        _emit(json.dumps(record, indent=2, sort_keys=True))
    elif args.format == "csv":
        keys = [k for k in record if k != "params"]
        _emit(",".join(keys) + "\n" + ",".join(repr(record[k]) for k in keys))
    else:
        flag = " (extrapolated)" if extrap_i else ""
        _emit(f"idsat = {idsat * 1e6:.3f} uA{flag}")
        if "t_phl_ps" in record:
            flag = " (extrapolated)" if record["t_phl_extrapolated"] else ""
            _emit(f"t_phl = {record['t_phl_ps']:.4f} ps at C_L = {args.cl:g} fF{flag}")
    return 0


def _finish_report(report, config, args, name, avg_limit, max_limit):
    _emit(report.render(args.format))
    if config.out_dir:
        out = _out_dir(config)
        (out / f"{name}.txt").write_text(report.to_text())
        (out / f"{name}.csv").write_text(report.to_csv())
        (out / f"{name}.json").write_text(report.to_json())
    if not report.passes(avg_limit, max_limit):
        sys.stderr.write(f"{name}: error above threshold (avg <= {avg_limit}%, "
                         f"max <= {max_limit}%)\n")
        return EXIT_THRESHOLD
    return 0


def cmd_validate_current(args, config):
    cm = _load_or_build_current(args, config)
    report = validate_current(config, cm)
    t = config.thresholds
    return _finish_report(report, config, args, "validate_current", t.current_avg, t.current_max)


def cmd_validate_delay(args, config):
    cm = _load_or_build_current(args, config)
    dm = DelayModel.load(args.delay_model) if args.delay_model else build_delay(cm, config)
    report = validate_delay(config, cm, dm)
    t = config.thresholds
    return _finish_report(report, config, args, "validate_delay", t.delay_avg, t.delay_max)


def cmd_trace(args, config):
    p = _device(args, config)
    widths = [w * 1e-6 for w in args.widths] if args.widths else None
    paths = trace_export(args.kind, p, config, _out_dir(config), widths=widths, C_L=args.cl * FF)
    for path in paths:
        _emit(f"wrote {path}")
    return 0


def cmd_pipeline(args, config):
    result = run_pipeline(config, _out_dir(config))
    t = config.thresholds
    ok = (result["current_report"].passes(t.current_avg, t.current_max)
          and result["delay_report"].passes(t.delay_avg, t.delay_max))
    for key in ("current_report", "delay_report"):
        r = result[key]
        _emit(f"{r.title}: avg {r.avg_error:.3f} %, max {r.max_error:.3f} %")
    return 0 if ok else EXIT_THRESHOLD


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="invdelay", description=__doc__.splitlines()[0])
    _common_options(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _common_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="one transient run, prints t_pHL")
    _device_options(p)
    p.add_argument("--cl", type=float, default=10.0, help="load, fF")
    p.add_argument("--t-rise", type=float, help="input transition time, ps (0: step)")
    p.add_argument("--rise", action="store_true", help="output rise delay (mirrored pMOS)")
    p.add_argument("--trace", help="also write the transient trace as CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common], help="one-parameter current sweeps to CSV")
    p.add_argument("--parameter", choices=PARAM_NAMES + ("all",), default="all")
    p.add_argument("--sweeps", help="sweep lists, JSON or CSV (config units)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit-current", parents=[common], help="build and save the current model")
    p.add_argument("--sweeps", help="sweep lists, JSON or CSV (config units)")
    p.add_argument("-o", "--output", help="model file (default: <out-dir>/current_model.json)")
    p.set_defaults(func=cmd_fit_current)

    p = sub.add_parser("fit-delay", parents=[common], help="build and save the delay model")
    p.add_argument("--current-model", help="current model file (default: build one)")
    p.add_argument("-o", "--output", help="model file (default: <out-dir>/delay_model.json)")
    p.set_defaults(func=cmd_fit_delay)

    p = sub.add_parser("eval", parents=[common], help="evaluate the models at one device")
    _device_options(p)
    p.add_argument("--current-model", help="current model file (default: build one)")
    p.add_argument("--delay-model", help="delay model file")
    p.add_argument("--cl", type=float, default=10.0, help="load, fF")
    p.add_argument("--allow-mismatch", action="store_true",
                   help="evaluate even if the delay model was built on another current model")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("validate-current", parents=[common],
                       help="current model vs reference over the sweep factorial")
    p.add_argument("--current-model", help="current model file (default: build one)")
    p.set_defaults(func=cmd_validate_current)

    p = sub.add_parser("validate-delay", parents=[common],
                       help="delay model vs simulation at held-out devices")
    p.add_argument("--current-model", help="current model file (default: build one)")
    p.add_argument("--delay-model", help="delay model file (default: build one)")
    p.set_defaults(func=cmd_validate_delay)

    p = sub.add_parser("trace", parents=[common], help="I-V curves or a discharge trace as CSV")
    p.add_argument("kind", choices=("iv_curves", "discharge"))
    _device_options(p)
    p.add_argument("--widths", type=float, nargs="+", help="widths for iv_curves, um")
    p.add_argument("--cl", type=float, default=50.0, help="load for discharge, fF")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("pipeline", parents=[common],
                       help="build both models and run both validations")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = _config(args)
    return args.func(args, config)


if __name__ == "__main__":
    sys.exit(main())
