"""Experiment protocol: model builds, validation against simulation, reports."""

from __future__ import annotations

import csv
import io
import itertools
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from invdelay.config import FF, PS, ExperimentConfig, from_si, params_to_units
from invdelay.current_model import (
    CurrentModel,
    SweepSpec,
    build_current_model,
    eval_current_model,
)
from invdelay.delay_model import DelayModel, build_delay_model, eval_delay_model
from invdelay.device import PARAM_NAMES, DeviceParams, id_reference, idsat_reference
from invdelay.transient import InputRamp, simulate_discharge


def relative_error_pct(analytical: float, simulated: float) -> float:
    return abs(analytical - simulated) / abs(simulated) * 100.0


@dataclass(frozen=True)
class CaseRow:
    params: DeviceParams
    simulated: tuple
    analytical: tuple
    extrapolated: tuple

    @property
    def errors(self) -> tuple:
        return tuple(relative_error_pct(a, s) for a, s in zip(self.analytical, self.simulated))

    @property
    def max_error(self) -> float:
        return max(self.errors)

    @property
    def avg_error(self) -> float:
        return float(np.mean(self.errors))


@dataclass
class ErrorReport:
    title: str
    quantity: str  # "idsat" or "t_phl"
    columns: tuple  # label per value in a row, e.g. the loads
    rows: list
    echo: dict = field(default_factory=dict)
    listing: Optional[list] = None  # row indices to show in the text table

    @property
    def all_errors(self) -> np.ndarray:
        return np.array([e for row in self.rows for e in row.errors])

    @property
    def max_error(self) -> float:
        return float(self.all_errors.max())

    @property
    def avg_error(self) -> float:
        return float(self.all_errors.mean())

    @property
    def n_extrapolated(self) -> int:
        return sum(sum(row.extrapolated) for row in self.rows)

    def passes(self, avg_limit: float, max_limit: float) -> bool:
        return self.avg_error <= avg_limit and self.max_error <= max_limit

    def _scale(self):
        return (1e6, "uA") if self.quantity == "idsat" else (1 / PS, "ps")

    def to_text(self) -> str:
        scale, unit = self._scale()
        out = [self.title, "=" * len(self.title)]
        out.append(f"cases: {len(self.rows)}  values: {self.all_errors.size}  "
                   f"extrapolated: {self.n_extrapolated}")
        out.append(f"max error: {self.max_error:.3f} %   avg error: {self.avg_error:.3f} %")
        out.append("")
        head = f"{'#':>4} {'L(nm)':>7} {'W(um)':>6} {'TOXE(nm)':>8} {'VTH0(V)':>7} {'U0':>6}"
        out.append(f"{head}  simulated ({unit}) | analytical ({unit}) | max% | avg%")
        indices = self.listing if self.listing is not None else range(len(self.rows))
        for k in indices:
            row = self.rows[k]
            u = params_to_units(row.params)
            sim = ",".join(f"{v * scale:.1f}" for v in row.simulated)
            ana = ",".join(f"{v * scale:.1f}" for v in row.analytical)
            out.append(f"{k + 1:>4} {u['L']:>7.2f} {u['W']:>6.2f} {u['t_ox']:>8.3f} "
                       f"{u['V_th0']:>7.3f} {u['u0']:>6.1f}  ({sim}) | ({ana}) | "
                       f"{row.max_error:.2f} | {row.avg_error:.2f}")
        out.append("")
        out.append(f"config sha256: {self.echo.get('config_sha256', '')}")
        out.append(f"seed: {self.echo.get('seed', '')}")
        echo_cfg = self.echo.get("config", {})
        t_rise = echo_cfg.get("t_rise_ps")
        if t_rise is not None:
            out.append("input: ideal step" if t_rise == 0 else f"input: {t_rise:g} ps ramp")
        out.append(f"constants: {json.dumps(echo_cfg.get('constants', {}), sort_keys=True)}")
        out.append(f"surrogate: {json.dumps(echo_cfg.get('surrogate', {}), sort_keys=True)}")
        return "\n".join(out) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = ["case", "L_nm", "W_um", "t_ox_nm", "V_th0_V", "u0_cm2Vs", "column",
                  "simulated", "analytical", "error_pct", "extrapolated"]
        writer.writerow(header)
        for k, row in enumerate(self.rows):
            u = params_to_units(row.params)
            for col, s, a, e, x in zip(self.columns, row.simulated, row.analytical,
                                       row.errors, row.extrapolated):
                writer.writerow([k + 1, repr(u["L"]), repr(u["W"]), repr(u["t_ox"]),
                                 repr(u["V_th0"]), repr(u["u0"]), col, repr(s), repr(a),
                                 repr(e), int(x)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "quantity": self.quantity,
            "units": "A" if self.quantity == "idsat" else "s",
            "columns": list(self.columns),
            "max_error_pct": self.max_error,
            "avg_error_pct": self.avg_error,
            "n_extrapolated": self.n_extrapolated,
            "listing": self.listing,
            "rows": [
                {
                    "params": params_to_units(row.params),
                    "simulated": list(row.simulated),
                    "analytical": list(row.analytical),
                    "errors_pct": list(row.errors),
                    "max_error_pct": row.max_error,
                    "avg_error_pct": row.avg_error,
                    "extrapolated": list(row.extrapolated),
                }
                for row in self.rows
            ],
            "echo": self.echo,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def render(self, fmt: str) -> str:
        return {"text": self.to_text, "csv": self.to_csv, "json": self.to_json}[fmt]()


def _echo(config: ExperimentConfig) -> dict:
    return {"config_sha256": config.digest(), "seed": config.rng_seed,
            "config": config.to_units_dict()}


def _streams(seed: int):
    """Independent generators for the current listing, build selection and held-out draws."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]


def random_params(ranges: dict, n: int, seed, hull: Optional[dict] = None) -> list:
    """``n`` devices with every parameter drawn uniformly and independently from its range.

    ``seed`` may be an int or a numpy Generator. A warning is issued for
    ranges that leave ``hull`` (typically the sweep hulls).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if hull is not None:
        for name, (lo, hi) in ranges.items():
            hlo, hhi = hull[name]
            if lo < hlo or hi > hhi:
                warnings.warn(f"range of {name} [{lo!r}, {hi!r}] leaves the sweep hull "
                              f"[{hlo!r}, {hhi!r}]", stacklevel=2)
    draws = {}
    for name in PARAM_NAMES:
        lo, hi = ranges[name]
        draws[name] = (hi - lo) * rng.random(n) + lo
    return [DeviceParams(**{name: float(draws[name][k]) for name in PARAM_NAMES})
            for k in range(n)]


def factorial(sweeps: dict) -> list:
    """Every combination of the sweep values, in PARAM_NAMES order."""
    return [DeviceParams(*combo) for combo in itertools.product(*(sweeps[n] for n in PARAM_NAMES))]


def sweep_specs(config: ExperimentConfig) -> list:
    return [SweepSpec(n, config.sweeps[n]) for n in PARAM_NAMES]


def build_current(config: ExperimentConfig) -> CurrentModel:
    return build_current_model(config.reference, config.constants, config.surrogate,
                               sweep_specs(config), config.degree)


def select_build_testcases(cm: CurrentModel, config: ExperimentConfig,
                           rng: Optional[np.random.Generator] = None) -> list:
    """Pick the testcases the delay surface is built from.

    ``random``: a plain random subset of the factorial. ``stratified``: the
    lowest- and highest-current factorial points plus one random point per
    equal-width bin of log model current in between, so the surface spans
    every in-range query and has no large gaps along the current axis.
    """
    if rng is None:
        rng = _streams(config.rng_seed)[1]
    combos = factorial(config.sweeps)
    n = config.n_random_testcases
    if n > len(combos):
        raise ValueError(f"asked for {n} testcases from {len(combos)} combinations")
    if config.build_selection == "random":
        return [combos[i] for i in sorted(rng.choice(len(combos), n, replace=False))]

    logc = np.log([eval_current_model(cm, p)[0] for p in combos])
    lo, hi = int(np.argmin(logc)), int(np.argmax(logc))
    chosen = [lo, hi]
    if n > 2:
        edges = np.linspace(logc[lo], logc[hi], n - 1)
        for b in range(n - 2):
            upper = logc <= edges[b + 1] if b == n - 3 else logc < edges[b + 1]
            candidates = [i for i in np.nonzero((logc >= edges[b]) & upper)[0]
                          if i not in chosen]
            if candidates:
                chosen.append(int(rng.choice(candidates)))
        # empty bins are refilled at random
        rest = [i for i in range(len(combos)) if i not in chosen]
        short = n - len(chosen)
        if short > 0:
            chosen.extend(int(i) for i in rng.choice(rest, short, replace=False))
    return [combos[i] for i in sorted(chosen)]


def build_delay(cm: CurrentModel, config: ExperimentConfig,
                testcases: Optional[Sequence[DeviceParams]] = None) -> DelayModel:
    if testcases is None:
        testcases = select_build_testcases(cm, config)
    return build_delay_model(cm, testcases, config.build_loads, InputRamp(config.t_rise),
                             tol=config.sim_tol, dt_max=config.dt_max)


def validate_current(config: ExperimentConfig, cm: Optional[CurrentModel] = None) -> ErrorReport:
    """Model current against the reference current over the full sweep factorial."""
    if cm is None:
        cm = build_current(config)
    rng = _streams(config.rng_seed)[0]
    rows = []
    for p in factorial(config.sweeps):
        value, extrap = eval_current_model(cm, p)
        rows.append(CaseRow(p, (idsat_reference(p, config.constants, config.surrogate),),
                            (value,), (extrap,)))
    k = min(config.n_random_testcases, len(rows))
    listing = sorted(int(i) for i in rng.choice(len(rows), k, replace=False))
    return ErrorReport("Saturation current: model vs reference (full factorial)", "idsat",
                       ("idsat",), rows, _echo(config), listing)


def validate_delay(config: ExperimentConfig, cm: Optional[CurrentModel] = None,
                   dm: Optional[DelayModel] = None,
                   combos: Optional[Sequence[DeviceParams]] = None) -> ErrorReport:
    """Delay model against fresh simulations at held-out devices and loads."""
    if cm is None:
        cm = build_current(config)
    if dm is None:
        dm = build_delay(cm, config)
    if combos is None:
        combos = random_params(config.ranges, config.n_delay_eval_combos,
                               _streams(config.rng_seed)[2],
                               hull={n: (min(v), max(v)) for n, v in config.sweeps.items()})
    ramp = InputRamp(config.t_rise)
    rows = []
    for p in combos:
        sim, ana, flags = [], [], []
        for C_L in config.eval_loads:
            res = simulate_discharge(p, config.constants, config.surrogate, C_L, ramp,
                                     dt_max=config.dt_max, tol=config.sim_tol)
            value, extrap = eval_delay_model(dm, cm, p, C_L)
            sim.append(res.t_phl)
            ana.append(value)
            flags.append(extrap)
        rows.append(CaseRow(p, tuple(sim), tuple(ana), tuple(flags)))
    columns = tuple(f"{C / FF:g}fF" for C in config.eval_loads)
    echo = _echo(config)
    echo["current_model_sha256"] = dm.current_model_ref
    return ErrorReport("Inverter fall delay: model vs simulation", "t_phl", columns, rows, echo)


def iv_curves(p: DeviceParams, config: ExperimentConfig, widths: Sequence[float],
              vgs: Optional[float] = None, n_points: int = 121):
    """Drain current against V_DS, one curve per width; returns (vds, {W: currents})."""
    c, r = config.constants, config.surrogate
    vgs = c.VDD if vgs is None else vgs
    vds = np.linspace(0.0, c.VDD, n_points)
    curves = {}
    for W in widths:
        q = p.replace(W=W)
        curves[W] = np.array([id_reference(q, c, r, vgs, float(v)) for v in vds])
    return vds, curves


def trace_export(kind: str, p: DeviceParams, config: ExperimentConfig, out_dir,
                 widths: Optional[Sequence[float]] = None, C_L: float = 50 * FF) -> list:
    """Write plot-ready CSV traces; returns the written paths.

    ``iv_curves``: I_D against V_DS at V_GS = VDD for each width.
    ``discharge``: (t, v_in, v_out, i_dn) down to the 50% output crossing.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if kind == "iv_curves":
        widths = widths if widths is not None else [w * 1e-6 for w in (1, 2, 3, 4, 5)]
        vds, curves = iv_curves(p, config, widths)
        path = out / "iv_curves.csv"
        with path.open("w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["vds_V"] + [f"id_A_W{from_si('W', W):g}um" for W in widths])
            for k, v in enumerate(vds):
                writer.writerow([repr(float(v))] + [repr(float(curves[W][k])) for W in widths])
        return [path]
    if kind == "discharge":
        res = simulate_discharge(p, config.constants, config.surrogate, C_L,
                                 InputRamp(config.t_rise), dt_max=config.dt_max,
                                 tol=config.sim_tol)
        return [res.to_csv(out / "discharge.csv")]
    raise ValueError(f"unknown trace kind {kind!r}")


def run_pipeline(config: ExperimentConfig, out_dir) -> dict:
    """Build both models, run both validations, write models and reports.

    Returns the ErrorReports and models keyed by name.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cm = build_current(config)
    cm.save(out / "current_model.json")
    dm = build_delay(cm, config)
    dm.save(out / "delay_model.json")
    current_report = validate_current(config, cm)
    delay_report = validate_delay(config, cm, dm)
    for name, report in (("validate_current", current_report), ("validate_delay", delay_report)):
        (out / f"{name}.txt").write_text(report.to_text())
        (out / f"{name}.csv").write_text(report.to_csv())
        (out / f"{name}.json").write_text(report.to_json())
    return {"current_model": cm, "delay_model": dm, "current_report": current_report,
            "delay_report": delay_report}
