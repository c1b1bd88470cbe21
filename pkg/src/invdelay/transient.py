"""Transient simulation of the inverter output node.

The load capacitor starts at VDD and is discharged by the nMOS current while
the gate follows an input ramp. The pull-up is ignored (fast-ramp regime, no
short-circuit current or input-output coupling). ``t_pHL`` is measured between
the 50% crossings of input and output.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from invdelay.device import (
    DeviceParams,
    PhysicalConstants,
    ReferenceModelConfig,
    reference_current_fn,
)

CurrentFn = Callable[[float, float], float]

DEFAULT_TOL = 1e-4
DEFAULT_DT_MAX = 1e-12
DEFAULT_T_RISE = 0.0  # ideal step


class SimulationError(RuntimeError):
    pass


class NonDischarging(SimulationError):
    pass


class StepLimit(SimulationError):
    pass


@dataclass(frozen=True)
class InputRamp:
    t_rise: float = DEFAULT_T_RISE  # 0 -> VDD transition time, s; 0 is an ideal step
    t_start: float = 0.0

    def __post_init__(self):
        if self.t_rise < 0 or self.t_start < 0:
            raise ValueError("t_rise and t_start must be >= 0")

    @property
    def t_in50(self) -> float:
        return self.t_start + self.t_rise / 2

    def voltage(self, t: float, VDD: float) -> float:
        if t <= self.t_start:
            # an ideal step is already high at t_start
            return VDD if self.t_rise == 0 and t == self.t_start else 0.0
        if t >= self.t_start + self.t_rise:
            return VDD
        return VDD * (t - self.t_start) / self.t_rise


STEP = InputRamp(t_rise=0.0)


@dataclass(frozen=True, eq=False)
class TransientResult:
    t: np.ndarray
    v_in: np.ndarray
    v_out: np.ndarray
    i_dn: np.ndarray
    t_in50: float
    t_out50: float
    dt: float  # step size of the accepted run
    refinements: int

    @property
    def t_phl(self) -> float:
        return self.t_out50 - self.t_in50

    @property
    def samples(self) -> list:
        return list(zip(self.t.tolist(), self.v_in.tolist(), self.v_out.tolist(),
                        self.i_dn.tolist()))

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["t_s", "vin_V", "vout_V", "idn_A"])
            for row in self.samples:
                writer.writerow([repr(v) for v in row])
        return path


def constant_current(current: float) -> CurrentFn:
    """Test device that sinks ``current`` regardless of bias."""

    def device(vgs: float, vds: float) -> float:
        return current

    return device


def tphl_closed_form(C_L: float, VDD: float, idsat: float) -> float:
    """Fall delay for a constant discharge current: ``C_L * VDD / (2 * idsat)``."""
    if not idsat > 0:
        raise ValueError(f"idsat must be > 0, got {idsat!r}")
    if C_L < 0:
        raise ValueError(f"C_L must be >= 0, got {C_L!r}")
    return C_L * VDD / (2.0 * idsat)


def average_delay(t_phl: float, t_plh: float) -> float:
    if t_phl < 0 or t_plh < 0:
        raise ValueError("delays must be >= 0")
    return (t_phl + t_plh) / 2.0


def _run(current: CurrentFn, C_L: float, VDD: float, ramp: InputRamp, dt: float,
         dt_ramp: float, max_steps: int):
    """One fixed-step RK4 pass, stopping at the first sample with v_out <= VDD/2.

    Steps inside the ramp are at most ``dt_ramp``. The step is shortened to
    land exactly on the ramp corners so every step sees a smooth gate voltage.
    """
    half = VDD / 2
    corners = [ramp.t_start, ramp.t_start + ramp.t_rise]

    def vin(t):
        return ramp.voltage(t, VDD)

    def rhs(t, v):
        return -current(vin(t), v) / C_L

    ts, vs = [0.0], [VDD]
    t, v = 0.0, VDD
    steps = 0
    while v > half:
        if steps >= max_steps:
            raise StepLimit(f"no 50% crossing after {max_steps} steps (dt={dt:.3e} s)")
        h = min(dt, dt_ramp) if corners[0] <= t < corners[1] and dt_ramp > 0 else dt
        for corner in corners:
            if t < corner < t + h:
                h = corner - t
                break
        if t + h == t:
            h = dt
        # evaluate just past t when t sits on a corner, so a step input is seen as high
        k1 = rhs(t + 1e-30 * h if t in corners else t, v)
        k2 = rhs(t + h / 2, v + h / 2 * k1)
        k3 = rhs(t + h / 2, v + h / 2 * k2)
        k4 = rhs(t + h, v + h * k3)
        v = v + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t + h
        ts.append(t)
        vs.append(v)
        steps += 1

    t0, t1, v0, v1 = ts[-2], ts[-1], vs[-2], vs[-1]
    t_out50 = t0 + (v0 - half) / (v0 - v1) * (t1 - t0)
    return np.array(ts), np.array(vs), t_out50


def _simulate(current: CurrentFn, VDD: float, C_L: float, ramp: InputRamp,
              dt_max: float, tol: float, max_steps: int, max_refinements: int):
    if not C_L > 0:
        raise ValueError(f"C_L must be > 0, got {C_L!r}")
    if not 0 < tol <= 1e-2:
        raise ValueError(f"tol must lie in (0, 1e-2], got {tol!r}")
    if not dt_max > 0:
        raise ValueError("dt_max must be > 0")
    i_full = current(VDD, VDD)
    if not i_full > 0:
        raise NonDischarging(f"device current at full drive is {i_full!r} A")

    # start from ~20 steps across the expected delay and a few across the ramp
    t_est = tphl_closed_form(C_L, VDD, i_full)
    dt = min(dt_max, t_est / 20)
    dt_ramp = ramp.t_rise / 4

    ts, vs, t_out50 = _run(current, C_L, VDD, ramp, dt, dt_ramp, max_steps)
    for k in range(1, max_refinements + 1):
        dt /= 2
        dt_ramp /= 2
        ts_f, vs_f, t_out50_f = _run(current, C_L, VDD, ramp, dt, dt_ramp, max_steps)
        t_phl_c = t_out50 - ramp.t_in50
        t_phl_f = t_out50_f - ramp.t_in50
        scale = max(abs(t_phl_f), 1e-3 * t_out50_f)
        ts, vs, t_out50 = ts_f, vs_f, t_out50_f
        if abs(t_phl_f - t_phl_c) < tol * scale:
            break
    else:
        raise StepLimit(f"t_phl not converged to tol={tol} after {max_refinements} halvings")

    v_in = np.array([ramp.voltage(t, VDD) for t in ts])
    if ramp.t_rise == 0:
        v_in[ts >= ramp.t_start] = VDD
    i_dn = np.array([current(a, b) for a, b in zip(v_in, vs)])
    return TransientResult(ts, v_in, vs, i_dn, ramp.t_in50, t_out50, dt, k)


def simulate_discharge(p: DeviceParams, c: PhysicalConstants, r: ReferenceModelConfig,
                       C_L: float, ramp: InputRamp = InputRamp(),
                       dt_max: float = DEFAULT_DT_MAX, tol: float = DEFAULT_TOL,
                       device: Optional[CurrentFn] = None, max_steps: int = 1_000_000,
                       max_refinements: int = 16) -> TransientResult:
    """Integrate ``C_L dV_out/dt = -I_Dn(v_in(t), V_out)`` from ``V_out = VDD``.

    The step is halved until two successive ``t_phl`` estimates differ by
    less than ``tol`` (relative). ``device`` replaces the surrogate transistor,
    e.g. with :func:`constant_current`.
    """
    current = device if device is not None else reference_current_fn(p, c, r)
    return _simulate(current, c.VDD, C_L, ramp, dt_max, tol, max_steps, max_refinements)


def simulate_tplh_mirrored(p: DeviceParams, c: PhysicalConstants, r: ReferenceModelConfig,
                           C_L: float, ramp: InputRamp = InputRamp(),
                           dt_max: float = DEFAULT_DT_MAX, tol: float = DEFAULT_TOL,
                           device: Optional[CurrentFn] = None, max_steps: int = 1_000_000,
                           max_refinements: int = 16) -> TransientResult:
    """Rise delay with a pMOS that mirrors the nMOS.

    The input falls from VDD over ``ramp.t_rise`` and the load charges from 0.
    With ``v_sg = VDD - v_in`` and ``v_sd = VDD - v_out`` the problem maps onto
    the discharge one, so the returned trace is the mirrored discharge trace.
    """
    current = device if device is not None else reference_current_fn(p, c, r)
    res = _simulate(current, c.VDD, C_L, ramp, dt_max, tol, max_steps, max_refinements)
    return TransientResult(res.t, c.VDD - res.v_in, c.VDD - res.v_out, res.i_dn,
                           res.t_in50, res.t_out50, res.dt, res.refinements)
