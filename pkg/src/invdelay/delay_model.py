"""Delay surface over (model saturation current, load capacitance).

Every build testcase is simulated at every build load. The testcases'
model currents form one axis and the loads the other, so the simulated
delays fill a rectangular grid that is interpolated bilinearly.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from invdelay.current_model import CurrentModel, eval_current_model
from invdelay.device import DeviceParams
from invdelay.fitting import (
    DegenerateAxis,
    GridSurface,
    IncompleteGrid,
    surface_build,
    surface_eval,
)
from invdelay.transient import (
    DEFAULT_DT_MAX,
    DEFAULT_TOL,
    InputRamp,
    SimulationError,
    simulate_discharge,
)

# model currents closer than this (relative) share one axis entry
MERGE_RTOL = 1e-3


class DelayModelError(ValueError):
    pass


class ModelMismatch(DelayModelError):
    pass


class DelaySurfaceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DelayModel:
    surface: GridSurface  # axis 1: model current (A), axis 2: C_L (F), values: t_pHL (s)
    current_model_ref: str  # digest of the CurrentModel used for the x axis
    build_meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": "delay_model",
            "units": "SI",
            "current_model_sha256": self.current_model_ref,
            "surface": self.surface.to_dict(),
            "build_meta": self.build_meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DelayModel":
        if d.get("kind") != "delay_model":
            raise DelayModelError("not a delay model file")
        return cls(GridSurface.from_dict(d["surface"]), d["current_model_sha256"],
                   dict(d.get("build_meta", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json())
        return path

    @classmethod
    def load(cls, path) -> "DelayModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _merge_axis(rows):
    """Collapse rows whose currents agree within MERGE_RTOL; rows are (x, delays)."""
    rows = sorted(rows, key=lambda row: (row[0], tuple(row[1])))
    groups = [[rows[0]]]
    for row in rows[1:]:
        if row[0] - groups[-1][0][0] <= MERGE_RTOL * groups[-1][0][0]:
            groups[-1].append(row)
        else:
            groups.append([row])
    merged = []
    for g in groups:
        if len(g) > 1:
            warnings.warn(
                f"{len(g)} testcases with model currents within {MERGE_RTOL:.1%} of "
                f"{g[0][0]:.6e} A merged; delays averaged", DelaySurfaceWarning, stacklevel=3)
        xs = np.array([row[0] for row in g])
        ds = np.array([row[1] for row in g])
        merged.append((float(xs.mean()), ds.mean(axis=0)))
    return merged


def _check_monotone(surface: GridSurface) -> list:
    """Cells breaking 'delay up in C_L, down in current'; warns and returns them."""
    z = surface.zs
    bad = []
    for i, j in zip(*np.nonzero(np.diff(z, axis=1) <= 0)):
        bad.append(f"load step {surface.ys[j]:.3e}->{surface.ys[j + 1]:.3e} F "
                   f"at current {surface.xs[i]:.4e} A")
    for i, j in zip(*np.nonzero(np.diff(z, axis=0) >= 0)):
        bad.append(f"current step {surface.xs[i]:.4e}->{surface.xs[i + 1]:.4e} A "
                   f"at load {surface.ys[j]:.3e} F")
    if bad:
        warnings.warn("non-monotone delay samples: " + "; ".join(bad), DelaySurfaceWarning,
                      stacklevel=3)
    return bad


def build_delay_model(cm: CurrentModel, testcases: Sequence[DeviceParams],
                      loads: Sequence[float], ramp: InputRamp = InputRamp(),
                      tol: float = DEFAULT_TOL, dt_max: float = DEFAULT_DT_MAX,
                      device_factory: Optional[Callable] = None) -> DelayModel:
    """Simulate every testcase at every load and grid the delays.

    ``device_factory(p)`` may supply a replacement current function per
    testcase (test hook).
    """
    if len(testcases) < 2:
        raise DegenerateAxis("need at least two testcases")
    loads = [float(C) for C in loads]
    if len(set(loads)) < 2:
        raise DegenerateAxis("need at least two distinct loads")

    rows = []
    failed = []
    for p in testcases:
        x, _ = eval_current_model(cm, p)
        device = device_factory(p) if device_factory is not None else None
        delays = []
        for C_L in loads:
            try:
                res = simulate_discharge(p, cm.constants, cm.surrogate, C_L, ramp,
                                         dt_max=dt_max, tol=tol, device=device)
                delays.append(res.t_phl)
            except SimulationError as exc:
                failed.append((x, C_L, str(exc)))
                delays.append(np.nan)
        rows.append((x, delays))
    if failed:
        raise IncompleteGrid([(x, C) for x, C, _ in failed])

    merged = _merge_axis(rows)
    if len(merged) < 2:
        raise DegenerateAxis("fewer than two distinct model currents after merging")
    samples = [(x, C, d) for x, ds in merged for C, d in zip(loads, ds)]
    surface = surface_build([x for x, _ in merged], loads, samples)
    _check_monotone(surface)

    meta = {
        "n_testcases": len(testcases),
        "n_current_nodes": len(surface.xs),
        "loads_F": sorted(set(loads)),
        "n_coefficients": surface.n_coefficients,
        "sim_tol": tol,
        "dt_max": dt_max,
        "t_rise": ramp.t_rise,
    }
    return DelayModel(surface, cm.digest(), meta)


def eval_delay_model(dm: DelayModel, cm: CurrentModel, p: DeviceParams, C_L: float,
                     allow_mismatch: bool = False):
    """Model ``t_pHL`` at ``p`` and ``C_L``; returns ``(t_phl, extrapolated)``."""
    if not allow_mismatch and cm.digest() != dm.current_model_ref:
        raise ModelMismatch("delay model was built with a different current model")
    x, extrap_current = eval_current_model(cm, p)
    t_phl, extrap_surface = surface_eval(dm.surface, x, C_L)
    return t_phl, extrap_current or extrap_surface
