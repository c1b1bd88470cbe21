"""Experiment configuration and unit handling.

Config files use the customary units of the field (nm, um, V, cm^2/Vs, fF,
ps); everything is converted to SI on load and back on dump.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from invdelay.device import PARAM_NAMES, DeviceParams, PhysicalConstants, ReferenceModelConfig

# multiply a config value by this to get SI
PARAM_UNITS = {"L": 1e-9, "W": 1e-6, "t_ox": 1e-9, "V_th0": 1.0, "u0": 1e-4}
PARAM_UNIT_NAMES = {"L": "nm", "W": "um", "t_ox": "nm", "V_th0": "V", "u0": "cm2/Vs"}
FF = 1e-15
PS = 1e-12
UM = 1e-6

# Sweep lists of a 90nm node, in config units.
DEFAULT_SWEEPS = {
    "L": (90, 88, 86, 84, 82),
    "W": (1, 2, 3, 4, 5),
    "t_ox": (3, 2.5, 2, 1.6),
    "V_th0": (0.4, 0.35, 0.3, 0.25),
    "u0": (550, 540, 530, 520),
}
DEFAULT_REFERENCE = {"L": 90, "W": 1, "t_ox": 3.0, "V_th0": 0.4, "u0": 550}
DEFAULT_BUILD_LOADS_FF = (10, 20, 50, 100, 200)
DEFAULT_EVAL_LOADS_FF = (13, 37, 83, 123, 185)


class ConfigError(ValueError):
    pass


def to_si(name: str, value: float) -> float:
    return float(value) * PARAM_UNITS[name]


def from_si(name: str, value: float) -> float:
    return float(value) / PARAM_UNITS[name]


def params_from_units(d: dict) -> DeviceParams:
    missing = [n for n in PARAM_NAMES if n not in d]
    if missing:
        raise ConfigError(f"missing device parameter(s): {', '.join(missing)}")
    return DeviceParams(**{n: to_si(n, d[n]) for n in PARAM_NAMES})


def params_to_units(p: DeviceParams) -> dict:
    return {n: from_si(n, getattr(p, n)) for n in PARAM_NAMES}


@dataclass(frozen=True)
class Thresholds:
    current_avg: float = 5.0  # percent
    current_max: float = 10.0
    delay_avg: float = 3.0
    delay_max: float = 8.0


@dataclass(frozen=True)
class ExperimentConfig:
    reference: DeviceParams = field(default_factory=lambda: params_from_units(DEFAULT_REFERENCE))
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    surrogate: ReferenceModelConfig = field(default_factory=ReferenceModelConfig)
    sweeps: dict = field(default_factory=lambda: {
        n: tuple(to_si(n, v) for v in vs) for n, vs in DEFAULT_SWEEPS.items()})
    build_loads: tuple = tuple(C * FF for C in DEFAULT_BUILD_LOADS_FF)
    eval_loads: tuple = tuple(C * FF for C in DEFAULT_EVAL_LOADS_FF)
    n_random_testcases: int = 25
    n_delay_eval_combos: int = 10
    rng_seed: int = 42
    degree: int = 2
    t_rise: float = 0.0  # s; 0 is an ideal step
    sim_tol: float = 1e-4
    dt_max: float = 1e-12
    build_selection: str = "stratified"  # or "random"
    eval_ranges: Optional[dict] = None  # name -> (lo, hi) in SI; default: sweep hulls
    thresholds: Thresholds = field(default_factory=Thresholds)
    out_dir: Optional[str] = None

    def __post_init__(self):
        missing = [n for n in PARAM_NAMES if n not in self.sweeps]
        if missing:
            raise ConfigError(f"no sweep list for {', '.join(missing)}")
        for name, values in self.sweeps.items():
            if not values:
                raise ConfigError(f"sweep list for {name} is empty")
        if not self.build_loads or not self.eval_loads:
            raise ConfigError("load lists must be nonempty")
        if self.n_random_testcases < 2 or self.n_delay_eval_combos < 1:
            raise ConfigError("need >= 2 build testcases and >= 1 evaluation combination")
        if self.build_selection not in ("stratified", "random"):
            raise ConfigError(f"unknown build_selection {self.build_selection!r}")

    @property
    def ranges(self) -> dict:
        if self.eval_ranges is not None:
            return dict(self.eval_ranges)
        return {n: (min(v), max(v)) for n, v in self.sweeps.items()}

    def replace(self, **changes) -> "ExperimentConfig":
        values = {f: getattr(self, f) for f in self.__dataclass_fields__}
        values.update(changes)
        return ExperimentConfig(**values)

    def to_units_dict(self) -> dict:
        """Config in file units; the echo written into every report."""
        consts = asdict(self.constants)
        consts["lambda"] = consts.pop("lam")
        surrogate = asdict(self.surrogate)
        surrogate["delta_W"] = surrogate["delta_W"] / UM
        return {
            "reference": params_to_units(self.reference),
            "constants": consts,
            "surrogate": surrogate,
            "sweeps": {n: [from_si(n, v) for v in self.sweeps[n]] for n in PARAM_NAMES},
            "build_loads_fF": [C / FF for C in self.build_loads],
            "eval_loads_fF": [C / FF for C in self.eval_loads],
            "n_random_testcases": self.n_random_testcases,
            "n_delay_eval_combos": self.n_delay_eval_combos,
            "seed": self.rng_seed,
            "degree": self.degree,
            "t_rise_ps": self.t_rise / PS,
            "sim_tol": self.sim_tol,
            "dt_max_ps": self.dt_max / PS,
            "build_selection": self.build_selection,
            "eval_ranges": None if self.eval_ranges is None else {
                n: [from_si(n, lo), from_si(n, hi)] for n, (lo, hi) in self.eval_ranges.items()},
            "thresholds": asdict(self.thresholds),
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_units_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    @classmethod
    def from_units_dict(cls, d: dict) -> "ExperimentConfig":
        known = {"reference", "constants", "surrogate", "sweeps", "build_loads_fF",
                 "eval_loads_fF", "n_random_testcases", "n_delay_eval_combos", "seed",
                 "degree", "t_rise_ps", "sim_tol", "dt_max_ps", "build_selection",
                 "eval_ranges", "thresholds", "out_dir"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        kw = {}
        if "reference" in d:
            ref = dict(DEFAULT_REFERENCE)
            ref.update(d["reference"])
            kw["reference"] = params_from_units(ref)
        if "constants" in d:
            consts = dict(d["constants"])
            if "lambda" in consts:
                consts["lam"] = consts.pop("lambda")
            kw["constants"] = PhysicalConstants(**consts)
        if "surrogate" in d:
            surrogate = dict(d["surrogate"])
            if "delta_W" in surrogate:
                surrogate["delta_W"] = surrogate["delta_W"] * UM
            kw["surrogate"] = ReferenceModelConfig(**surrogate)
        if "sweeps" in d:
            sweeps = {n: tuple(to_si(n, v) for v in vs) for n, vs in DEFAULT_SWEEPS.items()}
            sweeps.update(sweeps_from_units(d["sweeps"]))
            kw["sweeps"] = sweeps
        if "build_loads_fF" in d:
            kw["build_loads"] = tuple(float(C) * FF for C in d["build_loads_fF"])
        if "eval_loads_fF" in d:
            kw["eval_loads"] = tuple(float(C) * FF for C in d["eval_loads_fF"])
        for key, attr in (("n_random_testcases", "n_random_testcases"),
                          ("n_delay_eval_combos", "n_delay_eval_combos"),
                          ("seed", "rng_seed"), ("degree", "degree")):
            if key in d:
                kw[attr] = int(d[key])
        if "t_rise_ps" in d:
            kw["t_rise"] = float(d["t_rise_ps"]) * PS
        if "dt_max_ps" in d:
            kw["dt_max"] = float(d["dt_max_ps"]) * PS
        if "sim_tol" in d:
            kw["sim_tol"] = float(d["sim_tol"])
        if "build_selection" in d:
            kw["build_selection"] = d["build_selection"]
        if d.get("eval_ranges") is not None:
            kw["eval_ranges"] = {n: (to_si(n, lo), to_si(n, hi))
                                 for n, (lo, hi) in d["eval_ranges"].items()}
        if "thresholds" in d:
            kw["thresholds"] = Thresholds(**d["thresholds"])
        if "out_dir" in d:
            kw["out_dir"] = d["out_dir"]
        return cls(**kw)


def sweeps_from_units(d: dict) -> dict:
    unknown = set(d) - set(PARAM_NAMES)
    if unknown:
        raise ConfigError(f"unknown sweep parameter(s): {', '.join(sorted(unknown))}")
    return {n: tuple(to_si(n, v) for v in vs) for n, vs in d.items()}


def load_config(path) -> ExperimentConfig:
    """Read a JSON or TOML config (chosen by suffix)."""
    path = Path(path)
    if path.suffix.lower() == ".toml":
        import tomli

        data = tomli.loads(path.read_text())
    else:
        data = json.loads(path.read_text())
    return ExperimentConfig.from_units_dict(data)


def load_sweeps(path) -> dict:
    """Sweep lists from JSON (``{"L": [...], ...}``) or CSV (``parameter,value`` rows).

    Values are in config units; the result is SI.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        lists: dict = {}
        with path.open(newline="") as f:
            for row in csv.DictReader(f):
                lists.setdefault(row["parameter"].strip(), []).append(float(row["value"]))
        return sweeps_from_units(lists)
    return sweeps_from_units(json.loads(path.read_text()))
