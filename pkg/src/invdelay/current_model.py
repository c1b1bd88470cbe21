"""Separable saturation-current model built from one-parameter sweeps.

Each of the five process parameters is swept alone around a reference
device. The swept currents, divided by the reference current, are fitted
by a polynomial in the parameter ratio. The model current is the reference
current times the product of the five ratio polynomials.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from invdelay.device import (
    PARAM_NAMES,
    DeviceParams,
    PhysicalConstants,
    ReferenceModelConfig,
    idsat_reference,
)
from invdelay.fitting import GoodnessOfFit, Polynomial, poly_eval, polyfit

# slack when deciding whether a ratio left the fitted domain
_DOMAIN_RTOL = 1e-12


class CurrentModelError(ValueError):
    pass


class MissingSweep(CurrentModelError):
    pass


class NonPhysical(CurrentModelError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple  # SI

    def __post_init__(self):
        if self.parameter not in PARAM_NAMES:
            raise CurrentModelError(f"unknown parameter {self.parameter!r}")
        values = tuple(float(v) for v in self.values)
        if not values:
            raise CurrentModelError(f"sweep of {self.parameter} is empty")
        if any(not v > 0 for v in values):
            raise CurrentModelError(f"sweep of {self.parameter} has non-positive values")
        if len(set(values)) != len(values):
            raise CurrentModelError(f"sweep of {self.parameter} has repeated values")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class RatioFit:
    parameter: str
    reference_value: float
    poly: Polynomial
    gof: GoodnessOfFit
    ratio_domain: tuple

    def __call__(self, ratio):
        return poly_eval(self.poly, ratio)

    def contains(self, ratio: float) -> bool:
        lo, hi = self.ratio_domain
        return lo * (1 - _DOMAIN_RTOL) <= ratio <= hi * (1 + _DOMAIN_RTOL)

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "reference_value": self.reference_value,
            "coefficients": list(self.poly.coeffs),
            "ratio_domain": list(self.ratio_domain),
            "gof": self.gof.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RatioFit":
        return cls(d["parameter"], float(d["reference_value"]), Polynomial(d["coefficients"]),
                   GoodnessOfFit.from_dict(d["gof"]), tuple(d["ratio_domain"]))


@dataclass(frozen=True)
class CurrentModel:
    reference_params: DeviceParams
    constants: PhysicalConstants
    surrogate: ReferenceModelConfig
    idsat_ref: float
    fits: tuple  # one RatioFit per parameter, in PARAM_NAMES order
    n_sweep_evaluations: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.idsat_ref > 0:
            raise CurrentModelError("idsat_ref must be > 0")
        names = [f.parameter for f in self.fits]
        if sorted(names) != sorted(PARAM_NAMES) or len(names) != len(PARAM_NAMES):
            raise CurrentModelError(f"need exactly one fit per parameter, got {names}")
        order = {n: i for i, n in enumerate(PARAM_NAMES)}
        object.__setattr__(self, "fits", tuple(sorted(self.fits, key=lambda f: order[f.parameter])))

    def fit(self, parameter: str) -> RatioFit:
        for f in self.fits:
            if f.parameter == parameter:
                return f
        raise KeyError(parameter)

    def to_dict(self) -> dict:
        return {
            "kind": "current_model",
            "units": "SI",
            "constants": asdict(self.constants),
            "surrogate": asdict(self.surrogate),
            "reference_params": asdict(self.reference_params),
            "idsat_ref": self.idsat_ref,
            "n_sweep_evaluations": self.n_sweep_evaluations,
            "fits": [f.to_dict() for f in self.fits],
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CurrentModel":
        if d.get("kind") != "current_model":
            raise CurrentModelError("not a current model file")
        return cls(
            DeviceParams(**d["reference_params"]),
            PhysicalConstants(**d["constants"]),
            ReferenceModelConfig(**d["surrogate"]),
            float(d["idsat_ref"]),
            tuple(RatioFit.from_dict(f) for f in d["fits"]),
            int(d.get("n_sweep_evaluations", 0)),
            dict(d.get("meta", {})),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def digest(self) -> str:
        """sha256 of the canonical JSON form; delay models pin this."""
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json())
        return path

    @classmethod
    def load(cls, path) -> "CurrentModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def run_parameter_sweep(ref: DeviceParams, c: PhysicalConstants, r: ReferenceModelConfig,
                        spec: SweepSpec,
                        simulate: Callable = idsat_reference) -> list:
    """Reference current for each sweep value, all other parameters at reference."""
    return [(v, simulate(ref.replace(**{spec.parameter: v}), c, r)) for v in spec.values]


def fit_parameter(sweep_result: Sequence[tuple], reference_value: float, idsat_ref: float,
                  degree: int = 2, parameter: str = "") -> RatioFit:
    """Fit current ratio against parameter ratio for one sweep."""
    if not idsat_ref > 0:
        raise CurrentModelError("idsat_ref must be > 0")
    if degree < 1:
        raise CurrentModelError("ratio fits need degree >= 1")
    # sorted so the fit does not depend on sweep order
    pairs = sorted(sweep_result)
    ratios = [v / reference_value for v, _ in pairs]
    currents = [i / idsat_ref for _, i in pairs]
    poly, stats = polyfit(ratios, currents, degree)
    lo, hi = min(ratios), max(ratios)
    return RatioFit(parameter, float(reference_value), poly, stats, (min(lo, 1.0), max(hi, 1.0)))


def build_current_model(ref: DeviceParams, c: PhysicalConstants, r: ReferenceModelConfig,
                        sweeps: Sequence[SweepSpec], degree: int = 2,
                        simulate: Callable = idsat_reference) -> CurrentModel:
    """Reference current, one sweep and one ratio fit per parameter."""
    by_param = {}
    for spec in sweeps:
        if spec.parameter in by_param:
            raise CurrentModelError(f"more than one sweep for {spec.parameter}")
        by_param[spec.parameter] = spec
    missing = [n for n in PARAM_NAMES if n not in by_param]
    if missing:
        raise MissingSweep(f"no sweep given for {', '.join(missing)}")

    idsat_ref = simulate(ref, c, r)
    fits = []
    n_evals = 0
    for name in PARAM_NAMES:
        spec = by_param[name]
        ref_value = getattr(ref, name)
        if ref_value not in spec.values:
            raise CurrentModelError(
                f"sweep of {name} must contain the reference value {ref_value!r}")
        if len(spec.values) < max(3, degree + 1):
            raise CurrentModelError(f"sweep of {name} needs at least {max(3, degree + 1)} values")
        result = run_parameter_sweep(ref, c, r, spec, simulate)
        n_evals += len(result)
        fits.append(fit_parameter(result, ref_value, idsat_ref, degree, parameter=name))
    return CurrentModel(ref, c, r, idsat_ref, tuple(fits), n_evals,
                        {"degree": degree, "n_reference_evaluations": 1})


def eval_current_model(m: CurrentModel, p: DeviceParams):
    """Model saturation current; returns ``(idsat, extrapolated)``."""
    value = m.idsat_ref
    extrapolated = False
    for f in m.fits:
        ratio = getattr(p, f.parameter) / f.reference_value
        extrapolated |= not f.contains(ratio)
        value *= f(ratio)
    if not value > 0:
        raise NonPhysical(f"model current {value!r} A is not positive at {p}")
    return value, extrapolated
