"""nMOS drain-current models.

Two models live here. ``idsat_analytical`` is the plain alpha-power law
saturation current. ``id_reference`` is a richer surrogate I-V model with
width reduction, mobility degradation, DIBL and a triode region; it plays
the role of the circuit simulator's transistor and is the ground truth the
fitted models are checked against.

All quantities are SI.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

EPS0 = 8.854e-12  # F/m

# Parameter names in the order used throughout the package.
PARAM_NAMES = ("L", "W", "t_ox", "V_th0", "u0")


class DeviceError(ValueError):
    """Raised when device parameters or bias points are outside the model domain."""


@dataclass(frozen=True)
class DeviceParams:
    L: float  # channel length, m
    W: float  # channel width, m
    t_ox: float  # oxide thickness, m
    V_th0: float  # zero-bias threshold voltage, V
    u0: float  # low-field mobility, m^2/(V s)

    def __post_init__(self):
        for name in PARAM_NAMES:
            value = getattr(self, name)
            if not value > 0:
                raise DeviceError(f"{name} must be strictly positive, got {value!r}")

    def replace(self, **changes) -> "DeviceParams":
        values = asdict(self)
        values.update(changes)
        return DeviceParams(**values)

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, name) for name in PARAM_NAMES)


@dataclass(frozen=True)
class PhysicalConstants:
    eps0: float = EPS0
    eps_r: float = 3.9  # SiO2
    alpha: float = 1.3
    lam: float = 0.1  # 1/V
    VDD: float = 1.2

    def __post_init__(self):
        if not 1.0 <= self.alpha <= 2.0:
            raise DeviceError(f"alpha must lie in [1, 2], got {self.alpha!r}")
        if self.lam < 0:
            raise DeviceError(f"lambda must be >= 0, got {self.lam!r}")
        if not self.VDD > 0:
            raise DeviceError(f"VDD must be > 0, got {self.VDD!r}")
        if not (self.eps0 > 0 and self.eps_r > 0):
            raise DeviceError("permittivities must be positive")


@dataclass(frozen=True)
class ReferenceModelConfig:
    delta_W: float = 0.05e-6  # m
    theta: float = 0.3  # 1/V
    eta_dibl: float = 0.05
    k_vdsat: float = 0.6  # V^(1 - alpha/2)

    def __post_init__(self):
        if self.theta < 0 or self.eta_dibl < 0:
            raise DeviceError("theta and eta_dibl must be >= 0")
        if not self.k_vdsat > 0:
            raise DeviceError("k_vdsat must be > 0")
        if self.delta_W < 0:
            raise DeviceError("delta_W must be >= 0")


def _check_bias(vgs: float, vds: float) -> None:
    if vgs < 0 or vds < 0:
        raise DeviceError(f"bias must be non-negative, got vgs={vgs!r}, vds={vds!r}")


def _check_operating_point(p: DeviceParams, c: PhysicalConstants) -> None:
    if not p.V_th0 < c.VDD:
        raise DeviceError(f"V_th0={p.V_th0!r} must be below VDD={c.VDD!r}")


def idsat_analytical(p: DeviceParams, c: PhysicalConstants, vgs: float, vds: float) -> float:
    """Alpha-power law saturation current.

    ``0.5 * u0 * eps0 * eps_r / t_ox * W / L * (vgs - V_th0)**alpha * (1 + lam * vds)``,
    zero at or below threshold.
    """
    _check_bias(vgs, vds)
    _check_operating_point(p, c)
    overdrive = vgs - p.V_th0
    if overdrive <= 0:
        return 0.0
    cox = c.eps0 * c.eps_r / p.t_ox
    return 0.5 * p.u0 * cox * (p.W / p.L) * overdrive**c.alpha * (1.0 + c.lam * vds)


def saturation_voltage(p: DeviceParams, c: PhysicalConstants, r: ReferenceModelConfig,
                       vgs: float, vds: float) -> float:
    """Surrogate V_dsat at the given bias (zero below threshold)."""
    overdrive = vgs - (p.V_th0 - r.eta_dibl * vds)
    if overdrive <= 0:
        return 0.0
    return r.k_vdsat * overdrive ** (c.alpha / 2)


def _surrogate_saturation(p, c, r, vgs, vds):
    overdrive = vgs - (p.V_th0 - r.eta_dibl * vds)
    if overdrive <= 0:
        return 0.0, 0.0
    u_eff = p.u0 / (1.0 + r.theta * overdrive)
    cox = c.eps0 * c.eps_r / p.t_ox
    w_eff = p.W - r.delta_W
    isat = 0.5 * u_eff * cox * (w_eff / p.L) * overdrive**c.alpha * (1.0 + c.lam * vds)
    return isat, r.k_vdsat * overdrive ** (c.alpha / 2)


def id_reference(p: DeviceParams, c: PhysicalConstants, r: ReferenceModelConfig,
                 vgs: float, vds: float) -> float:
    """Surrogate I-V used as the reference ("simulated") transistor.

    Saturation uses the alpha-power form with W - delta_W, a degraded
    mobility ``u0 / (1 + theta * Vov)`` and a DIBL-lowered threshold
    ``V_th0 - eta_dibl * vds``. Below ``V_dsat = k_vdsat * Vov**(alpha/2)``
    the current follows ``I_sat * x * (2 - x)`` with ``x = vds / V_dsat``.
    """
    _check_bias(vgs, vds)
    _check_operating_point(p, c)
    if not r.delta_W < p.W:
        raise DeviceError(f"delta_W={r.delta_W!r} must be smaller than W={p.W!r}")
    isat, vdsat = _surrogate_saturation(p, c, r, vgs, vds)
    if isat == 0.0:
        return 0.0
    if vds >= vdsat:
        return isat
    x = vds / vdsat
    return isat * x * (2.0 - x)


def idsat_reference(p: DeviceParams, c: PhysicalConstants, r: ReferenceModelConfig) -> float:
    """Reference saturation current at ``vgs = vds = VDD``."""
    return id_reference(p, c, r, c.VDD, c.VDD)


def reference_current_fn(p: DeviceParams, c: PhysicalConstants, r: ReferenceModelConfig):
    """Return ``f(vgs, vds)`` equal to :func:`id_reference`, validated once.

    The transient integrator calls the device thousands of times per run,
    so the per-call checks are hoisted out.
    """
    _check_operating_point(p, c)
    if not r.delta_W < p.W:
        raise DeviceError(f"delta_W={r.delta_W!r} must be smaller than W={p.W!r}")
    gain = 0.5 * p.u0 * (c.eps0 * c.eps_r / p.t_ox) * ((p.W - r.delta_W) / p.L)
    vth0, eta, theta = p.V_th0, r.eta_dibl, r.theta
    alpha, half_alpha, lam, kv = c.alpha, c.alpha / 2, c.lam, r.k_vdsat

    def current(vgs: float, vds: float) -> float:
        if vds < 0.0:
            vds = 0.0
        overdrive = vgs - (vth0 - eta * vds)
        if overdrive <= 0.0:
            return 0.0
        isat = gain / (1.0 + theta * overdrive) * overdrive**alpha * (1.0 + lam * vds)
        vdsat = kv * overdrive**half_alpha
        if vds >= vdsat:
            return isat
        x = vds / vdsat
        return isat * x * (2.0 - x)

    return current
