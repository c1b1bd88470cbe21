"""Analytical CMOS inverter delay modeling from process parameters and load."""

from invdelay.device import (
    DeviceError,
    DeviceParams,
    PhysicalConstants,
    ReferenceModelConfig,
    id_reference,
    idsat_analytical,
    idsat_reference,
)
from invdelay.fitting import (
    GoodnessOfFit,
    GridSurface,
    Polynomial,
    gof,
    poly_eval,
    polyfit,
    surface_build,
    surface_eval,
)
from invdelay.transient import (
    InputRamp,
    TransientResult,
    average_delay,
    simulate_discharge,
    simulate_tplh_mirrored,
    tphl_closed_form,
)
from invdelay.current_model import (
    CurrentModel,
    RatioFit,
    SweepSpec,
    build_current_model,
    eval_current_model,
    fit_parameter,
    run_parameter_sweep,
)
from invdelay.delay_model import DelayModel, build_delay_model, eval_delay_model

__version__ = "0.1.0"
