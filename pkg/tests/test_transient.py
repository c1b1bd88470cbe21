import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invdelay.device import idsat_reference, reference_current_fn
from invdelay.transient import (
    STEP,
    InputRamp,
    NonDischarging,
    StepLimit,
    average_delay,
    constant_current,
    simulate_discharge,
    simulate_tplh_mirrored,
    tphl_closed_form,
)

from oracles import euler_tphl

FF = 1e-15
TOL = 1e-4
# explicit Euler, dt = 1 fs, reference device, W = 1 um, C_L = 10 fF, step input
EULER_TPHL_10FF = 2.572020064625135e-12


def test_closed_form():
    assert tphl_closed_form(0.0, 1.2, 1e-4) == 0.0
    assert tphl_closed_form(10 * FF, 1.2, 100e-6) == pytest.approx(60e-12, rel=1e-15)
    assert tphl_closed_form(10 * FF, 1.2, 50e-6) == pytest.approx(2 * 60e-12, rel=1e-15)
    with pytest.raises(ValueError):
        tphl_closed_form(10 * FF, 1.2, 0.0)


def test_average_delay():
    assert average_delay(10e-12, 10e-12) == 10e-12
    assert average_delay(0.0, 7e-12) == 3.5e-12
    assert average_delay(13.4e-12, 13.4e-12) == 13.4e-12
    with pytest.raises(ValueError):
        average_delay(-1.0, 1.0)


@pytest.mark.parametrize("C_L", [1 * FF, 10 * FF, 100 * FF, 500 * FF])
def test_constant_current_matches_closed_form(ref, consts, surrogate, C_L):
    res = simulate_discharge(ref, consts, surrogate, C_L, STEP, tol=TOL,
                             device=constant_current(1e-3))
    assert res.t_phl == pytest.approx(tphl_closed_form(C_L, 1.2, 1e-3), rel=TOL)


def test_doubling_load_doubles_delay(ref, consts, surrogate):
    a = simulate_discharge(ref, consts, surrogate, 20 * FF, STEP, tol=TOL)
    b = simulate_discharge(ref, consts, surrogate, 40 * FF, STEP, tol=TOL)
    assert b.t_phl == pytest.approx(2 * a.t_phl, rel=2 * TOL)


def test_euler_oracle(ref, consts, surrogate):
    res = simulate_discharge(ref, consts, surrogate, 10 * FF, STEP, tol=TOL)
    assert res.t_phl == pytest.approx(EULER_TPHL_10FF, rel=5e-3)


def test_euler_oracle_recomputed(ref, consts, surrogate):
    f = reference_current_fn(ref, consts, surrogate)
    assert euler_tphl(f, 10 * FF, 1.2) == pytest.approx(EULER_TPHL_10FF, rel=1e-12)


def test_result_invariants(ref, consts, surrogate):
    res = simulate_discharge(ref, consts, surrogate, 50 * FF, InputRamp(10e-12), tol=TOL)
    assert np.all(np.diff(res.t) > 0)
    assert np.all(np.diff(res.v_out) <= 0)
    assert res.v_out[-1] <= 0.6 < res.v_out[-2]
    assert res.t_in50 == 5e-12
    assert res.t_phl == res.t_out50 - res.t_in50 > 0
    assert len(res.samples) == len(res.t)


def test_ramp_input_follows_ramp(ref, consts, surrogate):
    res = simulate_discharge(ref, consts, surrogate, 100 * FF, InputRamp(10e-12, 2e-12))
    assert res.v_in[0] == 0.0
    k = np.searchsorted(res.t, 7e-12)
    assert res.v_in[k] == pytest.approx(1.2 * (res.t[k] - 2e-12) / 10e-12)
    assert res.v_in[-1] == 1.2


def test_delay_increases_with_load(ref, consts, surrogate):
    delays = [simulate_discharge(ref, consts, surrogate, C * FF).t_phl
              for C in (1, 5, 10, 20, 50, 100, 200, 500)]
    assert all(b > a for a, b in zip(delays, delays[1:]))


@pytest.mark.parametrize("C", [50, 100, 200, 500])
def test_closed_form_envelope(ref, consts, surrogate, C):
    sim = simulate_discharge(ref, consts, surrogate, C * FF, STEP).t_phl
    closed = tphl_closed_form(C * FF, 1.2, idsat_reference(ref, consts, surrogate))
    assert abs(sim / closed - 1) < 0.10


def _charge_error(res, C_L):
    delivered = np.sum((res.i_dn[1:] + res.i_dn[:-1]) / 2 * np.diff(res.t))
    removed = C_L * (1.2 - res.v_out[-1])
    return abs(delivered / removed - 1)


@settings(max_examples=20, deadline=None)
@given(st.floats(1.0, 500.0), st.floats(0.0, 20e-12), st.floats(1e-6, 5e-6))
def test_charge_conservation(C, t_rise, W):
    from invdelay.device import DeviceParams, PhysicalConstants, ReferenceModelConfig

    p = DeviceParams(L=90e-9, W=W, t_ox=3e-9, V_th0=0.4, u0=550e-4)
    res = simulate_discharge(p, PhysicalConstants(), ReferenceModelConfig(), C * FF,
                             InputRamp(t_rise))
    assert _charge_error(res, C * FF) < 0.01


@settings(max_examples=15, deadline=None)
@given(st.floats(2.0, 300.0), st.sampled_from([0.0, 5e-12]), st.floats(0.05e-12, 2e-12))
def test_halving_dt_max_is_stable(C, t_rise, dt_max):
    from invdelay.device import DeviceParams, PhysicalConstants, ReferenceModelConfig

    p = DeviceParams(L=90e-9, W=1e-6, t_ox=3e-9, V_th0=0.4, u0=550e-4)
    c, r = PhysicalConstants(), ReferenceModelConfig()
    a = simulate_discharge(p, c, r, C * FF, InputRamp(t_rise), dt_max=dt_max, tol=TOL)
    b = simulate_discharge(p, c, r, C * FF, InputRamp(t_rise), dt_max=dt_max / 2, tol=TOL)
    scale = max(abs(b.t_phl), 1e-3 * b.t_out50)
    assert abs(a.t_phl - b.t_phl) <= TOL * scale


def test_non_discharging(ref, consts, surrogate):
    with pytest.raises(NonDischarging):
        simulate_discharge(ref, consts, surrogate, 10 * FF, device=constant_current(0.0))


def test_step_limit(ref, consts, surrogate):
    with pytest.raises(StepLimit):
        simulate_discharge(ref, consts, surrogate, 100 * FF, max_steps=5)


def test_bad_arguments(ref, consts, surrogate):
    with pytest.raises(ValueError):
        simulate_discharge(ref, consts, surrogate, 0.0)
    with pytest.raises(ValueError):
        simulate_discharge(ref, consts, surrogate, 10 * FF, tol=0.1)


def test_mirrored_equals_discharge(ref, consts, surrogate):
    ramp = InputRamp(5e-12)
    down = simulate_discharge(ref, consts, surrogate, 30 * FF, ramp)
    up = simulate_tplh_mirrored(ref, consts, surrogate, 30 * FF, ramp)
    assert up.t_phl == pytest.approx(down.t_phl, rel=TOL)
    assert up.v_out[0] == 0.0
    assert np.all(np.diff(up.v_out) >= 0)
    assert up.v_out[-1] >= 0.6 > up.v_out[-2]
    assert up.v_in[0] == 1.2 and up.v_in[-1] == 0.0


def test_mirrored_constant_current_and_scaling(ref, consts, surrogate):
    for C in (10 * FF, 20 * FF):
        res = simulate_tplh_mirrored(ref, consts, surrogate, C, STEP,
                                     device=constant_current(2e-3))
        assert res.t_phl == pytest.approx(tphl_closed_form(C, 1.2, 2e-3), rel=TOL)
    a = simulate_tplh_mirrored(ref, consts, surrogate, 15 * FF, STEP)
    b = simulate_tplh_mirrored(ref, consts, surrogate, 30 * FF, STEP)
    assert b.t_phl == pytest.approx(2 * a.t_phl, rel=2 * TOL)


def test_csv_export(ref, consts, surrogate, tmp_path):
    res = simulate_discharge(ref, consts, surrogate, 10 * FF)
    path = res.to_csv(tmp_path / "trace.csv")
    with path.open() as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["t_s", "vin_V", "vout_V", "idn_A"]
    assert len(rows) == len(res.t) + 1
    assert float(rows[-1][2]) == res.v_out[-1]
