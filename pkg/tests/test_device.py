import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invdelay.device import (
    DeviceError,
    DeviceParams,
    PhysicalConstants,
    ReferenceModelConfig,
    id_reference,
    idsat_analytical,
    idsat_reference,
    reference_current_fn,
    saturation_voltage,
)

# Hand evaluation of both current expressions at the reference device,
# W = 1 um, alpha = 1.3, lambda = 0.1/V, vgs = vds = 1.2 V.
IDSAT_ANALYTICAL_REF = 0.002947189492187915
IDSAT_REFERENCE_REF = 0.0024450178147728254

NO_EFFECTS = ReferenceModelConfig(delta_W=0.0, theta=0.0, eta_dibl=0.0)

voltages = st.floats(0.0, 1.2)
params = st.builds(
    DeviceParams,
    L=st.floats(60e-9, 120e-9),
    W=st.floats(0.5e-6, 6e-6),
    t_ox=st.floats(1.2e-9, 4e-9),
    V_th0=st.floats(0.15, 0.6),
    u0=st.floats(300e-4, 700e-4),
)


def test_analytical_cutoff(ref, consts):
    assert idsat_analytical(ref, consts, ref.V_th0, 1.2) == 0.0
    assert idsat_analytical(ref, consts, 0.2, 1.2) == 0.0


def test_analytical_linear_in_width(ref, consts):
    one = idsat_analytical(ref, consts, 1.2, 1.2)
    two = idsat_analytical(ref.replace(W=2e-6), consts, 1.2, 1.2)
    assert two == pytest.approx(2 * one, rel=1e-15)


def test_analytical_reference_value(ref, consts):
    assert idsat_analytical(ref, consts, 1.2, 1.2) == pytest.approx(IDSAT_ANALYTICAL_REF, rel=1e-12)


def test_analytical_inverse_in_tox(ref, consts):
    base = idsat_analytical(ref, consts, 1.2, 1.2)
    thin = idsat_analytical(ref.replace(t_ox=1.5e-9), consts, 1.2, 1.2)
    assert thin == pytest.approx(2 * base, rel=1e-14)


@pytest.mark.parametrize("bad", [dict(L=0.0), dict(W=-1e-6), dict(t_ox=0.0), dict(V_th0=-0.1),
                                 dict(u0=0.0)])
def test_params_must_be_positive(bad):
    values = dict(L=90e-9, W=1e-6, t_ox=3e-9, V_th0=0.4, u0=550e-4)
    values.update(bad)
    with pytest.raises(DeviceError):
        DeviceParams(**values)


def test_threshold_above_supply_is_rejected(ref, consts, surrogate):
    high = ref.replace(V_th0=1.3)
    with pytest.raises(DeviceError):
        idsat_analytical(high, consts, 1.2, 1.2)
    with pytest.raises(DeviceError):
        idsat_reference(high, consts, surrogate)


@pytest.mark.parametrize("kw", [dict(alpha=0.9), dict(alpha=2.1), dict(lam=-0.1), dict(VDD=0.0)])
def test_constants_invariants(kw):
    with pytest.raises(DeviceError):
        PhysicalConstants(**kw)


def test_negative_bias_rejected(ref, consts, surrogate):
    with pytest.raises(DeviceError):
        idsat_analytical(ref, consts, -0.1, 1.0)
    with pytest.raises(DeviceError):
        id_reference(ref, consts, surrogate, 1.0, -0.1)


def test_width_reduction_must_fit(ref, consts):
    with pytest.raises(DeviceError):
        idsat_reference(ref, consts, ReferenceModelConfig(delta_W=1e-6))


def test_reference_cutoff(ref, consts, surrogate):
    # DIBL lowers the threshold to 0.4 - 0.05 * vds
    vds = 0.6
    assert id_reference(ref, consts, surrogate, 0.4 - 0.05 * vds, vds) == 0.0
    assert id_reference(ref, consts, surrogate, 0.1, vds) == 0.0


def test_reference_continuous_at_vdsat(ref, consts, surrogate):
    vgs = 1.0
    # fixed point: V_dsat depends on vds through DIBL
    vds = 0.5
    for _ in range(100):
        vds = saturation_voltage(ref, consts, surrogate, vgs, vds)
    sat = id_reference(ref, consts, surrogate, vgs, vds)
    below = id_reference(ref, consts, surrogate, vgs, vds * (1 - 1e-12))
    assert below == pytest.approx(sat, rel=1e-9)


def test_reference_width_nonlinearity(ref, consts, surrogate):
    one = idsat_reference(ref, consts, surrogate)
    two = idsat_reference(ref.replace(W=2e-6), consts, surrogate)
    assert two / one == pytest.approx((2 - 0.05) / (1 - 0.05), rel=1e-12)
    assert two / one == pytest.approx(2.0526315789473686, rel=1e-12)
    assert abs(two / one - 2.0) > 0.05


def test_idsat_reference_definition(ref, consts, surrogate):
    assert idsat_reference(ref, consts, surrogate) == id_reference(ref, consts, surrogate, 1.2, 1.2)


def test_idsat_reference_golden(ref, consts, surrogate):
    assert idsat_reference(ref, consts, surrogate) == pytest.approx(IDSAT_REFERENCE_REF, rel=1e-12)


def test_idsat_reference_decreases_with_tox(ref, consts, surrogate):
    values = [idsat_reference(ref.replace(t_ox=t), consts, surrogate)
              for t in (1.6e-9, 2e-9, 2.5e-9, 3e-9)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_surrogate_without_effects_matches_analytical(ref, consts):
    for vgs in (0.6, 0.9, 1.2):
        assert id_reference(ref, consts, NO_EFFECTS, vgs, 1.2) == pytest.approx(
            idsat_analytical(ref, consts, vgs, 1.2), rel=1e-14)


@given(params, voltages, voltages)
def test_fast_current_fn_matches(p, vgs, vds):
    c, r = PhysicalConstants(), ReferenceModelConfig()
    f = reference_current_fn(p, c, r)
    assert f(vgs, vds) == pytest.approx(id_reference(p, c, r, vgs, vds), rel=1e-13, abs=1e-30)


@given(params, voltages, st.floats(0.0, 1.0))
def test_monotone_in_vgs(p, vds, frac):
    c, r = PhysicalConstants(), ReferenceModelConfig()
    lo = frac * 1.2
    hi = min(lo + 0.05, 1.2)
    assert id_reference(p, c, r, hi, vds) >= id_reference(p, c, r, lo, vds)
    assert idsat_analytical(p, c, hi, vds) >= idsat_analytical(p, c, lo, vds)


@settings(max_examples=60)
@given(params, voltages)
def test_reference_monotone_in_vds(p, vgs):
    c, r = PhysicalConstants(), ReferenceModelConfig()
    grid = [k * 0.01 for k in range(121)]
    currents = [id_reference(p, c, r, vgs, v) for v in grid]
    assert all(b >= a for a, b in zip(currents, currents[1:]))


@given(params, st.floats(0.01, 0.3))
def test_currents_decrease_with_threshold(p, step):
    c, r = PhysicalConstants(), ReferenceModelConfig()
    higher = p.replace(V_th0=min(p.V_th0 + step, 1.1))
    assert idsat_analytical(higher, c, 1.2, 1.2) < idsat_analytical(p, c, 1.2, 1.2)
    assert idsat_reference(higher, c, r) < idsat_reference(p, c, r)


@given(params, st.floats(1.1, 4.0))
def test_width_scaling(p, k):
    c, r = PhysicalConstants(), ReferenceModelConfig()
    wide = p.replace(W=p.W * k)
    assert idsat_analytical(wide, c, 1.2, 1.2) == pytest.approx(
        k * idsat_analytical(p, c, 1.2, 1.2), rel=1e-12)
    ratio = idsat_reference(wide, c, r) / idsat_reference(p, c, r)
    expected = (k * p.W - r.delta_W) / (p.W - r.delta_W)
    assert ratio == pytest.approx(expected, rel=1e-12)
    assert ratio > k
    assert math.isfinite(ratio)
