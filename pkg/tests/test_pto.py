"""Control-law arithmetic, saturation, and the discrete state machine."""

import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from srwec.errors import ValidationError
from srwec.pto import Limits, PtoMode, braking_trigger, pto_force, pto_power, saturate

BIG = Limits(f_max=1e9, p_max=1e12)
RATED = Limits(f_max=1000.0, p_max=3000.0)


def test_limits_validation():
    with pytest.raises(ValidationError):
        Limits(f_max=0.0, p_max=100.0)
    with pytest.raises(ValidationError):
        Limits(f_max=100.0, p_max=-1.0)


def test_mode_validation():
    with pytest.raises(ValidationError):
        PtoMode(kind="latched", limits=BIG)
    with pytest.raises(ValidationError):
        PtoMode.passive(-5.0, BIG)
    with pytest.raises(ValidationError):
        PtoMode.discrete(BIG, v_stop=0.0)
    with pytest.raises(ValidationError):
        PtoMode.discrete(BIG, safety=0.5)


def test_passive_law():
    f, mode = pto_force(PtoMode.passive(500.0, BIG), 0.0, 1.0, 0.0, 30.0, 1.0)
    assert f == -500.0
    assert pto_power(f, 1.0) == 500.0


def test_passive_scaling():
    f1, _ = pto_force(PtoMode.passive(300.0, BIG), 0.0, 0.7, 0.0, 30.0, 1.0)
    f2, _ = pto_force(PtoMode.passive(600.0, BIG), 0.0, 0.7, 0.0, 30.0, 1.0)
    assert f2 == 2.0 * f1


def test_reactive_law():
    mode = PtoMode.reactive(2000.0, 400.0, BIG)
    f, _ = pto_force(mode, 0.1, 0.5, 0.0, 30.0, 1.0)
    assert f == -400.0


def test_reactive_motoring_power_is_negative():
    mode = PtoMode.reactive(2000.0, 0.0, BIG)
    f, _ = pto_force(mode, 0.1, -0.5, 0.0, 30.0, 1.0)
    assert f == -200.0
    assert pto_power(f, -0.5) == -100.0


def test_saturate_force_branch():
    assert saturate(5000.0, 0.1, RATED) == 1000.0
    assert saturate(-5000.0, 0.1, RATED) == -1000.0


def test_saturate_power_branch():
    f = saturate(1000.0, 4.0, RATED)
    assert f == pytest.approx(750.0)
    assert abs(f * 4.0) <= RATED.p_max + 1e-9


def test_discrete_on_force_levels():
    on = replace(PtoMode.discrete(RATED), on=True)
    f, _ = pto_force(on, 0.0, 0.5, 0.0, 30.0, 1.0)
    assert f == -1000.0  # force-limited: p_max/|v| = 6000 N available
    f, _ = pto_force(on, 0.0, 4.0, 0.0, 30.0, 1.0)
    assert f == -750.0  # power-limited
    assert pto_power(f, 4.0) == pytest.approx(3000.0)


def test_discrete_off_emits_zero():
    off = PtoMode.discrete(RATED)
    f, mode = pto_force(off, 0.0, 0.5, 0.1, 30.0, 1.0)
    assert f == 0.0
    assert not mode.on  # downhill mid-tube: nothing to do


class TestBrakingTrigger:
    def test_hand_example(self):
        # stopping distance 30*4/2000 = 0.06 m vs 0.05 m remaining
        assert braking_trigger(0.45, 2.0, 0.0, 30.0, 1.0, RATED, 1.0)
        assert not braking_trigger(0.40, 2.0, 0.0, 30.0, 1.0, RATED, 1.0)

    def test_zero_velocity(self):
        assert not braking_trigger(0.49, 0.0, 0.0, 30.0, 1.0, RATED, 1.0)

    def test_moving_away_from_near_end(self):
        assert not braking_trigger(0.45, -2.0, 0.0, 30.0, 1.0, RATED, 1.0)

    def test_gravity_worst_case_shrinks_available_force(self):
        # at 0.7 rad the same speed must trigger earlier
        steep = braking_trigger(0.40, 1.0, 0.7, 120.0, 1.0, RATED, 1.0)
        flat = braking_trigger(0.40, 1.0, 0.0, 120.0, 1.0, RATED, 1.0)
        assert steep and not flat

    def test_denominator_floor(self):
        # tilt force above f_max would make the denominator negative
        assert braking_trigger(0.2, 1.0, 1.2, 2000.0, 1.0, RATED, 1.0)


class TestDiscreteStateMachine:
    def test_turns_on_at_braking_trigger(self):
        mode = PtoMode.discrete(RATED)
        f, mode = pto_force(mode, 0.45, 2.0, 0.0, 30.0, 1.0)
        assert mode.on
        assert f == -RATED.f_max  # p_max/2 = 1500 > f_max

    def test_turns_on_moving_uphill(self):
        mode = PtoMode.discrete(RATED)
        f, mode = pto_force(mode, 0.0, 0.5, -0.3, 30.0, 1.0)
        assert mode.on
        assert f * 0.5 < 0

    def test_never_on_below_v_stop(self):
        mode = PtoMode.discrete(RATED)
        f, mode = pto_force(mode, 0.499, 0.01, -0.3, 30.0, 1.0)
        assert not mode.on
        assert f == 0.0

    def test_turns_off_when_stopped(self):
        mode = replace(PtoMode.discrete(RATED), on=True)
        f, mode = pto_force(mode, 0.2, 0.001, 0.3, 30.0, 1.0)
        assert not mode.on
        assert f == 0.0

    def test_on_force_opposes_motion(self):
        on = replace(PtoMode.discrete(RATED), on=True)
        for v in (-3.0, -0.5, 0.5, 3.0):
            f, _ = pto_force(on, 0.0, v, 0.2, 30.0, 1.0)
            assert f * v < 0


@settings(max_examples=500, deadline=None)
@given(
    kind=st.sampled_from(["passive", "reactive", "discrete"]),
    x=st.floats(-0.6, 0.6),
    v=st.floats(-5.0, 5.0),
    theta=st.floats(-0.8, 0.8),
    c=st.floats(0.0, 5e4),
    k=st.floats(0.0, 5e4),
    on=st.booleans(),
)
def test_fuzz_saturation_invariants(kind, x, v, theta, c, k, on):
    if kind == "passive":
        mode = PtoMode.passive(c, RATED)
    elif kind == "reactive":
        mode = PtoMode.reactive(k, c, RATED)
    else:
        mode = replace(PtoMode.discrete(RATED), on=on)
    f, mode2 = pto_force(mode, x, v, theta, 30.0, 1.0)
    assert abs(f) <= RATED.f_max
    assert abs(f * v) <= RATED.p_max + 1e-9
    if kind == "passive":
        assert pto_power(f, v) >= 0.0
    if kind == "discrete":
        if mode2.on:
            assert f * v <= 0.0
        else:
            assert f == 0.0
        if abs(v) < mode.v_stop:
            assert not mode2.on
