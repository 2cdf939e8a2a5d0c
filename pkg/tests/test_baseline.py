import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from swervewear.baseline import (BodyTwist, KinematicController, KinematicGains, desired_twist, icr,
                                 inverse_kinematics, kinematic_controller_step)
from swervewear.config import default_config
from swervewear.core import VehicleState
from swervewear.tire import wheel_kinematics

CFG = default_config()
twists = st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.floats(-1, 1))


def test_pure_translation():
    delta, rate = inverse_kinematics(BodyTwist(1, 0, 0), CFG.vehicle, CFG.tire)
    assert np.all(delta == 0.0)
    assert np.allclose(rate, 2.0)


def test_pure_rotation_front_left_wheel():
    delta, rate = inverse_kinematics(BodyTwist(0, 0, 1), CFG.vehicle, CFG.tire)
    assert delta[0, 0] == pytest.approx(math.atan2(3, -1), abs=1e-12)
    assert rate[0, 0] == pytest.approx(math.sqrt(10) / 0.5, abs=1e-12)


def test_zero_twist_holds_angles():
    prev = np.array([[0.1, 0.2], [-0.3, 0.4]])
    delta, rate = inverse_kinematics(BodyTwist(0, 0, 0), CFG.vehicle, CFG.tire, previous=prev)
    assert np.array_equal(delta, prev)
    assert np.all(rate == 0.0)


def test_backwards_motion_flips_wheels_instead_of_reversing():
    # the drive-rate floor is zero, so wheels turn around rather than spin backwards
    delta, rate = inverse_kinematics(BodyTwist(-1, 0, 0), CFG.vehicle, CFG.tire)
    assert np.allclose(np.abs(delta), math.pi) and np.allclose(rate, 2.0)


@given(twists)
def test_icr_perpendicular_to_wheel_velocity(t):
    twist = BodyTwist(*t)
    if abs(twist.omega) < 1e-3:
        return
    center = icr(twist)
    delta, _ = inverse_kinematics(twist, CFG.vehicle, CFG.tire)
    for i, x in enumerate(CFG.vehicle.wheel_x):
        for j, y in enumerate(CFG.vehicle.wheel_y):
            radius = np.array([x, y]) - center
            heading = np.array([math.cos(delta[i, j]), math.sin(delta[i, j])])
            scale = max(1.0, np.linalg.norm(radius))
            assert abs(radius @ heading) / scale < 1e-9


def test_translation_has_no_icr():
    assert icr(BodyTwist(1, 2, 0)) is None


@given(twists)
def test_commanded_wheels_do_not_slip(t):
    twist = BodyTwist(*t)
    delta, rate = inverse_kinematics(twist, CFG.vehicle, CFG.tire)
    # put the vehicle in the commanded motion with the commanded steering
    state = VehicleState(pose=(0, 0, 0.7), velocity=(*(np.array([[math.cos(0.7), -math.sin(0.7)],
                                                                  [math.sin(0.7), math.cos(0.7)]])
                                                        @ [twist.vx, twist.vy]), twist.omega),
                         steer_angles=delta)
    for i in range(2):
        for j in range(2):
            kin = wheel_kinematics(state, (i, j), rate[i, j], CFG.vehicle, CFG.tire)
            assert abs(kin.slip_angle) < 1e-9
            if not kin.low_speed:
                assert abs(kin.slip_ratio) < 1e-9


def test_zero_error_gives_zero_control():
    state = VehicleState.at_rest(2)
    u = kinematic_controller_step(state, (0, 0, 0), KinematicGains(), CFG.vehicle, CFG.tire, CFG.limits,
                                  0.01, reference_velocity=(0, 0, 0))
    assert np.all(u.drive_rates == 0.0) and np.all(u.steer_rates == 0.0)


def test_forward_offset_drives_symmetrically():
    state = VehicleState.at_rest(2)
    u = kinematic_controller_step(state, (0.5, 0, 0), KinematicGains(), CFG.vehicle, CFG.tire, CFG.limits, 0.01)
    assert np.all(u.drive_rates > 0)
    assert np.allclose(u.drive_rates, u.drive_rates[0, 0])
    assert np.all(u.steer_rates == 0.0)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-1, 1))
def test_controls_within_limits(x, y, phi):
    state = VehicleState.rolling(2, 3.0, heading=0.2, wheel_radius=0.5)
    u = kinematic_controller_step(state, (x, y, phi), KinematicGains(), CFG.vehicle, CFG.tire, CFG.limits, 0.01)
    u2, changed = u.clamped(CFG.limits)
    assert not changed


def test_desired_twist_rotates_into_body_frame():
    state = VehicleState(pose=(0, 0, math.pi / 2), velocity=(0, 0, 0), steer_angles=np.zeros((2, 2)))
    twist = desired_twist(state, (1.0, 0.0, math.pi / 2), KinematicGains())
    assert twist.vx == pytest.approx(0.0, abs=1e-12)
    assert twist.vy == pytest.approx(-1.0)
    assert twist.omega == 0.0


def test_twist_saturated_to_drive_limit():
    state = VehicleState.at_rest(2)
    u = kinematic_controller_step(state, (100.0, 0, 0), KinematicGains(), CFG.vehicle, CFG.tire, CFG.limits, 0.01)
    assert np.allclose(u.drive_rates, CFG.limits.drive_rate[1])


def test_controller_interface():
    ctrl = KinematicController(CFG.vehicle, CFG.tire, CFG.limits)
    state = VehicleState.rolling(2, 2.0, wheel_radius=0.5)
    window = np.array([[0.02, 0.0, 0.0], [0.04, 0.0, 0.0]])
    u = ctrl.step(state, window)
    assert u.drive_rates.shape == (2, 2)
    assert ctrl.name == "kinematic"


def test_nonfinite_twist_rejected():
    with pytest.raises(ValueError):
        BodyTwist(math.inf, 0, 0)
