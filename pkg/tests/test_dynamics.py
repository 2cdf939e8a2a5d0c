import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swervewear.baseline import KinematicController
from swervewear.core import ControlVector, VehicleState, rotation2d
from swervewear.dynamics import (PlantSettings, body_acceleration, pack_state, plant_step, unpack_state,
                                 wheel_arrays)
from swervewear.harness.scenarios import make_scenario
from swervewear.tire import wheel_forces


def random_state(rng, n=2):
    return VehicleState(pose=(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-3, 3)),
                        velocity=(rng.uniform(-6, 6), rng.uniform(-6, 6), rng.uniform(-0.5, 0.5)),
                        steer_angles=rng.uniform(-0.6, 0.6, (n, 2)))


def per_wheel_oracle(state, drive, vehicle, tire):
    """Brute-force force and moment bookkeeping, one wheel at a time."""
    fx = fy = moment = 0.0
    for i in range(vehicle.axle_count):
        for j in range(2):
            f = wheel_forces(state, (i, j), drive[i, j], vehicle, tire)
            fb = rotation2d(state.steer_angles[i, j]) @ np.array([f.fx_wheel, f.fy_wheel])
            fx += fb[0]
            fy += fb[1]
            moment += vehicle.wheel_x[i] * fb[1] - vehicle.wheel_y[j] * fb[0]
    return np.array([fx, fy]), moment


def test_rolling_straight_has_no_acceleration(cfg):
    state = VehicleState.rolling(2, 5.0, wheel_radius=0.5)
    acc = body_acceleration(state, np.full((2, 2), 10.0), cfg.vehicle, cfg.tire).accel_global
    assert np.allclose(acc, 0.0, atol=1e-12)


def test_equal_overspeed_accelerates_forward_only(cfg):
    state = VehicleState.rolling(2, 5.0, heading=0.4, wheel_radius=0.5)
    acc = body_acceleration(state, np.full((2, 2), 11.0), cfg.vehicle, cfg.tire).accel_global
    body = rotation2d(-0.4) @ acc[:2]
    assert body[0] > 0
    assert abs(body[1]) < 1e-9 and abs(acc[2]) < 1e-9


def test_moment_and_force_match_per_wheel_oracle(cfg, rng):
    for _ in range(20):
        state = random_state(rng)
        drive = rng.uniform(0, 30, (2, 2))
        acc = body_acceleration(state, drive, cfg.vehicle, cfg.tire).accel_global
        force, moment = per_wheel_oracle(state, drive, cfg.vehicle, cfg.tire)
        assert acc[2] == pytest.approx(moment / cfg.vehicle.yaw_inertia, rel=1e-10, abs=1e-10)
        # frame consistency: back-rotating the global output recovers the body sums
        body = rotation2d(-state.pose[2]) @ acc[:2]
        assert np.allclose(body, force / cfg.vehicle.mass, rtol=0, atol=1e-10)


def test_three_axle_vehicle(cfg, rng):
    vehicle = replace(cfg.vehicle, wheel_x=(3.0, 0.0, -3.0))
    state = random_state(rng, 3)
    drive = rng.uniform(0, 30, (3, 2))
    acc = body_acceleration(state, drive, vehicle, cfg.tire).accel_global
    _, moment = per_wheel_oracle(state, drive, vehicle, cfg.tire)
    assert acc[2] == pytest.approx(moment / vehicle.yaw_inertia, rel=1e-10, abs=1e-10)


def test_zero_control_from_rest_is_identity(cfg):
    state = VehicleState.at_rest(2)
    nxt, wear, clamped = plant_step(state, ControlVector.zeros(2), cfg.plant, cfg.vehicle, cfg.tire, cfg.limits)
    assert np.array_equal(nxt.pose, state.pose)
    assert np.array_equal(nxt.velocity, state.velocity)
    assert np.array_equal(nxt.steer_angles, state.steer_angles)
    assert wear.as_tuple() == (0.0, 0.0, 0.0)
    assert not clamped


def test_straight_line_motion(cfg):
    v = 5.0
    state = VehicleState.rolling(2, v, wheel_radius=0.5)
    control = ControlVector(np.full((2, 2), v / 0.5), np.zeros((2, 2)))
    for _ in range(100):
        state, _, _ = plant_step(state, control, cfg.plant, cfg.vehicle, cfg.tire, cfg.limits)
    assert state.pose[0] == pytest.approx(v * 1.0, rel=1e-3)
    assert abs(state.pose[1]) < 1e-6 and abs(state.pose[2]) < 1e-6


def case_one_controls(cfg, seconds=1.0):
    """Commands a kinematic tracker issues over the opening of the winding-road case."""
    sc = make_scenario("curve", cfg.vehicle, cfg.tire, cfg.limits, duration=seconds)
    ctrl = KinematicController(cfg.vehicle, cfg.tire, cfg.limits, cfg.baseline, dt=cfg.plant.dt)
    state, controls = sc.initial_state, []
    for k in range(sc.steps):
        u = ctrl.step(state, sc.reference.poses[k + 1:k + 3])
        controls.append(u)
        state, _, _ = plant_step(state, u, cfg.plant, cfg.vehicle, cfg.tire, cfg.limits)
    return sc.initial_state, controls


def replay(cfg, state, controls, substeps):
    plant = replace(cfg.plant, substeps=substeps)
    for u in controls:
        state, _, _ = plant_step(state, u, plant, cfg.vehicle, cfg.tire, cfg.limits)
    return pack_state(state)


def test_substep_convergence_on_winding_road(cfg):
    state, controls = case_one_controls(cfg)
    y4, y8 = replay(cfg, state, controls, 4), replay(cfg, state, controls, 8)
    assert np.linalg.norm(y8 - y4) / np.linalg.norm(y8) < 1e-6


def test_finite_difference_matches_acceleration(cfg, rng):
    state = random_state(rng)
    drive = rng.uniform(5, 15, (2, 2))
    control = ControlVector(drive, np.zeros((2, 2)))
    acc = body_acceleration(state, drive, cfg.vehicle, cfg.tire).accel_global
    errors = []
    for h in (1e-2, 1e-3, 1e-4):
        plant = PlantSettings(dt=h, substeps=1)
        nxt, _, _ = plant_step(state, control, plant, cfg.vehicle, cfg.tire, cfg.limits)
        errors.append(np.linalg.norm((nxt.velocity - state.velocity) / h - acc))
    # first-order convergence: each tenfold reduction of h cuts the error about tenfold
    assert errors[1] < 0.2 * errors[0]
    assert errors[2] < 0.2 * errors[1]


def test_plant_is_deterministic(cfg, rng):
    state = random_state(rng)
    control = ControlVector(rng.uniform(0, 30, (2, 2)), rng.uniform(-1, 1, (2, 2)))
    a = plant_step(state, control, cfg.plant, cfg.vehicle, cfg.tire, cfg.limits)
    b = plant_step(state, control, cfg.plant, cfg.vehicle, cfg.tire, cfg.limits)
    assert np.array_equal(pack_state(a[0]), pack_state(b[0]))
    assert a[1] == b[1]


def test_control_clamped_and_flagged(cfg):
    state = VehicleState.rolling(2, 5.0, wheel_radius=0.5)
    control = ControlVector(np.full((2, 2), 50.0), np.full((2, 2), 3.0))
    nxt, _, clamped = plant_step(state, control, cfg.plant, cfg.vehicle, cfg.tire, cfg.limits)
    assert clamped
    assert np.all(nxt.drive_rates == 30.0)
    assert np.allclose(nxt.steer_angles, 0.01)


def test_steer_angle_held_at_stop(cfg):
    limits = replace(cfg.limits, steer_angle=(-0.5, 0.5))
    state = VehicleState(pose=(0, 0, 0), velocity=(0, 0, 0), steer_angles=np.full((2, 2), 0.495))
    control = ControlVector(np.zeros((2, 2)), np.ones((2, 2)))
    for _ in range(3):
        state, _, _ = plant_step(state, control, cfg.plant, cfg.vehicle, cfg.tire, limits)
    assert np.all(state.steer_angles == 0.5)


def test_actuator_lag_tracks_command(cfg):
    plant = PlantSettings(actuator_lag=0.05)
    state = VehicleState.rolling(2, 5.0, wheel_radius=0.5)
    control = ControlVector(np.full((2, 2), 12.0), np.zeros((2, 2)))
    nxt, _, _ = plant_step(state, control, plant, cfg.vehicle, cfg.tire, cfg.limits)
    expect = 12.0 - 2.0 * math.exp(-0.01 / 0.05)
    assert np.allclose(nxt.drive_rates, expect, atol=1e-6)


def test_wear_is_trapezoid_mean_of_constant_steer_power(cfg):
    state = VehicleState.rolling(2, 5.0, wheel_radius=0.5)
    control = ControlVector(np.full((2, 2), 10.0), np.full((2, 2), 0.5))
    _, wear, _ = plant_step(state, control, cfg.plant, cfg.vehicle, cfg.tire, cfg.limits)
    assert wear.p_steer == pytest.approx(4 * 0.5 * 294.3, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2 ** 31))
def test_pack_round_trip(axles, seed):
    rng = np.random.default_rng(seed)
    state = random_state(rng, axles)
    assert np.array_equal(pack_state(unpack_state(pack_state(state), axles)), pack_state(state))


def test_wheel_arrays_order(cfg):
    wx, wy = wheel_arrays(cfg.vehicle)
    assert wx.tolist() == [3.0, 3.0, -3.0, -3.0]
    assert wy.tolist() == [1.0, -1.0, 1.0, -1.0]


@pytest.mark.parametrize("kw", [dict(dt=0.0), dict(substeps=0), dict(actuator_lag=-1.0)])
def test_plant_settings_validated(kw):
    with pytest.raises(ValueError):
        PlantSettings(**kw)
