"""Independent reference implementations used by the test suite.

Each one is deliberately written the slow, obvious way so it shares no code
path with the library function it checks.
"""
import math
from dataclasses import replace

import numpy as np

from swervewear.config import default_config
from swervewear.core import VehicleState
from swervewear.dynamics import body_acceleration
from swervewear.mpc import MpcSettings, PredictionModel, SaSettings, rollout, cost_function
from swervewear.tire import total_wear_power, wear_power, wheel_forces, wheel_kinematics


def dense_cost(states, wears, reference, Q, L):
    """Horizon cost built from explicit block-diagonal weight matrices."""
    n = len(states)
    W_Y = np.kron(np.eye(n), np.diag(Q))
    W_P = np.kron(np.eye(n), np.diag(L))
    e = (np.asarray(states) - np.asarray(reference)).reshape(-1)
    p = np.asarray(wears).reshape(-1)
    return float(e @ W_Y @ e + p @ W_P @ p)


def streaming_wear(powers, T):
    totals = [0.0, 0.0, 0.0]
    for row in powers:
        for c in range(3):
            totals[c] += row[c] * T
    return totals[0], totals[1], totals[2], totals[0] + totals[1] + totals[2]


def dense_errors(poses, reference):
    sums = [0.0, 0.0, 0.0]
    for p, r in zip(poses, reference):
        for c in range(3):
            sums[c] += (p[c] - r[c]) ** 2
    n = len(poses)
    e_x = math.sqrt(sums[0] / n) * 100.0
    e_y = math.sqrt(sums[1] / n) * 100.0
    e_phi = math.degrees(math.sqrt(sums[2] / n))
    return e_x, e_y, e_phi, (e_x + e_y + e_phi) / 3.0


def hand_rollout(state, controls, settings, vehicle, tire, limits):
    """Step-by-step Euler prediction through the plain Python tire and dynamics code."""
    n = vehicle.axle_count
    controls = np.atleast_2d(controls)
    pose = np.array(state.pose, dtype=float)
    vel = np.array(state.velocity, dtype=float)
    delta = np.array(state.steer_angles, dtype=float)
    states, wears = [], []
    for k in range(settings.prediction_horizon):
        row = controls[min(k, len(controls) - 1)]
        drive = row[:2 * n].reshape(n, 2)
        steer = row[2 * n:].reshape(n, 2)
        current = VehicleState(pose, vel, delta)
        acc = body_acceleration(current, drive, vehicle, tire).accel_global
        per_wheel = []
        for i in range(n):
            for j in range(2):
                kin = wheel_kinematics(current, (i, j), drive[i, j], vehicle, tire)
                forces = wheel_forces(current, (i, j), drive[i, j], vehicle, tire)
                per_wheel.append(wear_power(kin, forces, drive[i, j], steer[i, j], tire))
        wears.append(total_wear_power(per_wheel).as_tuple())
        pose = pose + settings.dt * vel
        vel = vel + settings.dt * acc
        delta = np.clip(delta + settings.dt * steer, *limits.steer_angle)
        states.append(pose.copy())
    return np.array(states), np.array(wears)


def tiny_instance(L=(0.0, 0.0, 0.0)):
    """Two-wheel vehicle, one control step, only the two drive rates free.

    Straight-ahead wheels can only change speed and yaw through the drive
    split, so the reference asks for a speed-up and a gentle left turn.
    """
    cfg = default_config()
    vehicle = replace(cfg.vehicle, mass=3000.0, yaw_inertia=2000.0, wheel_x=(0.0,))
    tire = cfg.tire.with_load(vehicle.uniform_load())
    limits = cfg.limits
    model = PredictionModel(vehicle, tire, limits)
    settings = MpcSettings(prediction_horizon=10, control_horizon=1, weights_Q=(1.0, 1.0, 10.0),
                           weights_L=L, dt=0.01)
    state = VehicleState.rolling(1, 4.0, wheel_radius=tire.wheel_radius)
    t = settings.dt * np.arange(1, settings.prediction_horizon + 1)
    reference = np.column_stack([4.0 * t + 0.5 * 3.0 * t ** 2, np.zeros_like(t), 0.5 * 0.8 * t ** 2])
    free = np.array([True, True, False, False])
    return dict(vehicle=vehicle, tire=tire, limits=limits, model=model, settings=settings, state=state,
                reference=reference, free=free)


def plan_for(drive_left, drive_right):
    return np.array([[drive_left, drive_right, 0.0, 0.0]])


def grid_search(inst, points=21):
    """Exhaustive 21x21 search over the two drive rates; returns (cost, plan, wear)."""
    lo, hi = inst["limits"].drive_rate
    axis = np.linspace(lo, hi, points)
    best = (math.inf, None, None)
    for a in axis:
        for b in axis:
            U = plan_for(a, b)
            states, wears = rollout(inst["state"], U, inst["settings"], inst["model"])
            c = cost_function(states, wears, inst["reference"], inst["settings"])
            if c < best[0]:
                best = (c, U, wears)
    return best


def tiny_sa_settings(seed):
    return SaSettings(rng_seed=seed)
