"""Quick self-checks of the installed package against slow, obvious recomputations.

Run through ``swervewear validate``. Each check returns ``(ok, detail)``; none
of them needs the test suite or any file on disk.
"""
from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .config import default_config
from .core import ControlVector, VehicleState
from .dynamics import PlantSettings, body_acceleration, plant_step
from .harness.metrics import performance_balance, tracking_errors, wear_work
from .mpc import MpcSettings, PredictionModel, SaSettings, cost_function, rollout, solve
from .tire import total_wear_power, wear_power, wheel_forces, wheel_kinematics


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def check_metrics(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 200))
        T = float(rng.uniform(0.001, 0.1))
        powers = rng.uniform(0, 1e5, (n, 3))
        led = wear_work(powers, T)
        sums = [0.0, 0.0, 0.0]
        for row in powers:
            for c in range(3):
                sums[c] += row[c] * T
        worst = max(worst, _rel(led.W_s, sums[0]), _rel(led.W_alpha, sums[1]), _rel(led.W_t, sums[2]),
                    _rel(led.W_tw, sum(sums)))
        poses, ref = rng.normal(size=(n, 3)), rng.normal(size=(n, 3))
        err = tracking_errors(poses, ref)
        sq = [sum((p[c] - r[c]) ** 2 for p, r in zip(poses, ref)) / n for c in range(3)]
        worst = max(worst, _rel(err.e_x, 100 * math.sqrt(sq[0])), _rel(err.e_y, 100 * math.sqrt(sq[1])),
                    _rel(err.e_phi, math.degrees(math.sqrt(sq[2]))))
    return worst < 1e-9, f"worst relative deviation {worst:.2e}"


def check_cost(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 10))
        s = MpcSettings(prediction_horizon=n, control_horizon=1, weights_Q=tuple(rng.uniform(0.1, 10, 3)),
                        weights_L=tuple(rng.uniform(0, 1e-6, 3)))
        states, ref, wears = rng.normal(size=(n, 3)), rng.normal(size=(n, 3)), rng.uniform(0, 1e4, (n, 3))
        e = (states - ref).reshape(-1)
        p = wears.reshape(-1)
        dense = e @ np.kron(np.eye(n), np.diag(s.weights_Q)) @ e + p @ np.kron(np.eye(n), np.diag(s.weights_L)) @ p
        worst = max(worst, _rel(cost_function(states, wears, ref, s), dense))
    return worst < 1e-9, f"worst relative deviation {worst:.2e}"


def check_omega(_rng) -> tuple[bool, str]:
    a = performance_balance(7.37e8, 18.44)
    b = performance_balance(1.66e9, 29.23)
    ok = _rel(a, 3.63e4) < 0.01 and _rel(b, 5.71e4) < 0.01
    return ok, f"{a:.4g} (expect 3.63e4), {b:.4g} (expect 5.71e4)"


def check_straight_line(_rng) -> tuple[bool, str]:
    cfg = default_config()
    state = VehicleState.rolling(2, 5.0, wheel_radius=cfg.tire.wheel_radius)
    u = ControlVector(np.full((2, 2), 5.0 / cfg.tire.wheel_radius), np.zeros((2, 2)))
    for _ in range(100):
        state, _, _ = plant_step(state, u, cfg.plant, cfg.vehicle, cfg.tire, cfg.limits)
    err = _rel(state.pose[0], 5.0)
    ok = err < 1e-3 and abs(state.pose[1]) < 1e-6 and abs(state.pose[2]) < 1e-6
    return ok, f"x error {err:.2e}, y {state.pose[1]:.1e}, phi {state.pose[2]:.1e}"


def check_rollout(rng) -> tuple[bool, str]:
    """Compiled Euler rollout against a Python loop over the per-wheel tire code."""
    cfg = default_config()
    model = PredictionModel(cfg.vehicle, cfg.tire, cfg.limits)
    s = MpcSettings(prediction_horizon=15, control_horizon=3)
    worst = 0.0
    for _ in range(5):
        state = VehicleState(pose=rng.uniform(-2, 2, 3), velocity=rng.uniform(-4, 4, 3) * [1, 1, 0.1],
                             steer_angles=rng.uniform(-0.5, 0.5, (2, 2)))
        U = np.hstack([rng.uniform(0, 30, (3, 4)), rng.uniform(-1, 1, (3, 4))])
        states, wears = rollout(state, U, s, model)
        pose, vel, delta = state.pose.copy(), state.velocity.copy(), state.steer_angles.copy()
        for k in range(s.prediction_horizon):
            row = U[min(k, 2)]
            drive, steer = row[:4].reshape(2, 2), row[4:].reshape(2, 2)
            cur = VehicleState(pose, vel, delta)
            acc = body_acceleration(cur, drive, cfg.vehicle, cfg.tire).accel_global
            per_wheel = [wear_power(wheel_kinematics(cur, (i, j), drive[i, j], cfg.vehicle, cfg.tire),
                                    wheel_forces(cur, (i, j), drive[i, j], cfg.vehicle, cfg.tire),
                                    drive[i, j], steer[i, j], cfg.tire) for i in range(2) for j in range(2)]
            pose, vel = pose + s.dt * vel, vel + s.dt * acc
            delta = np.clip(delta + s.dt * steer, *cfg.limits.steer_angle)
            worst = max(worst, float(np.max(np.abs(states[k] - pose))),
                        float(np.max(np.abs(wears[k] - total_wear_power(per_wheel).as_tuple())) / 1e4))
    return worst < 1e-9, f"worst deviation {worst:.2e}"


def check_substeps(_rng) -> tuple[bool, str]:
    cfg = default_config()
    state = VehicleState.rolling(2, 35 / 3.6, heading=0.1, wheel_radius=0.5)
    u = ControlVector(np.array([[19.6, 19.2], [19.5, 19.3]]), np.array([[0.2, 0.2], [-0.2, -0.2]]))
    out = []
    for substeps in (4, 8):
        s = state
        for _ in range(100):
            s, _, _ = plant_step(s, u, PlantSettings(substeps=substeps), cfg.vehicle, cfg.tire, cfg.limits)
        out.append(np.concatenate([s.pose, s.velocity, s.steer_angles.ravel()]))
    change = float(np.linalg.norm(out[1] - out[0]) / np.linalg.norm(out[1]))
    return change < 1e-6, f"relative change {change:.2e}"


def check_annealing(_rng) -> tuple[bool, str]:
    """SA on two free drive rates against an exhaustive 21x21 grid."""
    cfg = default_config()
    vehicle = replace(cfg.vehicle, mass=3000.0, yaw_inertia=2000.0, wheel_x=(0.0,))
    tire = cfg.tire.with_load(vehicle.uniform_load())
    model = PredictionModel(vehicle, tire, cfg.limits)
    s = MpcSettings(prediction_horizon=10, control_horizon=1, weights_L=(0.0, 0.0, 0.0))
    state = VehicleState.rolling(1, 4.0, wheel_radius=tire.wheel_radius)
    t = s.dt * np.arange(1, 11)
    ref = np.column_stack([4.0 * t + 1.5 * t ** 2, np.zeros(10), 0.4 * t ** 2])
    grid = math.inf
    for a in np.linspace(0, 30, 21):
        for b in np.linspace(0, 30, 21):
            states, wears = rollout(state, [[a, b, 0.0, 0.0]], s, model)
            grid = min(grid, cost_function(states, wears, ref, s))
    free = np.array([True, True, False, False])
    hits = 0
    for seed in range(20):
        plan = solve(state, ref, s, SaSettings(rng_seed=seed), model, warm_start=np.zeros((1, 4)), free=free)
        hits += plan.cost <= 1.05 * grid
    return hits == 20, f"{hits}/20 seeds within 5% of the grid minimum"


CHECKS = {
    "metrics match streaming recomputation": check_metrics,
    "cost matches dense Kronecker form": check_cost,
    "performance balance spot values": check_omega,
    "straight-line plant motion": check_straight_line,
    "RK4 substep convergence": check_substeps,
    "compiled rollout matches Python loop": check_rollout,
    "annealing reaches grid minimum": check_annealing,
}


def run_all(seed: int = 0, out=print) -> bool:
    rng = np.random.default_rng(seed)
    ok_all = True
    for name, check in CHECKS.items():
        ok, detail = check(rng)
        ok_all &= ok
        out(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return ok_all
