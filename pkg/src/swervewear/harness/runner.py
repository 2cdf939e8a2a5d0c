"""Closed-loop simulation: controller on its prediction model, plant on RK4."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..baseline import KinematicController
from ..config import Config
from ..dynamics import plant_step
from ..mpc import MpcController
from .metrics import TrackingErrors, WearLedger, performance_balance, tracking_errors, wear_work
from .scenarios import Scenario

log = logging.getLogger(__name__)

CONTROLLERS = ("kinematic", "ntwo", "two")


class ControllerFailure(RuntimeError):
    def __init__(self, step: int, cause: BaseException):
        super().__init__(f"controller failed at step {step}: {cause}")
        self.step = step


def make_controller(name: str, cfg: Config):
    """Controllers shipped with the package, looked up by name."""
    if name == "kinematic":
        return KinematicController(cfg.vehicle, cfg.tire, cfg.limits, cfg.baseline, dt=cfg.plant.dt)
    if name == "ntwo":
        mpc = replace(cfg.mpc, weights_L=(0.0, 0.0, 0.0))
        return MpcController(cfg.vehicle, cfg.tire, cfg.limits, mpc, cfg.sa, name="ntwo")
    if name == "two":
        return MpcController(cfg.vehicle, cfg.tire, cfg.limits, cfg.mpc, cfg.sa, name="two")
    raise KeyError(f"unknown controller {name!r}; choose from {', '.join(CONTROLLERS)}")


def _window_layout(controller, T: float) -> tuple[int, int]:
    """(stride, count) of reference samples the controller looks at."""
    settings = getattr(controller, "settings", None)
    if settings is None:
        return 1, 2
    ratio = settings.dt / T
    stride = int(round(ratio))
    if stride < 1 or abs(ratio - stride) > 1e-9:
        raise ValueError(f"controller period {settings.dt} must be a multiple of the plant period {T}")
    return stride, settings.prediction_horizon


def reference_window(poses: np.ndarray, k: int, stride: int, count: int) -> np.ndarray:
    idx = np.minimum(k + stride * np.arange(1, count + 1), len(poses) - 1)
    return poses[idx]


@dataclass
class RunResult:
    scenario: str
    controller: str
    T: float
    times: np.ndarray
    poses: np.ndarray
    reference: np.ndarray
    steer_angles: np.ndarray
    drive_rates: np.ndarray
    steer_rates: np.ndarray
    wear: np.ndarray
    cost: np.ndarray
    sa_iters: np.ndarray
    clamped: np.ndarray
    extra: dict = field(default_factory=dict)

    @property
    def ledger(self) -> WearLedger:
        return wear_work(self.wear, self.T)

    @property
    def errors(self) -> TrackingErrors:
        return tracking_errors(self.poses, self.reference)

    @property
    def omega(self) -> float:
        return performance_balance(self.ledger.W_tw, self.errors.e_bar)

    def metrics(self) -> dict:
        led, err = self.ledger, self.errors
        return dict(Omega=self.omega, W_tw=led.W_tw, W_alpha=led.W_alpha, W_s=led.W_s, W_t=led.W_t,
                    e_bar=err.e_bar, e_x=err.e_x, e_y=err.e_y, e_phi=err.e_phi)

    def __len__(self):
        return len(self.times)


def run_closed_loop(scenario: Scenario, controller, cfg: Config, progress=None) -> RunResult:
    """Run ``controller`` against the RK4 plant for the whole scenario."""
    if isinstance(controller, str):
        controller = make_controller(controller, cfg)
    if scenario.mass is not None and scenario.mass != cfg.vehicle.mass:
        raise ValueError("apply the scenario mass to the config before building the controller")
    T = scenario.reference.T
    if abs(T - cfg.plant.dt) > 1e-12:
        raise ValueError(f"reference period {T} differs from plant period {cfg.plant.dt}")
    controller.reset()
    stride, count = _window_layout(controller, T)
    poses = scenario.reference.poses
    n = scenario.steps
    m = cfg.vehicle.wheel_count
    out = dict(
        times=np.empty(n), poses=np.empty((n, 3)), reference=np.empty((n, 3)),
        steer_angles=np.empty((n, m)), drive_rates=np.empty((n, m)), steer_rates=np.empty((n, m)),
        wear=np.empty((n, 3)), cost=np.full(n, np.nan), sa_iters=np.zeros(n, dtype=int),
        clamped=np.zeros(n, dtype=bool),
    )
    state = scenario.initial_state
    for k in range(n):
        try:
            control = controller.step(state, reference_window(poses, k, stride, count))
        except Exception as exc:
            raise ControllerFailure(k, exc) from exc
        state, wear, clamped = plant_step(state, control, cfg.plant, cfg.vehicle, cfg.tire, cfg.limits)
        tel = controller.telemetry
        out["times"][k] = (k + 1) * T
        out["poses"][k] = state.pose
        out["reference"][k] = poses[k + 1]
        out["steer_angles"][k] = state.steer_angles.ravel()
        out["drive_rates"][k] = control.drive_rates.ravel()
        out["steer_rates"][k] = control.steer_rates.ravel()
        out["wear"][k] = wear.as_tuple()
        out["cost"][k] = tel.get("J", np.nan)
        out["sa_iters"][k] = tel.get("sa_iters", 0)
        out["clamped"][k] = clamped
        if progress is not None:
            progress(k, n)
    name = getattr(controller, "name", type(controller).__name__)
    return RunResult(scenario.name, name, T, **out)


def _wheel_labels(m: int) -> list[str]:
    return [f"{i + 1}{j + 1}" for i in range(m // 2) for j in range(2)]


def csv_columns(m: int) -> list[str]:
    cols = ["t", "x", "y", "phi", "x_ref", "y_ref", "phi_ref"]
    for w in _wheel_labels(m):
        cols += [f"delta_{w}", f"omega_w_{w}", f"omega_s_{w}"]
    return cols + ["P_s", "P_alpha", "P_t", "J", "sa_iters", "clamped"]


def _fmt(v) -> str:
    return format(float(v), ".12g")


def write_csv(result: RunResult, path) -> None:
    m = result.steer_angles.shape[1]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(csv_columns(m))
        for k in range(len(result)):
            row = [_fmt(result.times[k]), *map(_fmt, result.poses[k]), *map(_fmt, result.reference[k])]
            for w in range(m):
                row += [_fmt(result.steer_angles[k, w]), _fmt(result.drive_rates[k, w]),
                        _fmt(result.steer_rates[k, w])]
            row += [*map(_fmt, result.wear[k]), _fmt(result.cost[k]), str(int(result.sa_iters[k])),
                    str(int(result.clamped[k]))]
            writer.writerow(row)


def read_csv(path, T: float, scenario: str = "", controller: str = "") -> RunResult:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [list(map(float, r)) for r in reader]
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    col = {name: i for i, name in enumerate(header)}
    labels = [h[len("delta_"):] for h in header if h.startswith("delta_")]

    def take(names):
        return data[:, [col[n] for n in names]]

    return RunResult(
        scenario, controller, T,
        times=data[:, col["t"]], poses=take(["x", "y", "phi"]), reference=take(["x_ref", "y_ref", "phi_ref"]),
        steer_angles=take([f"delta_{w}" for w in labels]),
        drive_rates=take([f"omega_w_{w}" for w in labels]),
        steer_rates=take([f"omega_s_{w}" for w in labels]),
        wear=take(["P_s", "P_alpha", "P_t"]), cost=data[:, col["J"]],
        sa_iters=data[:, col["sa_iters"]].astype(int), clamped=data[:, col["clamped"]].astype(bool),
    )


def write_metrics(result: RunResult, path) -> None:
    lines = [f"scenario={result.scenario}", f"controller={result.controller}", f"steps={len(result)}"]
    lines += [f"{k}={_fmt(v)}" for k, v in result.metrics().items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_metrics(path) -> dict:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            try:
                out[key] = float(value)
            except ValueError:
                out[key] = value
    return out
