from .metrics import TrackingErrors, WearLedger, performance_balance, tracking_errors, wear_work
from .runner import CONTROLLERS, RunResult, make_controller, run_closed_loop
from .scenarios import Scenario, Trajectory, generate_reference, make_scenario

__all__ = [
    "CONTROLLERS", "RunResult", "Scenario", "TrackingErrors", "Trajectory", "WearLedger",
    "generate_reference", "make_controller", "make_scenario", "performance_balance",
    "run_closed_loop", "tracking_errors", "wear_work",
]
