"""Command line entry point: ``swervewear {run,compare,sweep,validate}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..config import Config, default_config, load_config, save_config
from .runner import CONTROLLERS, ControllerFailure, run_closed_loop, write_csv, write_metrics
from .scenarios import SCENARIOS, SWEEP_SPEED_KMH, make_scenario

log = logging.getLogger("swervewear")

TABLE_COLUMNS = ("Omega", "W_tw", "W_alpha", "W_s", "W_t", "e_bar", "e_x", "e_y", "e_phi")


class UsageError(Exception):
    pass


def _controllers(text: str) -> list[str]:
    names = [n.strip() for n in text.split(",") if n.strip()]
    unknown = [n for n in names if n not in CONTROLLERS]
    if unknown or not names:
        raise UsageError(f"unknown controller(s) {', '.join(unknown) or '(none)'}; "
                         f"choose from {', '.join(CONTROLLERS)}")
    return names


def _masses(text: str) -> list[float]:
    try:
        masses = [float(m) for m in text.split(",") if m.strip()]
    except ValueError:
        raise UsageError(f"--masses expects comma-separated numbers, got {text!r}") from None
    if not masses or min(masses) <= 0:
        raise UsageError("--masses needs at least one positive mass")
    return masses


def _config(args) -> Config:
    cfg = load_config(args.config) if args.config else default_config()
    if getattr(args, "mass", None):
        cfg = cfg.with_mass(args.mass)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _scenario(args, cfg: Config):
    if args.scenario == "custom" and not args.reference:
        raise UsageError("--scenario custom needs --reference FILE")
    return make_scenario(args.scenario, cfg.vehicle, cfg.tire, cfg.limits, speed_kmh=args.speed,
                         duration=args.duration, T=cfg.plant.dt, mass=cfg.vehicle.mass, path=args.reference)


def _progress(label: str):
    def report(k, n):
        if k + 1 == n or (k + 1) % max(n // 10, 1) == 0:
            log.info("%s: step %d/%d", label, k + 1, n)
    return report


def _run(scenario, name: str, cfg: Config):
    return run_closed_loop(scenario, name, cfg, progress=_progress(f"{scenario.name}/{name}"))


def format_table(rows: list[tuple[str, dict]], first: str = "controller") -> str:
    header = f"{first:<12}" + "".join(f"{c:>12}" for c in TABLE_COLUMNS)
    lines = [header]
    for label, metrics in rows:
        lines.append(f"{label:<12}" + "".join(f"{metrics[c]:>12.4g}" for c in TABLE_COLUMNS))
    return "\n".join(lines)


def cmd_run(args) -> int:
    cfg = _config(args)
    name = _controllers(args.controller)
    if len(name) != 1:
        raise UsageError("run takes a single controller; use compare for several")
    scenario = _scenario(args, cfg)
    result = _run(scenario, name[0], cfg)
    out = Path(args.out or f"{args.scenario}_{name[0]}")
    out.parent.mkdir(parents=True, exist_ok=True)
    csv_path, metrics_path = out.with_suffix(".csv"), out.with_suffix(".metrics")
    write_csv(result, csv_path)
    write_metrics(result, metrics_path)
    print(format_table([(name[0], result.metrics())]))
    print(f"wrote {csv_path} and {metrics_path}")
    return 0


def cmd_compare(args) -> int:
    cfg = _config(args)
    names = _controllers(args.controllers)
    scenario = _scenario(args, cfg)
    rows = []
    for name in names:
        result = _run(scenario, name, cfg)
        rows.append((name, result.metrics()))
        if args.out:
            out = Path(args.out) / f"{args.scenario}_{name}"
            out.parent.mkdir(parents=True, exist_ok=True)
            write_csv(result, out.with_suffix(".csv"))
            write_metrics(result, out.with_suffix(".metrics"))
    print(format_table(rows))
    return 0


def cmd_sweep(args) -> int:
    base = _config(args)
    names = _controllers(args.controllers)
    masses = _masses(args.masses)
    if args.speed is None and args.scenario == "curve":
        args.speed = SWEEP_SPEED_KMH
    rows = []
    for mass in masses:
        cfg = base.with_mass(mass)
        scenario = _scenario(args, cfg)
        for name in names:
            rows.append((f"{name}@{mass / 1000:g}t", _run(scenario, name, cfg).metrics()))
    print(format_table(rows, first="run"))
    return 0


def cmd_validate(args) -> int:
    from ..validation import run_all
    return 0 if run_all(seed=args.seed or 0) else 1


def cmd_config(args) -> int:
    cfg = _config(args)
    save_config(cfg, args.path)
    print(f"wrote {args.path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swervewear", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        p.add_argument("--config", help="TOML configuration file")
        p.add_argument("--seed", type=int, help="annealing RNG seed")
        if scenario:
            p.add_argument("--scenario", default="curve", choices=(*SCENARIOS, "custom"))
            p.add_argument("--speed", type=float, help="reference speed, km/h")
            p.add_argument("--duration", type=float, help="run length, s")
            p.add_argument("--reference", help="x,y,phi CSV for --scenario custom")

    p = sub.add_parser("run", help="one controller on one scenario; writes CSV and .metrics")
    common(p)
    p.add_argument("--controller", required=True, help=f"one of {', '.join(CONTROLLERS)}")
    p.add_argument("--mass", type=float, help="gross vehicle mass, kg")
    p.add_argument("--out", help="output path prefix (default: <scenario>_<controller>)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="several controllers on one scenario; prints a metrics table")
    common(p)
    p.add_argument("--controllers", default=",".join(CONTROLLERS))
    p.add_argument("--mass", type=float, help="gross vehicle mass, kg")
    p.add_argument("--out", help="directory for per-controller CSV and .metrics files")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="load sweep on one scenario (curve at 30 km/h by default); prints metrics per mass")
    common(p)
    p.add_argument("--controllers", default=",".join(CONTROLLERS))
    p.add_argument("--masses", default="8000,12000,16000,20000", help="comma-separated, kg")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="run the built-in oracle checks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("config", help="write the effective configuration as TOML")
    common(p, scenario=False)
    p.add_argument("path")
    p.set_defaults(func=cmd_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:  # config, reference and trajectory errors
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except ControllerFailure as exc:
        print(f"{parser.prog}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
