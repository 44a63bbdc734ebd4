"""Command-line interface: run, validate and sweep scenarios.

Exit codes: 0 avoided or no-trigger, 1 collided, 2 aborted, 3 config error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError
from .scenario import load_scenario
from .simloop import run_scenario
from .trace import emit_plot_data

logger = logging.getLogger("aessim")

CONFIG_ERROR_EXIT = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aessim",
        description="Closed-loop evasive-steering scenario simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario")
    run_p.add_argument("scenario", type=Path)
    run_p.add_argument("--out", type=Path, default=None,
                       help="output directory (default: out/<scenario name>)")
    run_p.add_argument("--seed", type=int, default=0,
                       help="reserved for randomized variants; recorded only")
    run_p.add_argument("--plot", action="store_true",
                       help="also write plot-data files")

    val_p = sub.add_parser("validate", help="validate a scenario file")
    val_p.add_argument("scenario", type=Path)

    sweep_p = sub.add_parser("sweep", help="run a one-parameter sweep")
    sweep_p.add_argument("scenario", type=Path)
    sweep_p.add_argument("--param", required=True,
                         help="dotted parameter path, e.g. trigger.tte_reduction")
    sweep_p.add_argument("--values", required=True, nargs="+", type=float)
    sweep_p.add_argument("--out", type=Path, default=None)
    return parser


def _apply_param(cfg, dotted: str, value: float):
    head, _, leaf = dotted.rpartition(".")
    section_map = {
        "trigger": "trigger", "control": "controller", "costs": "weights",
        "planner": "path_tuning", "capability": "cap_tuning",
        "vehicle": "vehicle", "sim": "sim", "ego": "ego",
    }
    if head not in section_map:
        raise ConfigError(f"cannot sweep '{dotted}': unknown section")
    target = getattr(cfg, section_map[head])
    if not hasattr(target, leaf):
        raise ConfigError(f"cannot sweep '{dotted}': no such field")
    return replace(cfg, **{section_map[head]: replace(target, **{leaf: value})})


def _cmd_run(args) -> int:
    cfg = load_scenario(args.scenario)
    result = run_scenario(cfg)
    out_dir = args.out or Path("out") / cfg.name
    result.summary["seed"] = args.seed
    result.trace.summary = result.summary
    files = result.trace.write(out_dir)
    if args.plot:
        files.update(emit_plot_data(result.trace, out_dir))
    print(f"{cfg.name}: outcome={result.outcome} reason='{result.reason}'")
    if "engage_ttc" in result.summary:
        print(f"  engaged at t={result.summary['engage_time']:.2f}s "
              f"ttc={result.summary['engage_ttc']:.3f}s "
              f"tte={result.summary['engage_tte']:.3f}s "
              f"path={result.summary['engage_path_id']}")
    print(f"  max|y_e|={result.summary['max_abs_ye']:.4f} m, "
          f"max|a_y|={result.summary['max_abs_ay']:.2f} m/s^2")
    for name, path in sorted(files.items()):
        print(f"  {name}: {path}")
    return result.exit_code


def _cmd_validate(args) -> int:
    cfg = load_scenario(args.scenario)
    print(f"{args.scenario}: valid (scenario '{cfg.name}', "
          f"{len(cfg.targets)} target(s), {cfg.sim.duration:.1f} s)")
    return 0


def _cmd_sweep(args) -> int:
    base = load_scenario(args.scenario)
    out_root = args.out or Path("out") / f"sweep_{args.param.replace('.', '_')}"
    worst = 0
    print(f"sweep {args.param}: {len(args.values)} values")
    for value in args.values:
        cfg = _apply_param(base, args.param, value)
        cfg = replace(cfg, name=f"{base.name}_{args.param}_{value:g}")
        result = run_scenario(cfg)
        result.trace.write(out_root / f"{value:g}")
        engage = result.summary.get("engage_ttc")
        print(f"  {args.param}={value:g}: outcome={result.outcome}"
              + (f" engage_ttc={engage:.3f}" if engage is not None else ""))
        worst = max(worst, result.exit_code)
    return worst


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return CONFIG_ERROR_EXIT
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
