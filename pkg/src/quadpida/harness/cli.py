"""Command-line entry point: ``quadpida {step,mission,tune,analyze,plot}``.

Exit codes: 0 success, 1 other failure, 2 diverged, 3 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import yaml

from ..errors import ConfigError, Diverged, SingularAttitude, TargetNeverAcquired
from . import sim
from .scenario import dump_scenario, load_scenario

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_DIVERGED = 2
EXIT_CONFIG = 3

log = logging.getLogger("quadpida")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quadpida", description="Quadcopter PIDA simulator")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb, text in (
        ("step", "run the four-channel step experiment"),
        ("mission", "run the camera-guided target approach"),
        ("tune", "tune controller gains with SDSA"),
        ("analyze", "linearize at hover and certify the closed loop"),
    ):
        sp = sub.add_parser(verb, help=text)
        sp.add_argument("--scenario", required=True, type=Path, help="scenario YAML file")
        sp.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        sp.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    sp = sub.add_parser("plot", help="render trajectory CSVs to PNG images")
    sp.add_argument("csv", nargs="*", type=Path, help="trajectory files (default: all in --out)")
    sp.add_argument("--scenario", type=Path, default=None, help="unused; accepted for symmetry")
    sp.add_argument("--seed", type=int, default=None, help="unused; accepted for symmetry")
    sp.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _load(args):
    scn = load_scenario(args.scenario)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        scn = replace(scn, seed=args.seed)
    return scn


def _cmd_step(args) -> int:
    scn = _load(args)
    out = sim.run_step_response(scn, args.out)
    path = out.report.write(args.out / "step_report.yaml")
    print(yaml.safe_dump(out.report.as_dict().get("step", {}), sort_keys=False), end="")
    log.info("report written to %s", path)
    return EXIT_OK


def _cmd_mission(args) -> int:
    scn = _load(args)
    out = sim.run_mission(scn, args.out)
    out.report.write(args.out / "mission_report.yaml")
    print(yaml.safe_dump(out.report.as_dict()["mission"], sort_keys=False), end="")
    return EXIT_OK


def _cmd_tune(args) -> int:
    scn = _load(args)

    def progress(ch, run):
        print(f"{ch:>8}: cost {run.cost:.6g} after {run.nfev} evaluations", flush=True)

    tuned, runs = sim.tune(scn, progress)
    dump_scenario(tuned, args.out / f"{args.scenario.stem}_tuned.yaml")
    sim.write_history(runs, args.out / "tuning_history.csv")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    scn = _load(args)
    rep = sim.analyze(scn)
    (args.out / "stability.yaml").write_text(yaml.safe_dump(rep.as_dict(), sort_keys=False))
    print(f"stable: {rep.is_stable}  max Re(lambda): {rep.max_real_part:.6g}")
    return EXIT_OK if rep.is_stable else EXIT_FAILURE


def _cmd_plot(args) -> int:
    from .plots import plot_trajectory

    files = args.csv or sorted(args.out.glob("*_trajectory.csv"))
    if not files:
        print(f"no trajectory CSVs found in {args.out}", file=sys.stderr)
        return EXIT_FAILURE
    for f in files:
        print(plot_trajectory(f, args.out / (f.stem + ".png")))
    return EXIT_OK


_COMMANDS = {
    "step": _cmd_step,
    "mission": _cmd_mission,
    "tune": _cmd_tune,
    "analyze": _cmd_analyze,
    "plot": _cmd_plot,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.verb](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (Diverged, SingularAttitude) as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (TargetNeverAcquired, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
