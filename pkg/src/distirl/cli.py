"""Command line entry point: ``distirl run|check|dump-config``."""
from __future__ import annotations

import argparse
import sys
import warnings

from . import acceptance
from .config import ScenarioConfig
from .errors import ConditioningError, ConfigError, SimulationDiverged
from .experiment import run

EXIT_OK, EXIT_FAIL, EXIT_DIVERGED = 0, 1, 2


def _load(path: str | None) -> ScenarioConfig:
    return ScenarioConfig.load(path) if path else ScenarioConfig()


def cmd_run(args) -> int:
    cfg = _load(args.config)
    log = run(cfg, out_dir=args.out, progress=args.progress)
    s = log.summary()
    print(f"t_final={s['t_final']:g} theta_err={s['theta_err']:.3g} W_err={s['W_err']:.3g} "
          f"dist_err={s['dist_err']:.3g} pe_purges={len(s['pe_epochs'])} irl_purges={len(s['irl_epochs'])}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = _load(args.config)
    results = acceptance.run_all(cfg)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_dump_config(args) -> int:
    sys.stdout.write(_load(args.config).dumps())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="distirl", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a scenario and write CSV logs")
    r.add_argument("config", nargs="?", help="YAML config (defaults if omitted)")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--progress", action="store_true")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="run the scenario and evaluate every exit criterion")
    c.add_argument("config", nargs="?")
    c.set_defaults(func=cmd_check)

    d = sub.add_parser("dump-config", help="print the (default or given) config as YAML")
    d.add_argument("config", nargs="?")
    d.set_defaults(func=cmd_dump_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        try:
            return args.func(args)
        except SimulationDiverged as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DIVERGED
        except (ConfigError, ConditioningError, FileNotFoundError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
