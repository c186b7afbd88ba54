#!/usr/bin/env python3
"""Run the benchmark scenario and print a short summary.

    python scripts/run_scenario.py [config.yaml] --out runs/default
"""
import argparse
import json
import time

from distirl import ScenarioConfig, run


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("config", nargs="?")
    ap.add_argument("--out", default="runs/default")
    args = ap.parse_args()
    cfg = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
    start = time.perf_counter()
    log = run(cfg, out_dir=args.out, progress=True)
    summary = log.summary()
    summary.pop("pe_epochs")
    summary.pop("irl_epochs")
    print(json.dumps(summary, indent=2))
    print(f"wall time {time.perf_counter() - start:.1f} s, outputs in {args.out}")


if __name__ == "__main__":
    main()
