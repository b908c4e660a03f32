"""Run the four networked-pendulum cases and print the return comparison."""

import argparse
import json
import logging
from pathlib import Path

from hybridop.experiments import repro_pendulum

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/pendulum-fig2")
    ap.add_argument("--budget", type=int, default=None)
    ap.add_argument("--steps", type=int, default=None)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    bundle = repro_pendulum(Path(args.out), budget=args.budget, steps=args.steps)
    print(json.dumps(bundle["comparison"], indent=2))
