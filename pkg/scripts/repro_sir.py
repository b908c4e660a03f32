"""Run the SIRW cases (vaccination-only baseline, hybrid with dwell 2 and 1)."""

import argparse
import json
import logging
from pathlib import Path

from hybridop.experiments import repro_sir

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/sir-fig3")
    ap.add_argument("--budget", type=int, default=None)
    ap.add_argument("--steps", type=int, default=None)
    ap.add_argument("--clamp-beta", action="store_true", help="clip the effective infection rate at zero")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    bundle = repro_sir(Path(args.out), budget=args.budget, steps=args.steps, clamp_beta=args.clamp_beta)
    print(json.dumps(bundle["comparison"], indent=2))
