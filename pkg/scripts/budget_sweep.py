"""Certificate v* + delta_min against budget, for both variants, as CSV on stdout."""

import argparse
import csv
import math
import sys

from hybridop.benchmarks import LinearModel, NCSPendulumModel
from hybridop.planners import PlannerConfig, PlanningProblem, Variant, plan

PROBLEMS = {
    "linear": (lambda: PlanningProblem(LinearModel(), M=3, Delta=2, gamma=0.8, L_f=0.6, L_rho=1.0), 0.0),
    "pendulum": (
        lambda: PlanningProblem(NCSPendulumModel((60, 1)), M=3, Delta=4, gamma=0.8, L_f=0.8, L_rho=1.2),
        (-math.pi, 0.0),
    ),
}

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("problem", choices=sorted(PROBLEMS))
    ap.add_argument("--budgets", type=int, nargs="+", default=[100, 300, 1000, 3000, 10000])
    args = ap.parse_args()
    make, x0 = PROBLEMS[args.problem]
    writer = csv.writer(sys.stdout)
    writer.writerow(["variant", "n", "v_star", "delta_min", "bound", "depth", "budget_used"])
    for variant in Variant:
        for n in args.budgets:
            r = plan(make(), PlannerConfig(variant, n), x0)
            writer.writerow([variant.value, n, r.v_star, r.delta_min, r.v_star + r.delta_min, len(r.actions), r.diagnostics.budget_used])
