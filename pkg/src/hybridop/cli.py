"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 budget or size refusal,
4 model failure.  ``HYBRIDOP_LOG_LEVEL`` sets log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .config import ConfigError, ExperimentConfig, load_config
from .model import ModelError, validate_lipschitz
from .oracle import OracleTooLarge, exhaustive_search, full_expansion, near_optimal_census
from .planners import Planner

EXIT_OK, EXIT_CONFIG, EXIT_REFUSED, EXIT_MODEL = 0, 2, 3, 4


def _emit(payload: dict, out_dir: Path | None, filename: str):
    text = json.dumps(payload, indent=2)
    print(text)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / filename).write_text(text + "\n")


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "budget", None) is not None:
        cfg.planner.budget = args.budget
    if getattr(args, "variant", None) is not None:
        cfg.planner.variant = args.variant
    if getattr(args, "dwell", None) is not None:
        cfg.planner.dwell = args.dwell
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "out", None) is not None:
        cfg.output_dir = args.out
    cfg.check()
    return cfg


def cmd_plan(cfg: ExperimentConfig, out: Path | None) -> int:
    planner = Planner(cfg.planning_problem(), cfg.planner_config(), cfg.x0())
    result = planner.run()
    _emit({"problem": cfg.problem, **result.as_dict()}, out, "plan.json")
    return EXIT_OK


def cmd_run(cfg: ExperimentConfig, out: Path) -> int:
    problem = cfg.planning_problem()
    ep = experiments.run_episode(problem, cfg.planner_config(), cfg.x0(), cfg.episode_length, cfg.problem)
    experiments.write_episode_csv(out / "episode.csv", ep, problem.model)
    summary = {"problem": cfg.problem, "budget": cfg.planner.budget, **experiments.episode_summary(ep, problem.model)}
    _emit(summary, out, "summary.json")
    return EXIT_OK


def cmd_oracle(cfg: ExperimentConfig, out: Path | None) -> int:
    o = cfg.oracle
    problem = cfg.planning_problem()
    result = exhaustive_search(
        problem.model,
        cfg.x0(),
        K=o.horizon,
        G=o.grid,
        Delta=problem.Delta,
        gamma=problem.gamma,
        initial=problem.initial_dwell,
        cap=o.cap,
        aligned=o.aligned,
    )
    _emit({"problem": cfg.problem, "horizon": o.horizon, **result.as_dict()}, out, "oracle.json")
    return EXIT_OK


def cmd_census(cfg: ExperimentConfig, out: Path | None) -> int:
    problem = cfg.planning_problem()
    planner = full_expansion(problem, cfg.x0(), cfg.census.depth, cfg.planner.reuse_middle_child)
    v_ref = cfg.census.v_reference
    if v_ref is None:
        v_ref = planner.best_node().v
    report = near_optimal_census(planner.nodes, v_ref, problem)
    _emit({"problem": cfg.problem, "depth": cfg.census.depth, **report.as_dict()}, out, "census.json")
    return EXIT_OK


def cmd_validate(cfg: ExperimentConfig, out: Path | None) -> int:
    problem = cfg.planning_problem()
    report = validate_lipschitz(
        problem.model, cfg.validate_samples, problem.L_f, problem.L_rho, problem.gamma, np.random.default_rng(cfg.seed)
    )
    payload = {"problem": cfg.problem, **report.as_dict()}
    if hasattr(problem.model, "lipschitz_bounds"):
        payload["analytic_bounds"] = dict(zip(("L_f", "L_rho"), problem.model.lipschitz_bounds()))
    _emit(payload, out, "validate.json")
    return EXIT_OK


def cmd_repro(args) -> int:
    if args.experiment not in experiments.REPRO:
        valid = ", ".join(sorted(experiments.REPRO))
        print(f"unknown experiment {args.experiment!r}; valid ids: {valid}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) / args.experiment
    kwargs = dict(budget=args.budget, steps=args.steps)
    if args.variant is not None:
        kwargs["variant"] = args.variant
    bundle = experiments.REPRO[args.experiment](out, **kwargs)
    print(json.dumps(bundle["comparison"], indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridop", description="Optimistic planning for hybrid-input systems with dwell time")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument("--config", required=needs_config, help="JSON experiment configuration")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--budget", type=int, default=None, help="override the planner budget n")
        p.add_argument("--variant", choices=["ophis", "sophis"], default=None)
        p.add_argument("--dwell", type=int, default=None, help="override the minimum dwell time")

    for name, help_ in [
        ("plan", "one open-loop plan from the initial state"),
        ("run", "receding-horizon episode; writes episode.csv and summary.json"),
        ("oracle", "exhaustive grid search over dwell-valid sequences"),
        ("census", "near-optimal node census of a fully expanded tree"),
        ("validate", "sampled Lipschitz / contraction report"),
    ]:
        common(sub.add_parser(name, help=help_))
    rp = sub.add_parser("repro", help="reproduce a published experiment")
    rp.add_argument("experiment", help="pendulum-fig2 | sir-fig3")
    common(rp, needs_config=False)
    rp.add_argument("--steps", type=int, default=None, help="override the episode length")
    return parser


COMMANDS = {"plan": cmd_plan, "run": cmd_run, "oracle": cmd_oracle, "census": cmd_census, "validate": cmd_validate}


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("HYBRIDOP_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        if args.command == "repro":
            if args.out is None:
                args.out = "out"
            return cmd_repro(args)
        cfg = _apply_overrides(load_config(args.config), args)
        out = Path(cfg.output_dir) if (args.out is not None or args.command == "run") else None
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except OracleTooLarge as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except ModelError as exc:
        print(f"model failure: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
