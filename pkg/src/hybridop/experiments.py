"""Receding-horizon episodes, their CSV/JSON outputs, and the two reproduction recipes."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .benchmarks import NCSPendulumModel, SirParams, SirwModel, infection_integral
from .model import SystemModel
from .planners import EpisodeLog, PlannerConfig, PlanningProblem, Variant, receding_horizon_run

log = logging.getLogger(__name__)

TAIL_COLUMNS = ["c", "u", "u_applied", "mode", "reward", "v_star", "delta_min", "budget_used", "plan_time"]
WALL_TIME_COLUMNS = {"plan_time"}


def csv_columns(model: SystemModel) -> list[str]:
    return ["t", "time", *model.state_names, *TAIL_COLUMNS]


def episode_rows(ep: EpisodeLog, model: SystemModel) -> list[dict]:
    rows = []
    for r in ep.records:
        row = {"t": r.t, "time": r.t * model.dt}
        row.update(zip(model.state_names, r.state))
        row.update(
            c=r.c,
            u=r.u,
            u_applied=r.u_applied,
            mode=r.mode,
            reward=r.reward,
            v_star=r.v_star,
            delta_min=r.delta_min,
            budget_used=r.budget_used,
            plan_time=r.plan_time,
        )
        rows.append(row)
    return rows


def write_episode_csv(path: Path, ep: EpisodeLog, model: SystemModel):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=csv_columns(model))
        writer.writeheader()
        for row in episode_rows(ep, model):
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def state_series(ep: EpisodeLog, model: SystemModel) -> list[list[float]]:
    """Visited states including the one reached after the last action."""
    return [r.state for r in ep.records] + [model.state_vector(ep.final_state)]


def settle_time(ep: EpisodeLog, model: SystemModel, tol: float = 0.15) -> Optional[float]:
    """Earliest time after which |alpha| stays below ``tol`` until the episode ends."""
    alphas = [s[0] for s in state_series(ep, model)]
    if abs(alphas[-1]) >= tol:
        return None
    k = len(alphas) - 1
    while k > 0 and abs(alphas[k - 1]) < tol:
        k -= 1
    return k * model.dt


def episode_summary(ep: EpisodeLog, model: SystemModel) -> dict:
    out = {
        "steps": len(ep.records),
        "dwell": ep.dwell,
        "discounted_return": ep.discounted_return(),
        "undiscounted_return": ep.undiscounted_return(),
        "switch_count": ep.switch_count(),
        "final_state": model.state_vector(ep.final_state),
        "total_plan_time": sum(r.plan_time for r in ep.records),
    }
    if isinstance(model, SirwModel):
        I = [s[1] for s in state_series(ep, model)]
        integral = infection_integral(I, model.params.period)
        out["infection_integral"] = integral
        out["infection_integral_scaled"] = integral * model.params.population
    if "alpha" in model.state_names:
        out["settle_time"] = settle_time(ep, model)
    return out


def run_episode(problem: PlanningProblem, config: PlannerConfig, x0, steps: int, label: str = "") -> EpisodeLog:
    def progress(t, rec):
        log.debug("%s t=%d mode=%d c=%.4f reward=%.4f", label, t, rec.mode, rec.c, rec.reward)

    return receding_horizon_run(problem, config, x0, steps, progress=progress)


# -- reproduction recipes ---------------------------------------------------


@dataclass(frozen=True)
class Case:
    name: str
    model: SystemModel
    dwell: int
    L_rho: float


PENDULUM_SETTINGS = dict(M=3, L_rho=1.2, L_f=0.8, gamma=0.8, budget=20000, steps=80)
SIR_SETTINGS = dict(M=3, L_rho=1.2, L_f=0.8, gamma=0.8, budget=20000, steps=70)


def pendulum_cases() -> list[Case]:
    L = PENDULUM_SETTINGS["L_rho"]
    return [
        Case("one-trit", NCSPendulumModel((1,)), 1, L),
        Case("adaptive-dwell4", NCSPendulumModel((60, 1)), 4, L),
        Case("adaptive-dwell1", NCSPendulumModel((60, 1)), 1, L),
        Case("sixty-trits", NCSPendulumModel((60,)), 1, L),
    ]


def sir_cases(clamp_beta: bool = False) -> list[Case]:
    L = SIR_SETTINGS["L_rho"]
    return [
        # no continuous input: L_rho = 0 keeps every split discrete
        Case("baseline-vaccination-only", SirwModel(SirParams(quarantine=False, clamp_beta=clamp_beta)), 1, 0.0),
        Case("hybrid-dwell2", SirwModel(SirParams(clamp_beta=clamp_beta)), 2, L),
        Case("hybrid-dwell1", SirwModel(SirParams(clamp_beta=clamp_beta)), 1, L),
    ]


def run_cases(
    cases: list[Case],
    settings: dict,
    x0,
    out_dir: Optional[Path],
    budget: Optional[int] = None,
    variant: Variant = Variant.SOPHIS,
    steps: Optional[int] = None,
) -> dict:
    n = settings["budget"] if budget is None else budget
    steps = settings["steps"] if steps is None else steps
    summaries = {}
    for case in cases:
        problem = PlanningProblem(
            model=case.model,
            M=settings["M"],
            Delta=case.dwell,
            gamma=settings["gamma"],
            L_f=settings["L_f"],
            L_rho=case.L_rho,
        )
        log.info("running %s (n=%d, %d steps)", case.name, n, steps)
        ep = run_episode(problem, PlannerConfig(variant, n), x0, steps, case.name)
        summaries[case.name] = episode_summary(ep, case.model)
        if out_dir is not None:
            write_episode_csv(Path(out_dir) / f"{case.name}.csv", ep, case.model)
    return summaries


def repro_pendulum(out_dir: Optional[Path] = None, budget: Optional[int] = None, variant=Variant.SOPHIS, steps=None) -> dict:
    summaries = run_cases(pendulum_cases(), PENDULUM_SETTINGS, (-math.pi, 0.0), out_dir, budget, variant, steps)
    ret = {k: s["undiscounted_return"] for k, s in summaries.items()}
    comparison = {
        "returns": ret,
        "dwell4_vs_dwell1_relative_gap": (ret["adaptive-dwell1"] - ret["adaptive-dwell4"]) / abs(ret["adaptive-dwell1"]),
        "one_trit_worst": ret["one-trit"] < min(v for k, v in ret.items() if k != "one-trit"),
        "settle_times": {k: s["settle_time"] for k, s in summaries.items()},
        "switch_counts": {k: s["switch_count"] for k, s in summaries.items()},
    }
    return _bundle("pendulum-fig2", summaries, comparison, out_dir, budget or PENDULUM_SETTINGS["budget"])


def repro_sir(out_dir: Optional[Path] = None, budget: Optional[int] = None, variant=Variant.SOPHIS, steps=None, clamp_beta=False) -> dict:
    x0 = SirParams().initial_state()
    summaries = run_cases(sir_cases(clamp_beta), SIR_SETTINGS, x0, out_dir, budget, variant, steps)
    J = {k: s["infection_integral"] for k, s in summaries.items()}
    base = J["baseline-vaccination-only"]
    comparison = {
        "infection_integral": J,
        "reduction_dwell2": (base - J["hybrid-dwell2"]) / base,
        "reduction_dwell1": (base - J["hybrid-dwell1"]) / base,
    }
    return _bundle("sir-fig3", summaries, comparison, out_dir, budget or SIR_SETTINGS["budget"])


def _bundle(name, summaries, comparison, out_dir, budget) -> dict:
    bundle = {"experiment": name, "budget": budget, "cases": summaries, "comparison": comparison}
    if out_dir is not None:
        path = Path(out_dir) / "summary.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(bundle, indent=2))
    return bundle


REPRO = {"pendulum-fig2": repro_pendulum, "sir-fig3": repro_sir}
