"""JSON experiment configuration: schema, defaults, canonical round-trip."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

import jsonschema

from .benchmarks import (
    ConstantRewardModel,
    LinearModel,
    NCSPendulumModel,
    PendulumParams,
    SirParams,
    SirwModel,
)
from .hybrid_sets import DwellState
from .model import SystemModel
from .planners import PlannerConfig, PlanningProblem, Variant

PROBLEMS = ("pendulum-ncs", "sirw", "synthetic-linear", "synthetic-constant")


class ConfigError(ValueError):
    pass


_num = {"type": "number"}
_int = {"type": "integer"}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


PLANNER_SCHEMA = _obj(
    {
        "variant": {"enum": [v.value for v in Variant]},
        "budget": {"type": "integer", "minimum": 0},
        "M": {"type": "integer", "minimum": 2},
        "dwell": {"type": "integer", "minimum": 1},
        "gamma": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "L_f": {"type": "number", "minimum": 0},
        "L_rho": {"type": "number", "minimum": 0},
        "h_max": {"type": ["integer", "null"], "minimum": 1},
        "epsilon": {"type": ["number", "null"], "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
        "reuse_middle_child": {"type": "boolean"},
    }
)

MODEL_SCHEMAS = {
    "pendulum-ncs": _obj(
        {
            "params": _obj({f.name: {"type": "number", "exclusiveMinimum": 0} for f in fields(PendulumParams)}),
            "mode_trits": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
            "u_range": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
        }
    ),
    "sirw": _obj(
        {
            "beta": _num,
            "gamma": {"type": "number", "minimum": 0},
            "nu": {"type": "number", "minimum": 0},
            "quarantine_gain": _num,
            "substeps": {"type": "integer", "minimum": 1},
            "period": {"type": "number", "exclusiveMinimum": 0},
            "clamp_beta": {"type": "boolean"},
            "quarantine": {"type": "boolean"},
            "population": {"type": "number", "exclusiveMinimum": 0},
            "I0": {"type": "number", "minimum": 0, "maximum": 1},
        }
    ),
    "synthetic-linear": _obj(
        {
            "a": _num,
            "b": _num,
            "offsets": {"type": "array", "items": _num, "minItems": 1},
            "x_ref": _num,
        }
    ),
    "synthetic-constant": _obj({"n_modes": {"type": "integer", "minimum": 1}, "reward": {"type": "number", "minimum": 0, "maximum": 1}}),
}

CONFIG_SCHEMA = _obj(
    {
        "problem": {"enum": list(PROBLEMS)},
        "planner": PLANNER_SCHEMA,
        "model": {"type": "object"},
        "initial_state": {"type": ["array", "number", "null"]},
        "initial_dwell": _obj(
            {
                "last_mode": {"type": ["integer", "null"], "minimum": 0},
                "run_length": {"type": "integer", "minimum": 0},
                "ever_switched": {"type": "boolean"},
            }
        ),
        "episode_length": {"type": "integer", "minimum": 1},
        "seed": _int,
        "oracle": _obj(
            {
                "horizon": {"type": "integer", "minimum": 0},
                "grid": {"type": "integer", "minimum": 1},
                "cap": {"type": "integer", "minimum": 1},
                "aligned": {"type": "boolean"},
            }
        ),
        "census": _obj(
            {"depth": {"type": "integer", "minimum": 0}, "v_reference": {"type": ["number", "null"]}}
        ),
        "validate": _obj({"samples": {"type": "integer", "minimum": 1}}),
        "output": _obj({"dir": {"type": "string"}}),
    },
    required=["problem"],
)


@dataclass
class PlannerSection:
    variant: str = "sophis"
    budget: int = 20000
    M: int = 3
    dwell: int = 1
    gamma: float = 0.8
    L_f: float = 0.8
    L_rho: float = 1.2
    h_max: Optional[int] = None
    epsilon: Optional[float] = None
    reuse_middle_child: bool = True


@dataclass
class OracleSection:
    horizon: int = 3
    grid: int = 3
    cap: int = 10**7
    aligned: bool = True


@dataclass
class CensusSection:
    depth: int = 6
    v_reference: Optional[float] = None


@dataclass
class ExperimentConfig:
    problem: str
    planner: PlannerSection = field(default_factory=PlannerSection)
    model: dict = field(default_factory=dict)
    initial_state: Any = None
    initial_dwell: dict = field(default_factory=lambda: DwellState().as_dict())
    episode_length: int = 80
    seed: int = 0
    oracle: OracleSection = field(default_factory=OracleSection)
    census: CensusSection = field(default_factory=CensusSection)
    validate_samples: int = 10000
    output_dir: str = "out"

    @classmethod
    def from_dict(cls, raw: dict) -> ExperimentConfig:
        try:
            jsonschema.validate(raw, CONFIG_SCHEMA)
            jsonschema.validate(raw.get("model", {}), MODEL_SCHEMAS[raw["problem"]])
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config error at {where}: {exc.message}") from None
        cfg = cls(
            problem=raw["problem"],
            planner=PlannerSection(**raw.get("planner", {})),
            model=copy.deepcopy(raw.get("model", {})),
            initial_state=raw.get("initial_state"),
            initial_dwell={**DwellState().as_dict(), **raw.get("initial_dwell", {})},
            episode_length=raw.get("episode_length", 80),
            seed=raw.get("seed", 0),
            oracle=OracleSection(**raw.get("oracle", {})),
            census=CensusSection(**raw.get("census", {})),
            validate_samples=raw.get("validate", {}).get("samples", 10000),
            output_dir=raw.get("output", {}).get("dir", "out"),
        )
        cfg.check()
        return cfg

    def to_dict(self) -> dict:
        """Canonical form: every default filled in, keys in schema order."""
        return {
            "problem": self.problem,
            "planner": asdict(self.planner),
            "model": self.model_params(),
            "initial_state": self.resolved_initial_state(),
            "initial_dwell": dict(self.initial_dwell),
            "episode_length": self.episode_length,
            "seed": self.seed,
            "oracle": asdict(self.oracle),
            "census": asdict(self.census),
            "validate": {"samples": self.validate_samples},
            "output": {"dir": self.output_dir},
        }

    def check(self):
        try:
            self.dwell_state()
            self.planning_problem()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def model_params(self) -> dict:
        m = self.model
        if self.problem == "pendulum-ncs":
            return {
                "params": {**asdict(PendulumParams()), **m.get("params", {})},
                "mode_trits": list(m.get("mode_trits", [60, 1])),
                "u_range": list(m.get("u_range", [-3.0, 3.0])),
            }
        if self.problem == "sirw":
            return {**asdict(SirParams()), **m}
        if self.problem == "synthetic-linear":
            base = LinearModel()
            return {"a": base.a, "b": base.b, "offsets": list(base.offsets), "x_ref": base.x_ref, **m}
        return {"n_modes": 2, "reward": 1.0, **m}

    def build_model(self) -> SystemModel:
        mp = self.model_params()
        if self.problem == "pendulum-ncs":
            return NCSPendulumModel(mp["mode_trits"], PendulumParams(**mp["params"]), tuple(mp["u_range"]))
        if self.problem == "sirw":
            return SirwModel(SirParams(**mp))
        if self.problem == "synthetic-linear":
            return LinearModel(mp["a"], mp["b"], tuple(mp["offsets"]), mp["x_ref"])
        return ConstantRewardModel(mp["n_modes"], mp["reward"])

    def resolved_initial_state(self):
        if self.initial_state is not None:
            return self.initial_state
        if self.problem == "pendulum-ncs":
            return [-math.pi, 0.0]
        if self.problem == "sirw":
            return list(SirParams(**self.model_params()).initial_state())
        return 0.0

    def x0(self):
        x = self.resolved_initial_state()
        return tuple(float(v) for v in x) if isinstance(x, list) else float(x)

    def dwell_state(self) -> DwellState:
        return DwellState(**self.initial_dwell)

    def planning_problem(self) -> PlanningProblem:
        P = self.planner
        return PlanningProblem(
            model=self.build_model(),
            M=P.M,
            Delta=P.dwell,
            gamma=P.gamma,
            L_f=P.L_f,
            L_rho=P.L_rho,
            initial_dwell=self.dwell_state(),
        )

    def planner_config(self) -> PlannerConfig:
        P = self.planner
        return PlannerConfig(
            variant=Variant(P.variant),
            n=P.budget,
            h_max=P.h_max,
            epsilon=P.epsilon,
            reuse_middle_child=P.reuse_middle_child,
        )


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return ExperimentConfig.from_dict(raw)


def dump_config(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2)
