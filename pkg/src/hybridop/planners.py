"""OPHIS-Delta and SOPHIS-Delta: optimistic planning over hybrid-input sets.

Both variants grow a tree of :class:`SetNode` objects.  At every expansion
the node's largest diameter contribution decides between refining a
continuous interval and fixing the next discrete mode.  OPHIS-Delta always
expands the leaf with the largest upper bound v + delta; SOPHIS-Delta sweeps
the depths and expands the best-v leaf of each, which removes the Lipschitz
constants from set selection.

Budget is counted in model calls: one unit is one paired evaluation of the
dynamics and the reward for one step.
"""

from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

from .hybrid_sets import (
    CONTINUOUS,
    DISCRETE,
    ChildTemplate,
    DwellState,
    SetNode,
    contributions,
    continuous_child_descriptors,
    discrete_child_descriptors,
    dwell_after_append,
    eligible_modes,
    representative_actions,
    sample_value,
    tail_term,
    with_reuse_disabled,
)
from .model import SystemModel, check_reward

log = logging.getLogger(__name__)


class Variant(str, Enum):
    OPHIS = "ophis"
    SOPHIS = "sophis"


@dataclass
class PlanningProblem:
    model: SystemModel
    M: int = 3
    Delta: int = 1
    gamma: float = 0.8
    L_f: float = 0.8
    L_rho: float = 1.2
    initial_dwell: DwellState = field(default_factory=DwellState)

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.M < 2:
            raise ValueError(f"M must be >= 2, got {self.M}")
        if self.Delta < 1:
            raise ValueError(f"Delta must be >= 1, got {self.Delta}")
        if self.L_f < 0 or self.L_rho < 0:
            raise ValueError("Lipschitz constants must be nonnegative")
        if self.gamma * self.L_f >= 1.0:
            raise ValueError(f"gamma * L_f = {self.gamma * self.L_f:.4g} must be < 1")

    @property
    def p(self) -> int:
        return self.model.n_modes - 1


@dataclass
class BudgetLedger:
    limit: int
    used: int = 0

    @property
    def remaining(self) -> int:
        return self.limit - self.used

    def can_afford(self, units: int) -> bool:
        return units <= self.remaining

    def charge(self, units: int = 1):
        if units > self.remaining:
            raise RuntimeError(f"charging {units} units with only {self.remaining} left")
        self.used += units


@dataclass
class PlannerConfig:
    variant: Variant = Variant.SOPHIS
    n: int = 1000
    h_max: Optional[int] = None
    epsilon: Optional[float] = None
    reuse_middle_child: bool = True

    def __post_init__(self):
        self.variant = Variant(self.variant)
        if self.n < 0:
            raise ValueError("budget must be nonnegative")
        if self.epsilon is not None and not 0.0 < self.epsilon < 0.5:
            raise ValueError(f"epsilon must lie in (0, 0.5), got {self.epsilon}")

    def resolved_h_max(self) -> int:
        if self.h_max is not None:
            return self.h_max
        exponent = 1.0 / 3.0 if self.epsilon is None else self.epsilon
        # guard against 8**(1/3) = 2.0000000000000004 rounding up
        return max(1, math.ceil(self.n**exponent - 1e-9))


@dataclass
class PlannerDiagnostics:
    nodes_created: int = 1
    expansions: int = 0
    per_depth_counts: dict[int, int] = field(default_factory=lambda: {0: 1})
    deepest: int = 0
    budget_used: int = 0
    best_bound: Optional[float] = None
    continuous_splits: int = 0
    discrete_splits: int = 0
    wall_time: float = 0.0
    warning: Optional[str] = None

    def as_dict(self) -> dict:
        return {
            "nodes_created": self.nodes_created,
            "expansions": self.expansions,
            "per_depth_counts": {str(k): v for k, v in sorted(self.per_depth_counts.items())},
            "deepest": self.deepest,
            "budget_used": self.budget_used,
            "best_bound": self.best_bound,
            "continuous_splits": self.continuous_splits,
            "discrete_splits": self.discrete_splits,
            "wall_time": self.wall_time,
            "warning": self.warning,
        }


@dataclass
class PlanResult:
    actions: list[tuple[float, int]]
    v_star: float
    delta_min: float
    diagnostics: PlannerDiagnostics
    best_node: int = 0

    def as_dict(self) -> dict:
        return {
            "actions": [[c, d] for c, d in self.actions],
            "v_star": self.v_star,
            "delta_min": self.delta_min,
            "bound": self.v_star + self.delta_min,
            "best_node": self.best_node,
            "diagnostics": self.diagnostics.as_dict(),
        }


def select_step_and_type(node: SetNode, problem: PlanningProblem) -> tuple[str, int]:
    """Split where the diameter has its largest contribution.

    Ties between steps go to the earliest step; a tie between the best
    continuous contribution and the discrete tail goes to the discrete split.
    """
    lams = contributions(node, problem)
    tail = tail_term(node.D, problem.gamma)
    if not lams:
        return DISCRETE, node.D
    k_best = max(range(len(lams)), key=lambda k: (lams[k], -k))
    if lams[k_best] <= tail:
        return DISCRETE, node.D
    return CONTINUOUS, min(k_best, node.C)


def split_cost(templates: list[ChildTemplate]) -> int:
    return sum(t.n_new_steps for t in templates)


class Planner:
    """Owns one planning tree and the budget spent on it.

    The main entry point is :meth:`run`; :meth:`expand` is public so that
    split orders can be scripted (e.g. to replay a hand-built example).
    """

    def __init__(self, problem: PlanningProblem, config: PlannerConfig, x0: Any):
        self.problem = problem
        self.config = config
        self.ledger = BudgetLedger(config.n)
        self.nodes: list[SetNode] = []
        self.diag = PlannerDiagnostics()
        self.expansion_log: list[int] = []
        root = SetNode(
            id=0,
            parent=None,
            depth=0,
            intervals=(),
            modes=(),
            dwell=problem.initial_dwell,
            states=[x0],
            rewards=[],
        )
        self._finalize(root)
        self.nodes.append(root)
        self.children: dict[int, list[int]] = {}
        # OPHIS heap: (-B, -depth, id); SOPHIS: per-depth heaps of (-v, id)
        self._bheap: list[tuple[float, int, int]] = []
        self._vheaps: dict[int, list[tuple[float, int]]] = {}
        self._index(root)

    @property
    def root(self) -> SetNode:
        return self.nodes[0]

    def _finalize(self, node: SetNode):
        node.v = sample_value(node.rewards, self.problem.gamma)
        node.delta = sum(contributions(node, self.problem)) + tail_term(node.D, self.problem.gamma)

    def _index(self, node: SetNode):
        heapq.heappush(self._bheap, (-(node.v + node.delta), -node.depth, node.id))
        heapq.heappush(self._vheaps.setdefault(node.depth, []), (-node.v, node.id))

    def templates_for(self, node: SetNode, decision: tuple[str, int]) -> list[ChildTemplate]:
        kind, k = decision
        if kind == DISCRETE:
            if k != node.D:
                raise ValueError(f"discrete split must happen at D={node.D}, got {k}")
            return discrete_child_descriptors(node, self.problem.Delta, self.problem.p)
        templates = continuous_child_descriptors(node, k, self.problem.M)
        if not self.config.reuse_middle_child:
            templates = with_reuse_disabled(templates)
        return templates

    def expand(self, node: SetNode, decision: Optional[tuple[str, int]] = None) -> Optional[list[SetNode]]:
        """Split ``node``; returns ``None`` without mutating anything if the budget cannot cover it."""
        if node.expanded:
            raise ValueError(f"node {node.id} is already expanded")
        if decision is None:
            decision = select_step_and_type(node, self.problem)
        templates = self.templates_for(node, decision)
        cost = split_cost(templates)
        if not self.ledger.can_afford(cost):
            return None
        model = self.problem.model
        children = []
        for t in templates:
            child = SetNode(
                id=len(self.nodes),
                parent=node.id,
                depth=t.depth,
                intervals=t.intervals,
                modes=t.modes,
                dwell=t.dwell,
            )
            if t.reuse_parent:
                child.states = node.states
                child.rewards = node.rewards
            else:
                states = node.states[: t.resim_from + 1]
                rewards = node.rewards[: t.resim_from]
                actions = representative_actions(child)
                x = states[-1]
                for k in range(t.resim_from, len(t.modes)):
                    c, d = actions[k]
                    x, r = model.step(x, c, d)
                    states.append(x)
                    rewards.append(check_reward(r))
                self.ledger.charge(len(t.modes) - t.resim_from)
                child.states = states
                child.rewards = rewards
            self._finalize(child)
            self.nodes.append(child)
            self._index(child)
            children.append(child)
            self.diag.per_depth_counts[child.depth] = self.diag.per_depth_counts.get(child.depth, 0) + 1
        node.expanded = True
        node.split = decision
        self.children[node.id] = [c.id for c in children]
        self.expansion_log.append(node.id)
        self.diag.expansions += 1
        self.diag.nodes_created = len(self.nodes)
        self.diag.deepest = max(self.diag.deepest, node.depth + 1)
        if decision[0] == CONTINUOUS:
            self.diag.continuous_splits += 1
        else:
            self.diag.discrete_splits += 1
        return children

    def _peek_b(self) -> Optional[SetNode]:
        while self._bheap:
            node = self.nodes[self._bheap[0][2]]
            if not node.expanded:
                return node
            heapq.heappop(self._bheap)
        return None

    def _peek_v(self, depth: int) -> Optional[SetNode]:
        heap = self._vheaps.get(depth)
        while heap:
            node = self.nodes[heap[0][1]]
            if not node.expanded:
                return node
            heapq.heappop(heap)
        return None

    def ophis_select(self) -> Optional[SetNode]:
        """Unexpanded node with the largest upper bound; ties prefer depth, then age."""
        return self._peek_b()

    def smallest_open_depth(self) -> Optional[int]:
        for depth in sorted(self._vheaps):
            if self._peek_v(depth) is not None:
                return depth
        return None

    def run_ophis(self):
        while True:
            node = self.ophis_select()
            if node is None or self.expand(node) is None:
                return

    def sophis_sweep(self, h_max: int) -> int:
        """One pass over the depths; returns expansions done, or -1 once the budget stops it."""
        H = self.smallest_open_depth()
        if H is None or H >= h_max:
            return 0
        done = 0
        while H < h_max:
            node = self._peek_v(H)
            if node is not None:
                if self.expand(node) is None:
                    return -1
                done += 1
            H += 1
        return done

    def run_sophis(self):
        h_max = self.config.resolved_h_max()
        while True:
            done = self.sophis_sweep(h_max)
            if done <= 0:
                return

    def run(self) -> PlanResult:
        t0 = time.perf_counter()
        if self.config.variant is Variant.OPHIS:
            self.run_ophis()
        else:
            self.run_sophis()
        self.diag.wall_time = time.perf_counter() - t0
        return self.result()

    def best_node(self) -> SetNode:
        return max(self.nodes, key=lambda n: (n.v, n.depth, -n.id))

    def result(self) -> PlanResult:
        best = self.best_node()
        expanded = [n.delta for n in self.nodes if n.expanded]
        gamma = self.problem.gamma
        delta_min = min(expanded) if expanded else 1.0 / (1.0 - gamma)
        self.diag.budget_used = self.ledger.used
        self.diag.nodes_created = len(self.nodes)
        if self.config.variant is Variant.OPHIS:
            open_b = [n.v + n.delta for n in self.nodes if not n.expanded]
            self.diag.best_bound = max(open_b) if open_b else None
        if not expanded:
            self.diag.warning = f"no expansion fitted in budget n={self.config.n}"
            log.warning(self.diag.warning)
        return PlanResult(
            actions=representative_actions(best),
            v_star=best.v,
            delta_min=delta_min,
            diagnostics=self.diag,
            best_node=best.id,
        )


def plan(problem: PlanningProblem, config: PlannerConfig, x0) -> PlanResult:
    return Planner(problem, config, x0).run()


@dataclass
class StepRecord:
    t: int
    state: list[float]
    c: float
    u: float
    u_applied: float
    mode: int
    reward: float
    v_star: float
    delta_min: float
    budget_used: int
    plan_time: float


@dataclass
class EpisodeLog:
    records: list[StepRecord]
    final_state: Any
    gamma: float
    dwell: int

    @property
    def rewards(self) -> list[float]:
        return [r.reward for r in self.records]

    @property
    def modes(self) -> list[int]:
        return [r.mode for r in self.records]

    def discounted_return(self) -> float:
        return sample_value(self.rewards, self.gamma)

    def undiscounted_return(self) -> float:
        return float(sum(self.rewards))

    def switch_count(self) -> int:
        m = self.modes
        return sum(1 for a, b in zip(m, m[1:]) if a != b)


def fallback_action(dwell: DwellState) -> tuple[float, int]:
    return 0.5, (dwell.last_mode if dwell.last_mode is not None else 0)


def receding_horizon_run(
    problem: PlanningProblem,
    config: PlannerConfig,
    x0,
    steps: int,
    progress: Optional[callable] = None,
) -> EpisodeLog:
    """Re-plan from every visited state and apply only the first action.

    The dwell state of the executed history seeds each new tree so that the
    switches chosen across plan boundaries keep the dwell-time constraint.
    """
    if steps < 1:
        raise ValueError("episode length must be >= 1")
    model = problem.model
    x = x0
    dwell = problem.initial_dwell
    records = []
    for t in range(steps):
        sub = PlanningProblem(
            model=model,
            M=problem.M,
            Delta=problem.Delta,
            gamma=problem.gamma,
            L_f=problem.L_f,
            L_rho=problem.L_rho,
            initial_dwell=dwell,
        )
        result = plan(sub, config, x)
        if result.actions:
            c, d = result.actions[0]
        else:
            c, d = fallback_action(dwell)
        if d not in eligible_modes(dwell, problem.Delta, problem.p):
            raise RuntimeError(f"planner proposed mode {d} violating the dwell state {dwell}")
        x_next, r = model.step(x, c, d)
        records.append(
            StepRecord(
                t=t,
                state=model.state_vector(x),
                c=c,
                u=model.u_min + c * (model.u_max - model.u_min),
                u_applied=model.applied_input(c, d),
                mode=d,
                reward=check_reward(r),
                v_star=result.v_star,
                delta_min=result.delta_min,
                budget_used=result.diagnostics.budget_used,
                plan_time=result.diagnostics.wall_time,
            )
        )
        dwell = dwell_after_append(dwell, d)
        x = x_next
        if progress is not None:
            progress(t, records[-1])
    return EpisodeLog(records=records, final_state=x, gamma=problem.gamma, dwell=problem.Delta)
