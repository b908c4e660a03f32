"""Brute-force references: dwell-valid enumeration, grid search, tree census."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .hybrid_sets import DwellState, SetNode, dwell_after_append, eligible_modes, is_dwell_valid
from .model import SystemModel


class OracleTooLarge(RuntimeError):
    def __init__(self, size: int, cap: int):
        super().__init__(f"exhaustive search needs {size:,} evaluations, above the cap of {cap:,}")
        self.size = size
        self.cap = cap


def enumerate_dwell_sequences(p: int, Delta: int, K: int, initial: DwellState = DwellState()) -> list[tuple[int, ...]]:
    """All length-K mode sequences that are valid prefixes given the carried dwell state."""
    if K < 0:
        raise ValueError("horizon must be >= 0")
    out: list[tuple[int, ...]] = []

    def rec(prefix: tuple[int, ...], dwell: DwellState):
        if len(prefix) == K:
            out.append(prefix)
            return
        for d in eligible_modes(dwell, Delta, p):
            rec(prefix + (d,), dwell_after_append(dwell, d))

    rec((), initial)
    return out


def random_dwell_modes(
    rng: np.random.Generator, p: int, Delta: int, K: int, initial: DwellState = DwellState(), switch_prob: float = 0.5
) -> list[int]:
    """Random valid mode prefix; when free, switches away from the last mode with ``switch_prob``."""
    modes = []
    dwell = initial
    for _ in range(K):
        allowed = eligible_modes(dwell, Delta, p)
        if dwell.last_mode is None or len(allowed) == 1:
            d = int(rng.choice(allowed))
        elif rng.uniform() < switch_prob:
            d = int(rng.choice([m for m in allowed if m != dwell.last_mode]))
        else:
            d = dwell.last_mode
        modes.append(d)
        dwell = dwell_after_append(dwell, d)
    return modes


def random_dwell_sequence(
    rng: np.random.Generator, p: int, Delta: int, K: int, initial: DwellState = DwellState()
) -> list[tuple[float, int]]:
    modes = random_dwell_modes(rng, p, Delta, K, initial, switch_prob=float(rng.uniform()))
    return [(float(c), d) for c, d in zip(rng.uniform(size=K), modes)]


def discrete_tree_bound(p: int, Delta: int, D: int) -> float:
    """Size bound (p+1)^2 Delta [Delta (p+1)]^(D/Delta) on the dwell-constrained discrete tree."""
    return (p + 1) ** 2 * Delta * (Delta * (p + 1)) ** (D / Delta)


def grid_points(G: int, aligned: bool = True) -> np.ndarray:
    """Cell centers of a G-cell partition (aligned) or G uniformly spaced points including 0 and 1."""
    if G < 1:
        raise ValueError("grid needs at least one point")
    if aligned:
        return (2 * np.arange(G) + 1) / (2 * G)
    return np.linspace(0.0, 1.0, G) if G > 1 else np.array([0.5])


@dataclass
class OracleResult:
    best_value: float
    best_sequence: list[tuple[float, int]]
    sequences_evaluated: int
    grid_resolution: int
    mode_sequences: int = 0

    def as_dict(self) -> dict:
        return {
            "best_value": self.best_value,
            "best_sequence": [[c, d] for c, d in self.best_sequence],
            "sequences_evaluated": self.sequences_evaluated,
            "grid_resolution": self.grid_resolution,
            "mode_sequences": self.mode_sequences,
        }


def exhaustive_search(
    model: SystemModel,
    x0,
    K: int,
    G: int,
    Delta: int,
    gamma: float,
    initial: DwellState = DwellState(),
    cap: int = 10**7,
    aligned: bool = True,
) -> OracleResult:
    """Best truncated value over the continuous grid times every dwell-valid mode sequence."""
    grid = grid_points(G, aligned)
    mode_seqs = enumerate_dwell_sequences(model.n_modes - 1, Delta, K, initial)
    size = G**K * len(mode_seqs)
    if size > cap:
        raise OracleTooLarge(size, cap)
    if K == 0:
        return OracleResult(0.0, [], 1, G, 1)
    best_value = -math.inf
    best_seq: list[tuple[float, int]] = []
    batched = hasattr(model, "step_batch")
    for modes in mode_seqs:
        if batched:
            value, cells = _search_batched(model, x0, modes, grid, gamma)
        else:
            value, cells = _search_scalar(model, x0, modes, grid, gamma)
        if value > best_value:
            best_value = value
            best_seq = [(float(grid[j]), d) for j, d in zip(cells, modes)]
    return OracleResult(best_value, best_seq, size, G, len(mode_seqs))


def _search_batched(model, x0, modes, grid, gamma):
    G = len(grid)
    x = np.full(1, x0, dtype=float)
    vals = np.zeros(1)
    for k, d in enumerate(modes):
        x = np.repeat(x, G)
        c = np.tile(grid, G**k)
        x, r = model.step_batch(x, c, d)
        vals = np.repeat(vals, G) + gamma**k * r
    idx = int(np.argmax(vals))
    cells = []
    for _ in modes:
        idx, j = divmod(idx, G)
        cells.append(j)
    return float(vals.max()), cells[::-1]


def _search_scalar(model, x0, modes, grid, gamma):
    best = [-math.inf, []]

    def rec(k, x, acc, cells):
        if k == len(modes):
            if acc > best[0]:
                best[0], best[1] = acc, list(cells)
            return
        for j, c in enumerate(grid):
            x2, r = model.step(x, float(c), modes[k])
            cells.append(j)
            rec(k + 1, x2, acc + gamma**k * r, cells)
            cells.pop()

    rec(0, x0, 0.0, [])
    return best[0], best[1]


# -- near-optimal tree census -----------------------------------------------


@dataclass
class DepthCensus:
    depth: int
    count: int
    total: int
    cap: float
    shapes: list[tuple[int, int]]

    def as_dict(self) -> dict:
        return {
            "depth": self.depth,
            "count": self.count,
            "total": self.total,
            "cap": self.cap,
            "shapes": [list(s) for s in self.shapes],
        }


@dataclass
class CensusReport:
    per_depth: list[DepthCensus]
    K_hat: float
    K_bar: float
    v_reference: float
    fit_intercept: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def counts(self) -> list[int]:
        return [d.count for d in self.per_depth]

    def within_cap(self) -> bool:
        return all(d.count <= d.cap for d in self.per_depth)

    def as_dict(self) -> dict:
        return {
            "per_depth": [d.as_dict() for d in self.per_depth],
            "K_hat": self.K_hat,
            "K_bar": self.K_bar,
            "v_reference": self.v_reference,
            "fit_intercept": self.fit_intercept,
            "within_cap": self.within_cap(),
            "notes": self.notes,
        }


def branching_factor_cap(p: int, Delta: int, M: int) -> float:
    return max(Delta * (p + 1), M**Delta) ** (1.0 / Delta)


def node_cap(p: int, Delta: int, M: int, D: int, h: int) -> float:
    return discrete_tree_bound(p, Delta, D) * M**h


def fit_branching_factor(depths: Sequence[int], counts: Sequence[int], Delta: int) -> tuple[float, float]:
    """Least-squares fit of log count = log C + (H / Delta) log K; returns (K, C)."""
    pts = [(h / Delta, math.log(c)) for h, c in zip(depths, counts) if c > 0]
    if len(pts) < 2:
        return 1.0, float(counts[0]) if counts else 1.0
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    slope, intercept = np.polyfit(xs, ys, 1)
    return float(math.exp(slope)), float(math.exp(intercept))


def near_optimal_census(
    nodes: Sequence[SetNode],
    v_reference: float,
    problem,
    tol: float = 1e-12,
) -> CensusReport:
    """Count, per depth, dwell-valid nodes whose upper bound reaches ``v_reference``.

    Each node is tested with its own diameter.  The cap at a depth sums the
    bound over the distinct (discrete, continuous) split counts seen there.
    """
    p, Delta, M = problem.p, problem.Delta, problem.M
    by_depth: dict[int, list[SetNode]] = {}
    for n in nodes:
        by_depth.setdefault(n.depth, []).append(n)
    per_depth = []
    for depth in sorted(by_depth):
        group = by_depth[depth]
        count = sum(
            1
            for n in group
            if n.v + n.delta >= v_reference - tol and is_dwell_valid(n.modes, Delta, problem.initial_dwell)
        )
        shapes = sorted({(n.D, n.depth - n.D) for n in group})
        cap = sum(node_cap(p, Delta, M, D, h) for D, h in shapes)
        per_depth.append(DepthCensus(depth, count, len(group), cap, shapes))
    K_hat, C_hat = fit_branching_factor([d.depth for d in per_depth], [d.count for d in per_depth], Delta)
    return CensusReport(
        per_depth=per_depth,
        K_hat=K_hat,
        K_bar=branching_factor_cap(p, Delta, M),
        v_reference=v_reference,
        fit_intercept=C_hat,
    )


def full_expansion(problem, x0, depth: int, reuse_middle_child: bool = True):
    """Expand every node above ``depth``; returns the planner holding the tree."""
    from .planners import Planner, PlannerConfig, Variant

    planner = Planner(problem, PlannerConfig(Variant.OPHIS, n=10**15, reuse_middle_child=reuse_middle_child), x0)
    i = 0
    while i < len(planner.nodes):
        node = planner.nodes[i]
        if node.depth < depth:
            planner.expand(node)
        i += 1
    return planner
