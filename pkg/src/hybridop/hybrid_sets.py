"""Sets of hybrid-input sequences and the arithmetic on them.

A set fixes, for each of its first ``C`` steps, a sub-interval of the
normalized continuous range [0, 1], and for its first ``D`` steps a single
discrete mode.  Everything after those horizons is free.  Nothing in this
module evaluates a model; the planners fill in trajectories and rewards.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence

CONTINUOUS = "continuous"
DISCRETE = "discrete"


@dataclass(frozen=True)
class Interval:
    """Cell ``offset`` of the level-``level`` partition of [0, 1] into ``base**level`` pieces.

    Kept as integers so that deep refinements never accumulate rounding error;
    endpoints are materialized on demand as correctly rounded floats.
    """

    offset: int = 0
    level: int = 0
    base: int = 3

    def __post_init__(self):
        if self.base < 2:
            raise ValueError(f"split factor must be >= 2, got {self.base}")
        if self.level < 0 or not 0 <= self.offset < self.base**self.level:
            raise ValueError(f"invalid cell ({self.offset}, {self.level}) in base {self.base}")

    @property
    def lo(self) -> float:
        return self.offset / self.base**self.level

    @property
    def hi(self) -> float:
        return (self.offset + 1) / self.base**self.level

    @property
    def width(self) -> float:
        return 1.0 / self.base**self.level

    @property
    def center(self) -> float:
        return (2 * self.offset + 1) / (2 * self.base**self.level)

    def split(self) -> list[Interval]:
        """The ``base`` equal sub-intervals, left to right."""
        first = self.offset * self.base
        return [Interval(first + j, self.level + 1, self.base) for j in range(self.base)]

    def __repr__(self):
        return f"Interval([{self.lo:.6g}, {self.hi:.6g}])"


UNIT = Interval()


@dataclass(frozen=True)
class DwellState:
    """Trailing-run bookkeeping for the discrete input.

    ``last_mode`` is ``None`` until some mode is definite.  ``ever_switched``
    records whether any switch happened; the first run is never constrained.
    """

    last_mode: Optional[int] = None
    run_length: int = 0
    ever_switched: bool = False

    def __post_init__(self):
        if self.last_mode is None:
            if self.run_length != 0 or self.ever_switched:
                raise ValueError("a dwell state without a mode must be empty")
        elif self.run_length < 1:
            raise ValueError("run_length must be >= 1 once a mode is definite")

    def constrained(self, Delta: int) -> bool:
        return self.ever_switched and self.run_length < Delta

    def as_dict(self) -> dict:
        return {
            "last_mode": self.last_mode,
            "run_length": self.run_length,
            "ever_switched": self.ever_switched,
        }


def eligible_modes(dwell: DwellState, Delta: int, p: int) -> list[int]:
    """Modes that may be appended next without breaking the dwell-time constraint."""
    if dwell.constrained(Delta):
        return [dwell.last_mode]
    return list(range(p + 1))


def dwell_after_append(dwell: DwellState, d: int) -> DwellState:
    if dwell.last_mode is None:
        return DwellState(d, 1, False)
    if d == dwell.last_mode:
        return DwellState(d, dwell.run_length + 1, dwell.ever_switched)
    return DwellState(d, 1, True)


def dwell_of(modes: Sequence[int], initial: DwellState = DwellState()) -> DwellState:
    dwell = initial
    for d in modes:
        dwell = dwell_after_append(dwell, d)
    return dwell


def is_dwell_valid(modes: Sequence[int], Delta: int, initial: DwellState = DwellState()) -> bool:
    """Check that ``modes`` is a valid finite prefix of a dwell-respecting sequence.

    Works on maximal runs directly: every run that starts with a switch must
    last at least ``Delta`` steps, unless it is still open at the end.
    """
    full = [initial.last_mode] * initial.run_length + list(modes)
    if not full:
        return True
    # the carried-in run starts with a switch iff one happened before it
    runs = []
    start = 0
    for k in range(1, len(full) + 1):
        if k == len(full) or full[k] != full[start]:
            runs.append((start, k - start))
            start = k
    for idx, (s, length) in enumerate(runs):
        after_switch = s > 0 or initial.ever_switched
        is_last = idx == len(runs) - 1
        if after_switch and not is_last and length < Delta:
            return False
    return True


@dataclass
class SetNode:
    """One node of the planning tree.

    ``states`` holds x_0..x_D and ``rewards`` r_1..r_D, both obtained by
    simulating the representative (interval-center) actions.
    """

    id: int
    parent: Optional[int]
    depth: int
    intervals: tuple[Interval, ...]
    modes: tuple[int, ...]
    dwell: DwellState
    states: list[Any] = field(default_factory=list, repr=False)
    rewards: list[float] = field(default_factory=list, repr=False)
    v: float = 0.0
    delta: float = 0.0
    expanded: bool = False
    split: Optional[tuple[str, int]] = None

    @property
    def C(self) -> int:
        return len(self.intervals)

    @property
    def D(self) -> int:
        return len(self.modes)

    @property
    def B(self) -> float:
        return upper_bound(self)

    def width(self, k: int) -> float:
        return self.intervals[k].width if k < len(self.intervals) else 1.0

    def constrained(self, Delta: int) -> bool:
        return self.dwell.constrained(Delta)


@dataclass(frozen=True)
class ChildTemplate:
    """Structure of a child before simulation.

    Steps ``resim_from .. D-1`` of the trajectory must be (re)computed, unless
    ``reuse_parent`` says the representative sequence is the parent's own.
    """

    intervals: tuple[Interval, ...]
    modes: tuple[int, ...]
    dwell: DwellState
    depth: int
    resim_from: int
    reuse_parent: bool = False

    @property
    def n_new_steps(self) -> int:
        return 0 if self.reuse_parent else len(self.modes) - self.resim_from


def _lambda(width: float, k: int, D: int, gamma: float, L_f: float, L_rho: float) -> float:
    q = gamma * L_f
    if q == 1.0:
        tail = float(D - k)
    else:
        tail = (1.0 - q ** (D - k)) / (1.0 - q)
    return L_rho * width * gamma**k * tail


def contribution_lambda(node: SetNode, k: int, problem) -> float:
    """Contribution of step ``k`` to the continuous part of the diameter."""
    if not 0 <= k < node.D:
        raise IndexError(f"step {k} outside the discrete horizon D={node.D}")
    return _lambda(node.width(k), k, node.D, problem.gamma, problem.L_f, problem.L_rho)


def contributions(node: SetNode, problem) -> list[float]:
    return [
        _lambda(node.width(k), k, node.D, problem.gamma, problem.L_f, problem.L_rho)
        for k in range(node.D)
    ]


def tail_term(D: int, gamma: float) -> float:
    return gamma**D / (1.0 - gamma)


def diameter(node: SetNode, problem) -> float:
    return sum(contributions(node, problem)) + tail_term(node.D, problem.gamma)


def upper_bound(node: SetNode) -> float:
    return node.v + node.delta


def sample_value(rewards: Sequence[float], gamma: float) -> float:
    total = 0.0
    g = 1.0
    for r in rewards:
        total += g * r
        g *= gamma
    return total


def continuous_child_descriptors(node: SetNode, k: int, M: int) -> list[ChildTemplate]:
    """Split the interval at step ``k`` into ``M`` equal pieces.

    ``k == C`` refines a fresh step, extending the continuous horizon by one.
    """
    if not 0 <= k <= node.C:
        raise ValueError(f"continuous split at step {k} but C={node.C}")
    if k >= node.D:
        raise ValueError(f"continuous split at step {k} beyond D={node.D}")
    parent_iv = node.intervals[k] if k < node.C else Interval(0, 0, M)
    if parent_iv.base != M:
        raise ValueError(f"interval base {parent_iv.base} does not match M={M}")
    middle = (M - 1) // 2 if M % 2 == 1 else None
    out = []
    for j, piece in enumerate(parent_iv.split()):
        if k < node.C:
            ivs = node.intervals[:k] + (piece,) + node.intervals[k + 1 :]
        else:
            ivs = node.intervals + (piece,)
        out.append(
            ChildTemplate(
                intervals=ivs,
                modes=node.modes,
                dwell=node.dwell,
                depth=node.depth + 1,
                resim_from=k,
                reuse_parent=(j == middle),
            )
        )
    return out


def discrete_child_descriptors(node: SetNode, Delta: int, p: int) -> list[ChildTemplate]:
    """Make the mode at step ``D`` definite: one child per eligible mode."""
    return [
        ChildTemplate(
            intervals=node.intervals,
            modes=node.modes + (d,),
            dwell=dwell_after_append(node.dwell, d),
            depth=node.depth + 1,
            resim_from=node.D,
        )
        for d in eligible_modes(node.dwell, Delta, p)
    ]


def representative_actions(node) -> list[tuple[float, int]]:
    """Interval centers paired with the definite modes, one pair per step < D."""
    C = len(node.intervals)
    return [
        (node.intervals[k].center if k < C else 0.5, d) for k, d in enumerate(node.modes)
    ]


def with_reuse_disabled(templates: list[ChildTemplate]) -> list[ChildTemplate]:
    return [replace(t, reuse_parent=False) for t in templates]
