"""System interface, value evaluation and Lipschitz utilities."""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

HybridSequence = Sequence[tuple[float, int]]


class ModelError(RuntimeError):
    """A model step produced something outside its contract."""


class SystemModel(ABC):
    """Deterministic discrete-time system with a hybrid input.

    ``step`` receives the normalized continuous action ``c`` in [0, 1] and a
    mode ``d`` in ``0..n_modes-1`` and returns the next state together with
    the reward r_{k+1} = rho(x_k, u_k) in [0, 1].
    """

    state_dim: int = 1
    n_modes: int = 1
    u_min: float = 0.0
    u_max: float = 1.0
    dt: float = 1.0
    state_names: tuple[str, ...] = ("x",)

    @abstractmethod
    def step(self, x: Any, c: float, d: int) -> tuple[Any, float]: ...

    def applied_input(self, c: float, d: int) -> float:
        """Physical input that actually reaches the plant."""
        return scale_input(c, self.u_min, self.u_max)

    def state_distance(self, x, y) -> float:
        return float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))

    def sample_state(self, rng: np.random.Generator):
        return tuple(rng.uniform(-1.0, 1.0, size=self.state_dim))

    def state_vector(self, x) -> list[float]:
        return [float(v) for v in np.atleast_1d(np.asarray(x, dtype=float))]


def scale_input(c: float, u_min: float, u_max: float) -> float:
    return u_min + c * (u_max - u_min)


def unscale_input(u: float, u_min: float, u_max: float) -> float:
    return (u - u_min) / (u_max - u_min)


def semimetric_bound(
    seq_a: HybridSequence,
    seq_b: HybridSequence,
    L_rho: float,
    L_f: float,
    gamma: float,
    K: int,
) -> float:
    """Upper bound on |v(a) - v(b)| from the first K steps of two sequences.

    The sum runs up to the first mode disagreement D; when the modes agree on
    all K steps the discrete tail is replaced by the truncation slack
    gamma**K / (1 - gamma).
    """
    if len(seq_a) != len(seq_b):
        raise ValueError(f"sequence lengths differ: {len(seq_a)} vs {len(seq_b)}")
    if len(seq_a) < K:
        raise ValueError(f"sequences shorter than horizon K={K}")
    D = K
    for k in range(K):
        if seq_a[k][1] != seq_b[k][1]:
            D = k
            break
    q = gamma * L_f
    total = 0.0
    for k in range(D):
        tail = (D - k) if q == 1.0 else (1.0 - q ** (D - k)) / (1.0 - q)
        total += abs(seq_a[k][0] - seq_b[k][0]) * gamma**k * tail
    return L_rho * total + gamma**D / (1.0 - gamma)


def rollout(model: SystemModel, x0, seq: HybridSequence) -> tuple[list, list[float]]:
    states = [x0]
    rewards = []
    x = x0
    for c, d in seq:
        x, r = model.step(x, c, d)
        states.append(x)
        rewards.append(r)
    return states, rewards


def truncated_value(model: SystemModel, x0, seq: HybridSequence, gamma: float) -> tuple[float, float]:
    """Bracket [lower, upper] on the value of any infinite extension of ``seq``."""
    _, rewards = rollout(model, x0, seq)
    lower = 0.0
    g = 1.0
    for r in rewards:
        lower += g * r
        g *= gamma
    return lower, lower + gamma ** len(seq) / (1.0 - gamma)


@dataclass
class LipschitzReport:
    samples: int
    max_dynamics_ratio: float
    max_reward_ratio: float
    L_f: float
    L_rho: float
    gamma: float
    dynamics_ok: bool
    reward_ok: bool
    contraction_ok: bool
    note: str = "sampling can refute but never prove a Lipschitz constant"

    @property
    def ok(self) -> bool:
        return self.dynamics_ok and self.reward_ok and self.contraction_ok

    def as_dict(self) -> dict:
        return {
            "samples": self.samples,
            "max_dynamics_ratio": self.max_dynamics_ratio,
            "max_reward_ratio": self.max_reward_ratio,
            "L_f": self.L_f,
            "L_rho": self.L_rho,
            "gamma": self.gamma,
            "gamma_L_f": self.gamma * self.L_f,
            "dynamics_ok": self.dynamics_ok,
            "reward_ok": self.reward_ok,
            "contraction_ok": self.contraction_ok,
            "note": self.note,
        }


def validate_lipschitz(
    model: SystemModel,
    N: int,
    L_f: float,
    L_rho: float,
    gamma: float = 0.8,
    rng: np.random.Generator | None = None,
    local_scale: float = 0.05,
) -> LipschitzReport:
    """Empirical check of the Lipschitz constants and of gamma * L_f < 1.

    Half the pairs are drawn independently, half as small perturbations of
    each other, since the steepest ratios tend to be local.
    """
    if N < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(0) if rng is None else rng
    max_f = 0.0
    max_r = 0.0
    for i in range(N):
        x = model.sample_state(rng)
        d = int(rng.integers(model.n_modes))
        c = float(rng.uniform())
        if i % 2 == 0:
            y = model.sample_state(rng)
            c2 = float(rng.uniform())
        else:
            xv = np.asarray(x, dtype=float)
            y = _like(x, xv + rng.normal(scale=local_scale, size=xv.shape))
            c2 = float(np.clip(c + rng.normal(scale=local_scale), 0.0, 1.0))
        denom = model.state_distance(x, y) + abs(c - c2)
        if denom <= 1e-12:
            continue
        fx, rx = model.step(x, c, d)
        fy, ry = model.step(y, c2, d)
        max_f = max(max_f, model.state_distance(fx, fy) / denom)
        max_r = max(max_r, abs(rx - ry) / denom)
    return LipschitzReport(
        samples=N,
        max_dynamics_ratio=max_f,
        max_reward_ratio=max_r,
        L_f=L_f,
        L_rho=L_rho,
        gamma=gamma,
        dynamics_ok=max_f <= L_f,
        reward_ok=max_r <= L_rho,
        contraction_ok=gamma * L_f < 1.0,
    )


def _like(template, values: np.ndarray):
    if isinstance(template, np.ndarray):
        return values
    if isinstance(template, tuple):
        return tuple(float(v) for v in values)
    if np.ndim(template) == 0:
        return float(values)
    return list(values)


def check_reward(r: float) -> float:
    if not (0.0 <= r <= 1.0) or math.isnan(r):
        raise ModelError(f"reward {r!r} outside [0, 1]")
    return r
