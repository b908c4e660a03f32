"""Benchmark systems: quantized-NCS pendulum, SIRW epidemic, synthetic fixtures."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .model import ModelError, SystemModel, scale_input

LEFT, CENTER, RIGHT = 0, 1, 2
TritString = tuple[int, ...]


# -- trit codec -------------------------------------------------------------


def trit_index(c: float, t: int) -> int:
    """Index of the level-t ternary cell holding ``c``; a boundary goes to the lower cell."""
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"normalized value {c} outside [0, 1]")
    num, den = float(c).as_integer_ratio()
    scaled = num * 3**t
    # ceil(c * 3**t) - 1, computed exactly
    idx = -((-scaled) // den) - 1
    return max(idx, 0)


def trit_encode(c: float, t: int) -> TritString:
    if t < 0:
        raise ValueError("trit count must be >= 0")
    idx = trit_index(c, t)
    trits = []
    for _ in range(t):
        idx, r = divmod(idx, 3)
        trits.append(r)
    return tuple(reversed(trits))


def trit_decode(ts: Sequence[int]) -> float:
    """Center of the interval addressed by the trits."""
    idx = 0
    for trit in ts:
        if trit not in (LEFT, CENTER, RIGHT):
            raise ValueError(f"invalid trit {trit!r}")
        idx = 3 * idx + trit
    return (2 * idx + 1) / (2 * 3 ** len(ts))


def quantize(c: float, t: int) -> float:
    """decode(encode(c, t)) without building the trit string."""
    return (2 * trit_index(c, t) + 1) / (2 * 3**t)


# -- inverted pendulum ------------------------------------------------------


@dataclass(frozen=True)
class PendulumParams:
    J: float = 1.91e-4
    m: float = 0.055
    g: float = 9.81
    l: float = 0.042
    b: float = 3e-6
    K: float = 0.0536
    R: float = 9.5
    Ts: float = 0.05
    max_speed: float = 15 * math.pi

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value <= 0:
                raise ValueError(f"pendulum parameter {name} must be positive, got {value}")


def wrap_angle(a: float) -> float:
    return (a + math.pi) % (2 * math.pi) - math.pi


def pendulum_step(x, u: float, params: PendulumParams = PendulumParams()) -> tuple[float, float]:
    """One explicit Euler step; the angle is wrapped and the speed saturated afterwards."""
    alpha, omega = x
    P = params
    acc = (P.m * P.g * P.l * math.sin(alpha) - P.b * omega - P.K**2 * omega / P.R + P.K * u / P.R) / P.J
    alpha_next = wrap_angle(alpha + P.Ts * omega)
    omega_next = min(max(omega + P.Ts * acc, -P.max_speed), P.max_speed)
    return alpha_next, omega_next


def pendulum_reward(x_next, u: float) -> float:
    alpha = x_next[0]
    return 1.0 - 0.75 * alpha**2 / math.pi**2 - 0.25 * u**2 / 9.0


class PendulumModel(SystemModel):
    """Unquantized pendulum; the reward is evaluated on the post-step angle."""

    state_dim = 2
    state_names = ("alpha", "omega")

    def __init__(self, params: PendulumParams = PendulumParams(), u_range=(-3.0, 3.0), n_modes: int = 1):
        self.params = params
        self.dt = params.Ts
        self.u_min, self.u_max = map(float, u_range)
        self.n_modes = n_modes

    def input_for(self, c: float, d: int) -> float:
        return scale_input(c, self.u_min, self.u_max)

    def applied_input(self, c: float, d: int) -> float:
        return self.input_for(c, d)

    def step(self, x, c, d):
        u = self.input_for(c, d)
        x_next = pendulum_step(x, u, self.params)
        return x_next, pendulum_reward(x_next, u)

    def state_distance(self, x, y) -> float:
        da = abs(wrap_angle(x[0] - y[0]))
        return math.hypot(da, x[1] - y[1])

    def sample_state(self, rng):
        P = self.params
        return float(rng.uniform(-math.pi, math.pi)), float(rng.uniform(-P.max_speed, P.max_speed))

    def lipschitz_bounds(self) -> tuple[float, float]:
        """Analytic (L_f, L_rho) in the angle-wrapped Euclidean metric.

        The Jacobian's operator norm is bounded by its Frobenius norm with
        |cos| <= 1; wrapping and saturation are 1-Lipschitz in this metric.
        """
        P = self.params
        span = self.u_max - self.u_min
        friction = P.b + P.K**2 / P.R
        jac = math.sqrt(1 + P.Ts**2 + (P.Ts * P.m * P.g * P.l / P.J) ** 2 + (1 - P.Ts * friction / P.J) ** 2)
        dc = P.Ts * P.K * span / (P.R * P.J)
        L_f = max(jac, dc)
        u_abs = max(abs(self.u_min), abs(self.u_max))
        reward_x = 1.5 / math.pi * math.sqrt(1 + P.Ts**2)
        reward_c = 0.25 / 9.0 * 2 * u_abs * span
        return L_f, max(reward_x, reward_c)


class NCSPendulumModel(PendulumModel):
    """Pendulum driven over a network whose mode sets how many trits are sent.

    ``mode_trits[d]`` is the number of trits transmitted in mode d; the
    actuator applies the center of the addressed cell.
    """

    def __init__(self, mode_trits: Sequence[int] = (60, 1), params: PendulumParams = PendulumParams(), u_range=(-3.0, 3.0)):
        super().__init__(params, u_range, n_modes=len(mode_trits))
        if any(t < 0 for t in mode_trits):
            raise ValueError("trit counts must be nonnegative")
        self.mode_trits = tuple(int(t) for t in mode_trits)

    def input_for(self, c, d):
        return scale_input(quantize(c, self.mode_trits[d]), self.u_min, self.u_max)


def ncs_pendulum_model(mode_trits: Sequence[int] = (60, 1), params: PendulumParams = PendulumParams()) -> NCSPendulumModel:
    return NCSPendulumModel(mode_trits, params)


# -- SIRW epidemic ----------------------------------------------------------


@dataclass(frozen=True)
class SirParams:
    beta: float = 0.3566
    gamma: float = 0.0858
    nu: float = 0.04
    quarantine_gain: float = 0.5
    substeps: int = 10
    period: float = 1.0
    clamp_beta: bool = False
    quarantine: bool = True
    population: float = 1.0
    I0: float = 0.0038

    def initial_state(self) -> tuple[float, float, float, float]:
        return (1.0 - self.I0, self.I0, 0.0, 0.0)


SIRW_NEG_TOL = 1e-9


def sirw_step(x, u_c: float, u_d: int, params: SirParams = SirParams()):
    """Integrate the SIRW model over one control period; returns (next state, reward).

    The reward uses the infected fraction at the start of the period.
    """
    S, I, R, W = x
    P = params
    beta = P.beta - P.quarantine_gain * u_c if P.quarantine else P.beta
    if P.clamp_beta:
        beta = max(beta, 0.0)
    vac = P.nu * u_d
    h = P.period / P.substeps
    for _ in range(P.substeps):
        infect = beta * S * I
        recover = P.gamma * I
        moved = vac * S
        S, I, R, W = S - h * (infect + moved), I + h * (infect - recover), R + h * recover, W + h * moved
    if min(S, I, R, W) < -SIRW_NEG_TOL:
        raise ModelError(f"SIRW integration left the simplex: {(S, I, R, W)}")
    c_cost = u_c if P.quarantine else 0.0
    reward = 1.0 - 0.9998 * x[1] - 0.0001 * c_cost - 0.0001 * u_d
    return (S, I, R, W), min(max(reward, 0.0), 1.0)


class SirwModel(SystemModel):
    """Quarantine level as continuous input, vaccination on/off as the mode."""

    state_dim = 4
    n_modes = 2
    u_min = 0.0
    u_max = 1.0
    state_names = ("S", "I", "R", "W")

    def __init__(self, params: SirParams = SirParams()):
        self.params = params
        self.dt = params.period

    def step(self, x, c, d):
        return sirw_step(x, c, d, self.params)

    def applied_input(self, c, d):
        return c if self.params.quarantine else 0.0

    def sample_state(self, rng):
        s = rng.dirichlet(np.ones(4))
        return tuple(float(v) for v in s)


def infection_integral(I_series: Sequence[float], period: float = 1.0) -> float:
    """Trapezoid rule on per-period samples of I."""
    I = np.asarray(I_series, dtype=float)
    if I.size < 2:
        return 0.0
    return float(period * (I[0] / 2 + I[1:-1].sum() + I[-1] / 2))


# -- synthetic fixtures -----------------------------------------------------


class ConstantRewardModel(SystemModel):
    """Identity dynamics and reward 1 everywhere, so every node looks alike."""

    state_dim = 1

    def __init__(self, n_modes: int = 2, reward: float = 1.0):
        self.n_modes = n_modes
        self.reward = reward

    def step(self, x, c, d):
        return x, self.reward

    def lipschitz_bounds(self) -> tuple[float, float]:
        return 1.0, 0.0


@dataclass
class LinearModel(SystemModel):
    """x' = a x + b c + offset[d] with reward clip(1 - |x - x_ref|, 0, 1) on the pre-step state."""

    a: float = 0.5
    b: float = 0.1
    offsets: tuple[float, ...] = (0.0, 0.35)
    x_ref: float = 0.6
    state_dim: int = field(default=1, init=False)

    def __post_init__(self):
        self.offsets = tuple(self.offsets)
        self.n_modes = len(self.offsets)

    def step(self, x, c, d):
        r = 1.0 - abs(x - self.x_ref)
        return self.a * x + self.b * c + self.offsets[d], min(max(r, 0.0), 1.0)

    def step_batch(self, x: np.ndarray, c: np.ndarray, d: int):
        r = np.clip(1.0 - np.abs(x - self.x_ref), 0.0, 1.0)
        return self.a * x + self.b * c + self.offsets[d], r

    def lipschitz_bounds(self) -> tuple[float, float]:
        return abs(self.a) + abs(self.b), 1.0

    def sample_state(self, rng):
        return float(rng.uniform(-1.0, 1.0))


def synthetic_models() -> dict[str, SystemModel]:
    return {"constant": ConstantRewardModel(), "linear": LinearModel()}
