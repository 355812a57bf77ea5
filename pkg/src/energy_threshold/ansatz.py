"""Parameterized past-voltage trajectories on ``t <= 0`` and their time grids."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np


def _past_times(t):
    t = np.asarray(t, dtype=float)
    if np.any(t > 0):
        raise ValueError("trajectories are only defined for t <= 0")
    return t


@dataclass(frozen=True)
class ExponentialAnsatz:
    """``v(t) = A exp(alpha t)``."""

    A: float
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    @property
    def terminal_voltage(self) -> float:
        return self.A

    @property
    def slowest_rate(self) -> float:
        return self.alpha

    @property
    def fastest_rate(self) -> float:
        return self.alpha

    def voltage_range(self) -> tuple[float, float]:
        return (min(0.0, self.A), max(0.0, self.A))


@dataclass(frozen=True)
class BiexponentialAnsatz:
    """``v(t) = A exp(alpha t) - B exp(beta t)``; ``B > 0`` is hyperpolarizing."""

    A: float
    alpha: float
    B: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")
        if not self.B >= 0:
            raise ValueError(f"B must be nonnegative, got {self.B}")

    @property
    def terminal_voltage(self) -> float:
        return self.A - self.B

    @property
    def slowest_rate(self) -> float:
        return min(self.alpha, self.beta) if self.B > 0 else self.alpha

    @property
    def fastest_rate(self) -> float:
        return max(self.alpha, self.beta) if self.B > 0 else self.alpha

    def voltage_range(self) -> tuple[float, float]:
        # each term stays between 0 and its amplitude
        return (min(0.0, self.A) - self.B, max(0.0, self.A))


@dataclass(frozen=True)
class RiseHoldAnsatz:
    """Exponential rise to ``A`` reached at ``t = -hold``, then held at ``A`` until 0.

    Not an optimizer family: it probes whether holding a voltage extracts
    energy from the resistor (supply unbounded below).
    """

    A: float
    alpha: float
    hold: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.hold >= 0):
            raise ValueError("RiseHoldAnsatz needs alpha > 0 and hold >= 0")

    @property
    def terminal_voltage(self) -> float:
        return self.A

    @property
    def slowest_rate(self) -> float:
        return self.alpha

    @property
    def fastest_rate(self) -> float:
        return self.alpha

    def voltage_range(self) -> tuple[float, float]:
        return (min(0.0, self.A), max(0.0, self.A))


Ansatz = Union[ExponentialAnsatz, BiexponentialAnsatz, RiseHoldAnsatz]


def evaluate(a: Ansatz, t):
    t = _past_times(t)
    if isinstance(a, ExponentialAnsatz):
        return a.A * np.exp(a.alpha * t)
    if isinstance(a, BiexponentialAnsatz):
        return a.A * np.exp(a.alpha * t) - a.B * np.exp(a.beta * t)
    return a.A * np.exp(a.alpha * np.minimum(t + a.hold, 0.0))


def derivative(a: Ansatz, t):
    """Exact time derivative of the trajectory."""
    t = _past_times(t)
    if isinstance(a, ExponentialAnsatz):
        return a.alpha * a.A * np.exp(a.alpha * t)
    if isinstance(a, BiexponentialAnsatz):
        return a.alpha * a.A * np.exp(a.alpha * t) - a.beta * a.B * np.exp(a.beta * t)
    s = t + a.hold
    return np.where(s < 0, a.alpha * a.A * np.exp(a.alpha * np.minimum(s, 0.0)), 0.0)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid from ``t0`` to exactly 0 in ``n_steps`` steps."""

    t0: float
    n_steps: int

    def __post_init__(self):
        if not (self.t0 < 0 and self.n_steps >= 1):
            raise ValueError("TimeGrid needs t0 < 0 and at least one step")

    @property
    def dt(self) -> float:
        return -self.t0 / self.n_steps

    def nodes(self) -> np.ndarray:
        # linspace pins the last node to 0.0 exactly
        return np.linspace(self.t0, 0.0, self.n_steps + 1)

    def stage_times(self) -> np.ndarray:
        """Nodes and midpoints interleaved: RK4 stage times."""
        return np.linspace(self.t0, 0.0, 2 * self.n_steps + 1)

    def refined(self, factor: int) -> "TimeGrid":
        return TimeGrid(self.t0, self.n_steps * factor)


def truncation_grid(
    a: Ansatz, rel_tol: float = 1e-6, steps_per_timescale: int = 50, tau_min: float = math.inf
) -> TimeGrid:
    """Truncate the semi-infinite past where the trajectory has decayed to ``rel_tol``.

    The step resolves the fastest of the trajectory rates and the model time
    constant ``tau_min`` with ``steps_per_timescale`` steps each.
    """
    if not 0 < rel_tol < 1:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    if steps_per_timescale < 1:
        raise ValueError("steps_per_timescale must be >= 1")
    t0 = math.log(rel_tol) / a.slowest_rate
    if isinstance(a, RiseHoldAnsatz):
        t0 -= a.hold
    dt_max = min(1.0 / a.fastest_rate, tau_min) / steps_per_timescale
    return TimeGrid(t0, max(1, math.ceil(-t0 / dt_max)))
