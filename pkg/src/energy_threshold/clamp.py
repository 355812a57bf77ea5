"""Dynamic voltage clamp and the supplied-energy functional.

The membrane voltage is forced along an ansatz trajectory.  Internal state
(HH gates or the FHN recovery variable) is integrated with fixed-step RK4,
the injected current is rebuilt from the circuit equation and the supply is
accumulated branch by branch with the trapezoid rule.  The capacitive
contribution is exact: it telescopes to the storage ``C v(0)^2 / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from ._kernels import rk4_clamped_linear
from .ansatz import Ansatz, TimeGrid, derivative, evaluate, truncation_grid
from .models import (
    FitzHughNagumo,
    GatingState,
    HodgkinHuxley,
    ModelSpec,
    branch_currents,
    fastest_time_constant,
    hh_rates,
    steady_state,
)

GATE_BOUND_TOL = 1e-9


class NumericalError(RuntimeError):
    """A simulation produced non-finite values."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class Tolerances:
    rel_tol: float = 1e-6
    steps_per_timescale: int = 50
    refine_tol: float = 1e-3

    def __post_init__(self):
        if not 0 < self.rel_tol < 1:
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.steps_per_timescale < 1:
            raise ValueError("steps_per_timescale must be >= 1")
        if not 0 < self.refine_tol < 1:
            raise ValueError("refine_tol must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class SupplyBreakdown:
    """Supplied energy split into storage and per-branch integrals of ``i_k v``.

    ``total == sum(branches.values()) + storage``.  Branch integrals are signed:
    negative values mean energy drawn from the internal batteries.
    """

    total: float
    storage: float
    branches: dict[str, float]
    t: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    i: np.ndarray = field(repr=False)
    state: dict[str, np.ndarray] = field(repr=False)
    cumulative_supply: np.ndarray = field(repr=False)

    def balance_residual(self) -> float:
        return abs(self.total - sum(self.branches.values()) - self.storage)


@dataclass(frozen=True, eq=False)
class ClampResult:
    supply: SupplyBreakdown
    final_state: object
    grid: TimeGrid
    gate_violations: int = 0


def _integrate_state(spec: ModelSpec, v_stage: np.ndarray, dt: float):
    """Integrate the internal state under the forced voltage; None if memoryless."""
    if isinstance(spec, HodgkinHuxley):
        r = hh_rates(v_stage)
        gates = ("m", "h", "n")
        drive = np.stack([r[x].alpha for x in gates], axis=1)
        decay = np.stack([r[x].alpha + r[x].beta for x in gates], axis=1)
        x0 = steady_state(spec, v_stage[0]).as_array()
        unit = True
    elif isinstance(spec, FitzHughNagumo):
        gates = ("w",)
        drive = v_stage[:, None].copy()
        decay = np.full_like(drive, spec.gamma)
        x0 = np.array([steady_state(spec, v_stage[0])], dtype=float)
        unit = False
    else:
        return None, 0
    x, violations, bad = rk4_clamped_linear(drive, decay, x0, dt, unit, GATE_BOUND_TOL)
    if bad >= 0:
        raise NumericalError(f"non-finite internal state at step {bad}", step=int(bad))
    return {name: x[:, j] for j, name in enumerate(gates)}, int(violations)


def _node_state(spec: ModelSpec, state: dict | None):
    if state is None:
        return None
    if isinstance(spec, HodgkinHuxley):
        return _UncheckedGates(state["m"], state["h"], state["n"])
    return state["w"]


class _UncheckedGates(GatingState):
    # bounds are enforced by the integrator; skip per-array validation
    def __post_init__(self):
        pass


def clamp_simulate(spec: ModelSpec, a: Ansatz, grid: TimeGrid) -> ClampResult:
    """Force ``v`` along ``a`` on ``grid`` and account for the supplied energy."""
    dt = grid.dt
    v_stage = evaluate(a, grid.stage_times())
    t = grid.nodes()
    v = v_stage[::2]
    vdot = derivative(a, t)
    if not (np.all(np.isfinite(v_stage)) and np.all(np.isfinite(vdot))):
        raise NumericalError("non-finite forced trajectory")

    state, violations = _integrate_state(spec, v_stage, dt)
    currents = branch_currents(spec, v, _node_state(spec, state))
    currents = {k: np.broadcast_to(c, v.shape) for k, c in currents.items()}

    power = {k: c * v for k, c in currents.items()}
    branches = {k: float(trapezoid(p, dx=dt)) for k, p in power.items()}
    storage = 0.5 * spec.C * float(v[-1]) ** 2
    total = sum(branches.values()) + storage
    i = spec.C * vdot + sum(currents.values())

    dissipated = cumulative_trapezoid(sum(power.values()), dx=dt, initial=0.0)
    cumulative = dissipated + 0.5 * spec.C * v**2

    if not (math.isfinite(total) and np.all(np.isfinite(i))):
        raise NumericalError("non-finite supply")

    final = None
    if state is not None:
        if isinstance(spec, HodgkinHuxley):
            final = GatingState(*(float(state[x][-1]) for x in ("m", "h", "n")))
        else:
            final = float(state["w"][-1])

    supply = SupplyBreakdown(
        total=total,
        storage=storage,
        branches=branches,
        t=t,
        v=v,
        i=i,
        state=state or {},
        cumulative_supply=cumulative,
    )
    return ClampResult(supply=supply, final_state=final, grid=grid, gate_violations=violations)


def default_grid(spec: ModelSpec, a: Ansatz, tol: Tolerances = Tolerances()) -> TimeGrid:
    lo, hi = a.voltage_range()
    tau = fastest_time_constant(spec, lo, hi)
    return truncation_grid(a, tol.rel_tol, tol.steps_per_timescale, tau)


def clamp_run(spec: ModelSpec, a: Ansatz, tol: Tolerances = Tolerances()) -> ClampResult:
    return clamp_simulate(spec, a, default_grid(spec, a, tol))


def supplied_energy(spec: ModelSpec, a: Ansatz, tol: Tolerances = Tolerances()) -> SupplyBreakdown:
    """Supplied energy along ``a`` with a grid derived from the ansatz and model."""
    return clamp_run(spec, a, tol).supply


@dataclass(frozen=True)
class ConvergenceReport:
    values: tuple[float, ...]
    differences: tuple[float, ...]
    ratios: tuple[float, ...]
    order: float
    monotone: bool


def convergence_check(
    spec: ModelSpec,
    a: Ansatz,
    tol: Tolerances = Tolerances(),
    exact: float | None = None,
    min_order: float | None = 1.9,
) -> ConvergenceReport:
    """Observed order of the supply under step halving (dt, dt/2, dt/4).

    With ``exact`` the errors are measured against it; otherwise successive
    differences are used.  Raises ConvergenceError when the error sequence is
    not shrinking or the order falls below ``min_order``.
    """
    grid = default_grid(spec, a, tol)
    values = tuple(clamp_simulate(spec, a, grid.refined(f)).supply.total for f in (1, 2, 4))
    if exact is not None:
        diffs = tuple(abs(x - exact) for x in values)
    else:
        diffs = (abs(values[0] - values[1]), abs(values[1] - values[2]))
    ratios = tuple(d0 / d1 if d1 > 0 else math.inf for d0, d1 in zip(diffs, diffs[1:]))
    monotone = all(r > 1 for r in ratios)
    order = math.log2(ratios[-1]) if ratios[-1] > 0 else -math.inf
    report = ConvergenceReport(values, diffs, ratios, order, monotone)
    if min_order is not None:
        if not monotone:
            raise ConvergenceError(f"error sequence does not shrink under refinement: {diffs}")
        if order < min_order:
            raise ConvergenceError(f"observed order {order:.2f} below {min_order}")
    return report
