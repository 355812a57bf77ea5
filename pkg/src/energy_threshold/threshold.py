"""Required-supply landscapes and energy thresholds.

``S_r(A) = min_alpha J(A, alpha)`` is computed per amplitude (coarse log grid,
then golden-section refinement) and the threshold is a local maximum of
``S_r`` over amplitudes.  Free-running simulations check whether the clamp
state at the end of a trajectory goes on to fire.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .ansatz import BiexponentialAnsatz, ExponentialAnsatz, RiseHoldAnsatz
from .clamp import ClampResult, NumericalError, Tolerances, clamp_run, supplied_energy
from .models import (
    CubicRC,
    FitzHughNagumo,
    HodgkinHuxley,
    LinearRC,
    ModelSpec,
    cubic_current,
    fhn_cubic,
    hh_rates,
    model_kind,
)

INTERIOR_MAX = "InteriorLocalMax"
BOUNDARY_SADDLE = "BoundarySaddle"
NONE_FOUND = "NoneFound"

SPIKE = "Spike"
DECAY = "Decay"

PLATEAU_RTOL = 1e-12
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class RateMinimum:
    rate: float
    supply: float
    boundary: str | None  # "lower", "upper" or None for an interior minimum
    evaluations: int


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float, max_iter: int = 200):
    """Minimize a unimodal ``f`` on ``[lo, hi]``; stops when ``hi - lo <= tol``.

    Returns ``(x, f(x), evaluations)`` for the best point probed.
    """
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    best = min((fc, c), (fd, d))
    n = 2
    while b - a > tol and n < max_iter:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
            best = min(best, (fc, c))
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
            best = min(best, (fd, d))
        n += 1
    return best[1], best[0], n


def minimize_rate(cost: Callable[[float], float], rate_grid: Sequence[float], refine_tol: float) -> RateMinimum:
    """Coarse scan over a positive sorted grid, then golden section in log-rate.

    Minima on the grid edges are reported as boundary minima.  The refined
    value never exceeds the coarse one.
    """
    rates = np.asarray(rate_grid, dtype=float)
    if rates.size == 0:
        raise ValueError("empty rate grid")
    if rates.size < 8:
        raise ValueError(f"rate grid needs at least 8 points, got {rates.size}")
    if np.any(rates <= 0) or np.any(np.diff(rates) <= 0):
        raise ValueError("rate grid must be positive and strictly increasing")
    values = np.array([cost(r) for r in rates])
    j = int(np.argmin(values))
    if j == rates.size - 1:
        return RateMinimum(float(rates[j]), float(values[j]), "upper", rates.size)
    if j == 0:
        return RateMinimum(float(rates[j]), float(values[j]), "lower", rates.size)
    lo, hi = math.log(rates[j - 1]), math.log(rates[j + 1])
    x, fx, n = golden_section(lambda s: cost(math.exp(s)), lo, hi, refine_tol)
    if fx < values[j]:
        return RateMinimum(math.exp(x), float(fx), None, rates.size + n)
    return RateMinimum(float(rates[j]), float(values[j]), None, rates.size + n)


def minimize_over_alpha(
    spec: ModelSpec, A: float, alpha_grid: Sequence[float], tol: Tolerances = Tolerances()
) -> RateMinimum:
    """``min_alpha J(A, alpha)`` over the exponential family."""
    return minimize_rate(lambda a: supplied_energy(spec, ExponentialAnsatz(A, a), tol).total, alpha_grid, tol.refine_tol)


def unbounded_below_probe(spec: ModelSpec, A: float, alpha: float, tol: Tolerances = Tolerances(), holds=(1.0, 2.0, 4.0)) -> bool:
    """True when rising to ``A`` and holding it gets cheaper the longer it is held.

    Only meaningful for memoryless resistive circuits.
    """
    values = [supplied_energy(spec, RiseHoldAnsatz(A, alpha, T), tol).total for T in holds]
    return all(b < a - 1e-9 * (1.0 + abs(a)) for a, b in zip(values, values[1:]))


@dataclass(frozen=True, eq=False)
class SweepContext:
    """What is needed to re-sweep part of a landscape."""

    spec: ModelSpec
    rate_grid: tuple[float, ...]
    tol: Tolerances
    kind: str = "excitatory"  # or "inhibitory"
    fixed: tuple[float, float] | None = None  # (A*, alpha*) for inhibitory sweeps
    workers: int = 1


@dataclass(frozen=True, eq=False)
class Landscape:
    """Minimal supply over an ordered coordinate (amplitude or terminal voltage).

    Censored nodes (supply unbounded below) carry ``-inf`` in ``supply``.
    ``B`` is set for inhibitory landscapes.
    """

    coords: np.ndarray
    supply: np.ndarray
    rate: np.ndarray
    boundary: tuple
    censored: np.ndarray
    context: SweepContext
    B: np.ndarray | None = None
    evaluations: int = 0
    natural_boundary: str | None = None

    def __post_init__(self):
        if np.any(np.diff(self.coords) <= 0):
            raise ValueError("landscape coordinates must be strictly increasing")

    @property
    def coord_name(self) -> str:
        return "v_terminal" if self.context.kind == "inhibitory" else "A"

    @property
    def rate_name(self) -> str:
        return "beta_star" if self.context.kind == "inhibitory" else "alpha_star"


@dataclass(frozen=True)
class ThresholdReport:
    classification: str
    A: float | None = None
    alpha: float | None = None
    B: float | None = None
    beta: float | None = None
    supply: float | None = None
    v_terminal: float | None = None
    neighbor_supply: tuple[float, float] | None = None
    resolution: float | None = None
    event: str | None = None
    notes: tuple[str, ...] = ()

    @property
    def found(self) -> bool:
        return self.classification == INTERIOR_MAX


@dataclass(frozen=True)
class _Task:
    context: SweepContext
    value: float  # amplitude (excitatory) or B (inhibitory)


def _solve_node(task: _Task):
    ctx = task.context
    if ctx.kind == "inhibitory":
        A, alpha = ctx.fixed
        B = task.value

        def cost(beta):
            return supplied_energy(ctx.spec, BiexponentialAnsatz(A, alpha, B, beta), ctx.tol).total

        if B == 0:
            # degenerate: the trajectory is the plain exponential, any beta gives it
            return RateMinimum(alpha, cost(alpha), None, 1), False
        return minimize_rate(cost, ctx.rate_grid, ctx.tol.refine_tol), False
    A = task.value
    best = minimize_over_alpha(ctx.spec, A, ctx.rate_grid, ctx.tol)
    censored = False
    if isinstance(ctx.spec, (LinearRC, CubicRC)) and A != 0:
        censored = unbounded_below_probe(ctx.spec, A, ctx.rate_grid[-1], ctx.tol)
    return best, censored


def _run_tasks(tasks: list[_Task], workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [_solve_node(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves input order regardless of completion order
        return list(pool.map(_solve_node, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _assemble(ctx: SweepContext, values: np.ndarray, results) -> Landscape:
    supply = np.array([-math.inf if c else r.supply for r, c in results])
    rate = np.array([r.rate for r, _ in results])
    boundary = tuple(r.boundary for r, _ in results)
    censored = np.array([c for _, c in results], dtype=bool)
    evaluations = sum(r.evaluations for r, _ in results)
    if ctx.kind == "inhibitory":
        A = ctx.fixed[0]
        order = np.argsort(A - values, kind="stable")
        return Landscape(
            coords=(A - values)[order],
            supply=supply[order],
            rate=rate[order],
            boundary=tuple(boundary[k] for k in order),
            censored=censored[order],
            context=ctx,
            B=values[order],
            evaluations=evaluations,
            natural_boundary="upper" if np.any(values == 0) else None,
        )
    return Landscape(values, supply, rate, boundary, censored, ctx, evaluations=evaluations)


def sweep_landscape(
    spec: ModelSpec,
    A_grid: Sequence[float],
    alpha_grid: Sequence[float],
    tol: Tolerances = Tolerances(),
    workers: int = 1,
) -> Landscape:
    """``S_r(A)`` on ``A_grid`` (sorted, nonnegative).

    For the memoryless RC circuits, amplitudes where a rise-and-hold
    trajectory gets ever cheaper are censored as unbounded below.
    """
    A = np.asarray(A_grid, dtype=float)
    if np.any(A < 0) or np.any(np.diff(A) <= 0):
        raise ValueError("A_grid must be nonnegative and strictly increasing")
    ctx = SweepContext(spec, tuple(float(a) for a in alpha_grid), tol, workers=workers)
    return _resweep(ctx, A)


def _resweep(ctx: SweepContext, values: np.ndarray) -> Landscape:
    results = _run_tasks([_Task(ctx, float(v)) for v in values], ctx.workers)
    return _assemble(ctx, np.asarray(values, dtype=float), results)


def _is_strict_max(s: np.ndarray, j: int) -> bool:
    c, left, right = s[j], s[j - 1], s[j + 1]
    if not math.isfinite(c):
        return False
    scale = PLATEAU_RTOL * max(abs(c), 1e-300)
    return c - left > scale and c - right > scale


def _is_plateau(s: np.ndarray, j: int) -> bool:
    c, left, right = s[j], s[j - 1], s[j + 1]
    if not math.isfinite(c):
        return False
    scale = PLATEAU_RTOL * max(abs(c), 1e-300)
    flat_left, flat_right = abs(c - left) <= scale, abs(c - right) <= scale
    return (flat_left and (c - right > scale or flat_right)) or (flat_right and c - left > scale)


def _interior_maxima(s: np.ndarray) -> list[int]:
    return [j for j in range(1, s.size - 1) if _is_strict_max(s, j)]


def _refine_values(l: Landscape, j: int, factor: int = 10) -> np.ndarray:
    ctx = l.context
    if ctx.kind == "inhibitory":
        lo, hi = l.B[j + 1], l.B[j - 1]
        return np.linspace(max(lo, 0.0), hi, 2 * factor + 1)
    return np.linspace(l.coords[j - 1], l.coords[j + 1], 2 * factor + 1)


def _report_from(l: Landscape, j: int, classification: str, resolution: float | None, notes=()) -> ThresholdReport:
    ctx = l.context
    neighbors = None
    if 0 < j < l.coords.size - 1:
        neighbors = (float(l.supply[j - 1]), float(l.supply[j + 1]))
    elif j == l.coords.size - 1 and j > 0:
        neighbors = (float(l.supply[j - 1]), float("nan"))
    if ctx.kind == "inhibitory":
        A, alpha = ctx.fixed
        return ThresholdReport(
            classification,
            A=A,
            alpha=alpha,
            B=float(l.B[j]),
            beta=float(l.rate[j]),
            supply=float(l.supply[j]),
            v_terminal=float(l.coords[j]),
            neighbor_supply=neighbors,
            resolution=resolution,
            notes=tuple(notes),
        )
    return ThresholdReport(
        classification,
        A=float(l.coords[j]),
        alpha=float(l.rate[j]),
        supply=float(l.supply[j]),
        v_terminal=float(l.coords[j]),
        neighbor_supply=neighbors,
        resolution=resolution,
        notes=tuple(notes),
    )


def find_local_maximum(l: Landscape, refine: bool = True) -> ThresholdReport:
    """Locate the energy threshold: an interior node above both neighbors.

    The highest such node is refined once on a 10x finer grid across its two
    neighboring cells.  Flat plateaus are not maxima; they get one refinement
    pass to see whether a strict maximum hides inside.  Without an interior
    maximum, a landscape whose natural domain edge is its peak is a
    ``BoundarySaddle``; anything else is ``NoneFound``.
    """
    s = l.supply
    if s.size < 3:
        raise ValueError("need at least 3 nodes to look for a local maximum")
    notes = []
    candidates = _interior_maxima(s)
    refined: Landscape | None = None
    if not candidates and refine:
        for j in (k for k in range(1, s.size - 1) if _is_plateau(s, k)):
            sub = _resweep(l.context, _refine_values(l, j))
            if _interior_maxima(sub.supply):
                refined = sub
                notes.append("maximum recovered from a plateau by refinement")
                break
        if refined is None and any(_is_plateau(s, k) for k in range(1, s.size - 1)):
            notes.append("plateau treated as no maximum")
    if candidates:
        j = max(candidates, key=lambda k: s[k])
        if len(candidates) > 1:
            notes.append(f"{len(candidates)} interior maxima; reporting the highest")
        if not refine:
            cell = float(max(l.coords[j] - l.coords[j - 1], l.coords[j + 1] - l.coords[j]))
            return _report_from(l, j, INTERIOR_MAX, cell, notes)
        refined = _resweep(l.context, _refine_values(l, j))
        if not _interior_maxima(refined.supply):
            # the finer grid can push the crest onto the bracket edge; keep the coarse node
            cell = float(max(l.coords[j] - l.coords[j - 1], l.coords[j + 1] - l.coords[j]))
            notes.append("refinement did not confirm the maximum; coarse node reported")
            return _report_from(l, j, INTERIOR_MAX, cell, notes)
    if refined is not None:
        k = max(_interior_maxima(refined.supply), key=lambda m: refined.supply[m])
        cell = float(np.max(np.diff(refined.coords)))
        return _report_from(refined, k, INTERIOR_MAX, cell, notes)
    if l.natural_boundary == "upper" and np.isfinite(s[-1]) and s[-1] > s[-2]:
        return _report_from(l, s.size - 1, BOUNDARY_SADDLE, None, notes)
    if l.natural_boundary == "lower" and np.isfinite(s[0]) and s[0] > s[1]:
        return _report_from(l, 0, BOUNDARY_SADDLE, None, notes)
    return ThresholdReport(NONE_FOUND, notes=tuple(notes))


def locate_threshold(
    spec: ModelSpec,
    A_grid: Sequence[float],
    alpha_grid: Sequence[float],
    tol: Tolerances = Tolerances(),
    workers: int = 1,
) -> tuple[Landscape, ThresholdReport]:
    landscape = sweep_landscape(spec, A_grid, alpha_grid, tol, workers)
    return landscape, find_local_maximum(landscape)


def inhibitory_sweep(
    spec: ModelSpec,
    A_star: float,
    alpha_star: float,
    B_grid: Sequence[float],
    beta_grid: Sequence[float],
    tol: Tolerances = Tolerances(),
    workers: int = 1,
    excitatory_supply: float | None = None,
) -> tuple[Landscape, ThresholdReport]:
    """Supply landscape of ``A* exp(alpha* t) - B exp(beta t)`` over terminal voltage.

    For each ``B`` the supply is minimized over ``beta``; the landscape is
    indexed by ``v(0) = A* - B``.  With ``excitatory_supply`` the report notes
    whether the inhibitory threshold sits lower in voltage and energy.
    """
    B = np.asarray(B_grid, dtype=float)
    if np.any(B < 0) or np.any(np.diff(B) <= 0):
        raise ValueError("B_grid must be nonnegative and strictly increasing")
    ctx = SweepContext(
        spec,
        tuple(float(b) for b in beta_grid),
        tol,
        kind="inhibitory",
        fixed=(float(A_star), float(alpha_star)),
        workers=workers,
    )
    landscape = _resweep(ctx, B)
    report = find_local_maximum(landscape)
    if report.found and excitatory_supply is not None:
        lower_v = report.v_terminal < A_star
        cheaper = report.supply <= excitatory_supply
        report = replace(report, notes=report.notes + (f"lower_voltage={lower_v}", f"less_energy={cheaper}"))
    return landscape, report


# --- free-running verification -------------------------------------------------

EVENT_LEVEL = {"hh": 80.0, "fhn": 0.9}
ESCAPE_FACTOR = 100.0
DEFAULT_HORIZON = {"hh": 50.0, "fhn": 20.0, "cubic_rc": 50.0, "linear_rc": 50.0}


@dataclass(frozen=True)
class EventOutcome:
    outcome: str
    peak: float
    t_event: float | None


def _free_rhs(spec: ModelSpec):
    if isinstance(spec, HodgkinHuxley):

        def rhs(t, y):
            v, m, h, n = y
            r = hh_rates(v)
            i_ion = (
                spec.g_na * m**3 * h * (v - spec.v_na)
                + spec.g_k * n**4 * (v - spec.v_k)
                + spec.g_l * (v - spec.v_l)
            )
            gates = [float(r[x].alpha * (1 - s) - r[x].beta * s) for x, s in zip("mhn", (m, h, n))]
            return [-i_ion / spec.C] + gates

        return rhs
    if isinstance(spec, FitzHughNagumo):
        return lambda t, y: [(-fhn_cubic(spec, y[0]) - y[1]) / spec.epsilon, y[0] - spec.gamma * y[1]]
    if isinstance(spec, CubicRC):
        return lambda t, y: [-cubic_current(spec, y[0]) / spec.C]
    return lambda t, y: [-y[0] / (spec.R * spec.C)]


def verify_event(spec: ModelSpec, start: ClampResult | tuple, horizon: float | None = None) -> EventOutcome:
    """Release the clamp (``i = 0``) and see whether the circuit fires on its own.

    ``start`` is a clamp result or ``(v0, internal_state)``.  HH and FHN fire
    when v crosses 80 mV or 0.9; the bistable circuit fires when it settles
    on the high-storage side of ``vb``.
    """
    kind = model_kind(spec)
    if isinstance(start, ClampResult):
        v0, state = float(start.supply.v[-1]), start.final_state
    else:
        v0, state = start
    if isinstance(spec, HodgkinHuxley):
        y0 = [v0, state.m, state.h, state.n]
    elif isinstance(spec, FitzHughNagumo):
        y0 = [v0, float(state)]
    else:
        y0 = [v0]
    if not np.all(np.isfinite(y0)):
        raise NumericalError("non-finite initial state for free run")
    horizon = DEFAULT_HORIZON[kind] if horizon is None else horizon

    events = []
    if kind in EVENT_LEVEL:
        level = EVENT_LEVEL[kind]

        def crossing(t, y):
            return y[0] - level

        crossing.terminal = True
        crossing.direction = 1
        events.append(crossing)

    # stop before a finite-time blow-up takes the integrator down with it
    bound = ESCAPE_FACTOR * max(abs(v0), EVENT_LEVEL.get(kind, 1.0), 1.0)

    def escape(t, y):
        return bound - abs(y[0])

    escape.terminal = True
    events.append(escape)
    sol = solve_ivp(
        _free_rhs(spec), (0.0, horizon), y0, method="LSODA", rtol=1e-8, atol=1e-10, max_step=0.05 * horizon,
        events=events,
    )
    if not sol.success or not np.all(np.isfinite(sol.y)):
        raise NumericalError(f"free run failed: {sol.message}")
    peak = max(float(np.max(sol.y[0])), v0)
    escaped = sol.t_events[-1].size > 0
    if escaped and sol.y[0, -1] < 0:
        raise NumericalError(f"free run diverged downward (v = {sol.y[0, -1]:.3g} at t = {sol.t[-1]:.3g})")
    if kind in EVENT_LEVEL:
        level = EVENT_LEVEL[kind]
        if sol.t_events[0].size:
            return EventOutcome(SPIKE, max(peak, level), float(sol.t_events[0][0]))
        if peak >= level:
            return EventOutcome(SPIKE, peak, 0.0 if v0 >= level else float(sol.t[-1]))
        return EventOutcome(DECAY, peak, None)
    if isinstance(spec, CubicRC):
        v_end = float(sol.y[0, -1])
        high = abs(v_end - spec.vc) < abs(v_end - spec.va)
        return EventOutcome(SPIKE if high else DECAY, peak, float(sol.t[-1]) if high else None)
    return EventOutcome(DECAY, peak, None)


def event_at(spec: ModelSpec, A: float, alpha: float, tol: Tolerances = Tolerances(), horizon=None) -> EventOutcome:
    """Clamp along ``A exp(alpha t)`` then release."""
    return verify_event(spec, clamp_run(spec, ExponentialAnsatz(A, alpha), tol), horizon)


def event_threshold(
    spec: ModelSpec, alpha: float, lo: float, hi: float, tol: Tolerances = Tolerances(), xtol: float = 1e-2
) -> float:
    """Smallest amplitude (bisection in ``[lo, hi]``) whose clamp state fires at rate ``alpha``."""
    if event_at(spec, lo, alpha, tol).outcome == SPIKE or event_at(spec, hi, alpha, tol).outcome != SPIKE:
        raise ValueError("bracket must go from a decaying to a firing amplitude")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if event_at(spec, mid, alpha, tol).outcome == SPIKE:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
