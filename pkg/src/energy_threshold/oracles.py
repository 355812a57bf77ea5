"""Closed-form supplies and optimality conditions, used to check the clamp engine."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .models import CubicRC, FitzHughNagumo, cubic_current


@dataclass(frozen=True)
class CostSurfacePoint:
    A: float
    alpha: float
    J: float


def _positive_rate(alpha):
    if np.any(np.asarray(alpha) <= 0):
        raise ValueError("alpha must be positive")


def closed_form_J_linear_rc(C, R, A, alpha):
    """Supply along ``A exp(alpha t)`` into a linear RC: ``(C alpha + 1/R) A^2 / (2 alpha)``."""
    _positive_rate(alpha)
    return (C * alpha + 1.0 / R) / (2.0 * alpha) * A**2


def dJ_dalpha_linear_rc(C, R, A, alpha):
    _positive_rate(alpha)
    return -(A**2) / (2.0 * R * alpha**2)


def closed_form_J_fhn(p: FitzHughNagumo, A, alpha):
    """Supply along ``A exp(alpha t)`` into the FitzHugh-Nagumo circuit."""
    _positive_rate(alpha)
    return (
        0.5 * p.epsilon * A**2
        - A**4 / (4.0 * alpha)
        + (p.vb + 1.0) * A**3 / (3.0 * alpha)
        - p.vb * A**2 / (2.0 * alpha)
        + A**2 / (2.0 * alpha * (alpha + p.gamma))
    )


def fhn_recovery(p: FitzHughNagumo, A, alpha, t):
    """Recovery variable driven by ``A exp(alpha t)`` from rest at ``t = -inf``."""
    _positive_rate(alpha)
    return A / (alpha + p.gamma) * np.exp(alpha * np.asarray(t, dtype=float))


def singular_arc_residual(g: Callable, v, dg: Callable | None = None, h: float = 1e-6):
    """``d/dv [g(v) v^2] = g'(v) v^2 + 2 g(v) v``.

    Zeros are candidate singular arcs of the unrestricted minimum-supply
    problem.  ``g'`` is taken from ``dg`` when given, else by central
    differences.
    """
    v = np.asarray(v, dtype=float)
    slope = dg(v) if dg is not None else (g(v + h) - g(v - h)) / (2.0 * h)
    return slope * v**2 + 2.0 * g(v) * v


@dataclass(frozen=True)
class Passive:
    """Required supply equals the stored energy ``C v^2 / 2``."""

    supply: float
    threshold: bool = False


@dataclass(frozen=True)
class UnboundedBelow:
    """Holding the target voltage extracts energy without limit."""


def bistable_required_supply(p: CubicRC, v_target: float) -> Passive | UnboundedBelow:
    """Required supply of the bistable circuit on the branch ``[va, vc]``.

    Up to ``vb`` the resistor only dissipates, so the cheapest move is an
    instantaneous charge.  Between ``vb`` and ``vc`` it delivers energy while
    the voltage is held, so the infimum is ``-inf``; ``vb`` is the threshold.
    """
    if v_target < p.va:
        raise ValueError(f"target {v_target} lies below the analyzed branch starting at {p.va}")
    if v_target > p.vc:
        raise ValueError(f"target {v_target} lies above the analyzed branch ending at {p.vc}")
    if v_target <= p.vb:
        return Passive(0.5 * p.C * v_target**2, threshold=v_target == p.vb)
    return UnboundedBelow()


def hold_supply_cubic_rc(p: CubicRC, v_target: float, hold: float) -> float:
    """Supply for an instantaneous charge to ``v_target`` held for ``hold``."""
    return 0.5 * p.C * v_target**2 + float(cubic_current(p, v_target)) * v_target * hold
