"""Circuit models: linear RC, bistable cubic RC, FitzHugh-Nagumo and Hodgkin-Huxley.

Everything here is a pure function of voltage and internal state.  All
functions accept scalars or numpy arrays.

The Hodgkin-Huxley kinetics use the original squid-axon rate functions in the
deviation-from-rest convention: rest sits at ``v = 0`` and depolarization is
positive, so voltages are in mV relative to rest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np
from scipy.special import exprel


@dataclass(frozen=True)
class LinearRC:
    """Capacitor in parallel with an ohmic resistor."""

    C: float = 1.0
    R: float = 1.0

    def __post_init__(self):
        if not (self.C > 0 and self.R > 0):
            raise ValueError(f"LinearRC needs C > 0 and R > 0, got C={self.C}, R={self.R}")


@dataclass(frozen=True)
class CubicRC:
    """Capacitor in parallel with an N-shaped resistor ``i_d = f(v)``.

    ``f(v) = k (v - va)(v - vb)(v - vc)``, positive on ``(va, vb)`` and
    negative on ``(vb, vc)``.
    """

    va: float = 0.0
    vb: float = 2.0
    vc: float = 4.0
    k: float = 1.0
    C: float = 1.0

    def __post_init__(self):
        if not (self.va < self.vb < self.vc):
            raise ValueError(f"cubic roots must satisfy va < vb < vc, got {self.va}, {self.vb}, {self.vc}")
        if not (self.k > 0 and self.C > 0):
            raise ValueError("CubicRC needs k > 0 and C > 0")


@dataclass(frozen=True)
class FitzHughNagumo:
    """``eps v' = -f(v) - w + i``, ``w' = v - gamma w`` with ``f(v) = (1 - v)(v - vb) v``.

    ``vb = 0.4`` and ``gamma = 0.5`` match the nullclines ``(1-v)(v-0.4)v`` and
    ``w = 2v``.  ``epsilon`` has no published value; 0.01 is a choice.
    """

    epsilon: float = 0.01
    gamma: float = 0.5
    vb: float = 0.4

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("FitzHughNagumo needs epsilon > 0")
        if not self.gamma >= 0:
            raise ValueError("FitzHughNagumo needs gamma >= 0")
        if not 0 < self.vb < 1:
            raise ValueError("FitzHughNagumo needs 0 < vb < 1")

    @property
    def C(self) -> float:
        # epsilon plays the role of the capacitance in the supply balance
        return self.epsilon


def _calibrated_leak_reversal(g_na, g_k, g_l, v_na, v_k) -> float:
    rest = hh_rates(0.0)
    m, h, n = rest["m"].inf, rest["h"].inf, rest["n"].inf
    # g_l (0 - v_l) = -(i_Na + i_K) at v = 0
    return float((g_na * m**3 * h * (0.0 - v_na) + g_k * n**4 * (0.0 - v_k)) / g_l)


@dataclass(frozen=True)
class HodgkinHuxley:
    """Squid-axon membrane patch (units: mV, ms, uF/cm^2, mS/cm^2, uA/cm^2).

    ``v_l=None`` calibrates the leak reversal so that the total ionic current
    vanishes at ``v = 0`` with steady-state gates (about 10.6 mV).
    """

    C: float = 1.0
    g_na: float = 120.0
    g_k: float = 36.0
    g_l: float = 0.3
    v_na: float = 115.0
    v_k: float = -12.0
    v_l: float | None = field(default=None)

    def __post_init__(self):
        if not (self.C > 0 and self.g_na > 0 and self.g_k > 0 and self.g_l > 0):
            raise ValueError("HodgkinHuxley needs positive C and conductances")
        if self.v_l is None:
            object.__setattr__(
                self, "v_l", _calibrated_leak_reversal(self.g_na, self.g_k, self.g_l, self.v_na, self.v_k)
            )
        if not (self.v_k < 0 < self.v_l < self.v_na):
            raise ValueError(
                f"reversal potentials must satisfy v_K < 0 < v_L < v_Na, got {self.v_k}, {self.v_l}, {self.v_na}"
            )


ModelSpec = Union[LinearRC, CubicRC, FitzHughNagumo, HodgkinHuxley]

MODEL_KINDS: dict[str, type] = {
    "linear_rc": LinearRC,
    "cubic_rc": CubicRC,
    "fhn": FitzHughNagumo,
    "hh": HodgkinHuxley,
}


def model_kind(spec: ModelSpec) -> str:
    for name, cls in MODEL_KINDS.items():
        if isinstance(spec, cls):
            return name
    raise TypeError(f"not a model spec: {spec!r}")


@dataclass(frozen=True)
class GatingState:
    """Hodgkin-Huxley gates; every component lies in [0, 1]."""

    m: float
    h: float
    n: float

    def __post_init__(self):
        for name in ("m", "h", "n"):
            x = np.asarray(getattr(self, name))
            if not np.all((x >= 0.0) & (x <= 1.0)):
                raise ValueError(f"gating variable {name} outside [0, 1]: {x}")

    def as_array(self) -> np.ndarray:
        return np.array([self.m, self.h, self.n], dtype=float)


class GateRates(NamedTuple):
    alpha: np.ndarray
    beta: np.ndarray
    tau: np.ndarray
    inf: np.ndarray


def _gate(alpha, beta) -> GateRates:
    total = alpha + beta
    return GateRates(alpha, beta, 1.0 / total, alpha / total)


def hh_rates(v) -> dict[str, GateRates]:
    """Opening/closing rates, time constants and steady states for m, h, n.

    ``alpha_m`` and ``alpha_n`` have removable singularities at 25 and 10 mV;
    they are written as ``1/exprel(x)`` which evaluates the limit exactly.
    """
    v = np.asarray(v, dtype=float)
    alpha_m = 1.0 / exprel((25.0 - v) / 10.0)
    beta_m = 4.0 * np.exp(-v / 18.0)
    alpha_h = 0.07 * np.exp(-v / 20.0)
    beta_h = 1.0 / (np.exp((30.0 - v) / 10.0) + 1.0)
    alpha_n = 0.1 / exprel((10.0 - v) / 10.0)
    beta_n = 0.125 * np.exp(-v / 80.0)
    return {
        "m": _gate(alpha_m, beta_m),
        "h": _gate(alpha_h, beta_h),
        "n": _gate(alpha_n, beta_n),
    }


def gating_derivatives(v, g: GatingState) -> tuple:
    """``(x_inf(v) - x) / tau_x(v)`` for x in (m, h, n)."""
    r = hh_rates(v)
    return tuple((r[x].inf - getattr(g, x)) / r[x].tau for x in ("m", "h", "n"))


def fastest_time_constant(spec: ModelSpec, v_lo: float, v_hi: float) -> float:
    """Smallest internal time constant met while v stays in ``[v_lo, v_hi]``.

    Returns ``inf`` for memoryless models.
    """
    if isinstance(spec, HodgkinHuxley):
        v = np.linspace(min(v_lo, v_hi), max(v_lo, v_hi), 257)
        r = hh_rates(v)
        return float(min(r[x].tau.min() for x in ("m", "h", "n")))
    if isinstance(spec, FitzHughNagumo) and spec.gamma > 0:
        return 1.0 / spec.gamma
    return float("inf")


def cubic_current(p: CubicRC, v):
    return p.k * (v - p.va) * (v - p.vb) * (v - p.vc)


def fhn_cubic(p: FitzHughNagumo, v):
    return (1.0 - v) * (v - p.vb) * v


def _check_state(spec: ModelSpec, state):
    if isinstance(spec, HodgkinHuxley):
        if not isinstance(state, GatingState):
            raise TypeError(f"Hodgkin-Huxley state must be a GatingState, got {type(state).__name__}")
    elif isinstance(spec, FitzHughNagumo):
        if state is None or isinstance(state, GatingState):
            raise TypeError("FitzHugh-Nagumo state must be the recovery variable w")
    elif state is not None:
        raise TypeError(f"{type(spec).__name__} has no internal state, got {state!r}")


def branch_currents(spec: ModelSpec, v, state=None) -> dict:
    """Current through every non-capacitive branch, keyed by branch name."""
    _check_state(spec, state)
    if isinstance(spec, LinearRC):
        return {"resistor": v / spec.R}
    if isinstance(spec, CubicRC):
        return {"resistor": cubic_current(spec, v)}
    if isinstance(spec, FitzHughNagumo):
        return {"cubic": fhn_cubic(spec, v), "recovery": state}
    g = state
    return {
        "na": spec.g_na * g.m**3 * g.h * (v - spec.v_na),
        "k": spec.g_k * g.n**4 * (v - spec.v_k),
        "leak": spec.g_l * (v - spec.v_l),
    }


def ionic_current_total(spec: ModelSpec, v, state=None):
    return sum(branch_currents(spec, v, state).values())


def steady_state(spec: ModelSpec, v):
    """Equilibrium internal state under a constant clamp at ``v``."""
    if isinstance(spec, HodgkinHuxley):
        r = hh_rates(v)
        return GatingState(*(r[x].inf for x in ("m", "h", "n")))
    if isinstance(spec, FitzHughNagumo):
        if spec.gamma == 0:
            if np.any(np.asarray(v) != 0):
                raise ValueError("FitzHugh-Nagumo with gamma = 0 has no steady state away from v = 0")
            return 0.0 * v
        return v / spec.gamma
    return None


def model_to_dict(spec: ModelSpec) -> dict:
    from dataclasses import asdict

    return {"kind": model_kind(spec), **asdict(spec)}


def model_from_dict(data: dict) -> ModelSpec:
    data = dict(data)
    kind = data.pop("kind", None)
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {sorted(MODEL_KINDS)}")
    try:
        return MODEL_KINDS[kind](**data)
    except TypeError as exc:
        raise ValueError(f"bad parameters for model {kind!r}: {exc}") from None
