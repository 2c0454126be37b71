"""Parametric tuning of the Dirichlet density and moment scalings.

The parameter vector ``p = (alpha, theta, upsilon)`` collects the Dirichlet
parameters, the face-moment scales and the interior-moment scales.  Search
runs in log space, so every iterate is positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .bases import make_bundle
from .geometry import reference_simplex
from .moments import WeightSpec
from .momentsystem import assemble, scale, stability, unisolvence


class Mode(str, Enum):
    MAX_BETA = "maxbeta"
    MIN_KAPPA = "minkappa"


ALPHA_BOX = (0.75, 8.0)
SCALE_BOX = (1.0 / 8.0, 8.0)


@dataclass(frozen=True)
class ParamVector:
    alpha: tuple
    theta: tuple
    upsilon: tuple

    def __post_init__(self):
        for name in ("alpha", "theta", "upsilon"):
            v = tuple(float(x) for x in getattr(self, name))
            if any(not np.isfinite(x) or x <= 0.0 for x in v):
                raise ValueError(f"{name} entries must be positive and finite")
            object.__setattr__(self, name, v)
        if len(self.theta) != len(self.alpha):
            raise ValueError("theta needs one entry per face")

    @classmethod
    def initial(cls, alpha, d: int = 3) -> "ParamVector":
        alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (d + 1,))
        dt = (d - 2) * (d + 1) // 2
        return cls(tuple(alpha), (1.0,) * (d + 1), (1.0,) * dt)

    @property
    def d(self) -> int:
        return len(self.alpha) - 1

    def to_log(self) -> np.ndarray:
        return np.log(np.concatenate([self.alpha, self.theta, self.upsilon]))

    @classmethod
    def from_log(cls, x, d: int) -> "ParamVector":
        v = np.exp(np.asarray(x, dtype=float))
        n = d + 1
        return cls(tuple(v[:n]), tuple(v[n:2 * n]), tuple(v[2 * n:]))

    def as_dict(self) -> dict:
        return {"alpha": list(self.alpha), "theta": list(self.theta), "upsilon": list(self.upsilon)}


def in_box(p: ParamVector, alpha_box=ALPHA_BOX, scale_box=SCALE_BOX) -> bool:
    a = np.asarray(p.alpha)
    s = np.concatenate([p.theta, p.upsilon])
    return bool(np.all((a >= alpha_box[0]) & (a <= alpha_box[1]))
                and np.all((s >= scale_box[0]) & (s <= scale_box[1])))


def _normalized_scales(p: ParamVector):
    """Divide ``(theta, upsilon)`` by their joint geometric mean."""
    s = np.concatenate([p.theta, p.upsilon])
    g = np.exp(np.log(s).mean())
    return np.asarray(p.theta) / g, np.asarray(p.upsilon) / g


def evaluate(p: ParamVector, bases: str = "raw") -> dict:
    """``beta`` and ``kappa`` of the scaled moment system for ``p``.

    Raises on non-unisolvent or otherwise failed systems.
    """
    d = p.d
    w = WeightSpec.dirichlet(p.alpha)
    s = reference_simplex(d)
    sys = assemble(s, w, make_bundle(s, w, bases))
    rep = unisolvence(sys)
    if not rep.unisolvent:
        raise np.linalg.LinAlgError(f"not unisolvent ({rep.diagnosis})")
    theta, upsilon = _normalized_scales(p)
    sc = scale(sys, theta, upsilon)
    beta = stability(sc.system).beta
    return {"beta": float(beta), "kappa": float(sc.kappa)}


def objective(p: ParamVector, mode: Mode | str, bases: str = "raw",
              alpha_box=ALPHA_BOX, scale_box=SCALE_BOX) -> float:
    """``-beta`` (MaxBeta) or ``kappa_2`` (MinKappa); ``+inf`` on failure or outside the box."""
    mode = Mode(mode)
    if not in_box(p, alpha_box, scale_box):
        return float("inf")
    try:
        r = evaluate(p, bases)
    except (np.linalg.LinAlgError, ValueError, FloatingPointError, OverflowError):
        return float("inf")
    val = -r["beta"] if mode is Mode.MAX_BETA else r["kappa"]
    return float(val) if np.isfinite(val) else float("inf")


@dataclass
class OptimizeResult:
    p0: ParamVector
    p_star: ParamVector
    f0: float
    f_star: float
    trace: list = field(default_factory=list)
    nfev: int = 0


class _BudgetExhausted(Exception):
    pass


def optimize(p0: ParamVector, mode: Mode | str, budget: int = 200, bases: str = "raw",
             xatol: float = 1e-6, step: float = 0.25,
             fun: Callable[[ParamVector], float] | None = None) -> OptimizeResult:
    """Nelder-Mead in log-parameter space with a best-so-far trace.

    ``budget`` caps objective evaluations.  The returned point is the best
    evaluated one, so it is never worse than ``p0``.
    """
    mode = Mode(mode)
    if budget < 0:
        raise ValueError("budget must be non-negative")
    fun = (lambda p: objective(p, mode, bases)) if fun is None else fun
    d = p0.d
    if budget == 0:
        return OptimizeResult(p0, p0, float("nan"), float("nan"), [], 0)

    state = {"n": 0, "best": np.inf, "x": p0.to_log()}
    trace: list[float] = []

    def wrapped(x):
        if state["n"] >= budget:
            raise _BudgetExhausted
        state["n"] += 1
        try:
            val = fun(ParamVector.from_log(x, d))
        except ValueError:
            val = float("inf")
        if val < state["best"]:
            state["best"] = val
            state["x"] = np.array(x, dtype=float)
        trace.append(state["best"])
        return val

    x0 = p0.to_log()
    f0 = wrapped(x0)
    sim = np.vstack([x0] + [x0 + step * e for e in np.eye(len(x0))])
    try:
        minimize(wrapped, x0, method="Nelder-Mead",
                 options={"maxfev": budget, "xatol": xatol, "fatol": np.inf,
                          "initial_simplex": sim})
    except _BudgetExhausted:
        pass
    if state["best"] < f0:
        p_star, f_star = ParamVector.from_log(state["x"], d), state["best"]
    else:
        p_star, f_star = p0, f0
    return OptimizeResult(p0, p_star, f0, f_star, trace, state["n"])
