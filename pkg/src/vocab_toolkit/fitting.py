"""Shared robust-fitting machinery: Huber objective and multi-start
quasi-Newton minimization with a simplex fallback.

All fitters in this package minimize a summed Huber loss (delta = 0.001) of
residuals in log or loss space, restarted from a grid of initial guesses.
The engine is L-BFGS-B with central-difference gradients; when a start fails
to converge it is polished with Nelder-Mead so a stalled line search cannot
lose an otherwise good basin.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import SolverError

__all__ = ["HUBER_DELTA", "huber", "multistart_minimize", "round_to_multiple"]

HUBER_DELTA = 1e-3


def huber(residuals: np.ndarray, delta: float = HUBER_DELTA) -> np.ndarray:
    """Elementwise Huber loss: quadratic within ``delta``, linear outside."""
    abs_r = np.abs(residuals)
    with np.errstate(over="ignore"):
        quadratic = 0.5 * residuals * residuals
    linear = delta * (abs_r - 0.5 * delta)
    return np.where(abs_r <= delta, quadratic, linear)


def multistart_minimize(
    objective: Callable[[np.ndarray], float],
    starts: Sequence[np.ndarray],
    bounds: Sequence[tuple[float | None, float | None]] | None = None,
    prune_to: int | None = None,
    maxiter: int = 2000,
) -> tuple[np.ndarray, float]:
    """Minimize ``objective`` from every start, return the best final point.

    ``prune_to`` keeps only the given number of starts, ranked by initial
    objective value, before running the minimizer. The winner is selected by
    (objective, then lexicographic parameter order) so the outcome does not
    depend on evaluation order. Raises ``SolverError`` when no start
    produces a finite result; the best partial iterate, if any, is attached.
    """
    starts = [np.asarray(s, dtype=float) for s in starts]
    if not starts:
        raise SolverError("no initial guesses supplied")
    if prune_to is not None and len(starts) > prune_to:
        ranked = sorted(starts, key=lambda s: _safe_eval(objective, s))
        starts = ranked[:prune_to]

    # Coarse pass over every start, then tight convergence only for the best
    # basins; this keeps hundreds of restarts affordable.
    coarse: list[tuple[float, np.ndarray]] = []
    for start in starts:
        x, f = _quasi_newton(objective, start, bounds, maxiter=120, ftol=1e-9, gtol=1e-7)
        if x is not None:
            coarse.append((f, x))
    if not coarse:
        raise SolverError("optimizer failed to converge from every start", partial=None)
    coarse.sort(key=lambda item: (item[0], tuple(item[1])))

    best_x: np.ndarray | None = None
    best_f = math.inf
    for _, candidate in coarse[:3]:
        x, f = _quasi_newton(objective, candidate, bounds, maxiter=maxiter)
        if x is None:
            continue
        if f < best_f or (f == best_f and best_x is not None and tuple(x) < tuple(best_x)):
            best_x, best_f = x, f
    if best_x is None:
        best_f, best_x = coarse[0]
    # Simplex polish of the winning basin only: Nelder-Mead is derivative-free
    # and immune to the gradient noise floor near an exact-zero minimum, which
    # is where a stalled line search would otherwise leave slack.
    x, f = _simplex(objective, best_x, maxiter)
    if x is not None and f <= best_f:
        best_x, best_f = _project(x, bounds), f
    return best_x, float(best_f)


def _safe_eval(objective, x) -> float:
    try:
        value = float(objective(np.asarray(x, dtype=float)))
    except (ValueError, FloatingPointError, OverflowError):
        return math.inf
    return value if math.isfinite(value) else math.inf


def _quasi_newton(objective, start, bounds, maxiter, ftol=1e-18, gtol=1e-14):
    try:
        res = minimize(
            objective,
            start,
            method="L-BFGS-B",
            jac="3-point",
            bounds=bounds,
            options={"maxiter": maxiter, "ftol": ftol, "gtol": gtol, "maxfun": 10 * maxiter},
        )
    except (ValueError, FloatingPointError, OverflowError):
        return None, math.inf
    if not math.isfinite(res.fun):
        return None, math.inf
    return res.x, float(res.fun)


def _simplex(objective, start, maxiter):
    try:
        res = minimize(
            objective,
            start,
            method="Nelder-Mead",
            options={
                "maxiter": 4 * maxiter,
                "xatol": 1e-12,
                "fatol": 1e-18,
                "adaptive": True,
            },
        )
    except (ValueError, FloatingPointError, OverflowError):
        return None, math.inf
    if not math.isfinite(res.fun):
        return None, math.inf
    return res.x, float(res.fun)


def _project(x, bounds):
    if bounds is None:
        return x
    out = np.array(x, dtype=float)
    for i, (lo, hi) in enumerate(bounds):
        if lo is not None:
            out[i] = max(out[i], lo)
        if hi is not None:
            out[i] = min(out[i], hi)
    return out


def round_to_multiple(value: float, multiple: int = 128) -> int:
    """Round to the nearest positive multiple (hardware-friendly vocab sizes)."""
    return max(multiple, int(round(value / multiple)) * multiple)
