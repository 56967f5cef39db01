"""Vocabulary-aware parametric loss surface: evaluation, fitting, and
optimal-vocabulary search under a FLOPs budget or at fixed data.

The surface is  loss_u = -E + A1/N_nv^a1 + A2/N_v^a2 + B/D^beta  with
D = H * f(V). Under a FLOPs budget C the data term is eliminated through
D = C / (6 (N_nv + N_v)), which makes the optimal vocabulary a root of a
one-dimensional derivative.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import SolverError, UnderdeterminedError, ValidationError
from .fertility import FertilityFit, eval_fertility
from .fitting import HUBER_DELTA, huber, multistart_minimize, round_to_multiple
from .records import DEFAULT_SHAPE_TABLE, RunRecord, ShapeTable, embed_dim_for

__all__ = [
    "ParametricLoss",
    "VocabOptimum",
    "loss_surface",
    "eval_loss",
    "loss_at_budget",
    "dloss_dv_at_budget",
    "optimal_v_flops",
    "optimal_v_chars",
    "fit_params",
    "DEFAULT_FLOPS_FLOOR",
]

# Records below this cost carry more optimizer transient than signal and are
# dropped before fitting unless the caller overrides the floor.
DEFAULT_FLOPS_FLOOR = 1e17

_EXP_CLIP = 700.0


class VocabOptimum(NamedTuple):
    vocab_size: int
    boundary: bool


@dataclass(frozen=True)
class ParametricLoss:
    """Constants of the vocabulary-aware loss surface.

    ``beta_tied`` records whether the data exponent was constrained to equal
    the parameter exponent during fitting.
    """

    E: float
    A1: float
    A2: float
    B: float
    alpha1: float
    alpha2: float
    beta: float
    beta_tied: bool = True

    def __post_init__(self):
        for name in ("E", "A1", "A2", "B"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("alpha1", "alpha2", "beta"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive, got {getattr(self, name)}")

    def to_json_dict(self) -> dict:
        return {
            "E": self.E,
            "A1": self.A1,
            "A2": self.A2,
            "B": self.B,
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "beta": self.beta,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ParametricLoss":
        try:
            kwargs = {key: float(data[key]) for key in ("E", "A1", "A2", "B", "alpha1", "alpha2", "beta")}
        except KeyError as exc:
            raise ValidationError(f"parametric-loss JSON is missing key {exc}") from None
        return cls(beta_tied=kwargs["beta"] == kwargs["alpha1"], **kwargs)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ParametricLoss":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


def loss_surface(p: ParametricLoss, n_nv: float, n_v: float, tokens: float) -> float:
    """The decoupled surface -E + A1/n_nv^a1 + A2/n_v^a2 + B/tokens^b.

    Strictly decreasing in each argument; through ``eval_loss`` the token
    count is tied to the vocabulary, which is what creates the interior
    optimum.
    """
    if n_nv <= 0 or n_v <= 0 or tokens <= 0:
        raise ValidationError(f"loss surface needs positive inputs, got {n_nv}, {n_v}, {tokens}")
    return -p.E + p.A1 / n_nv**p.alpha1 + p.A2 / n_v**p.alpha2 + p.B / tokens**p.beta


def eval_loss(
    p: ParametricLoss,
    n_nv: float,
    n_v: float,
    h: float,
    fert: FertilityFit,
    embed_dim: int | None = None,
    table: ShapeTable = DEFAULT_SHAPE_TABLE,
) -> float:
    """Predicted unigram-normalized loss at (n_nv, n_v, h).

    The vocabulary size for the fertility term is n_v / d with the width
    taken from the shape table unless ``embed_dim`` is supplied.
    """
    if n_nv <= 0 or n_v <= 0 or h <= 0:
        raise ValidationError(f"eval_loss needs positive inputs, got {n_nv}, {n_v}, {h}")
    d = embed_dim if embed_dim is not None else embed_dim_for(n_nv, table)
    v = n_v / d
    return loss_surface(p, n_nv, n_v, h * eval_fertility(v, fert))


def loss_at_budget(p: ParametricLoss, n_nv: float, d: float, budget: float, v: float) -> float:
    """Loss with the data term eliminated by the budget: D = C/(6(n_nv + v d))."""
    if budget <= 0:
        raise ValidationError(f"budget must be positive, got {budget}")
    n_v = v * d
    tokens = budget / (6.0 * (n_nv + n_v))
    return -p.E + p.A1 / n_nv**p.alpha1 + p.A2 / n_v**p.alpha2 + p.B / tokens**p.beta


def dloss_dv_at_budget(p: ParametricLoss, n_nv: float, d: float, budget: float, v: float) -> float:
    """Derivative of :func:`loss_at_budget` with respect to v.

    The capacity term falls as -alpha2*A2*d/(v d)^(alpha2+1) while the
    squeezed data term grows as beta*B*(6/C)^beta*d*(n_nv + v d)^(beta-1).
    """
    n_v = v * d
    falling = p.alpha2 * p.A2 * d / n_v ** (p.alpha2 + 1.0)
    rising = p.beta * p.B * (6.0 / budget) ** p.beta * d * (n_nv + n_v) ** (p.beta - 1.0)
    return rising - falling


def _log_slope_gap(p: ParametricLoss, n_nv: float, d: float, budget: float, v: float) -> float:
    """ln(rising term) - ln(falling term); increasing in v, zero at the root."""
    n_v = v * d
    log_fall = math.log(p.alpha2 * p.A2) - (p.alpha2 + 1.0) * math.log(n_v)
    log_rise = (
        math.log(p.beta * p.B)
        + p.beta * math.log(6.0 / budget)
        + (p.beta - 1.0) * math.log(n_nv + n_v)
    )
    return log_rise - log_fall


def optimal_v_flops(
    p: ParametricLoss,
    n_nv: float,
    d: float,
    budget: float,
    v_lo: float = 1e3,
    v_hi: float = 1e7,
    probes: int = 64,
    rtol: float = 1e-6,
) -> VocabOptimum:
    """Loss-minimizing vocabulary size under a FLOPs budget.

    Finds the root of the substituted loss derivative by log-spaced bracket
    scan plus bisection, then rounds to a multiple of 128. Without a sign
    change the better boundary is returned with ``boundary=True``.
    """
    if n_nv <= 0 or d <= 0 or budget <= 0:
        raise ValidationError(
            f"optimal_v_flops needs positive inputs, got n_nv={n_nv}, d={d}, budget={budget}"
        )
    grid = np.exp(np.linspace(math.log(v_lo), math.log(v_hi), probes))
    values = [_log_slope_gap(p, n_nv, d, budget, float(g)) for g in grid]
    bracket = None
    for i in range(len(grid) - 1):
        if values[i] <= 0.0 < values[i + 1]:
            bracket = (float(grid[i]), float(grid[i + 1]))
            break
    if bracket is None:
        boundary_v = v_hi if values[-1] <= 0 else v_lo
        return VocabOptimum(round_to_multiple(boundary_v), True)
    left, right = bracket
    while right - left > rtol * left:
        mid = math.sqrt(left * right)
        if _log_slope_gap(p, n_nv, d, budget, mid) <= 0:
            left = mid
        else:
            right = mid
    return VocabOptimum(round_to_multiple(math.sqrt(left * right)), False)


def optimal_v_chars(
    p: ParametricLoss,
    n_nv: float,
    d: float,
    h: float,
    fert: FertilityFit,
    v_lo: float = 1e3,
    v_hi: float = 1e7,
    rtol: float = 1e-6,
) -> int:
    """Loss-minimizing vocabulary size at a fixed number of training characters.

    Minimizes the two vocabulary-dependent terms A2/(v d)^a2 + B/(h f(v))^b
    by golden-section search on ln v. The search stops at the fertility
    clamp: above it the data term goes flat and the surface carries no more
    information about the vocabulary trade-off.
    """
    if n_nv <= 0 or d <= 0 or h <= 0:
        raise ValidationError(
            f"optimal_v_chars needs positive inputs, got n_nv={n_nv}, d={d}, h={h}"
        )
    hi = min(v_hi, fert.clamp_v)
    lo = v_lo
    if hi <= lo:
        return round_to_multiple(lo)

    def objective(v: float) -> float:
        return p.A2 / (v * d) ** p.alpha2 + p.B / (h * eval_fertility(v, fert)) ** p.beta

    mid = math.sqrt(lo * hi)
    f_lo, f_mid, f_hi = objective(lo), objective(mid), objective(hi)
    if f_mid > f_lo and f_mid > f_hi:
        raise SolverError(
            "objective is not unimodal on the search interval (interior maximum)"
        )

    # Golden-section on t = ln v.
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    t_lo, t_hi = math.log(lo), math.log(hi)
    t1 = t_hi - invphi * (t_hi - t_lo)
    t2 = t_lo + invphi * (t_hi - t_lo)
    f1, f2 = objective(math.exp(t1)), objective(math.exp(t2))
    while t_hi - t_lo > rtol:
        if f1 <= f2:
            t_hi, t2, f2 = t2, t1, f1
            t1 = t_hi - invphi * (t_hi - t_lo)
            f1 = objective(math.exp(t1))
        else:
            t_lo, t1, f1 = t1, t2, f2
            t2 = t_lo + invphi * (t_hi - t_lo)
            f2 = objective(math.exp(t2))
    return round_to_multiple(math.exp(0.5 * (t_lo + t_hi)))


def _alpha_from_t(t: np.ndarray | float) -> np.ndarray | float:
    return 0.1 + 0.9 / (1.0 + np.exp(-np.clip(t, -_EXP_CLIP, _EXP_CLIP)))


def _t_from_alpha(alpha: float) -> float:
    s = min(max((alpha - 0.1) / 0.9, 1e-6), 1 - 1e-6)
    return math.log(s / (1.0 - s))


def fit_params(
    records: Sequence[RunRecord],
    flops_floor: float = DEFAULT_FLOPS_FLOOR,
    fert: FertilityFit | None = None,
    beta_tied: bool = True,
    prune_to: int | None = 50,
) -> ParametricLoss:
    """Fit the loss-surface constants to run records by multi-start Huber
    minimization.

    Records below ``flops_floor`` are dropped. The scale constants are
    optimized in log form and the exponents through a smooth map onto
    (0.1, 1); starts come from a 3-per-axis grid (729 combinations) pruned to
    the best ``prune_to`` by initial objective — pass ``prune_to=None`` to
    run the full grid. With ``beta_tied`` the data exponent equals the
    parameter exponent.
    """
    if fert is None:
        raise ValidationError("fit_params requires a fertility fit to map characters to tokens")
    used = [r for r in records if r.flops >= flops_floor]
    if len(used) < 20:
        raise UnderdeterminedError(
            f"need >= 20 records above the FLOPs floor {flops_floor:.3g}, got {len(used)}"
        )
    vocabs = {r.vocab_size for r in used}
    sizes = {r.n_nv for r in used}
    lacking = []
    if len(vocabs) < 3:
        lacking.append(f"vocab_size ({len(vocabs)} distinct)")
    if len(sizes) < 3:
        lacking.append(f"n_nv ({len(sizes)} distinct)")
    if lacking:
        raise UnderdeterminedError("not enough spread along: " + ", ".join(lacking))

    ln_nnv = np.array([math.log(r.n_nv) for r in used])
    ln_nv = np.array([math.log(r.n_v) for r in used])
    ln_tokens = np.array(
        [math.log(r.chars_seen * eval_fertility(r.vocab_size, fert)) for r in used]
    )
    target = np.array([r.loss_u for r in used])

    def predict(theta: np.ndarray) -> np.ndarray:
        a1, a2, b, e = theta[0], theta[1], theta[2], theta[3]
        alpha1 = _alpha_from_t(theta[4])
        alpha2 = _alpha_from_t(theta[5])
        beta = alpha1 if beta_tied else _alpha_from_t(theta[6])
        with np.errstate(over="ignore"):
            return (
                -np.exp(np.clip(e, None, _EXP_CLIP))
                + np.exp(np.clip(a1 - alpha1 * ln_nnv, None, _EXP_CLIP))
                + np.exp(np.clip(a2 - alpha2 * ln_nv, None, _EXP_CLIP))
                + np.exp(np.clip(b - beta * ln_tokens, None, _EXP_CLIP))
            )

    def objective(theta: np.ndarray) -> float:
        return float(np.sum(huber(predict(theta) - target, HUBER_DELTA)))

    scale_grid = (0.0, 2.5, 5.0)
    e_grid = (0.0, 1.0, 2.0)
    t_grid = tuple(_t_from_alpha(alpha) for alpha in (0.15, 0.5, 0.85))
    starts = []
    for a1 in scale_grid:
        for a2 in scale_grid:
            for b in scale_grid:
                for e in e_grid:
                    for t1 in t_grid:
                        for t2 in t_grid:
                            theta = [a1, a2, b, e, t1, t2]
                            if not beta_tied:
                                theta.append(t1)
                            starts.append(np.array(theta))

    best, _ = multistart_minimize(objective, starts, prune_to=prune_to)
    alpha1 = float(_alpha_from_t(best[4]))
    alpha2 = float(_alpha_from_t(best[5]))
    beta = alpha1 if beta_tied else float(_alpha_from_t(best[6]))
    return ParametricLoss(
        E=math.exp(best[3]),
        A1=math.exp(best[0]),
        A2=math.exp(best[1]),
        B=math.exp(best[2]),
        alpha1=alpha1,
        alpha2=alpha2,
        beta=beta,
        beta_tied=beta_tied,
    )
