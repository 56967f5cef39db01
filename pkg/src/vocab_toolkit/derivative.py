"""Derivative-based vocabulary estimation: the cost derivative dC/dV, its
root over V, the scaling exponent gamma, and anchored extrapolation.

The training-character count cancels in the root condition, so the
derivative-optimal vocabulary depends only on the non-vocabulary parameter
count, the embedding width and the fertility curve.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import SolverError, ValidationError
from .fertility import FertilityFit, eval_fertility
from .fitting import HUBER_DELTA, huber, multistart_minimize, round_to_multiple
from .records import DEFAULT_SHAPE_TABLE, ShapeTable, embed_dim_for

__all__ = [
    "GammaFit",
    "DerivativeValue",
    "VocabRoot",
    "dflops_dv",
    "solve_v_root",
    "fit_gamma",
    "predict_nv",
    "derivative_ladder_pairs",
    "DEFAULT_GAMMA_LADDER",
]

# Non-vocabulary parameter sizes of the reference model families, used as the
# default ladder when fitting gamma from derivative-optimal vocabularies.
DEFAULT_GAMMA_LADDER: tuple[float, ...] = (33e6, 85e6, 151e6, 302e6, 631e6, 1130e6, 2870e6)


class DerivativeValue(NamedTuple):
    value: float
    clamped: bool


class VocabRoot(NamedTuple):
    vocab_size: float
    boundary: bool


@dataclass(frozen=True)
class GammaFit:
    """Power-law exponent relating optimal vocabulary parameters to
    non-vocabulary parameters, anchored at a reference point."""

    gamma: float
    anchor_n_nv: float
    anchor_n_v: float

    def __post_init__(self):
        if self.anchor_n_nv <= 0 or self.anchor_n_v <= 0:
            raise ValidationError("gamma anchors must be positive")

    def to_json_dict(self) -> dict:
        return {"gamma": self.gamma, "anchor_n_nv": self.anchor_n_nv, "anchor_n_v": self.anchor_n_v}

    @classmethod
    def from_json_dict(cls, data: dict) -> "GammaFit":
        try:
            return cls(
                gamma=float(data["gamma"]),
                anchor_n_nv=float(data["anchor_n_nv"]),
                anchor_n_v=float(data["anchor_n_v"]),
            )
        except KeyError as exc:
            raise ValidationError(f"gamma JSON is missing key {exc}") from None

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "GammaFit":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


def _cost_slope(n_nv: float, v: float, d: float, fert: FertilityFit) -> float:
    """dC/dV divided by 6H: (n_nv + v*d)(2a ln v + b)/v + f(v)*d."""
    x = math.log(v)
    return (n_nv + v * d) * (2.0 * fert.a * x + fert.b) / v + eval_fertility(v, fert) * d


def dflops_dv(n_nv: float, v: float, d: float, h: float, fert: FertilityFit) -> DerivativeValue:
    """Derivative of the training cost with respect to vocabulary size.

    Above the fertility clamp the curve is flat in f, so the derivative
    reduces to the parameter-growth term 6h*f(clamp)*d and is reported with
    ``clamped=True``.
    """
    if n_nv <= 0 or d <= 0 or h <= 0 or v <= 2:
        raise ValidationError(
            f"dflops_dv needs positive inputs and v > 2, got n_nv={n_nv}, v={v}, d={d}, h={h}"
        )
    if v >= fert.clamp_v:
        return DerivativeValue(6.0 * h * eval_fertility(fert.clamp_v, fert) * d, True)
    return DerivativeValue(6.0 * h * _cost_slope(n_nv, v, d, fert), False)


def solve_v_root(
    n_nv: float,
    d: float,
    fert: FertilityFit,
    probes: int = 64,
    rtol: float = 1e-6,
) -> VocabRoot:
    """Vocabulary size at which the training cost is minimal.

    Scans log-spaced probes over (2, clamp_v) for a sign change of dC/dV,
    then bisects. The character count cancels and is not needed. When the
    derivative never turns positive the cost keeps falling up to the clamp,
    so the clamp itself is returned with ``boundary=True``.
    """
    if n_nv <= 0 or d <= 0:
        raise ValidationError(f"solve_v_root needs positive inputs, got n_nv={n_nv}, d={d}")
    lo, hi = 2.0, fert.clamp_v
    grid = np.exp(np.linspace(math.log(lo), math.log(hi), probes))
    values = [_cost_slope(n_nv, float(g), d, fert) for g in grid]
    if values[0] > 0:
        raise SolverError(
            f"cost derivative already positive at v={grid[0]:.3g}: degenerate minimum"
        )
    bracket = None
    for i in range(len(grid) - 1):
        if values[i] <= 0.0 < values[i + 1]:
            bracket = (float(grid[i]), float(grid[i + 1]))
            break
    if bracket is None:
        return VocabRoot(fert.clamp_v, True)
    left, right = bracket
    while right - left > rtol * left:
        mid = math.sqrt(left * right)
        if _cost_slope(n_nv, mid, d, fert) <= 0:
            left = mid
        else:
            right = mid
    return VocabRoot(math.sqrt(left * right), False)


def fit_gamma(pairs: Sequence[tuple[float, float]], n_starts: int = 21) -> GammaFit:
    """Fit gamma in n_v/n_v0 = (n_nv/n_nv0)^gamma by 1-D Huber minimization.

    The first pair is the anchor. Initial guesses are uniform over [0, 1];
    the Huber delta is the shared 0.001.
    """
    if len(pairs) < 2:
        raise ValidationError(f"need >= 2 (n_nv, n_v) pairs, got {len(pairs)}")
    for n_nv, n_v in pairs:
        if n_nv <= 0 or n_v <= 0:
            raise ValidationError(f"pairs must be positive, got ({n_nv}, {n_v})")
    anchor_n_nv, anchor_n_v = pairs[0]
    log_x = np.array([math.log(n / anchor_n_nv) for n, _ in pairs])
    log_y = np.array([math.log(v / anchor_n_v) for _, v in pairs])
    if np.all(log_x == 0):
        raise ValidationError("all pairs equal the anchor: slope is undefined")

    def objective(theta: np.ndarray) -> float:
        return float(np.sum(huber(theta[0] * log_x - log_y, HUBER_DELTA)))

    starts = [np.array([g]) for g in np.linspace(0.0, 1.0, n_starts)]
    best, _ = multistart_minimize(objective, starts)
    return GammaFit(gamma=float(best[0]), anchor_n_nv=anchor_n_nv, anchor_n_v=anchor_n_v)


def predict_nv(
    fit: GammaFit,
    n_nv: float,
    table: ShapeTable = DEFAULT_SHAPE_TABLE,
    embed_dim: int | None = None,
) -> tuple[float, int]:
    """Optimal vocabulary parameters and size at ``n_nv`` via the anchored law.

    Returns (n_v, vocab_size) with the vocabulary size rounded to a multiple
    of 128 using the shape table's width unless ``embed_dim`` overrides it.
    """
    if n_nv <= 0:
        raise ValidationError(f"n_nv must be positive, got {n_nv}")
    n_v = fit.anchor_n_v * (n_nv / fit.anchor_n_nv) ** fit.gamma
    d = embed_dim if embed_dim is not None else embed_dim_for(n_nv, table)
    return n_v, round_to_multiple(n_v / d)


def derivative_ladder_pairs(
    fert: FertilityFit,
    table: ShapeTable = DEFAULT_SHAPE_TABLE,
    ladder: Sequence[float] = DEFAULT_GAMMA_LADDER,
) -> list[tuple[float, float]]:
    """Derivative-optimal (n_nv, n_v) pairs along a model-size ladder.

    This is the default input to :func:`fit_gamma`: each ladder entry is
    solved for its cost-minimizing vocabulary and converted to vocabulary
    parameters with the shape table's width.
    """
    pairs = []
    for n_nv in ladder:
        d = embed_dim_for(n_nv, table)
        root = solve_v_root(n_nv, d, fert)
        pairs.append((float(n_nv), root.vocab_size * d))
    return pairs
