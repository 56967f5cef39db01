"""Tokens-per-character fertility curve: measurement points, the
quadratic-in-log-V fit, and its evaluation.

The curve is f(v) = a*ln(v)^2 + b*ln(v) + c, evaluated at ln(min(v, clamp_v))
so that it stays non-increasing for very large vocabularies where the raw
quadratic would turn back up.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, TextIO

from .errors import UnderdeterminedError, ValidationError

__all__ = [
    "FertilityPoint",
    "FertilityFit",
    "fit_fertility",
    "eval_fertility",
    "read_points_csv",
    "write_points_csv",
]

# Hard ceiling for the evaluation clamp: beyond this vocabulary size real
# tokenizers gain essentially nothing, so f is held constant.
CLAMP_CEILING = 200_000.0


@dataclass(frozen=True)
class FertilityPoint:
    """Measured tokens-per-character ratio for one vocabulary size."""

    vocab_size: int
    ratio: float

    def __post_init__(self):
        if self.vocab_size < 2:
            raise ValidationError(f"vocab_size must be >= 2, got {self.vocab_size}")
        if not self.ratio > 0:
            raise ValidationError(f"ratio must be positive, got {self.ratio}")


@dataclass(frozen=True)
class FertilityFit:
    """Coefficients of the fertility quadratic in ln(V), plus the clamp point.

    ``rmse``/``r2`` are goodness-of-fit diagnostics in ratio space; ``convex``
    is False when the fitted quadratic opened downward (a <= 0), in which case
    the clamp falls back to the hard ceiling.
    """

    a: float
    b: float
    c: float
    clamp_v: float
    rmse: float | None = None
    r2: float | None = None
    convex: bool = True

    @property
    def argmin_v(self) -> float:
        """Stationary point exp(-b / 2a) of the unclamped quadratic."""
        if self.a == 0:
            return math.inf
        return math.exp(-self.b / (2.0 * self.a))

    def to_json_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "c": self.c,
            "clamp_v": self.clamp_v,
            "rmse": self.rmse,
            "r2": self.r2,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "FertilityFit":
        try:
            a, b, c = float(data["a"]), float(data["b"]), float(data["c"])
        except KeyError as exc:
            raise ValidationError(f"fertility JSON is missing key {exc}") from None
        clamp = float(data.get("clamp_v") or CLAMP_CEILING)
        rmse = data.get("rmse")
        r2 = data.get("r2")
        return cls(
            a=a,
            b=b,
            c=c,
            clamp_v=clamp,
            rmse=None if rmse is None else float(rmse),
            r2=None if r2 is None else float(r2),
            convex=a > 0,
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "FertilityFit":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


def eval_fertility(v: float, fit: FertilityFit) -> float:
    """Tokens per character at vocabulary size ``v``.

    Natural log throughout; ``v`` is clamped to ``fit.clamp_v`` before
    evaluation so the curve never turns back up.
    """
    if v < 2:
        raise ValidationError(f"v must be >= 2, got {v}")
    x = math.log(min(float(v), fit.clamp_v))
    return fit.a * x * x + fit.b * x + fit.c


def fit_fertility(points: Sequence[FertilityPoint]) -> FertilityFit:
    """Least-squares fit of ratio = a*ln(V)^2 + b*ln(V) + c.

    The model is linear in (a, b, c) so the fit is the closed-form solution
    of the 3x3 normal equations. The clamp point is min(200K, argmin of the
    fitted quadratic). Raises ``UnderdeterminedError`` with fewer than three
    distinct vocabulary sizes.
    """
    distinct = {p.vocab_size for p in points}
    if len(distinct) < 3:
        raise UnderdeterminedError(
            f"need >= 3 distinct vocab sizes to fit the quadratic, got {len(distinct)}"
        )
    xs = [math.log(p.vocab_size) for p in points]
    ys = [p.ratio for p in points]
    n = len(points)

    # Normal equations for the design matrix [x^2, x, 1].
    s = [sum(x**k for x in xs) for k in range(5)]
    t0 = sum(ys)
    t1 = sum(x * y for x, y in zip(xs, ys))
    t2 = sum(x * x * y for x, y in zip(xs, ys))
    m = [
        [s[4], s[3], s[2]],
        [s[3], s[2], s[1]],
        [s[2], s[1], float(n)],
    ]
    rhs = [t2, t1, t0]
    a, b, c = _solve3(m, rhs)

    residuals = [a * x * x + b * x + c - y for x, y in zip(xs, ys)]
    rmse = math.sqrt(sum(r * r for r in residuals) / n)
    mean_y = t0 / n
    ss_tot = sum((y - mean_y) ** 2 for y in ys)
    r2 = 1.0 - sum(r * r for r in residuals) / ss_tot if ss_tot > 0 else 1.0

    convex = a > 0
    clamp = min(CLAMP_CEILING, math.exp(-b / (2.0 * a))) if convex else CLAMP_CEILING
    return FertilityFit(a=a, b=b, c=c, clamp_v=clamp, rmse=rmse, r2=r2, convex=convex)


def _solve3(m: list[list[float]], rhs: list[float]) -> tuple[float, float, float]:
    """Gaussian elimination with partial pivoting on a 3x3 system."""
    aug = [row[:] + [r] for row, r in zip(m, rhs)]
    for col in range(3):
        pivot = max(range(col, 3), key=lambda r: abs(aug[r][col]))
        if abs(aug[pivot][col]) < 1e-300:
            raise UnderdeterminedError("singular normal equations in fertility fit")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        for row in range(3):
            if row == col:
                continue
            factor = aug[row][col] / aug[col][col]
            for k in range(col, 4):
                aug[row][k] -= factor * aug[col][k]
    return tuple(aug[i][3] / aug[i][i] for i in range(3))  # type: ignore[return-value]


def read_points_csv(source: str | Path | TextIO) -> list[FertilityPoint]:
    """Read fertility points from a ``vocab_size,ratio`` CSV."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return read_points_csv(fh)
    reader = csv.DictReader(source)
    if reader.fieldnames is None or not {"vocab_size", "ratio"} <= set(reader.fieldnames):
        raise ValidationError("fertility points CSV needs 'vocab_size,ratio' header")
    points = []
    for i, row in enumerate(reader):
        try:
            points.append(
                FertilityPoint(vocab_size=int(float(row["vocab_size"])), ratio=float(row["ratio"]))
            )
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"fertility points CSV line {i + 2}: {exc}") from None
    return points


def write_points_csv(points: Iterable[FertilityPoint], dest: str | Path | TextIO) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_points_csv(points, fh)
            return
    writer = csv.writer(dest)
    writer.writerow(["vocab_size", "ratio"])
    for p in points:
        writer.writerow([p.vocab_size, format(p.ratio, ".17g")])
