"""IsoFLOPs analysis: interpolate training curves to fixed budgets, select
per-budget optima, and fit the three allocation power laws N_nv(C), N_v(C),
H(C) with the model-size and data exponents tied.

Fitting happens in log space with a summed Huber objective (delta 0.001),
multi-started from per-law warm starts on a K x alpha grid plus random joint
restarts.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import SolverError, UnderdeterminedError, ValidationError
from .fertility import FertilityFit, eval_fertility
from .fitting import HUBER_DELTA, huber, multistart_minimize, round_to_multiple
from .records import DEFAULT_SHAPE_TABLE, RunRecord, ShapeTable, embed_dim_for, flops_cost

__all__ = [
    "PowerLawFit",
    "AllocationLaws",
    "BudgetOptimum",
    "AllocationPrediction",
    "loss_curve_at_budget",
    "densify",
    "select_optima",
    "fit_power_laws",
    "predict_allocation",
    "geometric_budgets",
]


@dataclass(frozen=True)
class PowerLawFit:
    """One fitted law  value = k * C^alpha  with log-space diagnostics."""

    k: float
    alpha: float
    rmse: float | None = None
    r2: float | None = None

    def __post_init__(self):
        if not self.k > 0:
            raise ValidationError(f"power-law coefficient must be positive, got {self.k}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"power-law exponent must lie in [0, 1], got {self.alpha}")

    def __call__(self, flops: float) -> float:
        return self.k * flops**self.alpha


@dataclass(frozen=True)
class AllocationLaws:
    """The three allocation laws; the data law shares the model-size exponent."""

    nv_law: PowerLawFit
    v_law: PowerLawFit
    h_law: PowerLawFit

    def __post_init__(self):
        if self.nv_law.alpha != self.h_law.alpha:
            raise ValidationError(
                "model-size and data exponents must be identical "
                f"({self.nv_law.alpha} != {self.h_law.alpha})"
            )

    def to_json_dict(self) -> dict:
        def law(fit: PowerLawFit) -> dict:
            return {"k": fit.k, "alpha": fit.alpha}

        return {
            "nv": law(self.nv_law),
            "v": law(self.v_law),
            "h": law(self.h_law),
            "diagnostics": {
                name: {"rmse": fit.rmse, "r2": fit.r2}
                for name, fit in (("nv", self.nv_law), ("v", self.v_law), ("h", self.h_law))
            },
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "AllocationLaws":
        try:
            diag = data.get("diagnostics", {})

            def law(name: str) -> PowerLawFit:
                d = diag.get(name, {})
                return PowerLawFit(
                    k=float(data[name]["k"]),
                    alpha=float(data[name]["alpha"]),
                    rmse=d.get("rmse"),
                    r2=d.get("r2"),
                )

            return cls(nv_law=law("nv"), v_law=law("v"), h_law=law("h"))
        except KeyError as exc:
            raise ValidationError(f"allocation-laws JSON is missing key {exc}") from None

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "AllocationLaws":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class BudgetOptimum:
    """The loss-minimizing interpolated configuration at one FLOPs budget."""

    flops: float
    n_nv: float
    n_v: float
    h: float
    loss_u: float
    vocab_size: int = 0
    tie: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class AllocationPrediction:
    n_nv: float
    n_v: float
    h: float
    vocab_size: int


def _families(records: Sequence[RunRecord]) -> dict[tuple[float, int], list[RunRecord]]:
    """Group checkpoints by (n_nv, vocab_size), each sorted by FLOPs."""
    fams: dict[tuple[float, int], list[RunRecord]] = {}
    for rec in records:
        fams.setdefault((rec.n_nv, rec.vocab_size), []).append(rec)
    for key in fams:
        fams[key].sort(key=lambda r: r.flops)
    return fams


def _interp_at_budget(traj: Sequence[RunRecord], budget: float) -> tuple[float, float] | None:
    """(loss_u, h) linearly interpolated in ln(FLOPs); None when not bracketed."""
    if len(traj) < 2 or not (traj[0].flops <= budget <= traj[-1].flops):
        return None
    log_c = np.array([math.log(r.flops) for r in traj])
    loss = np.array([r.loss_u for r in traj])
    log_h = np.array([math.log(r.chars_seen) for r in traj])
    x = math.log(budget)
    return float(np.interp(x, log_c, loss)), float(math.exp(np.interp(x, log_c, log_h)))


def loss_curve_at_budget(
    records: Sequence[RunRecord], budget: float
) -> list[tuple[int, float]]:
    """Per-family loss at a fixed budget, as (vocab_size, loss_u) pairs.

    Each (n_nv, vocab) family with at least two checkpoints bracketing the
    budget contributes one interpolated point; families that do not bracket
    it are omitted rather than extrapolated.
    """
    if budget <= 0:
        raise ValidationError(f"budget must be positive, got {budget}")
    curve = []
    for (n_nv, vocab), traj in sorted(_families(records).items()):
        hit = _interp_at_budget(traj, budget)
        if hit is not None:
            curve.append((vocab, hit[0]))
    if not curve:
        raise ValidationError(
            f"no (n_nv, vocab) family brackets the budget {budget:.4g} in FLOPs"
        )
    curve.sort(key=lambda p: p[0])
    return curve


def densify(
    records: Sequence[RunRecord], factor: int, fert: FertilityFit
) -> list[RunRecord]:
    """Insert interpolated configurations between adjacent vocabulary sizes.

    Within each n_nv group, checkpoints are aligned by index across the
    vocabulary trajectories and ``factor - 1`` synthetic records are inserted
    between each adjacent vocab pair, linear in (ln n_v, ln h, loss_u).
    FLOPs are recomputed from the cost model and the new records carry
    ``synthetic=True``.
    """
    if factor < 1:
        raise ValidationError(f"factor must be >= 1, got {factor}")
    out = list(records)
    if factor == 1:
        return out

    groups: dict[float, dict[int, list[RunRecord]]] = {}
    for (n_nv, vocab), traj in _families(records).items():
        groups.setdefault(n_nv, {})[vocab] = traj

    for n_nv, by_vocab in sorted(groups.items()):
        vocabs = sorted(by_vocab)
        if len(vocabs) < 2:
            continue
        lengths = {len(by_vocab[v]) for v in vocabs}
        if len(lengths) != 1:
            raise ValidationError(
                f"n_nv={n_nv:.4g}: vocabulary trajectories have unequal checkpoint "
                f"counts {sorted(lengths)}; cannot align for interpolation"
            )
        dims = {by_vocab[v][0].embed_dim for v in vocabs}
        if len(dims) != 1:
            raise ValidationError(f"n_nv={n_nv:.4g}: inconsistent embed_dim within group")
        d = dims.pop()
        n_ckpt = lengths.pop()
        for lo_v, hi_v in zip(vocabs, vocabs[1:]):
            for k in range(n_ckpt):
                left, right = by_vocab[lo_v][k], by_vocab[hi_v][k]
                for j in range(1, factor):
                    t = j / factor
                    ln_nv = (1 - t) * math.log(left.n_v) + t * math.log(right.n_v)
                    ln_h = (1 - t) * math.log(left.chars_seen) + t * math.log(right.chars_seen)
                    loss_u = (1 - t) * left.loss_u + t * right.loss_u
                    lm = (1 - t) * left.lm_loss + t * right.lm_loss
                    vocab = max(2, round(math.exp(ln_nv) / d))
                    h = math.exp(ln_h)
                    out.append(
                        RunRecord(
                            run_id=f"{left.run_id}~{right.run_id}#{j}/{factor}",
                            n_nv=n_nv,
                            vocab_size=vocab,
                            embed_dim=d,
                            chars_seen=h,
                            tokens_seen=h * eval_fertility(vocab, fert),
                            flops=flops_cost(n_nv, vocab, d, h, fert),
                            lm_loss=lm,
                            loss_u=loss_u,
                            synthetic=True,
                        )
                    )
    return out


def select_optima(
    records: Sequence[RunRecord], budgets: Sequence[float]
) -> list[BudgetOptimum]:
    """Pick the minimum-loss interpolated configuration per budget.

    Budgets must be sorted ascending. A budget no trajectory brackets is
    skipped with a warning; loss ties break toward the smaller vocabulary
    parameter count and are flagged on the result.
    """
    if list(budgets) != sorted(budgets):
        raise ValidationError("budgets must be sorted ascending")
    fams = _families(records)
    optima: list[BudgetOptimum] = []
    for budget in budgets:
        if budget <= 0:
            raise ValidationError(f"budget must be positive, got {budget}")
        candidates = []
        for (n_nv, vocab), traj in sorted(fams.items()):
            hit = _interp_at_budget(traj, budget)
            if hit is None:
                continue
            loss_u, h = hit
            n_v = float(vocab) * traj[0].embed_dim
            candidates.append((loss_u, n_v, n_nv, vocab, h))
        if not candidates:
            warnings.warn(
                f"budget {budget:.4g} FLOPs outside every trajectory; skipped",
                stacklevel=2,
            )
            continue
        candidates.sort(key=lambda c: (c[0], c[1]))
        best = candidates[0]
        tie = len(candidates) > 1 and candidates[1][0] == best[0]
        optima.append(
            BudgetOptimum(
                flops=budget,
                n_nv=best[2],
                n_v=best[1],
                h=best[4],
                loss_u=best[0],
                vocab_size=best[3],
                tie=tie,
            )
        )
    return optima


def geometric_budgets(records: Sequence[RunRecord], count: int = 8) -> list[float]:
    """Geometric grid of budgets spanning the records' FLOPs range."""
    if not records:
        raise ValidationError("no records to derive budgets from")
    if count < 2:
        raise ValidationError(f"need at least 2 budgets, got {count}")
    lo = min(r.flops for r in records)
    hi = max(r.flops for r in records)
    return [float(x) for x in np.geomspace(lo, hi, count)]


def fit_power_laws(
    optima: Sequence[BudgetOptimum],
    n_random_starts: int = 50,
    seed: int = 0,
) -> AllocationLaws:
    """Jointly fit the three allocation laws with shared nv/h exponent.

    Minimizes the summed Huber loss of log residuals over
    (K1, K2, K3, alpha_shared, alpha_v). Warm starts come from the best
    single-law grid points over K in [-20, 15], alpha in [0, 1] (20 x 20);
    ``n_random_starts`` seeded joint restarts are added on top.
    """
    if len(optima) < 4:
        raise UnderdeterminedError(f"need >= 4 budget optima, got {len(optima)}")
    log_c = np.array([math.log(o.flops) for o in optima])
    if log_c.max() - log_c.min() < 2 * math.log(10.0):
        raise UnderdeterminedError("budget optima must span at least two decades of FLOPs")
    targets = {
        "nv": np.array([math.log(o.n_nv) for o in optima]),
        "v": np.array([math.log(o.n_v) for o in optima]),
        "h": np.array([math.log(o.h) for o in optima]),
    }

    def joint_objective(theta: np.ndarray) -> float:
        k1, k2, k3, a_shared, a_v = theta
        r1 = k1 + a_shared * log_c - targets["nv"]
        r2 = k2 + a_v * log_c - targets["v"]
        r3 = k3 + a_shared * log_c - targets["h"]
        return float(
            np.sum(huber(r1, HUBER_DELTA))
            + np.sum(huber(r2, HUBER_DELTA))
            + np.sum(huber(r3, HUBER_DELTA))
        )

    # Best single-law warm starts on the 20x20 grid.
    k_grid = np.linspace(-20.0, 15.0, 20)
    a_grid = np.linspace(0.0, 1.0, 20)
    warm: dict[str, list[tuple[float, float]]] = {}
    for name, y in targets.items():
        scored = []
        for k in k_grid:
            for a in a_grid:
                scored.append((float(np.sum(huber(k + a * log_c - y, HUBER_DELTA))), k, a))
        scored.sort()
        warm[name] = [(k, a) for _, k, a in scored[:3]]

    starts = []
    for k1, a1 in warm["nv"]:
        for k2, a2 in warm["v"]:
            for k3, a3 in warm["h"]:
                starts.append(np.array([k1, k2, k3, 0.5 * (a1 + a3), a2]))
    rng = np.random.default_rng(seed)
    for _ in range(n_random_starts):
        starts.append(
            np.array(
                [
                    rng.uniform(-20, 15),
                    rng.uniform(-20, 15),
                    rng.uniform(-20, 15),
                    rng.uniform(0, 1),
                    rng.uniform(0, 1),
                ]
            )
        )

    bounds = [(None, None)] * 3 + [(0.0, 1.0), (0.0, 1.0)]
    try:
        best, _ = multistart_minimize(joint_objective, starts, bounds=bounds)
    except SolverError as exc:
        raise SolverError(f"power-law fit failed: {exc}", partial=exc.partial) from exc

    k1, k2, k3, a_shared, a_v = (float(x) for x in best)

    def diagnostics(k: float, a: float, y: np.ndarray) -> tuple[float, float]:
        res = k + a * log_c - y
        rmse = float(np.sqrt(np.mean(res**2)))
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 - float(np.sum(res**2)) / ss_tot if ss_tot > 0 else 1.0
        return rmse, r2

    rmse1, r21 = diagnostics(k1, a_shared, targets["nv"])
    rmse2, r22 = diagnostics(k2, a_v, targets["v"])
    rmse3, r23 = diagnostics(k3, a_shared, targets["h"])
    return AllocationLaws(
        nv_law=PowerLawFit(k=math.exp(k1), alpha=a_shared, rmse=rmse1, r2=r21),
        v_law=PowerLawFit(k=math.exp(k2), alpha=a_v, rmse=rmse2, r2=r22),
        h_law=PowerLawFit(k=math.exp(k3), alpha=a_shared, rmse=rmse3, r2=r23),
    )


def predict_allocation(
    laws: AllocationLaws,
    budget: float,
    table: ShapeTable = DEFAULT_SHAPE_TABLE,
    embed_dim: int | None = None,
) -> AllocationPrediction:
    """Optimal (n_nv, n_v, h, vocab) for a budget under the fitted laws."""
    if budget <= 0:
        raise ValidationError(f"budget must be positive, got {budget}")
    n_nv = laws.nv_law(budget)
    n_v = laws.v_law(budget)
    h = laws.h_law(budget)
    d = embed_dim if embed_dim is not None else embed_dim_for(n_nv, table)
    return AllocationPrediction(n_nv=n_nv, n_v=n_v, h=h, vocab_size=round_to_multiple(n_v / d))
