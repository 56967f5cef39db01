"""Synthetic-experiment generator: plant a ground-truth loss surface and
fertility curve, then emit IsoFLOPs-style run-record grids with controllable
noise.

These grids are the brute-force oracle behind every fitter recovery test:
with zero noise, refitting must reproduce the plant.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .errors import OutOfRangeError, ValidationError
from .fertility import FertilityFit
from .isoflops import AllocationLaws, BudgetOptimum
from .parametric import ParametricLoss, eval_loss
from .records import (
    DEFAULT_SHAPE_TABLE,
    RunRecord,
    ShapeTable,
    embed_dim_for,
    flops_cost,
    tokens_from_chars,
)

__all__ = ["SynthPlan", "generate", "optima_from_laws", "DEFAULT_CHAR_BUDGETS", "DEFAULT_VOCAB_LIST"]

# Reference model families: non-vocabulary parameters -> training characters.
DEFAULT_CHAR_BUDGETS: tuple[tuple[float, float], ...] = (
    (33e6, 4.3e9),
    (85e6, 11.1e9),
    (151e6, 19.6e9),
    (302e6, 43.0e9),
    (631e6, 101.6e9),
    (1130e6, 201.3e9),
)

DEFAULT_VOCAB_LIST: tuple[int, ...] = (
    4096,
    6144,
    8192,
    10240,
    16384,
    24576,
    32768,
    48128,
    64512,
    96256,
)


@dataclass(frozen=True)
class SynthPlan:
    """Recipe for one synthetic grid.

    ``char_scale`` shrinks the per-family character budgets so desk-scale
    grids stay small (default 1/1000 of the reference budgets);
    ``checkpoint_decades`` is how far below the budget the geometric
    checkpoint grid starts.
    """

    ploss: ParametricLoss
    fert: FertilityFit
    families: tuple[tuple[float, float], ...] = DEFAULT_CHAR_BUDGETS
    vocab_list: tuple[int, ...] = DEFAULT_VOCAB_LIST
    checkpoints: int = 5
    noise: float = 0.0
    seed: int = 0
    char_scale: float = 1e-3
    checkpoint_decades: float = 2.0
    shape_table: ShapeTable = DEFAULT_SHAPE_TABLE

    def __post_init__(self):
        if not self.families or not self.vocab_list:
            raise ValidationError("synth plan needs non-empty family and vocab lists")
        if list(self.families) != sorted(self.families) or any(
            n <= 0 or h <= 0 for n, h in self.families
        ):
            raise ValidationError("families must be positive and sorted by n_nv")
        if list(self.vocab_list) != sorted(self.vocab_list) or self.vocab_list[0] < 2:
            raise ValidationError("vocab list must be sorted and >= 2")
        if self.noise < 0:
            raise ValidationError(f"noise scale must be >= 0, got {self.noise}")
        if self.checkpoints < 1:
            raise ValidationError(f"checkpoints must be >= 1, got {self.checkpoints}")

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "SynthPlan":
        """Load a plan from JSON or TOML; missing keys fall back to defaults."""
        path = Path(path)
        if path.suffix.lower() == ".toml":
            data = tomllib.loads(path.read_text())
        else:
            data = json.loads(path.read_text())
        data.update(overrides)
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "SynthPlan":
        from .presets import PAPER_FERTILITY, PAPER_PARAMETRIC

        kwargs: dict = {}
        kwargs["ploss"] = (
            ParametricLoss.from_json_dict(data["ploss"]) if "ploss" in data else PAPER_PARAMETRIC
        )
        kwargs["fert"] = (
            FertilityFit.from_json_dict(data["fertility"]) if "fertility" in data else PAPER_FERTILITY
        )
        if "families" in data:
            kwargs["families"] = tuple((float(n), float(h)) for n, h in data["families"])
        if "vocab_list" in data:
            kwargs["vocab_list"] = tuple(int(v) for v in data["vocab_list"])
        for key in ("checkpoints", "seed"):
            if key in data:
                kwargs[key] = int(data[key])
        for key in ("noise", "char_scale", "checkpoint_decades"):
            if key in data:
                kwargs[key] = float(data[key])
        return cls(**kwargs)


def generate(plan: SynthPlan) -> list[RunRecord]:
    """Emit run records for every (family, vocab) pair in the plan.

    Checkpoints sit at geometrically spaced character counts up to the
    family's scaled budget; the loss is the planted surface plus Gaussian
    noise. Within a family the noise stream is sequential, so output is
    byte-identical for a given seed regardless of scheduling.
    """
    records: list[RunRecord] = []
    for fam_idx, (n_nv, budget_chars) in enumerate(plan.families):
        rng = np.random.default_rng([plan.seed, fam_idx])
        d = embed_dim_for(n_nv, plan.shape_table)
        budget = budget_chars * plan.char_scale
        if plan.checkpoints == 1:
            h_grid = [budget]
        else:
            h_grid = [
                float(h)
                for h in np.geomspace(budget / 10**plan.checkpoint_decades, budget, plan.checkpoints)
            ]
        for v in plan.vocab_list:
            n_v = float(v) * d
            for ck, h in enumerate(h_grid):
                loss = eval_loss(plan.ploss, n_nv, n_v, h, plan.fert, embed_dim=d)
                if plan.noise > 0:
                    loss += plan.noise * float(rng.standard_normal())
                records.append(
                    RunRecord(
                        run_id=f"synth-n{n_nv:.3g}-v{v}-c{ck}",
                        n_nv=n_nv,
                        vocab_size=v,
                        embed_dim=d,
                        chars_seen=float(h),
                        tokens_seen=tokens_from_chars(float(h), v, plan.fert),
                        flops=flops_cost(n_nv, v, d, float(h), plan.fert),
                        # Uniform-unigram convention: the raw loss sits ln(V)
                        # above the normalized loss.
                        lm_loss=loss + math.log(v),
                        loss_u=loss,
                        synthetic=True,
                    )
                )
    return records


def optima_from_laws(
    laws: AllocationLaws,
    budgets: Sequence[float],
    noise: float = 0.0,
    seed: int = 0,
    shape_table: ShapeTable = DEFAULT_SHAPE_TABLE,
) -> list[BudgetOptimum]:
    """Budget optima lying exactly on the given power laws.

    With ``noise`` > 0 every quantity is multiplied by a log-normal factor
    exp(N(0, noise)). This is the planted ground truth for power-law
    recovery tests.
    """
    rng = np.random.default_rng(seed)
    optima = []
    for budget in budgets:
        if budget <= 0:
            raise ValidationError(f"budget must be positive, got {budget}")
        n_nv = laws.nv_law(budget)
        n_v = laws.v_law(budget)
        h = laws.h_law(budget)
        if noise > 0:
            n_nv *= math.exp(noise * rng.standard_normal())
            n_v *= math.exp(noise * rng.standard_normal())
            h *= math.exp(noise * rng.standard_normal())
        # vocab_size is convenience metadata here; synthetic plants may push
        # n_nv beyond the width ladder, in which case the top width is used.
        try:
            d = embed_dim_for(n_nv, shape_table)
        except OutOfRangeError:
            d = shape_table.brackets[-1][1]
        optima.append(
            BudgetOptimum(
                flops=float(budget),
                n_nv=n_nv,
                n_v=n_v,
                h=h,
                loss_u=0.0,
                vocab_size=max(2, round(n_v / d)),
            )
        )
    return optima
