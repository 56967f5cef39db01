"""JSON-over-HTTP service exposing predictions, loss curves, fertility
evaluation and preset inspection over immutable fit artifacts.

The handlers are plain functions of (request, bundle); the CLI calls the
same functions in-process, so command-line and HTTP answers are identical
by construction. The service is read-only: fitting happens in the CLI.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal

import numpy as np
from fastapi import FastAPI, Query
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, model_validator

from .derivative import GammaFit, predict_nv
from .errors import ValidationError, VocabToolkitError
from .fertility import FertilityFit, eval_fertility
from .fitting import round_to_multiple
from .isoflops import AllocationLaws, predict_allocation
from .parametric import ParametricLoss, eval_loss, loss_at_budget, optimal_v_chars, optimal_v_flops
from .presets import PRESETS, PresetBundle
from .records import ShapeTable, embed_dim_for

__all__ = [
    "PredictionRequest",
    "VocabPrediction",
    "CurvePoint",
    "LossCurve",
    "predict",
    "loss_curve",
    "fertility_ratio",
    "load_artifacts_dir",
    "create_app",
    "MIN_VOCAB",
]

MIN_VOCAB = 1024


class PredictionRequest(BaseModel):
    """What-if query: which approach, which scale, which constraint.

    Approach 1 needs a FLOPs budget only; approach 2 needs the model size
    only; approach 3 needs the model size plus exactly one of a FLOPs budget
    or a character count.
    """

    approach: Literal[1, 2, 3]
    n_nv: float | None = Field(default=None, gt=0)
    flops: float | None = Field(default=None, gt=0)
    chars: float | None = Field(default=None, gt=0)
    embed_dim: int | None = Field(default=None, gt=0)
    preset: str = "paper-2024"

    @model_validator(mode="after")
    def _check_constraint(self) -> "PredictionRequest":
        if self.approach == 1:
            if self.flops is None:
                raise ValueError("approach 1 requires a flops budget")
            if self.chars is not None or self.n_nv is not None:
                raise ValueError("approach 1 takes only a flops budget")
        elif self.approach == 2:
            if self.n_nv is None:
                raise ValueError("approach 2 requires n_nv")
            if self.flops is not None or self.chars is not None:
                raise ValueError("approach 2 takes neither flops nor chars")
        else:
            if self.n_nv is None:
                raise ValueError("approach 3 requires n_nv")
            if (self.flops is None) == (self.chars is None):
                raise ValueError("approach 3 requires exactly one of flops or chars")
        return self


class VocabPrediction(BaseModel):
    """Predicted optimal vocabulary, with the constraint echoed back."""

    vocab_size: int
    n_v: float
    embed_dim: int
    approach: int
    mode: Literal["flops-budget", "fixed-characters"]
    n_nv: float | None = None
    chars: float | None = None
    loss_u: float | None = None
    boundary: bool = False
    constraint: dict


class CurvePoint(BaseModel):
    v: float
    loss_u: float


class LossCurve(BaseModel):
    points: list[CurvePoint]
    minimum: CurvePoint
    boundary: bool
    n_nv: float
    flops: float
    embed_dim: int


def _clamp_vocab(v: float) -> int:
    return max(MIN_VOCAB, round_to_multiple(v))


def predict(request: PredictionRequest, bundle: PresetBundle) -> VocabPrediction:
    """Evaluate one prediction request against a fit-artifact bundle."""
    mode = "fixed-characters" if request.chars is not None else "flops-budget"
    if request.approach == 1:
        alloc = predict_allocation(
            bundle.laws, request.flops, bundle.shape_table, embed_dim=request.embed_dim
        )
        d = request.embed_dim or embed_dim_for(alloc.n_nv, bundle.shape_table)
        return VocabPrediction(
            vocab_size=max(MIN_VOCAB, alloc.vocab_size),
            n_v=alloc.n_v,
            embed_dim=d,
            approach=1,
            mode=mode,
            n_nv=alloc.n_nv,
            chars=alloc.h,
            constraint={"flops": request.flops},
        )
    if request.approach == 2:
        d = request.embed_dim or embed_dim_for(request.n_nv, bundle.shape_table)
        n_v, vocab = predict_nv(
            bundle.gamma, request.n_nv, bundle.shape_table, embed_dim=request.embed_dim
        )
        return VocabPrediction(
            vocab_size=max(MIN_VOCAB, vocab),
            n_v=n_v,
            embed_dim=d,
            approach=2,
            mode=mode,
            n_nv=request.n_nv,
            constraint={"n_nv": request.n_nv},
        )

    d = request.embed_dim or embed_dim_for(request.n_nv, bundle.shape_table)
    if request.flops is not None:
        opt = optimal_v_flops(bundle.ploss, request.n_nv, d, request.flops)
        vocab = max(MIN_VOCAB, opt.vocab_size)
        return VocabPrediction(
            vocab_size=vocab,
            n_v=float(vocab) * d,
            embed_dim=d,
            approach=3,
            mode=mode,
            n_nv=request.n_nv,
            loss_u=loss_at_budget(bundle.ploss, request.n_nv, d, request.flops, vocab),
            boundary=opt.boundary,
            constraint={"flops": request.flops},
        )
    vocab = max(MIN_VOCAB, optimal_v_chars(bundle.ploss, request.n_nv, d, request.chars, bundle.fertility))
    return VocabPrediction(
        vocab_size=vocab,
        n_v=float(vocab) * d,
        embed_dim=d,
        approach=3,
        mode=mode,
        n_nv=request.n_nv,
        chars=request.chars,
        loss_u=eval_loss(
            bundle.ploss, request.n_nv, float(vocab) * d, request.chars, bundle.fertility, embed_dim=d
        ),
        constraint={"chars": request.chars},
    )


def loss_curve(
    bundle: PresetBundle,
    n_nv: float,
    flops: float,
    vmin: float = 1024,
    vmax: float = 1048576,
    points: int = 161,
    embed_dim: int | None = None,
) -> LossCurve:
    """(V, loss_u) series under the budget substitution, minimum marked.

    The marker comes from the same root solver as the predict endpoint, so
    the two agree exactly rather than to grid resolution.
    """
    if n_nv <= 0 or flops <= 0:
        raise ValidationError("n_nv and flops must be positive")
    if points < 2:
        raise ValidationError(f"need at least 2 curve points, got {points}")
    if not 2 <= vmin < vmax:
        raise ValidationError(f"need 2 <= vmin < vmax, got vmin={vmin}, vmax={vmax}")
    d = embed_dim or embed_dim_for(n_nv, bundle.shape_table)
    grid = np.geomspace(vmin, vmax, points)
    series = [
        CurvePoint(v=float(v), loss_u=loss_at_budget(bundle.ploss, n_nv, d, flops, float(v)))
        for v in grid
    ]
    opt = optimal_v_flops(bundle.ploss, n_nv, d, flops)
    vocab = max(MIN_VOCAB, opt.vocab_size)
    minimum = CurvePoint(v=float(vocab), loss_u=loss_at_budget(bundle.ploss, n_nv, d, flops, vocab))
    return LossCurve(
        points=series,
        minimum=minimum,
        boundary=opt.boundary,
        n_nv=n_nv,
        flops=flops,
        embed_dim=d,
    )


def fertility_ratio(bundle: PresetBundle, v: float) -> dict:
    return {"v": v, "ratio": eval_fertility(v, bundle.fertility)}


def _bundle_summary(bundle: PresetBundle) -> dict:
    return {
        "name": bundle.name,
        "fertility": bundle.fertility.to_json_dict(),
        "laws": bundle.laws.to_json_dict(),
        "gamma": bundle.gamma.to_json_dict(),
        "ploss": bundle.ploss.to_json_dict(),
    }


def load_artifacts_dir(path: str | Path, base: PresetBundle) -> PresetBundle:
    """Bundle the fit artifacts found in a directory over a base preset.

    Recognized files: fertility.json, laws.json, gamma.json, ploss.json,
    shapes.json. Missing pieces fall back to the base bundle.
    """
    path = Path(path)
    if not path.is_dir():
        raise ValidationError(f"artifacts dir {path} does not exist")
    kwargs = {}
    if (path / "fertility.json").exists():
        kwargs["fertility"] = FertilityFit.load(path / "fertility.json")
    if (path / "laws.json").exists():
        kwargs["laws"] = AllocationLaws.load(path / "laws.json")
    if (path / "gamma.json").exists():
        kwargs["gamma"] = GammaFit.load(path / "gamma.json")
    if (path / "ploss.json").exists():
        kwargs["ploss"] = ParametricLoss.load(path / "ploss.json")
    if (path / "shapes.json").exists():
        kwargs["shape_table"] = load_shape_table(path / "shapes.json")
    import dataclasses

    return dataclasses.replace(base, name="local", **kwargs)


def load_shape_table(path: str | Path) -> ShapeTable:
    """Read a width ladder from JSON: [[upper_bound, dim], ...]."""
    import json

    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data.get("brackets")
    if not isinstance(data, list):
        raise ValidationError(f"shape table JSON {path} must be a list of [bound, dim] pairs")
    return ShapeTable(brackets=tuple((float(b), int(d)) for b, d in data))


def create_app(
    bundles: dict[str, PresetBundle] | None = None,
    default_preset: str = "paper-2024",
) -> FastAPI:
    """Build the API over a set of named artifact bundles."""
    registry = dict(PRESETS)
    if bundles:
        registry.update(bundles)
    if default_preset not in registry:
        raise ValidationError(f"default preset {default_preset!r} is not loaded")

    app = FastAPI(title="vocab-toolkit", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET"],
        allow_headers=["*"],
    )

    def bundle_for(name: str | None) -> PresetBundle:
        key = name or default_preset
        if key not in registry:
            known = ", ".join(sorted(registry))
            raise ValidationError(f"unknown preset {key!r} (available: {known})")
        return registry[key]

    @app.exception_handler(VocabToolkitError)
    async def _domain_error(request, exc: VocabToolkitError):
        return JSONResponse(
            status_code=400,
            content={"error": {"type": type(exc).__name__, "message": str(exc)}},
        )

    @app.exception_handler(RequestValidationError)
    async def _request_error(request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": {"type": "ValidationError", "message": str(exc.errors())}},
        )

    @app.get("/api/v1/predict", response_model=VocabPrediction)
    def api_predict(
        approach: int = Query(...),
        n_nv: float | None = Query(default=None),
        flops: float | None = Query(default=None),
        chars: float | None = Query(default=None),
        embed_dim: int | None = Query(default=None),
        preset: str | None = Query(default=None),
    ):
        bundle = bundle_for(preset)
        try:
            request = PredictionRequest(
                approach=approach, n_nv=n_nv, flops=flops, chars=chars, embed_dim=embed_dim,
                preset=bundle.name,
            )
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        return predict(request, bundle)

    @app.get("/api/v1/curve", response_model=LossCurve)
    def api_curve(
        n_nv: float = Query(...),
        flops: float = Query(...),
        vmin: float = Query(default=1024),
        vmax: float = Query(default=1048576),
        points: int = Query(default=161),
        embed_dim: int | None = Query(default=None),
        preset: str | None = Query(default=None),
    ):
        return loss_curve(
            bundle_for(preset), n_nv, flops, vmin=vmin, vmax=vmax, points=points, embed_dim=embed_dim
        )

    @app.get("/api/v1/fertility")
    def api_fertility(v: float = Query(..., ge=2), preset: str | None = Query(default=None)):
        return fertility_ratio(bundle_for(preset), v)

    @app.get("/api/v1/presets")
    def api_presets():
        return {
            "default": default_preset,
            "presets": [_bundle_summary(registry[name]) for name in sorted(registry)],
        }

    return app
