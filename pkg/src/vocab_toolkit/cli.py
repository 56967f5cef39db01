"""Command-line front end.

Prediction commands go through the same handler functions as the HTTP
endpoints, so CLI and service answers are identical for identical inputs.
Fitting commands are CLI-only; the service stays read-only.

Exit codes: 0 success, 2 validation/usage error, 3 solver failure.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click

from .bpe import train_bpe, measure_ratio
from .derivative import GammaFit, derivative_ladder_pairs, fit_gamma
from .errors import SolverError, ValidationError
from .fertility import (
    FertilityFit,
    fit_fertility,
    read_points_csv,
    write_points_csv,
)
from .isoflops import (
    AllocationLaws,
    densify,
    fit_power_laws,
    geometric_budgets,
    loss_curve_at_budget,
    select_optima,
)
from .parametric import DEFAULT_FLOPS_FLOOR, ParametricLoss, fit_params
from .presets import PAPER_FERTILITY, REFERENCE_TABLE, get_preset
from .records import read_records_csv, write_records_csv
from .service import (
    PredictionRequest,
    create_app,
    load_artifacts_dir,
    load_shape_table,
    loss_curve,
    predict,
)
from .synth import SynthPlan, generate

ARTIFACTS_ENV = "VOCAB_TOOLKIT_ARTIFACTS"


def _handle_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ValidationError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except SolverError as exc:
            click.echo(f"solver error: {exc}", err=True)
            sys.exit(3)

    return wrapper


def _load_bundle(preset, artifacts_dir, fertility, laws, gamma, ploss, shapes=None):
    """Resolve the artifact bundle: preset, then artifacts dir, then files."""
    bundle = get_preset(preset)
    artifacts_dir = artifacts_dir or os.environ.get(ARTIFACTS_ENV)
    if artifacts_dir:
        bundle = load_artifacts_dir(artifacts_dir, bundle)
    return bundle.with_overrides(
        fertility=FertilityFit.load(fertility) if fertility else None,
        laws=AllocationLaws.load(laws) if laws else None,
        gamma=GammaFit.load(gamma) if gamma else None,
        ploss=ParametricLoss.load(ploss) if ploss else None,
        shape_table=load_shape_table(shapes) if shapes else None,
    )


def _corpus_text(paths: tuple[str, ...]) -> str:
    """Concatenate corpus files; directories contribute their .txt files."""
    pieces = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            files = sorted(path.glob("*.txt"))
            if not files:
                raise ValidationError(f"corpus directory {path} contains no .txt files")
            pieces.extend(f.read_text(encoding="utf-8") for f in files)
        elif path.is_file():
            pieces.append(path.read_text(encoding="utf-8"))
        else:
            raise ValidationError(f"corpus path {path} does not exist")
    text = "\n".join(pieces)
    if not text:
        raise ValidationError("corpus is empty")
    return text


def _parse_vocab_sizes(raw: str) -> list[int]:
    try:
        sizes = sorted({int(float(tok)) for tok in raw.split(",") if tok.strip()})
    except ValueError:
        raise ValidationError(f"bad vocab size list {raw!r}") from None
    if not sizes:
        raise ValidationError("empty vocab size list")
    return sizes


@click.group()
@click.version_option()
def main():
    """Predict compute-optimal vocabulary sizes for LLM pretraining."""


@main.command("train-tokenizers")
@click.option("--corpus", "corpus_paths", multiple=True, required=True, help="Text file or directory of .txt files.")
@click.option("--vocab-sizes", default="1024,2048,4096,8192,16384", show_default=True)
@click.option("--out", "out_path", required=True, help="Fertility points CSV to write.")
@click.option("--eval-corpus", "eval_paths", multiple=True, help="Held-out text to measure on (default: training corpus).")
@_handle_errors
def cli_train_tokenizers(corpus_paths, vocab_sizes, out_path, eval_paths):
    """Train BPE tokenizers across vocab sizes and record fertility ratios."""
    text = _corpus_text(corpus_paths)
    eval_text = _corpus_text(eval_paths) if eval_paths else text
    sizes = _parse_vocab_sizes(vocab_sizes)
    # One training run at the largest target; earlier sizes are prefixes.
    table = train_bpe(text.encode("utf-8"), sizes[-1])
    if table.saturated:
        click.echo(
            f"warning: training saturated at vocab {table.vocab_size} "
            f"(target {sizes[-1]})",
            err=True,
        )
    points = []
    for v in sizes:
        if v > table.vocab_size:
            break
        points.append(measure_ratio(eval_text, table.truncated(v)))
        click.echo(f"vocab {v}: ratio {points[-1].ratio:.6f}", err=True)
    write_points_csv(points, out_path)
    click.echo(f"wrote {len(points)} points to {out_path}", err=True)


@main.command("fit-fv")
@click.option("--points", "points_path", default=None, help="Fertility points CSV.")
@click.option("--corpus", "corpus_paths", multiple=True, help="Train+measure instead of reading points.")
@click.option("--vocab-sizes", default="1024,2048,4096,8192,16384", show_default=True)
@click.option("--out", "out_path", required=True)
@_handle_errors
def cli_fit_fv(points_path, corpus_paths, vocab_sizes, out_path):
    """Fit the tokens-per-character quadratic from measured ratios."""
    if (points_path is None) == (not corpus_paths):
        raise ValidationError("give exactly one of --points or --corpus")
    if points_path:
        points = read_points_csv(points_path)
    else:
        text = _corpus_text(corpus_paths)
        sizes = _parse_vocab_sizes(vocab_sizes)
        table = train_bpe(text.encode("utf-8"), sizes[-1])
        points = [measure_ratio(text, table.truncated(v)) for v in sizes if v <= table.vocab_size]
    fit = fit_fertility(points)
    if not fit.convex:
        click.echo("warning: fitted quadratic is not convex (a <= 0)", err=True)
    fit.save(out_path)
    click.echo(
        f"fit a={fit.a:.6g} b={fit.b:.6g} c={fit.c:.6g} clamp_v={fit.clamp_v:.6g} "
        f"rmse={fit.rmse:.3g} r2={fit.r2:.4f} -> {out_path}",
        err=True,
    )


@main.command("fit-isoflops")
@click.option("--records", "records_path", required=True, help="Run-record CSV ('-' for stdin).")
@click.option("--budgets", default="geometric:8", show_default=True, help="geometric:N or comma-separated FLOPs.")
@click.option("--densify", "densify_factor", default=1, show_default=True)
@click.option("--fertility", "fertility_path", default=None, help="Fertility fit JSON (default: bundled preset).")
@click.option("--out", "out_path", required=True)
@_handle_errors
def cli_fit_isoflops(records_path, budgets, densify_factor, fertility_path, out_path):
    """Fit the three allocation power laws from run records."""
    fert = FertilityFit.load(fertility_path) if fertility_path else PAPER_FERTILITY
    records = read_records_csv(sys.stdin if records_path == "-" else records_path, fert)
    records = densify(records, densify_factor, fert)
    if budgets.startswith("geometric:"):
        budget_values = geometric_budgets(records, int(budgets.split(":", 1)[1]))
    else:
        budget_values = sorted(float(tok) for tok in budgets.split(",") if tok.strip())
    optima = select_optima(records, budget_values)
    laws = fit_power_laws(optima)
    laws.save(out_path)
    click.echo(
        f"nv: {laws.nv_law.k:.4g}*C^{laws.nv_law.alpha:.4f}  "
        f"v: {laws.v_law.k:.4g}*C^{laws.v_law.alpha:.4f}  "
        f"h: {laws.h_law.k:.4g}*C^{laws.h_law.alpha:.4f}  -> {out_path}",
        err=True,
    )


@main.command("fit-gamma")
@click.option("--fertility", "fertility_path", default=None, help="Fertility fit JSON (default: bundled preset).")
@click.option("--shapes", default="default", show_default=True, help="'default' or shape-table JSON path.")
@click.option("--ladder", default=None, help="Comma-separated n_nv values (default: reference families).")
@click.option("--pairs", "pairs_path", default=None, help="CSV of measured n_nv,n_v pairs instead of the derivative ladder.")
@click.option("--out", "out_path", required=True)
@_handle_errors
def cli_fit_gamma(fertility_path, shapes, ladder, pairs_path, out_path):
    """Fit the vocabulary scaling exponent from derivative-optimal points."""
    fert = FertilityFit.load(fertility_path) if fertility_path else PAPER_FERTILITY
    table = load_shape_table(shapes) if shapes != "default" else None
    if pairs_path:
        import csv as _csv

        with open(pairs_path, newline="", encoding="utf-8") as fh:
            rows = list(_csv.DictReader(fh))
        pairs = [(float(r["n_nv"]), float(r["n_v"])) for r in rows]
    else:
        kwargs = {}
        if table is not None:
            kwargs["table"] = table
        if ladder:
            kwargs["ladder"] = [float(tok) for tok in ladder.split(",") if tok.strip()]
        pairs = derivative_ladder_pairs(fert, **kwargs)
    fit = fit_gamma(pairs)
    if not 0 < fit.gamma < 1:
        click.echo(f"warning: gamma={fit.gamma:.4f} outside (0, 1)", err=True)
    fit.save(out_path)
    click.echo(
        f"gamma={fit.gamma:.4f} anchor=({fit.anchor_n_nv:.4g}, {fit.anchor_n_v:.4g}) -> {out_path}",
        err=True,
    )


@main.command("fit-parametric")
@click.option("--records", "records_path", default="-", show_default=True, help="Run-record CSV ('-' for stdin).")
@click.option("--flops-floor", default=DEFAULT_FLOPS_FLOOR, show_default=True, type=float)
@click.option("--fertility", "fertility_path", default=None, help="Fertility fit JSON (default: bundled preset).")
@click.option("--full-grid", is_flag=True, help="Run all 729 starts instead of the pruned 50.")
@click.option("--out", "out_path", required=True)
@_handle_errors
def cli_fit_parametric(records_path, flops_floor, fertility_path, full_grid, out_path):
    """Fit the vocabulary-aware loss surface to run records."""
    fert = FertilityFit.load(fertility_path) if fertility_path else PAPER_FERTILITY
    records = read_records_csv(sys.stdin if records_path == "-" else records_path, fert)
    fit = fit_params(
        records,
        flops_floor=flops_floor,
        fert=fert,
        prune_to=None if full_grid else 50,
    )
    fit.save(out_path)
    click.echo(
        f"E={fit.E:.4g} A1={fit.A1:.4g} A2={fit.A2:.4g} B={fit.B:.4g} "
        f"alpha1=beta={fit.alpha1:.4f} alpha2={fit.alpha2:.4f} -> {out_path}",
        err=True,
    )


_bundle_options = [
    click.option("--preset", default="paper-2024", show_default=True),
    click.option("--artifacts-dir", default=None, help=f"Artifact directory (or ${ARTIFACTS_ENV})."),
    click.option("--fertility", "fertility_path", default=None, help="Fertility fit JSON override."),
    click.option("--laws", "laws_path", default=None, help="Allocation laws JSON override."),
    click.option("--gamma", "gamma_path", default=None, help="Gamma fit JSON override."),
    click.option("--ploss", "ploss_path", default=None, help="Loss-surface JSON override."),
    click.option("--shapes", "shapes_path", default=None, help="Shape table JSON override."),
]


def _with_bundle_options(func):
    for option in reversed(_bundle_options):
        func = option(func)
    return func


@main.command("predict-vocab")
@click.option("--approach", type=click.Choice(["1", "2", "3"]), required=True)
@click.option("--n-nv", type=float, default=None)
@click.option("--flops", type=float, default=None)
@click.option("--chars", type=float, default=None)
@click.option("--embed-dim", type=int, default=None)
@_with_bundle_options
@_handle_errors
def cli_predict_vocab(
    approach, n_nv, flops, chars, embed_dim,
    preset, artifacts_dir, fertility_path, laws_path, gamma_path, ploss_path, shapes_path,
):
    """Predict the optimal vocabulary size; prints the prediction JSON."""
    bundle = _load_bundle(
        preset, artifacts_dir, fertility_path, laws_path, gamma_path, ploss_path, shapes_path
    )
    try:
        request = PredictionRequest(
            approach=int(approach), n_nv=n_nv, flops=flops, chars=chars,
            embed_dim=embed_dim, preset=bundle.name,
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    result = predict(request, bundle)
    click.echo(json.dumps(result.model_dump(), indent=2))


@main.command("loss-curve")
@click.option("--n-nv", type=float, required=True)
@click.option("--flops", type=float, required=True)
@click.option("--vmin", type=float, default=1024, show_default=True)
@click.option("--vmax", type=float, default=1048576, show_default=True)
@click.option("--points", type=int, default=161, show_default=True)
@click.option("--embed-dim", type=int, default=None)
@click.option("--records", "records_path", default=None, help="Interpolate measured records instead of the loss surface.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
@_with_bundle_options
@_handle_errors
def cli_loss_curve(
    n_nv, flops, vmin, vmax, points, embed_dim, records_path, fmt,
    preset, artifacts_dir, fertility_path, laws_path, gamma_path, ploss_path, shapes_path,
):
    """Loss-versus-vocabulary curve at a fixed budget."""
    bundle = _load_bundle(
        preset, artifacts_dir, fertility_path, laws_path, gamma_path, ploss_path, shapes_path
    )
    if records_path:
        records = read_records_csv(records_path, bundle.fertility)
        pairs = loss_curve_at_budget(records, flops)
        if fmt == "csv":
            click.echo("v,loss_u")
            for v, loss in pairs:
                click.echo(f"{v},{loss!r}")
        else:
            click.echo(json.dumps({"points": [{"v": v, "loss_u": loss} for v, loss in pairs]}))
        return
    curve = loss_curve(bundle, n_nv, flops, vmin=vmin, vmax=vmax, points=points, embed_dim=embed_dim)
    if fmt == "csv":
        click.echo("v,loss_u")
        for point in curve.points:
            click.echo(f"{point.v!r},{point.loss_u!r}")
    else:
        click.echo(curve.model_dump_json(indent=2))


@main.command("reproduce-table")
@_with_bundle_options
@click.option("--json", "as_json", is_flag=True, help="Emit JSON instead of the text table.")
@_handle_errors
def cli_reproduce_table(
    preset, artifacts_dir, fertility_path, laws_path, gamma_path, ploss_path, shapes_path, as_json
):
    """Recompute the published optimal-vocabulary table and show both."""
    bundle = _load_bundle(
        preset, artifacts_dir, fertility_path, laws_path, gamma_path, ploss_path, shapes_path
    )
    rows = []
    for ref in REFERENCE_TABLE:
        computed = {}
        for approach in (1, 2, 3):
            request = PredictionRequest(
                approach=approach,
                n_nv=None if approach == 1 else ref.n_nv,
                flops=ref.flops if approach in (1, 3) else None,
                embed_dim=ref.embed_dim,
                preset=bundle.name,
            )
            result = predict(request, bundle)
            computed[approach] = result
        rows.append((ref, computed))

    if as_json:
        payload = []
        for ref, computed in rows:
            entry = {"n_nv": ref.n_nv, "embed_dim": ref.embed_dim, "flops": ref.flops, "label": ref.label}
            for approach, published in ((1, ref.v_app1), (2, ref.v_app2), (3, ref.v_app3)):
                got = computed[approach]
                entry[f"app{approach}"] = {
                    "published_v": published,
                    "computed_v": got.vocab_size,
                    "rel_err_v": got.vocab_size / published - 1.0,
                    "published_n_v": getattr(ref, f"n_v_app{approach}"),
                    "computed_n_v": got.n_v,
                }
            payload.append(entry)
        click.echo(json.dumps(payload, indent=2))
        return

    header = f"{'size':>5} {'dim':>6} {'FLOPs':>9}  {'metric':<8} {'published':>11} {'computed':>11} {'rel err':>8}"
    click.echo(header)
    click.echo("-" * len(header))
    for ref, computed in rows:
        for approach in (1, 2, 3):
            got = computed[approach]
            pub_v = getattr(ref, f"v_app{approach}")
            pub_nv = getattr(ref, f"n_v_app{approach}")
            click.echo(
                f"{ref.label:>5} {ref.embed_dim:>6} {ref.flops:>9.2g}  "
                f"app{approach} V  {pub_v:>11,} {got.vocab_size:>11,} {got.vocab_size / pub_v - 1.0:>+7.1%}"
            )
            click.echo(
                f"{'':>5} {'':>6} {'':>9}  "
                f"app{approach} Nv {pub_nv:>11.2g} {got.n_v:>11.3g} {got.n_v / pub_nv - 1.0:>+7.1%}"
            )


@main.command("synth-generate")
@click.option("--plan", "plan_path", default=None, help="SynthPlan JSON/TOML config.")
@click.option("--noise", type=float, default=None, help="Override the plan's noise scale.")
@click.option("--seed", type=int, default=None)
@click.option("--checkpoints", type=int, default=None)
@click.option("--char-scale", type=float, default=None)
@click.option("--out", "out_path", default="-", show_default=True, help="Run-record CSV ('-' for stdout).")
@_handle_errors
def cli_synth_generate(plan_path, noise, seed, checkpoints, char_scale, out_path):
    """Generate a synthetic run-record grid from a planted loss surface."""
    overrides = {
        key: value
        for key, value in (
            ("noise", noise),
            ("seed", seed),
            ("checkpoints", checkpoints),
            ("char_scale", char_scale),
        )
        if value is not None
    }
    if plan_path:
        plan = SynthPlan.from_file(plan_path, **overrides)
    else:
        plan = SynthPlan.from_dict(overrides)
    records = generate(plan)
    write_records_csv(records, sys.stdout if out_path == "-" else out_path)
    if out_path != "-":
        click.echo(f"wrote {len(records)} records to {out_path}", err=True)


@main.command("serve")
@click.option("--bind", default="127.0.0.1:8000", show_default=True)
@click.option("--artifacts-dir", default=None, help=f"Artifact directory (or ${ARTIFACTS_ENV}).")
@click.option("--preset", default="paper-2024", show_default=True)
@_handle_errors
def cli_serve(bind, artifacts_dir, preset):
    """Run the read-only JSON API."""
    import uvicorn

    bundles = {}
    default = preset
    artifacts_dir = artifacts_dir or os.environ.get(ARTIFACTS_ENV)
    if artifacts_dir:
        local = load_artifacts_dir(artifacts_dir, get_preset(preset))
        bundles["local"] = local
        default = "local"
    app = create_app(bundles=bundles, default_preset=default)
    host, _, port = bind.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))


if __name__ == "__main__":
    main()
