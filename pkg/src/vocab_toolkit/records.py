"""Shared data model: training-run records, the FLOPs cost function and the
non-vocabulary-parameters -> embedding-dimension lookup.

All quantities that can reach extreme magnitudes (parameter counts, character
counts, FLOPs) are carried as floats; everything downstream works in log
space anyway.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence, TextIO

from .errors import OutOfRangeError, ValidationError
from .fertility import FertilityFit, eval_fertility

__all__ = [
    "RunRecord",
    "ShapeTable",
    "FlopsBudget",
    "DEFAULT_SHAPE_TABLE",
    "embed_dim_for",
    "flops_cost",
    "tokens_from_chars",
    "record_issues",
    "validate_record",
    "read_records_csv",
    "write_records_csv",
    "RECORD_CSV_HEADER",
]

# Compute budgets are plain positive floats: magnitudes reach 1e25 and every
# consumer works in log space, so a wrapper type would only add friction.
# Functions taking a budget validate positivity at their boundary.
FlopsBudget = float

RECORD_CSV_HEADER = [
    "run_id",
    "n_nv",
    "vocab_size",
    "embed_dim",
    "chars_seen",
    "tokens_seen",
    "flops",
    "lm_loss",
    "loss_u",
]


@dataclass(frozen=True)
class RunRecord:
    """One training-run checkpoint.

    ``synthetic`` marks records produced by interpolation or by the
    synthetic-experiment generator; it is in-memory metadata and is not part
    of the CSV schema.
    """

    run_id: str
    n_nv: float
    vocab_size: int
    embed_dim: int
    chars_seen: float
    tokens_seen: float
    flops: float
    lm_loss: float
    loss_u: float
    synthetic: bool = field(default=False, compare=False)

    @property
    def n_v(self) -> float:
        """Vocabulary parameters, output layer only."""
        return float(self.vocab_size) * float(self.embed_dim)


@dataclass(frozen=True)
class ShapeTable:
    """Ordered (n_nv upper bound -> embedding dim) brackets.

    Brackets must be strictly increasing in both columns so the lookup is
    piecewise constant and monotone non-decreasing.
    """

    brackets: tuple[tuple[float, int], ...]

    def __post_init__(self):
        if not self.brackets:
            raise ValidationError("shape table needs at least one bracket")
        prev_bound, prev_dim = 0.0, 0
        for bound, dim in self.brackets:
            if bound <= prev_bound:
                raise ValidationError(
                    f"shape table bounds must be strictly increasing, got {bound}"
                )
            if dim <= prev_dim:
                raise ValidationError(
                    f"shape table dims must be strictly increasing, got {dim}"
                )
            prev_bound, prev_dim = bound, dim

    @property
    def max_covered(self) -> float:
        return self.brackets[-1][0]

    def lookup(self, n_nv: float) -> int:
        if n_nv <= 0:
            raise ValidationError(f"n_nv must be positive, got {n_nv}")
        for bound, dim in self.brackets:
            if n_nv <= bound:
                return dim
        raise OutOfRangeError(
            f"n_nv={n_nv:.4g} exceeds shape-table coverage (max {self.max_covered:.4g})"
        )


# Default width ladder used throughout: bracket upper bounds in parameters.
DEFAULT_SHAPE_TABLE = ShapeTable(
    brackets=(
        (50e6, 512),
        (200e6, 768),
        (500e6, 1024),
        (1e9, 1536),
        (2e9, 2048),
        (5e9, 3200),
        (10e9, 4096),
        (20e9, 5120),
        (50e9, 6048),
        (100e9, 8192),
        (200e9, 12288),
        (500e9, 16384),
        (1000e9, 20480),
    )
)


def embed_dim_for(n_nv: float, table: ShapeTable = DEFAULT_SHAPE_TABLE) -> int:
    """Embedding width for a non-vocabulary parameter count."""
    return table.lookup(n_nv)


def flops_cost(n_nv: float, v: float, d: float, h: float, fert: FertilityFit) -> float:
    """Training cost in FLOPs: 6 * (n_nv + v*d) * h * f(v).

    The vocabulary contribution counts the output layer only (v*d, not
    2*v*d); ``f`` is the fertility curve including its clamp.
    """
    if n_nv <= 0 or v < 2 or d <= 0 or h <= 0:
        raise ValidationError(
            f"flops_cost needs positive inputs and v >= 2, got "
            f"n_nv={n_nv}, v={v}, d={d}, h={h}"
        )
    return 6.0 * (n_nv + v * d) * h * eval_fertility(v, fert)


def tokens_from_chars(h: float, v: float, fert: FertilityFit) -> float:
    """Training tokens implied by ``h`` characters: h * f(v)."""
    if h <= 0:
        raise ValidationError(f"h must be positive, got {h}")
    if v < 2:
        raise ValidationError(f"v must be >= 2, got {v}")
    return h * eval_fertility(v, fert)


def record_issues(
    rec: RunRecord,
    fert: FertilityFit | None = None,
    flops_rtol: float = 0.01,
) -> list[str]:
    """Collect invariant violations for one record (empty list = valid).

    Validation is an explicit step so partially filled ingestion rows can be
    repaired before being checked.
    """
    issues: list[str] = []
    for name in ("n_nv", "vocab_size", "embed_dim", "chars_seen", "tokens_seen", "flops"):
        value = getattr(rec, name)
        if not value > 0:
            issues.append(f"{name} must be positive, got {value}")
    if rec.tokens_seen > rec.chars_seen:
        issues.append(
            f"tokens_seen ({rec.tokens_seen:.4g}) exceeds chars_seen ({rec.chars_seen:.4g})"
        )
    if rec.loss_u > rec.lm_loss:
        issues.append(f"loss_u ({rec.loss_u:.6g}) exceeds lm_loss ({rec.lm_loss:.6g})")
    if fert is not None and rec.flops > 0 and rec.chars_seen > 0:
        expected = flops_cost(rec.n_nv, rec.vocab_size, rec.embed_dim, rec.chars_seen, fert)
        if abs(rec.flops - expected) > flops_rtol * expected:
            issues.append(
                f"flops={rec.flops:.4g} inconsistent with cost model "
                f"({expected:.4g}, tolerance {flops_rtol:.0%})"
            )
    return issues


def validate_record(
    rec: RunRecord,
    fert: FertilityFit | None = None,
    flops_rtol: float = 0.01,
) -> None:
    """Raise ``ValidationError`` listing every violated invariant."""
    issues = record_issues(rec, fert, flops_rtol)
    if issues:
        raise ValidationError(f"record {rec.run_id!r}: " + "; ".join(issues))


def _parse_row(row: dict[str, str], line_no: int, fert: FertilityFit | None) -> RunRecord:
    def num(name: str) -> float:
        raw = (row.get(name) or "").strip()
        if not raw:
            raise ValidationError(f"line {line_no}: missing value for {name!r}")
        try:
            return float(raw)
        except ValueError:
            raise ValidationError(f"line {line_no}: bad number {raw!r} for {name!r}") from None

    flops_raw = (row.get("flops") or "").strip()
    rec = RunRecord(
        run_id=(row.get("run_id") or "").strip() or f"row{line_no}",
        n_nv=num("n_nv"),
        vocab_size=int(num("vocab_size")),
        embed_dim=int(num("embed_dim")),
        chars_seen=num("chars_seen"),
        tokens_seen=num("tokens_seen"),
        flops=float(flops_raw) if flops_raw else 0.0,
        lm_loss=num("lm_loss"),
        loss_u=num("loss_u"),
    )
    if not flops_raw:
        if fert is None:
            raise ValidationError(
                f"line {line_no}: empty flops cell and no fertility fit given to recompute it"
            )
        rec = replace(
            rec, flops=flops_cost(rec.n_nv, rec.vocab_size, rec.embed_dim, rec.chars_seen, fert)
        )
    return rec


def read_records_csv(
    source: str | Path | TextIO,
    fert: FertilityFit | None = None,
) -> list[RunRecord]:
    """Read run records from CSV (header row mandatory, UTF-8, '.' decimal).

    Empty ``flops`` cells are recomputed from the cost model, which requires
    a fertility fit.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return read_records_csv(fh, fert)
    reader = csv.DictReader(source)
    if reader.fieldnames is None:
        raise ValidationError("records CSV is empty (header row is mandatory)")
    missing = [col for col in RECORD_CSV_HEADER if col not in reader.fieldnames]
    if missing:
        raise ValidationError(f"records CSV is missing columns: {', '.join(missing)}")
    return [_parse_row(row, i + 2, fert) for i, row in enumerate(reader)]


def write_records_csv(records: Iterable[RunRecord], dest: str | Path | TextIO) -> None:
    """Write run records in the documented CSV schema."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_records_csv(records, fh)
            return
    writer = csv.writer(dest)
    writer.writerow(RECORD_CSV_HEADER)
    for rec in records:
        writer.writerow(
            [
                rec.run_id,
                format(rec.n_nv, ".17g"),
                rec.vocab_size,
                rec.embed_dim,
                format(rec.chars_seen, ".17g"),
                format(rec.tokens_seen, ".17g"),
                format(rec.flops, ".17g"),
                format(rec.lm_loss, ".17g"),
                format(rec.loss_u, ".17g"),
            ]
        )


def records_to_csv_text(records: Sequence[RunRecord]) -> str:
    buf = io.StringIO()
    write_records_csv(records, buf)
    return buf.getvalue()
