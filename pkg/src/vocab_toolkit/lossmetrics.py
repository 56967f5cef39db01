"""Per-token loss metrics: language-model loss, unigram-normalized loss and
bits-per-character.

Everything is in natural log internally; BPC converts with ln 2 at the
boundary. Logprobs are inputs produced elsewhere (no model inference here).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, TextIO

import numpy as np

from .errors import ValidationError

__all__ = [
    "TokenEvent",
    "UnigramTable",
    "build_unigram_table",
    "lm_loss",
    "unigram_loss",
    "bpc",
    "read_events_jsonl",
]

LN2 = math.log(2.0)


@dataclass(frozen=True)
class TokenEvent:
    """One predicted token: id, natural-log model probability, characters covered."""

    token_id: int
    logprob: float
    char_len: int = 1

    def __post_init__(self):
        if self.logprob > 0:
            raise ValidationError(f"logprob must be <= 0, got {self.logprob}")
        if self.char_len < 1:
            raise ValidationError(f"char_len must be >= 1, got {self.char_len}")


@dataclass(frozen=True)
class UnigramTable:
    """Token frequencies over a tokenized corpus, smoothed so every id in the
    vocabulary has nonzero probability."""

    probs: np.ndarray
    vocab_size: int

    def __post_init__(self):
        total = float(self.probs.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"unigram probabilities sum to {total!r}, not 1")

    def logprob(self, token_id: int) -> float:
        if not 0 <= token_id < self.vocab_size:
            raise ValidationError(
                f"token id {token_id} outside unigram table support (vocab {self.vocab_size})"
            )
        return math.log(self.probs[token_id])


def build_unigram_table(tokens: Sequence[int], v: int, smoothing: float = 1.0) -> UnigramTable:
    """Empirical unigram frequencies with additive smoothing.

    ``smoothing`` is the pseudo-count added to every id in the v-size support
    (default 1) so tokens unseen in the reference stream still get nonzero
    probability in the normalized loss.
    """
    if len(tokens) == 0:
        raise ValidationError("token sequence is empty")
    if v < 1:
        raise ValidationError(f"vocab size must be >= 1, got {v}")
    if smoothing < 0:
        raise ValidationError(f"smoothing must be >= 0, got {smoothing}")
    arr = np.asarray(tokens, dtype=np.int64)
    if arr.min() < 0 or arr.max() >= v:
        bad = int(arr.max() if arr.max() >= v else arr.min())
        raise ValidationError(f"token id {bad} outside [0, {v})")
    counts = np.bincount(arr, minlength=v).astype(np.float64)
    total = counts.sum() + smoothing * v
    return UnigramTable(probs=(counts + smoothing) / total, vocab_size=v)


def lm_loss(events: Sequence[TokenEvent]) -> float:
    """Mean negative log-probability in nats per token."""
    if not events:
        raise ValidationError("event stream is empty")
    return -sum(e.logprob for e in events) / len(events)


def unigram_loss(events: Sequence[TokenEvent], table: UnigramTable) -> float:
    """Unigram-normalized loss: mean of -(logprob - ln p_unigram).

    Subtracting the unigram log-probability makes models with different
    vocabulary sizes comparable; the value can be negative.
    """
    if not events:
        raise ValidationError("event stream is empty")
    total = 0.0
    for e in events:
        total += e.logprob - table.logprob(e.token_id)
    return -total / len(events)


def bpc(events: Sequence[TokenEvent]) -> float:
    """Bits per character: total bits spent divided by characters covered."""
    if not events:
        raise ValidationError("event stream is empty")
    chars = sum(e.char_len for e in events)
    if chars == 0:
        raise ValidationError("total char_len is zero")
    return sum(-e.logprob for e in events) / (LN2 * chars)


def read_events_jsonl(source: str | Path | TextIO) -> list[TokenEvent]:
    """Read token events from JSON-lines: {"id":..,"logprob":..,"char_len":..}."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return read_events_jsonl(fh)
    events = []
    for i, line in enumerate(source):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            events.append(
                TokenEvent(
                    token_id=int(obj["id"]),
                    logprob=float(obj["logprob"]),
                    char_len=int(obj.get("char_len", 1)),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"events JSONL line {i + 1}: {exc}") from None
    return events
