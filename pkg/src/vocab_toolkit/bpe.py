"""Byte-level BPE tokenizer: training, encoding, decoding, and fertility
measurement.

The base alphabet is the 256 byte values, so any input is representable and
decode(encode(x)) == x always holds. Pre-tokenization splits the input into
maximal runs of whitespace / non-whitespace bytes; merges never cross a run
boundary. Pair frequencies are adjacency counts; ties between equally
frequent pairs break toward the lowest (left_id, right_id), which makes
training deterministic.
"""

from __future__ import annotations

import heapq
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ValidationError
from .fertility import FertilityPoint

__all__ = ["MergeTable", "train_bpe", "encode", "decode", "measure_ratio", "BASE_ALPHABET_SIZE"]

BASE_ALPHABET_SIZE = 256

_CHUNK_RE = re.compile(rb"\s+|\S+")


@dataclass(frozen=True)
class MergeTable:
    """Ordered merge rules (left_id, right_id, new_id) over the byte alphabet.

    ``saturated`` is True when training stopped early because no pair
    occurred at least twice.
    """

    rules: tuple[tuple[int, int, int], ...]
    saturated: bool = field(default=False, compare=False)

    def __post_init__(self):
        for i, (left, right, new_id) in enumerate(self.rules):
            expected = BASE_ALPHABET_SIZE + i
            if new_id != expected:
                raise ValidationError(f"rule {i} has new_id {new_id}, expected {expected}")
            if left >= new_id or right >= new_id:
                raise ValidationError(f"rule {i} references a symbol defined later")

    @property
    def vocab_size(self) -> int:
        return BASE_ALPHABET_SIZE + len(self.rules)

    def truncated(self, v: int) -> "MergeTable":
        """The tokenizer this training run would have produced at target ``v``.

        Valid because greedy training is prefix-stable: the first k merges do
        not depend on the target vocabulary size.
        """
        if v < BASE_ALPHABET_SIZE or v > self.vocab_size:
            raise ValidationError(
                f"cannot truncate table of size {self.vocab_size} to {v}"
            )
        return MergeTable(rules=self.rules[: v - BASE_ALPHABET_SIZE])

    def symbol_bytes(self) -> list[bytes]:
        """Byte expansion of every symbol id, in id order."""
        table = [bytes([i]) for i in range(BASE_ALPHABET_SIZE)]
        for left, right, _ in self.rules:
            table.append(table[left] + table[right])
        return table

    def ranks(self) -> dict[tuple[int, int], tuple[int, int]]:
        """(left, right) -> (rank, new_id) lookup for encoding."""
        return {(l, r): (i, n) for i, (l, r, n) in enumerate(self.rules)}


def _chunks(data: bytes) -> Iterable[bytes]:
    return _CHUNK_RE.findall(data)


def _apply_merge(seq: list[int], left: int, right: int, new_id: int) -> list[int]:
    out: list[int] = []
    i, n = 0, len(seq)
    while i < n:
        if i + 1 < n and seq[i] == left and seq[i + 1] == right:
            out.append(new_id)
            i += 2
        else:
            out.append(seq[i])
            i += 1
    return out


def train_bpe(corpus: bytes, v: int) -> MergeTable:
    """Train a byte-level BPE tokenizer with target vocabulary size ``v``.

    Greedy highest-adjacency-count merging until the vocabulary reaches ``v``
    or no pair occurs at least twice; in the latter case the table is
    returned as-is with ``saturated=True``.
    """
    if not corpus:
        raise ValidationError("training corpus is empty")
    if v < BASE_ALPHABET_SIZE:
        raise ValidationError(f"target vocab {v} is below the {BASE_ALPHABET_SIZE}-byte base alphabet")
    n_merges = v - BASE_ALPHABET_SIZE
    if n_merges == 0:
        return MergeTable(rules=())

    type_counts = Counter(_chunks(corpus))
    words: list[list[int]] = [list(t) for t in type_counts]
    counts: list[int] = list(type_counts.values())

    pair_counts: Counter[tuple[int, int]] = Counter()
    pair_words: dict[tuple[int, int], set[int]] = {}
    for wi, seq in enumerate(words):
        cnt = counts[wi]
        for pair in zip(seq, seq[1:]):
            pair_counts[pair] += cnt
            pair_words.setdefault(pair, set()).add(wi)

    # Lazy-deletion heap ordered by (-count, left, right): pops the most
    # frequent pair, ties broken toward the lowest ids.
    heap = [(-c, p[0], p[1]) for p, c in pair_counts.items()]
    heapq.heapify(heap)

    rules: list[tuple[int, int, int]] = []
    saturated = False
    while len(rules) < n_merges:
        best = None
        while heap:
            neg, left, right = heapq.heappop(heap)
            if pair_counts.get((left, right), 0) == -neg:
                best = (left, right, -neg)
                break
        if best is None or best[2] < 2:
            saturated = True
            break
        left, right, _ = best
        new_id = BASE_ALPHABET_SIZE + len(rules)
        rules.append((left, right, new_id))

        for wi in list(pair_words.get((left, right), ())):
            seq = words[wi]
            cnt = counts[wi]
            old_pairs = Counter(zip(seq, seq[1:]))
            new_seq = _apply_merge(seq, left, right, new_id)
            new_pairs = Counter(zip(new_seq, new_seq[1:]))
            for pair in old_pairs.keys() | new_pairs.keys():
                delta = new_pairs.get(pair, 0) - old_pairs.get(pair, 0)
                touched = pair in new_pairs
                if touched:
                    pair_words.setdefault(pair, set()).add(wi)
                else:
                    bucket = pair_words.get(pair)
                    if bucket is not None:
                        bucket.discard(wi)
                if delta:
                    updated = pair_counts[pair] + delta * cnt
                    if updated > 0:
                        pair_counts[pair] = updated
                        heapq.heappush(heap, (-updated, pair[0], pair[1]))
                    else:
                        pair_counts.pop(pair, None)
            words[wi] = new_seq
        pair_counts.pop((left, right), None)
        pair_words.pop((left, right), None)

    return MergeTable(rules=tuple(rules), saturated=saturated)


def _encode_chunk(chunk: bytes, ranks: dict[tuple[int, int], tuple[int, int]]) -> list[int]:
    seq = list(chunk)
    while len(seq) >= 2:
        best_rank = None
        best_pair = None
        for pair in zip(seq, seq[1:]):
            hit = ranks.get(pair)
            if hit is not None and (best_rank is None or hit[0] < best_rank):
                best_rank, best_pair = hit[0], pair
        if best_pair is None:
            break
        new_id = ranks[best_pair][1]
        seq = _apply_merge(seq, best_pair[0], best_pair[1], new_id)
    return seq


def encode(data: bytes, merges: MergeTable) -> list[int]:
    """Tokenize ``data``, applying merges in rule order within each chunk."""
    ranks = merges.ranks()
    cache: dict[bytes, list[int]] = {}
    out: list[int] = []
    for chunk in _chunks(data):
        ids = cache.get(chunk)
        if ids is None:
            ids = _encode_chunk(chunk, ranks)
            cache[chunk] = ids
        out.extend(ids)
    return out


def decode(ids: Sequence[int], merges: MergeTable) -> bytes:
    """Inverse of :func:`encode`; concatenated symbols reproduce the bytes."""
    table = merges.symbol_bytes()
    try:
        return b"".join(table[i] for i in ids)
    except IndexError:
        raise ValidationError("token id outside the merge table's vocabulary") from None


def measure_ratio(corpus: str, merges: MergeTable) -> FertilityPoint:
    """Tokens-per-character ratio of the tokenizer on ``corpus``.

    Characters are Unicode scalar values of the text; tokenization runs on
    its UTF-8 bytes. Distinct chunks are encoded once, so the measurement is
    cheap even on large corpora.
    """
    if not corpus:
        raise ValidationError("measurement corpus is empty")
    ranks = merges.ranks()
    token_count = 0
    for chunk, cnt in Counter(_chunks(corpus.encode("utf-8"))).items():
        token_count += len(_encode_chunk(chunk, ranks)) * cnt
    return FertilityPoint(vocab_size=merges.vocab_size, ratio=token_count / len(corpus))
