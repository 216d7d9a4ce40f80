"""Span algebra over character offsets: overlap filtering, tokenization, and
clutter removal by string slicing.

All offsets are Unicode scalar-value indices into the source string (i.e.
plain Python string indices), and all spans are half-open ``[start, end)``.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

REM_LABEL = "REM"


@dataclass(frozen=True)
class Span:
    """A labeled half-open character interval."""

    start: int
    end: int
    label: str = REM_LABEL

    def __post_init__(self) -> None:
        if self.start < 0 or self.end <= self.start:
            raise ValueError(
                f"invalid span [{self.start}, {self.end}): need 0 <= start < end"
            )

    @property
    def length(self) -> int:
        return self.end - self.start

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end


class Token(NamedTuple):
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class TokenMap:
    """Tokens of a source string together with their character offsets."""

    tokens: tuple[Token, ...]
    source_length: int

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)


def filter_spans(spans: Iterable[Span]) -> list[Span]:
    """Resolve overlapping spans greedily: longest first, earlier start on ties.

    A candidate is kept iff it overlaps no already-kept span; kept spans are
    returned sorted by start. Duplicates and overlaps in the input are fine.
    The result always satisfies the finalized-set invariant (sorted, pairwise
    disjoint) and the operation is idempotent.
    """
    candidates = sorted(spans, key=lambda s: (-(s.end - s.start), s.start))
    kept: list[Span] = []
    for span in candidates:
        if not any(span.overlaps(k) for k in kept):
            kept.append(span)
    kept.sort(key=lambda s: s.start)
    return kept


def ensure_finalized(spans: Iterable[Span], length: int) -> list[Span]:
    """Check that spans are sorted, pairwise disjoint and inside ``[0, length]``.

    Returns the spans as a list; raises ValueError on the first violation.
    """
    checked: list[Span] = []
    prev_end = 0
    for span in spans:
        if span.start < prev_end:
            raise ValueError(
                f"spans overlap or are unsorted at [{span.start}, {span.end})"
            )
        if span.end > length:
            raise ValueError(
                f"span out of bounds: [{span.start}, {span.end}) "
                f"over text of length {length}"
            )
        prev_end = span.end
        checked.append(span)
    return checked


def clean_text(text: str, spans: Iterable[Span]) -> str:
    """Remove a finalized span set from ``text`` by character slicing.

    The slices between spans are concatenated in order and the result is
    stripped of leading/trailing whitespace. Removing everything would destroy
    the abstract, so an empty result falls back to the original, unmodified
    text. With no spans at all the stripped original is returned.
    """
    spans = list(spans)
    if not spans:
        return text.strip()
    ensure_finalized(spans, len(text))
    parts = []
    last = 0
    for span in spans:
        parts.append(text[last : span.start])
        last = span.end
    parts.append(text[last:])
    cleaned = "".join(parts).strip()
    return cleaned if cleaned else text


_CHUNK_RE = re.compile(r"\S+")


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> TokenMap:
    """Split on Unicode whitespace, then detach leading/trailing punctuation.

    Each detached punctuation character becomes a single-character token, so
    ``"Fig. 1)"`` yields ``Fig`` ``.`` ``1`` ``)``. Punctuation means Unicode
    categories ``P*``; symbols such as the copyright sign stay attached.
    Offsets index into the source text.
    """
    tokens: list[Token] = []
    for m in _CHUNK_RE.finditer(text):
        chunk = m.group()
        base = m.start()
        lo, hi = 0, len(chunk)
        while lo < hi and _is_punct(chunk[lo]):
            tokens.append(Token(chunk[lo], base + lo, base + lo + 1))
            lo += 1
        core_hi = hi
        while core_hi > lo and _is_punct(chunk[core_hi - 1]):
            core_hi -= 1
        if lo < core_hi:
            tokens.append(Token(chunk[lo:core_hi], base + lo, base + core_hi))
        for i in range(core_hi, hi):
            tokens.append(Token(chunk[i], base + i, base + i + 1))
    return TokenMap(tuple(tokens), len(text))


def tokens_under(spans: Iterable[Span], token_map: TokenMap) -> set[int]:
    """Indices of tokens overlapping any span by at least one character."""
    covered: set[int] = set()
    for span in spans:
        for idx, tok in enumerate(token_map.tokens):
            if tok.start < span.end and span.start < tok.end:
                covered.add(idx)
    return covered
