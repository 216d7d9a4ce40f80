"""Deterministic text embeddings and before/after similarity-ranking deltas.

The built-in provider is a hashed bag-of-words model: lowercased tokens are
hashed into a fixed number of signed buckets, weighted ``1 + ln(tf)`` and
L2-normalized. It is model-free and bit-reproducible across runs, which is
all the ranking-comparison protocol needs; externally computed vectors (from
any encoder) can be ingested instead for fidelity.

Hash function, for reimplementors: ``H`` is the big-endian integer of
``blake2b(token_utf8, digest_size=8)``; the bucket is ``H % dim`` and the
sign is ``+1`` when ``(H >> 32) & 1 == 0`` else ``-1``.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import LabeledAbstract
from .errors import EmbeddingError
from .textspan import Span, clean_text, tokenize

DEFAULT_DIMENSION = 768

# Id suffix under which externally computed vectors of *cleaned* texts are
# stored in a vector file.
CLEANED_ID_SUFFIX = "::cleaned"


@dataclass(frozen=True)
class EmbeddingVector:
    """A fixed-dimension real vector with its Euclidean norm cached."""

    values: tuple[float, ...]
    norm: float

    @classmethod
    def from_values(cls, values: Iterable[float]) -> "EmbeddingVector":
        vals = tuple(float(v) for v in values)
        return cls(vals, math.sqrt(sum(v * v for v in vals)))

    @property
    def dimension(self) -> int:
        return len(self.values)


def _bucket_sign(token: str, dim: int) -> tuple[int, float]:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    h = int.from_bytes(digest, "big")
    return h % dim, 1.0 if (h >> 32) & 1 == 0 else -1.0


class BuiltinProvider:
    """Hashed bag-of-words embeddings; see the module docstring for the exact
    hash and weighting. Immutable after construction and safe to share."""

    name = "builtin"

    def __init__(self, dimension: int = DEFAULT_DIMENSION):
        if dimension < 1:
            raise EmbeddingError("dimension must be >= 1")
        self._dimension = dimension

    @property
    def dimension(self) -> int:
        return self._dimension

    def vector(self, text: str, doc_id: str | None = None) -> EmbeddingVector:
        counts = Counter(t.text.lower() for t in tokenize(text))
        values = [0.0] * self._dimension
        # Sorted iteration keeps float accumulation order platform-independent.
        for token, count in sorted(counts.items()):
            bucket, sign = _bucket_sign(token, self._dimension)
            values[bucket] += sign * (1.0 + math.log(count))
        norm = math.sqrt(sum(v * v for v in values))
        if norm > 0.0:
            values = [v / norm for v in values]
        return EmbeddingVector.from_values(values)


class ExternalVectorProvider:
    """Vectors precomputed elsewhere, keyed by record id.

    The file is JSON Lines, one ``{"id": ..., "values": [...]}`` object per
    line; all vectors must share one dimension. Vectors of cleaned texts are
    stored under ``<id>::cleaned``.
    """

    name = "external-vectors"

    def __init__(self, vectors: Mapping[str, EmbeddingVector]):
        dims = {v.dimension for v in vectors.values()}
        if len(dims) > 1:
            raise EmbeddingError(f"inconsistent vector dimensions: {sorted(dims)}")
        self._vectors = dict(vectors)
        self._dimension = dims.pop() if dims else 0

    @classmethod
    def load(cls, path: str) -> "ExternalVectorProvider":
        vectors: dict[str, EmbeddingVector] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                where = f"{path}:{lineno}"
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise EmbeddingError(f"{where}: malformed line: {exc}") from exc
                if not isinstance(obj, dict):
                    raise EmbeddingError(f"{where}: record must be a JSON object")
                vec_id = obj.get("id")
                values = obj.get("values")
                if not isinstance(vec_id, str) or not vec_id:
                    raise EmbeddingError(f"{where}: id must be a non-empty string")
                if not isinstance(values, list) or not values or not all(
                    isinstance(v, (int, float)) and not isinstance(v, bool)
                    for v in values
                ):
                    raise EmbeddingError(f"{where}: values must be a non-empty number list")
                if vec_id in vectors:
                    raise EmbeddingError(f"{where}: duplicate id {vec_id!r}")
                vectors[vec_id] = EmbeddingVector.from_values(values)
        return cls(vectors)

    @property
    def dimension(self) -> int:
        return self._dimension

    def vector(self, text: str, doc_id: str | None = None) -> EmbeddingVector:
        if doc_id is None or doc_id not in self._vectors:
            raise EmbeddingError(f"no ingested vector for id {doc_id!r}")
        return self._vectors[doc_id]


def embed_text(text: str, provider, doc_id: str | None = None) -> EmbeddingVector:
    """Embed ``text`` with the given provider; external providers look the
    vector up under ``doc_id`` instead of encoding the text."""
    return provider.vector(text, doc_id)


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity; zero-norm vectors and dimension mismatches are
    errors rather than silent zeros."""
    if a.dimension != b.dimension:
        raise EmbeddingError(
            f"dimension mismatch: {a.dimension} vs {b.dimension}"
        )
    if a.norm == 0.0 or b.norm == 0.0:
        raise EmbeddingError("cosine undefined for zero-norm embedding")
    return sum(x * y for x, y in zip(a.values, b.values)) / (a.norm * b.norm)


@dataclass(frozen=True)
class RankingDelta:
    """Before/after orderings of a focal document's references.

    Both orders are descending-cosine permutations of the same reference id
    set; cosine ties break by ascending id. ``displacement`` sums each
    reference's absolute rank shift.
    """

    focal_id: str
    order_before: tuple[str, ...]
    order_after: tuple[str, ...]
    cosines_before: dict[str, float]
    cosines_after: dict[str, float]
    changed: bool
    top1_changed: bool
    displacement: int


def rank_references(
    focal: LabeledAbstract,
    refs: Sequence[LabeledAbstract],
    spans_for: Mapping[str, Sequence[Span]],
    provider,
) -> RankingDelta:
    """Rank references by cosine to the focal document, before and after
    cleaning all texts with the spans in ``spans_for`` (ids without spans are
    cleaned with an empty set, i.e. only trimmed).

    With an external-vector provider the cleaned variants are looked up under
    ``<id>::cleaned``.
    """
    refs = list(refs)
    if len(refs) < 2:
        raise EmbeddingError("need at least 2 references to rank")
    ids = [r.id for r in refs]
    if len(set(ids)) != len(ids) or focal.id in ids:
        raise EmbeddingError("reference ids must be unique and differ from the focal id")

    def ordering(cosines: dict[str, float]) -> tuple[str, ...]:
        return tuple(sorted(ids, key=lambda i: (-cosines[i], i)))

    focal_before = provider.vector(focal.text, focal.id)
    cos_before = {
        r.id: cosine(focal_before, provider.vector(r.text, r.id)) for r in refs
    }
    focal_after = provider.vector(
        clean_text(focal.text, spans_for.get(focal.id, [])),
        focal.id + CLEANED_ID_SUFFIX,
    )
    cos_after = {
        r.id: cosine(
            focal_after,
            provider.vector(
                clean_text(r.text, spans_for.get(r.id, [])),
                r.id + CLEANED_ID_SUFFIX,
            ),
        )
        for r in refs
    }
    order_before = ordering(cos_before)
    order_after = ordering(cos_after)
    rank_before = {rid: i for i, rid in enumerate(order_before)}
    rank_after = {rid: i for i, rid in enumerate(order_after)}
    return RankingDelta(
        focal_id=focal.id,
        order_before=order_before,
        order_after=order_after,
        cosines_before=cos_before,
        cosines_after=cos_after,
        changed=order_before != order_after,
        top1_changed=order_before[0] != order_after[0],
        displacement=sum(abs(rank_before[i] - rank_after[i]) for i in ids),
    )
