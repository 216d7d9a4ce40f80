"""Rule-based clutter detection over raw abstract text.

Each clutter category owns a rule pack, a plain-text file named
``<anything>.rules`` with one rule per line::

    rule_id <TAB> category <TAB> pattern

Lines starting with ``#`` are comments. Patterns use an engine-neutral regular
expression subset: literals, character classes, alternation, bounded and
unbounded repetition, non-capturing groups ``(?:...)``, and the anchors ``^``,
``$`` and ``\\b``. Lookaround, backreferences and inline flags are rejected so
packs stay portable across regex engines.

Categories whose clutter is sentence-shaped (copyright, order_info,
translation, funding) have their raw matches extended to sentence boundaries;
all other categories remove exactly what the pattern matched.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

try:  # the sre internals moved under re._* in newer interpreters
    from re import _parser as _sre_parse  # type: ignore[attr-defined]
    from re._constants import (  # type: ignore[attr-defined]
        BRANCH,
        IN,
        LITERAL,
        MAX_REPEAT,
        MIN_REPEAT,
        SUBPATTERN,
    )
except ImportError:  # pragma: no cover - Python <= 3.10
    import sre_parse as _sre_parse
    from sre_constants import BRANCH, IN, LITERAL, MAX_REPEAT, MIN_REPEAT, SUBPATTERN

from ..corpus import load_corpus
from ..errors import DetectorError
from ..textspan import REM_LABEL, Span, filter_spans

CATEGORY_REGISTRY = (
    "copyright",
    "order_info",
    "section_heading",
    "keywords_codes",
    "registration",
    "translation",
    "funding",
    "internal_ref",
    "citation",
)
_CATEGORY_INDEX = {name: i for i, name in enumerate(CATEGORY_REGISTRY)}

# Categories whose matches are widened to the enclosing sentence.
SENTENCE_SCOPED = frozenset({"copyright", "order_info", "translation", "funding"})


@dataclass(frozen=True)
class DetectorConfig:
    """Which categories run, plus optional extra rules and rule-pack location.

    ``rules_dir`` replaces the built-in packs entirely; ``custom_rules`` are
    ``(category, pattern)`` pairs appended to whatever packs are loaded.
    """

    enabled_categories: tuple[str, ...] = CATEGORY_REGISTRY
    custom_rules: tuple[tuple[str, str], ...] = ()
    rules_dir: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "enabled_categories", tuple(self.enabled_categories))
        object.__setattr__(
            self, "custom_rules", tuple(tuple(r) for r in self.custom_rules)
        )
        for name in self.enabled_categories:
            if name not in _CATEGORY_INDEX:
                raise DetectorError(f"unknown category {name!r}")
        for category, _pattern in self.custom_rules:
            if category not in _CATEGORY_INDEX:
                raise DetectorError(f"unknown category {category!r} in custom rule")


@dataclass(frozen=True)
class Rule:
    rule_id: str
    category: str
    pattern: str


@dataclass(frozen=True)
class Detection:
    """One rule match; ``span.label`` always equals ``category``."""

    span: Span
    category: str
    rule_id: str


def _validate_pattern(pattern: str, where: str) -> None:
    i, n = 0, len(pattern)
    while i < n:
        ch = pattern[i]
        if ch == "\\":
            if i + 1 < n and pattern[i + 1] in "123456789":
                raise DetectorError(f"{where}: backreferences are not allowed")
            i += 2
            continue
        if ch == "(" and pattern[i + 1 : i + 2] == "?":
            if pattern[i + 2 : i + 3] != ":":
                raise DetectorError(
                    f"{where}: only non-capturing groups are allowed, got "
                    f"{pattern[i:i + 4]!r}"
                )
        i += 1
    try:
        re.compile(pattern)
    except re.error as exc:
        raise DetectorError(f"{where}: bad pattern: {exc}") from exc


def _fold_class(class_items) -> str | None:
    """A character class folds to one char iff all members lowercase alike."""
    chars = set()
    for op, value in class_items:
        if op is not LITERAL:
            return None
        chars.add(chr(value).lower())
    return chars.pop() if len(chars) == 1 else None


def _literal_runs(seq) -> list[str]:
    """Mandatory lowercase literal runs of a parsed pattern sequence.

    Branches are not descended, and any construct that can break contiguity
    ends the current run, so every returned string must occur verbatim (case
    folded) inside any match of the pattern.
    """
    runs: list[str] = []
    current: list[str] = []

    def flush() -> None:
        if current:
            runs.append("".join(current))
            current.clear()

    for op, av in seq:
        if op is LITERAL:
            current.append(chr(av).lower())
        elif op is IN:
            folded = _fold_class(av)
            if folded is not None:
                current.append(folded)
            else:
                flush()
        elif op is SUBPATTERN:
            flush()
            runs.extend(_literal_runs(av[3]))
        elif op in (MAX_REPEAT, MIN_REPEAT):
            flush()
            lo, _hi, sub = av
            if lo >= 1:
                runs.extend(_literal_runs(sub))
        else:
            flush()
    flush()
    return runs


def _branch_candidates(seq) -> list[tuple[str, ...]]:
    """Any-of trigger sets: one per branch whose every alternative carries a
    usable mandatory literal."""
    found: list[tuple[str, ...]] = []
    for op, av in seq:
        if op is BRANCH:
            bests = []
            for alternative in av[1]:
                best = max(_literal_runs(alternative), key=len, default="")
                bests.append(best)
            if bests and all(len(b) >= 3 for b in bests):
                found.append(tuple(sorted(set(bests))))
        elif op is SUBPATTERN:
            found.extend(_branch_candidates(av[3]))
        elif op in (MAX_REPEAT, MIN_REPEAT):
            lo, _hi, sub = av
            if lo >= 1:
                found.extend(_branch_candidates(sub))
    return found


def _make_trigger(pattern: str) -> tuple | None:
    """Derive a cheap substring prescreen for a pattern, or None.

    The trigger is either ``("literal", s)`` or ``("anyof", (s, ...))`` where
    every ``s`` is mandatory in any match once both sides are lowercased, so
    skipping the regex when the trigger is absent can never drop a detection.
    """
    try:
        parsed = _sre_parse.parse(pattern)
    except Exception:  # pragma: no cover - pattern already validated
        return None
    # Short runs are too common to prescreen on, unless they carry a
    # distinctive non-ASCII character such as the copyright sign.
    runs = [
        r
        for r in _literal_runs(parsed)
        if len(r) >= 3 or any(ord(c) > 127 for c in r)
    ]
    best_run = max(runs, key=len, default="")
    branches = _branch_candidates(parsed)
    best_branch = max(
        branches, key=lambda alts: min(len(a) for a in alts), default=()
    )
    if best_run and (
        not best_branch or len(best_run) >= min(len(a) for a in best_branch)
    ):
        return ("literal", best_run)
    if best_branch:
        return ("anyof", best_branch)
    return None


def _parse_pack(lines: Iterable[str], where: str) -> list[Rule]:
    rules = []
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DetectorError(
                f"{where}:{lineno}: expected 'rule_id<TAB>category<TAB>pattern'"
            )
        rule_id, category, pattern = (p.strip() for p in parts)
        if not rule_id or not pattern:
            raise DetectorError(f"{where}:{lineno}: empty rule id or pattern")
        if category not in _CATEGORY_INDEX:
            raise DetectorError(f"{where}:{lineno}: unknown category {category!r}")
        _validate_pattern(pattern, f"{where}:{lineno}")
        rules.append(Rule(rule_id, category, pattern))
    return rules


def _load_rules(rules_dir: str | None) -> list[Rule]:
    rules: list[Rule] = []
    if rules_dir is None:
        root = resources.files(__package__) / "rules"
        entries = sorted(
            (e for e in root.iterdir() if e.name.endswith(".rules")),
            key=lambda e: e.name,
        )
        for entry in entries:
            text = entry.read_text(encoding="utf-8")
            rules.extend(_parse_pack(text.splitlines(), entry.name))
    else:
        paths = sorted(Path(rules_dir).glob("*.rules"))
        if not paths:
            raise DetectorError(f"no .rules files found in {rules_dir!r}")
        for path in paths:
            with open(path, encoding="utf-8") as fh:
                rules.extend(_parse_pack(fh, str(path)))
    return rules


@lru_cache(maxsize=16)
def _compiled_rules(config: DetectorConfig) -> dict[str, tuple]:
    rules = _load_rules(config.rules_dir)
    for i, (category, pattern) in enumerate(config.custom_rules):
        _validate_pattern(pattern, f"custom rule {i}")
        rules.append(Rule(f"custom_{i}", category, pattern))
    by_category: dict[str, list] = {}
    for rule in rules:
        by_category.setdefault(rule.category, []).append(
            (rule.rule_id, re.compile(rule.pattern), _make_trigger(rule.pattern))
        )
    return {cat: tuple(triples) for cat, triples in by_category.items()}


# Tokens before a '.' that do not end a sentence.
_ABBREVIATIONS = frozenset(
    {
        "Fig", "Figs", "fig", "figs", "Tab", "Tabs", "Eq", "Eqs", "Ref", "Refs",
        "No", "Nos", "no", "Dr", "Mr", "Mrs", "Ms", "Prof", "St", "Jr", "Sr",
        "vs", "cf", "ca", "al", "etc", "Inc", "Ltd", "Co", "Corp", "resp",
        "approx", "e.g", "i.e", "Ph.D",
    }
)
_TERMINATORS = ".!?"


def _is_sentence_end(text: str, j: int, lenient_initials: bool) -> bool:
    ch = text[j]
    if ch not in _TERMINATORS:
        return False
    if j + 1 < len(text) and not text[j + 1].isspace():
        return False
    if ch != ".":
        return True
    k = j
    while k > 0 and not text[k - 1].isspace():
        k -= 1
    token = text[k:j]
    if token in _ABBREVIATIONS:
        return False
    if lenient_initials:
        if len(token) == 1 and token.isupper():
            return False  # lone initial, "John A. Smith"
        if len(token) >= 2 and token[-2] == "." and token[-1].isupper():
            return False  # chained initials, "B.V."
    return True


def _sentence_bounds(text: str, start: int, end: int) -> tuple[int, int]:
    """Widen [start, end) to the enclosing sentence, absorbing the trailing
    terminator and whitespace so the removal splices cleanly.

    Boundary detection is deliberately asymmetric: scanning backward, a lone
    capital before a period counts as a sentence end so a preceding content
    sentence ("... vitamin X.") is never swallowed; scanning forward it is
    read as a name initial so a whole statement ("© 2020 John A. Smith. All
    rights reserved.") is still removed in one piece. Each direction errs on
    the side that does the least damage.
    """
    s = 0
    for j in range(start - 1, -1, -1):
        if _is_sentence_end(text, j, lenient_initials=False):
            s = j + 1
            break
    while s < start and text[s].isspace():
        s += 1
    n = len(text)
    e = n
    for j in range(max(end - 1, 0), n):
        if _is_sentence_end(text, j, lenient_initials=True):
            e = j + 1
            break
    while e < n and text[e].isspace():
        e += 1
    return s, e


def detect(text: str, config: DetectorConfig | None = None) -> list[Detection]:
    """Run every enabled category's rules over ``text``.

    Returns all raw matches (overlaps across rules are allowed) ordered by
    start offset, then category registry order. Purely a function of its
    arguments: same text and config, same detections.
    """
    if config is None:
        config = DetectorConfig()
    rules_by_category = _compiled_rules(config)
    enabled = set(config.enabled_categories)
    lowered = text.lower()
    detections: list[Detection] = []
    seen: set[tuple] = set()
    for category in CATEGORY_REGISTRY:
        if category not in enabled:
            continue
        for rule_id, regex, trigger in rules_by_category.get(category, ()):
            if trigger is not None:
                kind, payload = trigger
                if kind == "literal":
                    if payload not in lowered:
                        continue
                elif not any(s in lowered for s in payload):
                    continue
            for m in regex.finditer(text):
                s, e = m.span()
                if s == e:
                    continue
                if category in SENTENCE_SCOPED:
                    s, e = _sentence_bounds(text, s, e)
                key = (s, e, category, rule_id)
                if key in seen:
                    continue
                seen.add(key)
                detections.append(Detection(Span(s, e, category), category, rule_id))
    detections.sort(
        key=lambda d: (d.span.start, _CATEGORY_INDEX[d.category], d.span.end, d.rule_id)
    )
    return detections


def to_rem_spans(detections: Iterable[Detection]) -> list[Span]:
    """Relabel detections to REM and resolve overlaps into a finalized set."""
    return filter_spans(
        Span(d.span.start, d.span.end, REM_LABEL) for d in detections
    )


def load_predictions(path: str) -> dict[str, list[Span]]:
    """Load a predictions file (corpus line format) as finalized span sets
    keyed by record id. Offsets are validated against their text only when
    the spans are joined with a gold record during scoring."""
    return {r.id: list(r.spans) for r in load_corpus(path, schema="predictions")}
