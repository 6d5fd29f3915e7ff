"""Deterministic synthetic corruption of translations, with gold error spans.

Two families of generators:

- hallucinations (training-data augmentation): replace the translation with a
  random or source-similar pool sentence, or repeat an n-gram in place; these
  inject a CRIT span.
- localized errors (stress testing): number swaps, named-entity swaps,
  negation edits, text addition, and mask in-filling; these inject a MAJ span
  over the edited region.

Every generator is a pure function of (input, rng state); the same seed gives
byte-identical output. Generators raise `PerturbationNotApplicable` when a
segment does not admit the corruption (no digits, too short, ...), which batch
drivers treat as a skip.
"""

from __future__ import annotations

import math
import random
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Mapping, Sequence

import numpy as np

from .annotations import ErrorSpan, Segment, Severity

KINDS = (
    "detached_random",
    "detached_similar",
    "oscillatory",
    "add_text",
    "negation",
    "mask_infill",
    "swap_num",
    "swap_ne",
)

#: Maps a sentence pair to a similarity score; symmetric, maximal on identity.
SimilarityFn = Callable[[str, str], float]


class PerturbationNotApplicable(ValueError):
    """The segment does not contain the material this corruption needs."""


@dataclass(frozen=True)
class PerturbedSegment:
    """A corrupted translation next to its base segment."""

    base: Segment
    perturbed_translation: str
    injected_spans: tuple[ErrorSpan, ...]
    kind: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "injected_spans", tuple(self.injected_spans))
        if self.kind not in KINDS:
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if self.perturbed_translation == self.base.translation:
            raise ValueError("perturbed translation equals the original")
        n = len(self.perturbed_translation)
        for i, span in enumerate(self.injected_spans):
            problems = span.violations(n, name=f"injected span {i}")
            if problems:
                raise ValueError("; ".join(problems))


def char_ngram_cosine(a: str, b: str, n: int = 3) -> float:
    """Cosine similarity of character n-gram count profiles (default trigrams)."""
    def profile(text: str) -> Counter:
        padded = f" {text} "
        return Counter(padded[i:i + n] for i in range(max(0, len(padded) - n + 1)))

    pa, pb = profile(a), profile(b)
    dot = sum(c * pb.get(g, 0) for g, c in pa.items())
    norm = math.sqrt(sum(c * c for c in pa.values())) * math.sqrt(
        sum(c * c for c in pb.values())
    )
    return dot / norm if norm else 0.0


_WORD = re.compile(r"\S+")
_DIGITS = re.compile(r"\d+")
_CAPITALIZED = re.compile(r"^[A-Z][A-Za-z]*$")


def _words(text: str) -> list[re.Match]:
    return list(_WORD.finditer(text))


def _replace(seg: Segment, new_translation: str,
             spans: Sequence[ErrorSpan], kind: str) -> PerturbedSegment:
    return PerturbedSegment(
        base=seg, perturbed_translation=new_translation,
        injected_spans=tuple(spans), kind=kind,
    )


def hallucinate_random(
    seg: Segment, pool: Sequence[str], rng: random.Random
) -> PerturbedSegment:
    """Replace the translation with a uniformly drawn pool sentence."""
    usable = [s for s in pool if s != seg.translation]
    if not usable:
        raise PerturbationNotApplicable("pool has no sentence different from the translation")
    new = usable[rng.randrange(len(usable))]
    span = ErrorSpan(0, len(new), Severity.CRIT, category="hallucination")
    return _replace(seg, new, [span], "detached_random")


def hallucinate_similar(
    seg: Segment, pool: Sequence[str],
    similarity: SimilarityFn = char_ngram_cosine,
) -> PerturbedSegment:
    """Replace the translation with the pool sentence most similar to the source.

    Deterministic: exact similarity ties break toward the earlier pool entry.
    """
    usable = [s for s in pool if s != seg.translation]
    if not usable:
        raise PerturbationNotApplicable("empty pool")
    best = max(usable, key=lambda s: (similarity(seg.source, s), ))
    span = ErrorSpan(0, len(best), Severity.CRIT, category="hallucination")
    return _replace(seg, best, [span], "detached_similar")


def hallucinate_oscillatory(seg: Segment, rng: random.Random) -> PerturbedSegment:
    """Duplicate a random word n-gram (n in 2..4) in place 1-10 extra times."""
    words = _words(seg.translation)
    feasible = [n for n in (2, 3, 4) if len(words) >= n]
    if not feasible:
        raise PerturbationNotApplicable("translation has fewer than 2 words")
    n = feasible[rng.randrange(len(feasible))]
    start_word = rng.randrange(len(words) - n + 1)
    gram_start = words[start_word].start()
    gram_end = words[start_word + n - 1].end()
    gram = seg.translation[gram_start:gram_end]
    k = rng.randint(1, 10)
    inserted = (" " + gram) * k
    new = seg.translation[:gram_end] + inserted + seg.translation[gram_end:]
    span = ErrorSpan(gram_end, gram_end + len(inserted), Severity.CRIT,
                     category="hallucination")
    return _replace(seg, new, [span], "oscillatory")


def swap_number(seg: Segment, rng: random.Random) -> PerturbedSegment:
    """Replace one digit sequence with a different random 1-4 digit number."""
    runs = list(_DIGITS.finditer(seg.translation))
    if not runs:
        raise PerturbationNotApplicable("translation contains no digits")
    target = runs[rng.randrange(len(runs))]
    replacement = str(rng.randint(0, 9999))
    while replacement == target.group():
        replacement = str(rng.randint(0, 9999))
    new = seg.translation[:target.start()] + replacement + seg.translation[target.end():]
    span = ErrorSpan(target.start(), target.start() + len(replacement), Severity.MAJ,
                     category="number")
    return _replace(seg, new, [span], "swap_num")


def _entity_candidates(text: str, pool: Sequence[str]) -> list[re.Match]:
    """Capitalized tokens that do not open a sentence, plus pool-matched tokens."""
    candidates = []
    for m in _words(text):
        token = m.group().strip(".,;:!?\"'()")
        if not token:
            continue
        sentence_initial = m.start() == 0 or text[:m.start()].rstrip().endswith(
            (".", "!", "?")
        )
        if (_CAPITALIZED.match(token) and not sentence_initial) or token in pool:
            candidates.append(m)
    return candidates


def swap_entity(
    seg: Segment, rng: random.Random, entity_pool: Sequence[str]
) -> PerturbedSegment:
    """Replace one detected named entity with a different pool entity."""
    candidates = _entity_candidates(seg.translation, entity_pool)
    if not candidates:
        raise PerturbationNotApplicable("no entity-like token found")
    target = candidates[rng.randrange(len(candidates))]
    token = target.group().strip(".,;:!?\"'()")
    options = [e for e in entity_pool if e != token]
    if not options:
        raise PerturbationNotApplicable("entity pool has no alternative entity")
    replacement = options[rng.randrange(len(options))]
    tok_start = target.start() + target.group().index(token)
    tok_end = tok_start + len(token)
    new = seg.translation[:tok_start] + replacement + seg.translation[tok_end:]
    span = ErrorSpan(tok_start, tok_start + len(replacement), Severity.MAJ,
                     category="entity")
    return _replace(seg, new, [span], "swap_ne")


def load_negation_lexicon(path: str | None = None) -> list[tuple[str, str]]:
    """Read `lhs => rhs` rewrite rules, one per line; `#` lines are comments.

    With no path, the built-in English rule set ships with the package.
    """
    if path is None:
        text = resources.files("spanmetric.data").joinpath(
            "negation_patterns.txt").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    rules = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        lhs, _, rhs = line.partition("=>")
        if not _ or not lhs.strip() or not rhs.strip():
            raise ValueError(f"bad lexicon line: {line!r}")
        rules.append((lhs.strip(), rhs.strip()))
    return rules


def negate(
    seg: Segment, negation_lexicon: Sequence[tuple[str, str]], rng: random.Random
) -> PerturbedSegment:
    """Insert or remove a negation per the first-matching-position lexicon rule.

    All rules with at least one word-boundary match are collected; the rng
    picks one, applied at its first occurrence. Earlier lexicon rules shadow
    later ones whose pattern is a suffix of theirs (removals before
    insertions), mirroring the rule-file ordering convention.
    """
    matching: list[tuple[tuple[str, str], re.Match]] = []
    shadowed: set[int] = set()
    for lhs, rhs in negation_lexicon:
        m = re.search(rf"\b{re.escape(lhs)}\b", seg.translation, re.IGNORECASE)
        if m is not None and m.start() not in shadowed:
            matching.append(((lhs, rhs), m))
            shadowed.add(m.start())
    if not matching:
        raise PerturbationNotApplicable("no negation pattern applies")
    (lhs, rhs), m = matching[rng.randrange(len(matching))]
    if m.group()[0].isupper():
        rhs = rhs[0].upper() + rhs[1:]
    new = seg.translation[:m.start()] + rhs + seg.translation[m.end():]
    span = ErrorSpan(m.start(), m.start() + len(rhs), Severity.MAJ, category="negation")
    return _replace(seg, new, [span], "negation")


def add_text(
    seg: Segment, pool: Sequence[str], rng: random.Random
) -> PerturbedSegment:
    """Prepend or append a 3-12 word fragment drawn from a pool sentence."""
    if not pool:
        raise PerturbationNotApplicable("empty pool")
    sentence = pool[rng.randrange(len(pool))]
    words = sentence.split()
    if not words:
        raise PerturbationNotApplicable("pool sentence is empty")
    length = rng.randint(3, 12)
    length = min(length, len(words))
    start = rng.randrange(len(words) - length + 1)
    fragment = " ".join(words[start:start + length])
    if rng.random() < 0.5:
        new = fragment + " " + seg.translation
        span = ErrorSpan(0, len(fragment) + 1, Severity.MAJ, category="addition")
    else:
        new = seg.translation + " " + fragment
        span = ErrorSpan(len(seg.translation), len(new), Severity.MAJ,
                         category="addition")
    return _replace(seg, new, [span], "add_text")


def mask_infill(
    seg: Segment, corpus_unigram_table: Mapping[str, float], rng: random.Random
) -> PerturbedSegment:
    """Replace a random 1-3 word window with 1-4 words from the unigram table."""
    words = _words(seg.translation)
    if len(words) < 4:
        raise PerturbationNotApplicable("translation has fewer than 4 words")
    if not corpus_unigram_table:
        raise PerturbationNotApplicable("empty unigram table")
    window = rng.randint(1, 3)
    start_word = rng.randrange(len(words) - window + 1)
    ws = words[start_word].start()
    we = words[start_word + window - 1].end()
    vocab = sorted(corpus_unigram_table)
    weights = [corpus_unigram_table[w] for w in vocab]
    fill = rng.choices(vocab, weights=weights, k=rng.randint(1, 4))
    replacement = " ".join(fill)
    new = seg.translation[:ws] + replacement + seg.translation[we:]
    if new == seg.translation:
        # sampled exactly the original window; nudge with one more word
        replacement = replacement + " " + vocab[rng.randrange(len(vocab))]
        new = seg.translation[:ws] + replacement + seg.translation[we:]
    span = ErrorSpan(ws, ws + len(replacement), Severity.MAJ, category="infill")
    return _replace(seg, new, [span], "mask_infill")


@dataclass(frozen=True)
class ScoredPrediction:
    """The slice of an inference result the stress report needs."""

    score: float
    spans: tuple[ErrorSpan, ...]


def stress_report(
    originals: Sequence[ScoredPrediction],
    perturbed: Sequence[ScoredPrediction],
    kinds: Sequence[str],
) -> dict:
    """Summarize metric behavior on original/perturbed prediction pairs.

    Per perturbation kind (plus an "all" row): the percentage of perturbed
    items predicted to have no errors, the distribution of the most severe
    predicted span, score-delta statistics in 0-100 points (delta = original
    minus perturbed, so positive means the metric penalized the corruption),
    and a 10-bin histogram of the perturbed scores.
    """
    if not (len(originals) == len(perturbed) == len(kinds)):
        raise ValueError(
            f"misaligned inputs: {len(originals)} originals, "
            f"{len(perturbed)} perturbed, {len(kinds)} kinds"
        )
    groups: dict[str, list[int]] = {}
    for i, kind in enumerate(kinds):
        groups.setdefault(kind, []).append(i)
    if len(groups) > 1:
        groups["all"] = list(range(len(kinds)))

    report = {}
    for kind in sorted(groups):
        idx = groups[kind]
        no_error = sum(1 for i in idx if not perturbed[i].spans)
        worst: Counter = Counter()
        for i in idx:
            spans = perturbed[i].spans
            if spans:
                worst[max(s.severity for s in spans).label] += 1
        deltas = np.array(
            [100.0 * (originals[i].score - perturbed[i].score) for i in idx]
        )
        hist, _ = np.histogram([perturbed[i].score for i in idx],
                               bins=10, range=(0.0, 1.0))
        report[kind] = {
            "count": len(idx),
            "no_error_rate": 100.0 * no_error / len(idx),
            "severity_rates": {
                label: 100.0 * worst.get(label, 0) / len(idx)
                for label in ("minor", "major", "critical")
            },
            "delta_median": float(np.median(deltas)),
            "delta_q1": float(np.percentile(deltas, 25)),
            "delta_q3": float(np.percentile(deltas, 75)),
            "frac_delta_below_1pt": float(np.mean(deltas < 1.0)),
            "score_histogram": [int(c) for c in hist],
        }
    return report
