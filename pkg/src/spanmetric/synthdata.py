"""Synthetic annotated corpora for training and stress-testing the toy metric.

A copy-quality world: source and reference hold the clean sentence and the
"translation" starts as an exact copy, then gets corrupted with the
perturbation generators (plus small in-house character typos for minor
errors). Detecting an error therefore means noticing a deviation from the
context sentence, which is what the toy encoder can actually learn at its
size. Gold spans come straight from the injected corruptions and the gold
sentence score is computed analytically from those spans with the
capped-penalty formula, so supervision is exact by construction. Everything
is a pure function of the seed.
"""

from __future__ import annotations

import random
from dataclasses import replace
from typing import Sequence

from .annotations import ErrorSpan, Segment, Severity, mqm_score
from . import perturb

def _pseudo_words(count: int) -> tuple[str, ...]:
    """Distinct consonant-vowel pseudo-words, each a single <=4-char chunk."""
    consonants = "bdfgklmnprstvz"
    vowels = "aeiou"
    words = []
    for c1 in consonants:
        for v1 in vowels:
            for c2 in consonants:
                words.append(c1 + v1 + c2 + "o")
                if len(words) >= count:
                    return tuple(words)
    return tuple(words)


# Content words are pseudo-words so that chance token overlap between
# unrelated sentences stays low; function words stay real because the
# negation rules key on them. The content vocabulary is kept small: the toy
# encoder's attention heads have to learn the source-side counterpart of
# every word, and a few dozen pairs is what fits its head dimension.
FUNCTION_WORDS = (
    "the", "of", "and", "to", "in", "is", "was", "are", "not",
    "may", "can", "will", "has", "have", "does", "must",
)
WORDS = _pseudo_words(64) + FUNCTION_WORDS

ENTITIES = (
    "Ministry", "Government", "Parliament", "Berlin", "Lisbon", "Geneva",
    "Council", "Commission", "Senate", "Agency", "Institute", "Academy",
)

#: Uniform unigram table over the base vocabulary, for mask in-filling.
UNIGRAMS = {w: 1.0 for w in WORDS}

_LOCALIZED = ("swap_num", "swap_ne", "negation", "mask_infill", "add_text")
_HALLUCINATIONS = ("detached_random", "detached_similar", "oscillatory")


def make_sentence(rng: random.Random) -> str:
    """A random 4-12 word sentence, sometimes with a number or an entity."""
    words = [WORDS[rng.randrange(len(WORDS))] for _ in range(rng.randint(4, 12))]
    if rng.random() < 0.4:
        words[rng.randrange(1, len(words))] = str(rng.randint(1, 9999))
    if rng.random() < 0.35:
        words[rng.randrange(1, len(words))] = ENTITIES[rng.randrange(len(ENTITIES))]
    return " ".join(words)


def make_pool(size: int, rng: random.Random) -> list[str]:
    return [make_sentence(rng) for _ in range(size)]


def _typo(word: str, rng: random.Random) -> str:
    """Scramble a word: swap two adjacent characters, or double one."""
    if len(word) >= 2:
        i = rng.randrange(len(word) - 1)
        scrambled = word[:i] + word[i + 1] + word[i] + word[i + 2:]
        if scrambled != word:
            return scrambled
    i = rng.randrange(len(word))
    return word[:i] + word[i] + word[i:]


def _inject_typos(
    translation: str, spans: list[ErrorSpan], count: int, rng: random.Random
) -> tuple[str, list[ErrorSpan]]:
    """Add `count` minor typo spans on words not already covered by a span."""
    for _ in range(count):
        words = [
            m for m in perturb._WORD.finditer(translation)
            if not any(s.overlaps(m.start(), m.end()) for s in spans)
        ]
        if not words:
            break
        target = words[rng.randrange(len(words))]
        scrambled = _typo(target.group(), rng)
        delta = len(scrambled) - len(target.group())
        translation = (
            translation[:target.start()] + scrambled + translation[target.end():]
        )
        # edits only ever grow or keep length; shift spans to the right of it
        spans = [
            replace(s, start=s.start + delta, end=s.end + delta)
            if s.start >= target.end() else s
            for s in spans
        ]
        spans.append(
            ErrorSpan(target.start(), target.start() + len(scrambled),
                      Severity.MIN, category="typo")
        )
    return translation, spans


def _apply_localized(
    seg: Segment, kind: str, pool: list[str], rng: random.Random
) -> perturb.PerturbedSegment:
    if kind == "swap_num":
        return perturb.swap_number(seg, rng)
    if kind == "swap_ne":
        return perturb.swap_entity(seg, rng, ENTITIES)
    if kind == "negation":
        return perturb.negate(seg, perturb.load_negation_lexicon(), rng)
    if kind == "mask_infill":
        return perturb.mask_infill(seg, UNIGRAMS, rng)
    if kind == "add_text":
        return perturb.add_text(seg, pool, rng)
    raise ValueError(f"unknown localized kind {kind!r}")


def _apply_hallucination(
    seg: Segment, kind: str, pool: list[str], rng: random.Random
) -> perturb.PerturbedSegment:
    if kind == "detached_random":
        return perturb.hallucinate_random(seg, pool, rng)
    if kind == "detached_similar":
        sample = [pool[rng.randrange(len(pool))] for _ in range(8)]
        return perturb.hallucinate_similar(seg, sample)
    if kind == "oscillatory":
        return perturb.hallucinate_oscillatory(seg, rng)
    raise ValueError(f"unknown hallucination kind {kind!r}")


def build_corpus(
    size: int,
    seed: int = 0,
    include_spans: bool = True,
    id_prefix: str = "syn",
) -> list[Segment]:
    """Generate `size` annotated segments with a mixed corruption menu.

    Roughly: 28% clean, 24% minor typos only, 33% one major localized error
    (sometimes with extra typos), 15% hallucinations (the error classes human
    annotation pools underrepresent, so the synthetic menu overweights them).
    Gold scores follow the capped span-penalty formula exactly. With
    `include_spans` False the segments carry scores only (a direct-assessment
    style corpus for the sentence-only training phase).
    """
    rng = random.Random(f"synthdata:{seed}")
    # a pool as large as the corpus, so detached replacements rarely repeat
    # and detachment cannot be memorized token-by-token
    pool = make_pool(max(128, size), rng)
    segments: list[Segment] = []
    while len(segments) < size:
        sentence = make_sentence(rng)
        base = Segment(
            id=f"{id_prefix}-{len(segments):05d}",
            source=sentence,
            translation=sentence,
            reference=sentence,
        )
        roll = rng.random()
        translation = sentence
        spans: list[ErrorSpan] = []
        try:
            if roll < 0.28:
                pass
            elif roll < 0.52:
                translation, spans = _inject_typos(
                    translation, spans, rng.randint(1, 3), rng
                )
            elif roll < 0.85:
                kinds = [k for k in _LOCALIZED]
                rng.shuffle(kinds)
                done = None
                for kind in kinds:
                    try:
                        done = _apply_localized(base, kind, pool, rng)
                        break
                    except perturb.PerturbationNotApplicable:
                        continue
                if done is None:
                    continue
                translation = done.perturbed_translation
                spans = list(done.injected_spans)
                if rng.random() < 0.3:
                    translation, spans = _inject_typos(
                        translation, spans, rng.randint(1, 2), rng
                    )
            else:
                kind = _HALLUCINATIONS[rng.randrange(len(_HALLUCINATIONS))]
                done = _apply_hallucination(base, kind, pool, rng)
                translation = done.perturbed_translation
                spans = list(done.injected_spans)
        except perturb.PerturbationNotApplicable:
            continue
        segments.append(
            replace(
                base,
                translation=translation,
                gold_spans=tuple(spans) if include_spans else None,
                gold_score=mqm_score(spans),
                system=f"sys{len(segments) % 4}",
            )
        )
    return segments
