"""Meta-evaluation statistics for comparing metrics against human judgements.

Segment-level correlations (Pearson, tie-corrected Kendall) with a paired
permutation significance test and top-cluster marking, system-level pairwise
accuracy, character-level span F1, and AUROC for hallucination detection.

All statistics are computed from exact integer sufficient statistics where
possible (pair counts, character counts) so results are reproducible to the
bit regardless of how the counts were obtained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .annotations import ErrorSpan, Severity


class UndefinedStatisticError(ValueError):
    """A statistic has no defined value for the given input (e.g. zero variance)."""


@dataclass(frozen=True)
class PairedScores:
    """Per-segment aligned human and metric scores with optional grouping keys."""

    human: tuple[float, ...]
    metrics: Mapping[str, tuple[float, ...]]
    systems: tuple[str, ...] | None = None
    lang_pairs: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        n = len(self.human)
        for name, scores in self.metrics.items():
            if len(scores) != n:
                raise ValueError(f"metric {name!r} has {len(scores)} scores, expected {n}")
        for label, keys in (("systems", self.systems), ("lang_pairs", self.lang_pairs)):
            if keys is not None and len(keys) != n:
                raise ValueError(f"{label} has {len(keys)} entries, expected {n}")


@dataclass(frozen=True)
class SignificanceResult:
    """Outcome of a paired permutation test."""

    statistic: float
    p_value: float
    resamples: int
    level: float = 0.05

    @property
    def significant(self) -> bool:
        return self.p_value < self.level


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation of two equal-length vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be equal-length vectors")
    if len(x) < 2:
        raise ValueError("need at least 2 points")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if denom == 0.0:
        raise UndefinedStatisticError("correlation undefined: zero variance input")
    return float(xc @ yc) / denom


def _kendall_counts(x: np.ndarray, y: np.ndarray) -> tuple[int, int, int, int]:
    """Exact pair counts for Kendall's tau: (concordant, discordant, x ties, y ties).

    Tie counts include jointly tied pairs. O(n log n) via a Fenwick tree over
    dense y ranks, following the classic inversion-counting scheme.
    """
    n = len(x)
    order = np.lexsort((y, x))
    xs, ys = x[order], y[order]
    # dense ranks of y (1-based) for Fenwick indexing
    y_sorted = np.sort(y)
    y_rank = np.searchsorted(y_sorted, ys) + 1

    tree = [0] * (n + 1)

    def tree_add(i: int) -> None:
        while i <= n:
            tree[i] += 1
            i += i & -i

    def tree_prefix(i: int) -> int:
        s = 0
        while i > 0:
            s += tree[i]
            i -= i & -i
        return s

    # within each equal-x block, count previously inserted elements with larger
    # y (a strict discordance), then insert the block
    dis = 0
    i = 0
    while i < n:
        j = i
        while j < n and xs[j] == xs[i]:
            dis += i - tree_prefix(y_rank[j])
            j += 1
        while i < j:
            tree_add(y_rank[i])
            i += 1

    def tie_pairs(counts: np.ndarray) -> int:
        return int(sum(c * (c - 1) // 2 for c in counts))

    xtie = tie_pairs(np.unique(x, return_counts=True)[1])
    ytie = tie_pairs(np.unique(y, return_counts=True)[1])
    joint = tie_pairs(np.unique(np.stack([x, y], axis=1), axis=0, return_counts=True)[1])
    total = n * (n - 1) // 2
    con = total - dis - (xtie - joint) - (ytie - joint) - joint
    return con, dis, xtie, ytie


def kendall(x: Sequence[float], y: Sequence[float]) -> float:
    """Tie-corrected Kendall rank correlation (tau-b) over all pairs."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be equal-length vectors")
    n = len(x)
    if n < 2:
        raise ValueError("need at least 2 points")
    con, dis, xtie, ytie = _kendall_counts(x, y)
    total = n * (n - 1) // 2
    if xtie == total or ytie == total:
        raise UndefinedStatisticError("tau undefined: one vector is entirely tied")
    return (con - dis) / math.sqrt((total - xtie) * (total - ytie))


def perm_both(
    metric_a: Sequence[float],
    metric_b: Sequence[float],
    human: Sequence[float],
    correlation_fn: Callable[[np.ndarray, np.ndarray], float] = pearson,
    resamples: int = 200,
    seed: int = 0,
    level: float = 0.05,
) -> SignificanceResult:
    """Paired permutation test for the difference of two metrics' correlations.

    The observed statistic is corr(a, human) - corr(b, human). The null
    distribution swaps a_i and b_i independently with probability 1/2 per
    segment per resample; the two-sided p-value uses add-one smoothing,
    (count(|delta| >= |observed|) + 1) / (resamples + 1).
    """
    a = np.asarray(metric_a, dtype=float)
    b = np.asarray(metric_b, dtype=float)
    h = np.asarray(human, dtype=float)
    if not (a.shape == b.shape == h.shape):
        raise ValueError("metric and human vectors must be aligned")
    observed = correlation_fn(a, h) - correlation_fn(b, h)
    rng = np.random.default_rng(seed)
    exceed = 0
    for _ in range(resamples):
        flip = rng.random(len(a)) < 0.5
        pa = np.where(flip, b, a)
        pb = np.where(flip, a, b)
        delta = correlation_fn(pa, h) - correlation_fn(pb, h)
        if abs(delta) >= abs(observed):
            exceed += 1
    p = (exceed + 1) / (resamples + 1)
    return SignificanceResult(statistic=observed, p_value=p, resamples=resamples, level=level)


def top_cluster(
    metric_table: Mapping[str, Sequence[float]],
    human: Sequence[float],
    correlation_fn: Callable[[np.ndarray, np.ndarray], float] = pearson,
    level: float = 0.05,
    resamples: int = 200,
    seed: int = 0,
    with_tests: bool = False,
) -> set[str] | tuple[set[str], dict[str, SignificanceResult]]:
    """Names of metrics not significantly beaten by any other metric.

    A metric is excluded only when some higher-correlating metric wins the
    paired permutation test against it at the given level, so the cluster
    always contains the highest-correlating metric. With `with_tests` the
    pairwise tests that backed the decisions are returned too, keyed
    "challenger>target".
    """
    if len(metric_table) < 2:
        cluster = set(metric_table)
        return (cluster, {}) if with_tests else cluster
    names = sorted(metric_table)
    corrs = {m: correlation_fn(np.asarray(metric_table[m], dtype=float),
                               np.asarray(human, dtype=float)) for m in names}
    cluster = set()
    tests: dict[str, SignificanceResult] = {}
    for i, m in enumerate(names):
        beaten = False
        for j, challenger in enumerate(names):
            if challenger == m or corrs[challenger] <= corrs[m]:
                continue
            result = perm_both(
                metric_table[challenger], metric_table[m], human,
                correlation_fn, resamples=resamples,
                seed=seed * 1_000_003 + i * len(names) + j, level=level,
            )
            tests[f"{challenger}>{m}"] = result
            if result.p_value < level:
                beaten = True
                break
        if not beaten:
            cluster.add(m)
    return (cluster, tests) if with_tests else cluster


def pairwise_accuracy(
    system_metric: Mapping[str, float], system_human: Mapping[str, float]
) -> float:
    """Fraction of system pairs ranked the same way by metric and human.

    A pair with a zero difference on exactly one side counts as a mismatch;
    both-zero counts as a match.
    """
    if set(system_metric) != set(system_human):
        raise ValueError("metric and human tables must cover the same systems")
    systems = sorted(system_metric)
    if len(systems) < 2:
        raise ValueError("need at least 2 systems")
    matches = 0
    pairs = 0
    for i in range(len(systems)):
        for j in range(i + 1, len(systems)):
            dm = system_metric[systems[i]] - system_metric[systems[j]]
            dh = system_human[systems[i]] - system_human[systems[j]]
            sm = (dm > 0) - (dm < 0)
            sh = (dh > 0) - (dh < 0)
            matches += sm == sh
            pairs += 1
    return matches / pairs


@dataclass(frozen=True)
class CharF1:
    """Character-level span F1, per class and gold-weighted overall."""

    f1_minor: float
    f1_major: float
    f1_overall: float
    precision: dict[str, float] = field(default_factory=dict)
    recall: dict[str, float] = field(default_factory=dict)


def _char_labels(spans: Sequence[ErrorSpan], length: int) -> np.ndarray:
    """Label each character with its most severe covering span; CRIT counts as MAJ."""
    labels = np.zeros(length, dtype=np.int8)
    for span in spans:
        sev = min(span.severity, Severity.MAJ)
        region = slice(span.start, span.end)
        labels[region] = np.maximum(labels[region], int(sev))
    return labels


def char_f1_pooled(
    items: Sequence[tuple[Sequence[ErrorSpan], Sequence[ErrorSpan], str]]
) -> CharF1:
    """Character-level span F1 with counts pooled over (pred, gold, text) items.

    Critical severities are converted to major on both sides before scoring.
    Every character is labeled minor/major/clean (most severe covering span
    wins); precision/recall/F1 are computed per class over all characters,
    and the overall F1 averages the class F1s weighted by gold character
    counts, skipping classes with no gold characters.
    """
    tp = {label: 0 for label in ("minor", "major")}
    pp = dict(tp)
    gp = dict(tp)
    any_pred = False
    for pred_spans, gold_spans, text in items:
        n = len(text)
        for side, spans in (("predicted", pred_spans), ("gold", gold_spans)):
            for k, span in enumerate(spans):
                problems = span.violations(n, name=f"{side} span {k}")
                if problems:
                    raise ValueError("; ".join(problems))
        pred = _char_labels(pred_spans, n)
        gold = _char_labels(gold_spans, n)
        any_pred = any_pred or bool(np.any(pred))
        for label, sev in (("minor", Severity.MIN), ("major", Severity.MAJ)):
            tp[label] += int(np.sum((pred == int(sev)) & (gold == int(sev))))
            pp[label] += int(np.sum(pred == int(sev)))
            gp[label] += int(np.sum(gold == int(sev)))

    f1s: dict[str, float] = {}
    precisions: dict[str, float] = {}
    recalls: dict[str, float] = {}
    for label in ("minor", "major"):
        p = tp[label] / pp[label] if pp[label] else 0.0
        r = tp[label] / gp[label] if gp[label] else 0.0
        f1s[label] = 2 * p * r / (p + r) if p + r > 0 else 0.0
        precisions[label], recalls[label] = p, r

    weight_total = gp["minor"] + gp["major"]
    if weight_total:
        overall = (
            sum(f1s[c] * gp[c] for c in f1s if gp[c] > 0) / weight_total
        )
    else:
        # no gold error characters at all: perfect iff nothing was predicted
        overall = 1.0 if not any_pred else 0.0
    return CharF1(
        f1_minor=f1s["minor"], f1_major=f1s["major"], f1_overall=overall,
        precision=precisions, recall=recalls,
    )


def char_f1(
    pred_spans: Sequence[ErrorSpan],
    gold_spans: Sequence[ErrorSpan],
    translation: str,
) -> CharF1:
    """Character-level span F1 on one translation (see `char_f1_pooled`)."""
    return char_f1_pooled([(pred_spans, gold_spans, translation)])


def auroc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Area under the ROC curve with positives expected to score LOWER.

    Positives are hallucinations-style items that a quality metric should
    rank at the bottom, so the detector ranks on the negated score: the
    result is the fraction of (positive, negative) pairs where the positive
    received the strictly lower quality score, ties counted 1/2.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be aligned vectors")
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("need at least one positive and one negative label")
    wins = 0
    ties = 0
    for start in range(0, len(pos), 1024):
        block = pos[start:start + 1024, None]
        wins += int(np.sum(block < neg[None, :]))
        ties += int(np.sum(block == neg[None, :]))
    return (wins + 0.5 * ties) / (len(pos) * len(neg))
