"""Pattern, pattern-set and inter-rater quality measures.

All pattern measures are computed from a 2x2 :class:`Confusion` table of
pattern coverage against one binary (One-vs-Rest) target.
"""

from __future__ import annotations

import itertools
import math
import statistics
from dataclasses import dataclass
from typing import Mapping, Sequence

from .dataset import Dataset, Selector, TargetSpec, cover_mask

ORR_BANDS = (1.68, 3.47, 6.71)
SIGNIFICANCE = 0.05


class UndefinedMeasureError(ValueError):
    """A measure is undefined for the given input (e.g. zero coverage)."""


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def covered(self) -> int:
        return self.tp + self.fp

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @classmethod
    def from_masks(cls, cover: int, positive: int, n: int) -> "Confusion":
        size = cover.bit_count()
        tp = (cover & positive).bit_count()
        pos = positive.bit_count()
        fp = size - tp
        fn = pos - tp
        return cls(tp, fp, fn, n - size - fn)


@dataclass(frozen=True)
class PatternStats:
    cov: float
    cnf: float
    wracc: float
    acc_contrib: float
    ig: float
    odds: float
    orr: int
    p_value: float
    confusion: Confusion


@dataclass(frozen=True)
class SetStats:
    size: int
    length: float | None = None
    cov_mean: float | None = None
    cnf_mean: float | None = None
    wracc_mean: float | None = None
    ig_mean: float | None = None
    orr_mean: float | None = None
    p_value_agg: float | None = None
    accuracy: float | None = None


def confusion(d: Dataset, t: TargetSpec, p: Sequence[Selector]) -> Confusion:
    if not p:
        raise ValueError("pattern must have at least one selector")
    return Confusion.from_masks(cover_mask(d, p), d.class_mask(t.column, t.positive_class), d.n_rows)


def coverage(c: Confusion) -> float:
    return c.covered / c.n


def confidence(c: Confusion) -> float:
    if c.covered == 0:
        raise UndefinedMeasureError("confidence of a pattern with empty cover")
    return c.tp / c.covered


def base_rate(c: Confusion) -> float:
    return c.positives / c.n


def wracc(c: Confusion) -> float:
    return coverage(c) * (confidence(c) - base_rate(c))


def q_a(c: Confusion, a: float) -> float:
    """Generic quality ``n**a * (p - p0)`` with ``n`` the cover size."""
    if not 0.0 <= a <= 1.0:
        raise ValueError("a must lie in [0, 1]")
    return c.covered ** a * (confidence(c) - base_rate(c))


def entropy(p: float) -> float:
    """Binary entropy in bits, with 0*log2(0) taken as 0."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p}")
    h = 0.0
    for x in (p, 1.0 - p):
        if x > 0.0:
            h -= x * math.log2(x)
    return h


def info_gain_from_confusion(c: Confusion) -> float:
    n = c.n
    h_d = entropy(c.positives / n)
    inside = c.covered
    outside = n - inside
    h_cond = 0.0
    if inside:
        h_cond += inside / n * entropy(c.tp / inside)
    if outside:
        h_cond += outside / n * entropy(c.fn / outside)
    return max(0.0, h_d - h_cond)


def info_gain(d: Dataset, t: TargetSpec, p: Sequence[Selector]) -> float:
    return info_gain_from_confusion(confusion(d, t, p))


def odds_ratio(c: Confusion) -> float:
    num = c.tp * c.tn
    den = c.fp * c.fn
    if den:
        return num / den
    return math.inf if num else 1.0


def orr(odds: float) -> int:
    """Map an odds ratio to its effect band 1..4 (boundaries go up)."""
    band = 1
    for edge in ORR_BANDS:
        if odds >= edge:
            band += 1
    return band


def chi2_statistic(c: Confusion) -> float:
    a, b, cc, dd = c.tp, c.fp, c.fn, c.tn
    margins = (a + b) * (cc + dd) * (a + cc) * (b + dd)
    if margins == 0:
        return 0.0
    return c.n * (a * dd - b * cc) ** 2 / margins


def chi2_p(c: Confusion) -> float:
    """Pearson chi-square p-value (1 dof, no continuity correction)."""
    if c.n <= 0:
        raise ValueError("empty table")
    return math.erfc(math.sqrt(chi2_statistic(c) / 2.0))


def pattern_stats(c: Confusion) -> PatternStats:
    odds = odds_ratio(c)
    return PatternStats(
        cov=coverage(c),
        cnf=confidence(c),
        wracc=wracc(c),
        acc_contrib=(c.tp + c.tn) / c.n,
        ig=info_gain_from_confusion(c),
        odds=odds,
        orr=orr(odds),
        p_value=chi2_p(c),
        confusion=c,
    )


def evaluate(d: Dataset, t: TargetSpec, p: Sequence[Selector]) -> PatternStats:
    return pattern_stats(confusion(d, t, p))


def _mean(xs):
    return math.fsum(xs) / len(xs)


def classify(d: Dataset, patterns: Sequence[tuple[Sequence[Selector], TargetSpec, PatternStats]]) -> list:
    """Predict a target class per row from a pattern set.

    A row takes the class of its highest-confidence covering pattern (ties:
    higher ORR, then earlier pattern); uncovered rows get the majority class.
    """
    labels = d.column(d.target_column)
    counts = {}
    for v in labels:
        counts[v] = counts.get(v, 0) + 1
    majority = max(counts, key=lambda k: (counts[k], -list(counts).index(k)))
    ranked = sorted(range(len(patterns)), key=lambda i: (-patterns[i][2].cnf, -patterns[i][2].orr, i))
    pred = [None] * d.n_rows
    todo = (1 << d.n_rows) - 1
    for i in ranked:
        sels, target, _ = patterns[i]
        hit = cover_mask(d, sels) & todo
        todo &= ~hit
        r = 0
        while hit:
            if hit & 1:
                pred[r] = target.positive_class
            hit >>= 1
            r += 1
    return [majority if x is None else x for x in pred]


def set_stats(d: Dataset, patterns: Sequence[tuple[Sequence[Selector], TargetSpec, PatternStats]]) -> SetStats:
    """Aggregate an evaluated pattern set: (selectors, target, stats) triples."""
    if not patterns:
        return SetStats(size=0)
    stats = [s for _, _, s in patterns]
    labels = d.column(d.target_column)
    pred = classify(d, patterns)
    accuracy = sum(1 for a, b in zip(pred, labels) if a == b) / d.n_rows
    return SetStats(
        size=len(patterns),
        length=_mean([len(sels) for sels, _, _ in patterns]),
        cov_mean=_mean([s.cov for s in stats]),
        cnf_mean=_mean([s.cnf for s in stats]),
        wracc_mean=_mean([s.wracc for s in stats]),
        ig_mean=_mean([s.ig for s in stats]),
        orr_mean=_mean([s.orr for s in stats]),
        p_value_agg=statistics.median([s.p_value for s in stats]),
        accuracy=accuracy,
    )


# -- inter-rater agreement -------------------------------------------------

ACCEPT = "accept"
REJECT = "reject"


def ac1_pair(r1: Sequence[str], r2: Sequence[str]) -> float:
    """Gwet's AC1 for two raters giving accept/reject ratings to the same items."""
    if len(r1) != len(r2):
        raise ValueError("raters rated different numbers of items")
    n = len(r1)
    if n < 1:
        raise ValueError("need at least one item")
    for x in itertools.chain(r1, r2):
        if x not in (ACCEPT, REJECT):
            raise ValueError(f"rating must be accept or reject, got {x!r}")
    both_accept = sum(1 for a, b in zip(r1, r2) if a == b == ACCEPT)
    both_reject = sum(1 for a, b in zip(r1, r2) if a == b == REJECT)
    p = (both_accept + both_reject) / n
    q = (r1.count(ACCEPT) + r2.count(ACCEPT)) / (2 * n)
    e = 2 * q * (1 - q)
    if e == 1.0:
        raise UndefinedMeasureError("chance agreement equals 1")
    return (p - e) / (1 - e)


def ac1(ratings: Mapping[str, Mapping[str, str]]) -> float:
    """Mean pairwise AC1 over all rater pairs.

    ``ratings`` maps rater -> {item: rating}. Each pair is scored on the items
    both raters rated.
    """
    raters = list(ratings)
    if len(raters) < 2:
        raise ValueError("need at least two raters")
    values = []
    for a, b in itertools.combinations(raters, 2):
        items = [i for i in ratings[a] if i in ratings[b]]
        if not items:
            raise ValueError(f"raters {a!r} and {b!r} share no items")
        values.append(ac1_pair([ratings[a][i] for i in items], [ratings[b][i] for i in items]))
    return _mean(values)


def icc(matrix: Sequence[Sequence[float]]) -> float:
    """One-way random-effects ICC(1,1) for an items x raters matrix."""
    n = len(matrix)
    if n < 2:
        raise ValueError("need at least two items")
    k = len(matrix[0])
    if k < 2 or any(len(row) != k for row in matrix):
        raise ValueError("need a complete matrix with at least two raters")
    grand = math.fsum(x for row in matrix for x in row) / (n * k)
    means = [math.fsum(row) / k for row in matrix]
    ss_between = k * math.fsum((m - grand) ** 2 for m in means)
    ss_within = math.fsum((x - m) ** 2 for row, m in zip(matrix, means) for x in row)
    if ss_between + ss_within == 0:
        raise UndefinedMeasureError("ratings have zero total variance")
    ms_between = ss_between / (n - 1)
    ms_within = ss_within / (n * (k - 1))
    var_between = (ms_between - ms_within) / k
    return var_between / (var_between + ms_within)
