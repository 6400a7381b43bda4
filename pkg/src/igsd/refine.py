"""Optimal-cut pruning of trailing selectors from discovered patterns."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .dataset import Dataset, Selector, TargetSpec, cover_mask
from .measures import SIGNIFICANCE, Confusion, PatternStats, orr, pattern_stats
from .search import TIE_TOL, Candidate, dedup, ig_threshold, make_candidate, with_prefix_stats


@dataclass(frozen=True)
class PrefixProfile:
    ig: tuple[float, ...]
    odds: tuple[float, ...]
    orr: tuple[int, ...]
    p: tuple[float, ...]

    def __post_init__(self):
        n = len(self.ig)
        if not (len(self.odds) == len(self.orr) == len(self.p) == n):
            raise ValueError("profile sequences differ in length")

    def __len__(self) -> int:
        return len(self.ig)

    @classmethod
    def from_stats(cls, stats: Sequence[PatternStats]) -> "PrefixProfile":
        return cls(tuple(s.ig for s in stats), tuple(s.odds for s in stats),
                   tuple(s.orr for s in stats), tuple(s.p_value for s in stats))

    @classmethod
    def from_odds(cls, ig, odds, p) -> "PrefixProfile":
        return cls(tuple(ig), tuple(odds), tuple(orr(x) for x in odds), tuple(p))


@dataclass(frozen=True)
class CutResult:
    kept_length: int
    pattern: tuple[Selector, ...]
    stats: PatternStats | None

    @property
    def discarded(self) -> bool:
        return self.kept_length == 0


def prefix_profile(d: Dataset, t: TargetSpec, p: Sequence[Selector]) -> PrefixProfile:
    if not p:
        raise ValueError("pattern must have at least one selector")
    pos = d.class_mask(t.column, t.positive_class)
    m = (1 << d.n_rows) - 1
    stats = []
    for s in p:
        m &= d.mask(s)
        stats.append(pattern_stats(Confusion.from_masks(m, pos, d.n_rows)))
    return PrefixProfile.from_stats(stats)


def cut_position(profile: PrefixProfile) -> int | None:
    """0-based position of the optimal cut selector, or None if nothing survives."""
    thr = ig_threshold(profile.ig)
    survivors = [j for j in range(len(profile))
                 if profile.ig[j] >= thr - TIE_TOL and profile.p[j] <= SIGNIFICANCE]
    if not survivors:
        return None
    best = 0
    for i in range(1, len(survivors)):
        cur, prev = profile.orr[survivors[i]], profile.orr[survivors[i - 1]]
        if cur > prev:
            best = i
        elif cur < prev or i != best + 1:
            break
    return survivors[best]


def optimal_cut(profile: PrefixProfile, p: Sequence[Selector], inclusive: bool = True,
                stats: Sequence[PatternStats] | None = None) -> CutResult:
    """Truncate ``p`` at its optimal cut.

    With ``inclusive`` the cut selector is kept; otherwise the prefix stops
    just before it. ``stats`` (per-prefix) fills in the result's stats.
    """
    if len(profile) != len(p):
        raise ValueError("profile does not match pattern length")
    pos = cut_position(profile)
    if pos is None:
        return CutResult(0, (), None)
    keep = pos + 1 if inclusive else pos
    if keep == 0:
        return CutResult(0, (), None)
    return CutResult(keep, tuple(p[:keep]), stats[keep - 1] if stats else None)


def refine_set(d: Dataset, t: TargetSpec | None, frontier: Sequence[Candidate],
               cond_list: Sequence[str] = (), inclusive: bool = True) -> list[Candidate]:
    """Cut every frontier candidate, drop discards and duplicates.

    ``t`` is only a consistency check; each candidate carries its own target.
    """
    cut = []
    for c in frontier:
        if t is not None and c.target != t:
            raise ValueError("candidate target differs from the pass target")
        if len(c.prefix_stats) != len(c.selectors):
            c = with_prefix_stats(d, c)
        res = optimal_cut(PrefixProfile.from_stats(c.prefix_stats), c.selectors, inclusive)
        if res.discarded:
            continue
        if not set(cond_list) <= {s.attribute for s in res.pattern}:
            continue
        short = make_candidate(d, c.target, res.pattern, cover_mask(d, res.pattern))
        short = Candidate(short.selectors, short.target, short.stats, short.mask,
                          c.prefix_stats[:res.kept_length])
        cut.append(short)
    return dedup(cut)
