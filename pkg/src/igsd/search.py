"""Information-gain thresholded expansion of overlapping subgroup candidates."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

from .dataset import DataError, Dataset, Selector, TargetSpec, ovr_passes, selector_universe
from .measures import Confusion, PatternStats, pattern_stats

log = logging.getLogger(__name__)

T_MODES = ("maximum", "dynamic")
TIE_TOL = 1e-12


@dataclass(frozen=True)
class SearchConfig:
    t_mode: str = "dynamic"
    dmax: int | None = None
    cond_list: tuple[str, ...] = ()
    time_budget: float = 3600.0
    cuts_per_column: int = 9

    def resolved(self, d: Dataset) -> "SearchConfig":
        """Fill the default depth and validate against ``d``."""
        if self.t_mode not in T_MODES:
            raise ValueError(f"t_mode must be one of {T_MODES}, got {self.t_mode!r}")
        dmax = len(d.attributes) if self.dmax is None else self.dmax
        if dmax < 1:
            raise ValueError("dmax must be >= 1")
        cond = tuple(dict.fromkeys(self.cond_list))
        if len(cond) > dmax:
            raise ValueError("more Cond_list attributes than dmax allows")
        for a in cond:
            d.column_schema(a)
            if a == d.target_column:
                raise DataError(f"Cond_list attribute {a!r} is the target")
        if self.cuts_per_column < 1:
            raise ValueError("cuts_per_column must be >= 1")
        if self.time_budget <= 0:
            raise ValueError("time_budget must be positive")
        return replace(self, dmax=dmax, cond_list=cond)


@dataclass(frozen=True)
class Candidate:
    selectors: tuple[Selector, ...]
    target: TargetSpec
    stats: PatternStats
    mask: int = field(repr=False, compare=False)
    prefix_stats: tuple[PatternStats, ...] = ()

    @property
    def ig(self) -> float:
        return self.stats.ig

    @property
    def attributes(self) -> frozenset[str]:
        return frozenset(s.attribute for s in self.selectors)

    def key(self) -> tuple:
        return self.target.positive_class, frozenset(self.selectors)


@dataclass
class PassResult:
    target: TargetSpec
    frontier: list[Candidate]
    depth: int
    truncated: bool = False


@dataclass
class Discovery:
    passes: list[PassResult]
    config: SearchConfig
    truncated: bool = False


def ig_threshold(ig_values: Sequence[float]) -> float:
    """Sample standard deviation of the IG values (0 for a single value)."""
    n = len(ig_values)
    if n == 0:
        raise ValueError("need at least one value")
    if n == 1 or min(ig_values) == max(ig_values):
        return 0.0
    mean = math.fsum(ig_values) / n
    return math.sqrt(math.fsum((x - mean) ** 2 for x in ig_values) / (n - 1))


def filter_by_threshold(cands: Sequence, t_mode: str, key: Callable = lambda c: c.ig) -> list:
    """Keep the candidates whose IG passes the ``t_mode`` threshold, in input order."""
    if not cands:
        return []
    igs = [key(c) for c in cands]
    if t_mode == "maximum":
        cut = max(igs)
    elif t_mode == "dynamic":
        cut = ig_threshold(igs)
    else:
        raise ValueError(f"unknown t_mode {t_mode!r}")
    return [c for c, x in zip(cands, igs) if x >= cut - TIE_TOL]


def _feasible(attrs: Iterable[str], length: int, cfg: SearchConfig) -> bool:
    missing = len(set(cfg.cond_list) - set(attrs))
    return missing <= cfg.dmax - length


def make_candidate(d: Dataset, t: TargetSpec, selectors: tuple, mask: int) -> Candidate:
    c = Confusion.from_masks(mask, d.class_mask(t.column, t.positive_class), d.n_rows)
    return Candidate(selectors, t, pattern_stats(c), mask)


def expand(parent: Candidate, universe: Sequence[Selector], cfg: SearchConfig, d: Dataset) -> list[Candidate]:
    """Children of ``parent`` (one extra selector each) that pass the threshold."""
    length = len(parent.selectors) + 1
    if length > cfg.dmax:
        return []
    used = parent.attributes
    children = []
    for s in universe:
        if s.attribute in used:
            continue
        if not _feasible(used | {s.attribute}, length, cfg):
            continue
        m = parent.mask & d.mask(s)
        if not m:
            continue
        children.append(make_candidate(d, parent.target, parent.selectors + (s,), m))
    return filter_by_threshold(children, cfg.t_mode)


def dedup(cands: Iterable[Candidate]) -> list[Candidate]:
    """Collapse candidates with the same target and selector set.

    The representative is the highest-IG one (first on ties) and sits at the
    position of the first occurrence.
    """
    slot: dict = {}
    out: list[Candidate] = []
    for c in cands:
        k = c.key()
        if k not in slot:
            slot[k] = len(out)
            out.append(c)
        elif c.ig > out[slot[k]].ig:
            out[slot[k]] = c
    return out


def with_prefix_stats(d: Dataset, c: Candidate) -> Candidate:
    pos = d.class_mask(c.target.column, c.target.positive_class)
    m = (1 << d.n_rows) - 1
    prefix = []
    for s in c.selectors:
        m &= d.mask(s)
        prefix.append(pattern_stats(Confusion.from_masks(m, pos, d.n_rows)))
    return replace(c, prefix_stats=tuple(prefix))


def search_pass(d: Dataset, t: TargetSpec, cfg: SearchConfig, universe: Sequence[Selector],
                deadline: float = math.inf, clock: Callable[[], float] = time.monotonic) -> PassResult:
    """Run the depth loop for one One-vs-Rest pass. ``cfg`` must be resolved."""
    level1 = []
    for s in universe:
        m = d.mask(s)
        if m:
            level1.append(make_candidate(d, t, (s,), m))
    frontier = [c for c in filter_by_threshold(level1, cfg.t_mode) if _feasible(c.attributes, 1, cfg)]
    depth = 1
    truncated = False
    for depth_i in range(2, cfg.dmax + 1):
        if not frontier:
            break
        nxt = []
        for parent in frontier:
            if clock() > deadline:
                truncated = True
                break
            nxt.extend(expand(parent, universe, cfg, d))
        if truncated:
            break
        frontier = dedup(nxt)
        depth = depth_i
        log.debug("pass %s depth %d: %d candidates", t.positive_class, depth, len(frontier))
    cond = set(cfg.cond_list)
    frontier = [with_prefix_stats(d, c) for c in frontier if cond <= c.attributes]
    return PassResult(t, frontier, depth, truncated)


def discover(d: Dataset, cfg: SearchConfig, clock: Callable[[], float] = time.monotonic) -> Discovery:
    """Search every One-vs-Rest pass of ``d`` under one shared time budget."""
    cfg = cfg.resolved(d)
    universe = selector_universe(d, cfg.cuts_per_column)
    deadline = clock() + cfg.time_budget
    passes = [search_pass(d, t, cfg, universe, deadline, clock) for t in ovr_passes(d)]
    truncated = any(p.truncated for p in passes)
    if truncated:
        log.warning("time budget of %.0f s exhausted; results are truncated", cfg.time_budget)
    return Discovery(passes, cfg, truncated)
