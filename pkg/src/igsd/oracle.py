"""Brute-force reference for the search and cut pipeline.

Everything here is recomputed from the raw dataset cells with plain loops:
selector generation, row matching, every measure (p-values through
``scipy.stats.chi2``), the threshold filter and the cut scan. Only the
:class:`~igsd.dataset.Dataset` container is shared with the engine.
"""

from __future__ import annotations

import itertools
import math
import statistics
from dataclasses import dataclass, field
from typing import Callable

from scipy.stats import chi2

from .dataset import NOMINAL, Dataset, Op, Selector

GUARD = 10 ** 7
METRICS = ("cov", "cnf", "wracc", "ig", "odds", "orr", "p_value")


class GuardExceeded(RuntimeError):
    def __init__(self, estimate: int):
        super().__init__(f"exhaustive enumeration needs ~{estimate:.3g} combinations "
                         f"(guard {GUARD:.0e}); lower dmax or use a smaller dataset")
        self.estimate = estimate


@dataclass
class OracleReport:
    enumerated_count: int
    frontier_match: bool
    final_match: bool
    per_pattern_stat_deltas: dict = field(default_factory=dict)
    mismatches: list = field(default_factory=list)

    @property
    def max_delta(self) -> float:
        return max(self.per_pattern_stat_deltas.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.frontier_match and self.final_match and not self.mismatches and self.max_delta < 1e-9


# -- naive building blocks ---------------------------------------------------

def _quantile(sorted_xs, q):
    pos = q * (len(sorted_xs) - 1)
    lo = math.floor(pos)
    hi = min(lo + 1, len(sorted_xs) - 1)
    return sorted_xs[lo] + (sorted_xs[hi] - sorted_xs[lo]) * (pos - lo)


def naive_universe(d: Dataset, cuts: int) -> list[Selector]:
    sels = []
    for col in d.schema:
        if col.name == d.target_column:
            continue
        vals = [row[col.index] for row in d.rows if row[col.index] is not None]
        if len(set(vals)) < 2:
            continue
        if col.kind == NOMINAL:
            for v in sorted(set(vals)):
                sels.append(Selector(col.name, Op.EQ, v))
        else:
            xs = sorted(vals)
            points = sorted({_quantile(xs, k / cuts) for k in range(1, cuts)})
            sels += [Selector(col.name, Op.LE, c) for c in points]
            sels += [Selector(col.name, Op.GE, c) for c in points]
    return sels


def _holds(sel, row, index):
    v = row[index[sel.attribute]]
    if v is None:
        return False
    if sel.op is Op.EQ:
        return v == sel.value
    if sel.op is Op.LE:
        return v <= sel.value
    return v >= sel.value


def naive_stats(tp, fp, fn, tn):
    n = tp + fp + fn + tn
    covered = tp + fp
    pos = tp + fn

    def h(k, m):
        if m == 0 or k == 0 or k == m:
            return 0.0
        a = k / m
        return -(a * math.log(a) + (1 - a) * math.log(1 - a)) / math.log(2)

    ig = h(pos, n) - (covered / n) * h(tp, covered) - ((n - covered) / n) * h(fn, n - covered)
    ig = max(ig, 0.0)
    if fp * fn == 0:
        odds = 1.0 if tp * tn == 0 else math.inf
    else:
        odds = (tp * tn) / (fp * fn)
    if odds < 1.68:
        band = 1
    elif odds < 3.47:
        band = 2
    elif odds < 6.71:
        band = 3
    else:
        band = 4
    row1, row2, col1, col2 = tp + fp, fn + tn, tp + fn, fp + tn
    if 0 in (row1, row2, col1, col2):
        p = 1.0
    else:
        stat = 0.0
        for obs, r, c in ((tp, row1, col1), (fp, row1, col2), (fn, row2, col1), (tn, row2, col2)):
            exp = r * c / n
            stat += (obs - exp) ** 2 / exp
        p = float(chi2.sf(stat, 1))
    cnf = tp / covered
    return {
        "cov": covered / n,
        "cnf": cnf,
        "wracc": covered / n * (cnf - pos / n),
        "ig": ig,
        "odds": odds,
        "orr": band,
        "p_value": p,
        "counts": (tp, fp, fn, tn),
    }


def naive_threshold(values, mode):
    if mode == "maximum":
        return max(values)
    if len(values) == 1:
        return 0.0
    return statistics.stdev(values)


def naive_filter(items, mode):
    """``items`` are (payload, ig) pairs."""
    if not items:
        return []
    thr = naive_threshold([ig for _, ig in items], mode)
    return [it for it in items if it[1] >= thr - 1e-12]


def naive_cut(igs, orrs, ps):
    """Transcription of the cut scan; returns the 0-based cut position or None."""
    thr = naive_threshold(igs, "dynamic")
    cands = [k for k in range(len(igs)) if igs[k] >= thr - 1e-12]
    cands = [k for k in cands if ps[k] <= 0.05]
    if len(cands) == 0:
        return None
    if len(cands) == 1:
        return cands[0]
    optimal = 0
    for i in range(1, len(cands)):
        now, before = orrs[cands[i]], orrs[cands[i - 1]]
        if now > before:
            optimal = i
            continue
        if now < before:
            break
        if i - optimal != 1:
            break
    return cands[optimal]


# -- enumeration and replay ---------------------------------------------------

class _Table:
    """Row-by-row cover cache keyed by selector set."""

    def __init__(self, d: Dataset):
        self.d = d
        self.index = {c.name: c.index for c in d.schema}
        self.covers = {}
        self.cache = {}
        self.labels = [row[self.index[d.target_column]] for row in d.rows]

    def rows_of(self, sels) -> frozenset:
        key = frozenset(sels)
        got = self.covers.get(key)
        if got is None:
            got = frozenset(i for i, row in enumerate(self.d.rows)
                            if all(_holds(s, row, self.index) for s in key))
            self.covers[key] = got
        return got

    def stats(self, sels, positive: str):
        key = (tuple(sels), positive)
        got = self.cache.get(key)
        if got is None:
            rows = self.rows_of(sels)
            labels = self.labels
            tp = sum(1 for i in rows if labels[i] == positive)
            fp = len(rows) - tp
            fn = sum(1 for x in labels if x == positive) - tp
            got = naive_stats(tp, fp, fn, len(labels) - tp - fp - fn)
            self.cache[key] = got
        return got


def _check_guard(universe, dmax):
    estimate = len(universe) ** dmax
    if estimate > GUARD:
        raise GuardExceeded(estimate)


def enumerate_all(d: Dataset, positive: str, dmax: int, cuts: int = 9, table: _Table | None = None):
    """Every attribute-distinct, non-empty-cover selector combination up to ``dmax``.

    Returns a list of (selector tuple, stats dict) in canonical order: by
    length, then by position in the selector universe.
    """
    universe = naive_universe(d, cuts)
    _check_guard(universe, dmax)
    table = table or _Table(d)
    out = []
    for k in range(1, dmax + 1):
        for combo in itertools.combinations(universe, k):
            if len({s.attribute for s in combo}) < k:
                continue
            if not table.rows_of(combo):
                continue
            out.append((combo, table.stats(combo, positive)))
    return out


def _oracle_pass(table, universe, positive, cfg, inclusive=True):
    cond = set(cfg.cond_list)
    dmax = cfg.dmax

    def ok(attrs, length):
        return len(cond - set(attrs)) <= dmax - length

    level = [((s,), table.stats((s,), positive)["ig"]) for s in universe if table.rows_of((s,))]
    frontier = [seq for seq, _ in naive_filter(level, cfg.t_mode) if ok({s.attribute for s in seq}, 1)]
    for length in range(2, dmax + 1):
        if not frontier:
            break
        merged, seen = [], set()
        for parent in frontier:
            have = {s.attribute for s in parent}
            kids = []
            for s in universe:
                if s.attribute in have or not ok(have | {s.attribute}, length):
                    continue
                seq = parent + (s,)
                if table.rows_of(seq):
                    kids.append((seq, table.stats(seq, positive)["ig"]))
            for seq, _ in naive_filter(kids, cfg.t_mode):
                if frozenset(seq) not in seen:
                    seen.add(frozenset(seq))
                    merged.append(seq)
        frontier = merged
    frontier = [seq for seq in frontier if cond <= {s.attribute for s in seq}]

    final, seen = [], set()
    for seq in frontier:
        prof = [table.stats(seq[:j + 1], positive) for j in range(len(seq))]
        pos = naive_cut([x["ig"] for x in prof], [x["orr"] for x in prof], [x["p_value"] for x in prof])
        if pos is None:
            continue
        short = seq[:pos + 1] if inclusive else seq[:pos]
        if not short or not cond <= {s.attribute for s in short} or frozenset(short) in seen:
            continue
        seen.add(frozenset(short))
        final.append(short)
    return frontier, final


def _delta(a, b):
    if math.isinf(a) or math.isinf(b):
        return 0.0 if a == b else math.inf
    return abs(a - b)


def replay(d: Dataset, cfg, engine: Callable | None = None, inclusive: bool = True) -> OracleReport:
    """Re-run the pipeline naively and diff it against ``engine(d, cfg)``.

    ``engine`` defaults to :func:`igsd.pipeline.run`; tests pass a broken one
    to check that divergences are caught. ``inclusive`` selects the cut
    convention the oracle expects.
    """
    from .pipeline import run

    engine = engine or run
    cfg = cfg.resolved(d)
    universe = naive_universe(d, cfg.cuts_per_column)
    _check_guard(universe, cfg.dmax)
    table = _Table(d)
    result = engine(d, cfg)

    labels = [row[d.column_schema(d.target_column).index] for row in d.rows]
    classes = list(dict.fromkeys(labels))
    report = OracleReport(0, True, True, {m: 0.0 for m in METRICS})
    engine_classes = [p.target.positive_class for p in result.passes]
    if engine_classes != classes:
        report.mismatches.append(f"pass order: engine {engine_classes} vs oracle {classes}")
        report.frontier_match = report.final_match = False
        return report
    if result.truncated:
        report.mismatches.append("engine run was truncated by the time budget")

    known = set()
    for positive, epass in zip(classes, result.passes):
        combos = enumerate_all(d, positive, cfg.dmax, cfg.cuts_per_column, table)
        report.enumerated_count += len(combos)
        known.update(frozenset(seq) for seq, _ in combos)
        o_front, o_final = _oracle_pass(table, universe, positive, cfg, inclusive)
        e_front = [c.selectors for c in epass.frontier]
        e_final = [c.selectors for c in epass.patterns]
        if e_front != o_front:
            report.frontier_match = False
            report.mismatches.extend(_diff_lists(positive, "frontier", e_front, o_front))
        if e_final != o_final:
            report.final_match = False
            report.mismatches.extend(_diff_lists(positive, "final", e_final, o_final))
        for c in list(epass.frontier) + list(epass.patterns):
            if frozenset(c.selectors) not in known:
                report.mismatches.append(f"[{positive}] engine pattern outside enumeration: {_fmt(c.selectors)}")
                continue
            ref = table.stats(c.selectors, positive)
            for m in METRICS:
                dv = _delta(float(getattr(c.stats, m)), float(ref[m]))
                report.per_pattern_stat_deltas[m] = max(report.per_pattern_stat_deltas[m], dv)
            for j, ps in enumerate(c.prefix_stats):
                ref = table.stats(c.selectors[:j + 1], positive)
                for m in METRICS:
                    dv = _delta(float(getattr(ps, m)), float(ref[m]))
                    report.per_pattern_stat_deltas[m] = max(report.per_pattern_stat_deltas[m], dv)
    return report


def _fmt(seq):
    return " & ".join(str(s) for s in seq)


def _diff_lists(cls, what, engine, oracle):
    out = []
    e_set, o_set = set(engine), set(oracle)
    for seq in engine:
        if seq not in o_set:
            out.append(f"[{cls}] {what}: engine-only {_fmt(seq)} (length {len(seq)})")
    for seq in oracle:
        if seq not in e_set:
            out.append(f"[{cls}] {what}: oracle-only {_fmt(seq)} (length {len(seq)})")
    if not out:
        out.append(f"[{cls}] {what}: same patterns, different order")
    return out
