"""Pattern documents: canonical JSON carrying discovered pattern sets.

Documents are written key-sorted, UTF-8, newline-terminated, so that
write -> read -> write is byte-identical. Non-finite odds ratios are
stored as the string ``"inf"``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

from .dataset import NOMINAL, DataError, Dataset, Op, Selector, TargetSpec, check_selector, format_value
from .measures import PatternStats, SetStats, evaluate, set_stats
from .pipeline import RunResult
from .search import Candidate

FORMAT_VERSION = 1


def _num(x: float):
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def stats_to_dict(s: PatternStats) -> dict:
    c = s.confusion
    return {
        "cov": s.cov, "cnf": s.cnf, "wracc": s.wracc, "acc_contrib": s.acc_contrib,
        "ig": s.ig, "odds": _num(s.odds), "orr": s.orr, "p_value": s.p_value,
        "tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn,
    }


def selector_to_dict(s: Selector) -> dict:
    return {"attribute": s.attribute, "op": s.op.value, "value": s.value}


def selector_from_dict(raw: dict, d: Dataset | None = None) -> Selector:
    try:
        op = Op(raw["op"])
        attribute = str(raw["attribute"])
        value = raw["value"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed selector {raw!r}") from exc
    if op is Op.EQ:
        if d is not None and d.column_schema(attribute).kind != NOMINAL:
            raise DataError(f"'==' selector on numeric column {attribute!r}")
        value = value if isinstance(value, str) else format_value(float(value))
    else:
        try:
            value = float(value)
        except (TypeError, ValueError) as exc:
            raise DataError(f"non-numeric threshold in {raw!r}") from exc
    s = Selector(attribute, op, value)
    if d is not None:
        check_selector(d, s)
    return s


def set_stats_to_dict(s: SetStats) -> dict:
    return asdict(s)


def pattern_triples(cands: Sequence[Candidate]):
    return [(c.selectors, c.target, c.stats) for c in cands]


def set_stats_block(d: Dataset, triples) -> dict:
    """Overall and per-class set statistics for (selectors, target, stats) triples."""
    per_class = {}
    for cls in dict.fromkeys(d.column(d.target_column)):
        subset = [x for x in triples if x[1].positive_class == cls]
        per_class[cls] = set_stats_to_dict(set_stats(d, subset))
    return {"overall": set_stats_to_dict(set_stats(d, triples)), "per_class": per_class}


def build_document(d: Dataset, result: RunResult, target_columns: Sequence[str], bins: int,
                   inclusive: bool = True) -> dict:
    cfg = result.config
    patterns = []
    for c in result.patterns:
        prefix = c.prefix_stats
        patterns.append({
            "target": c.target.positive_class,
            "selectors": [selector_to_dict(s) for s in c.selectors],
            "profile": {
                "ig": [s.ig for s in prefix],
                "odds": [_num(s.odds) for s in prefix],
                "orr": [s.orr for s in prefix],
                "p": [s.p_value for s in prefix],
            },
            "stats": stats_to_dict(c.stats),
        })
    return {
        "format_version": FORMAT_VERSION,
        "dataset": {"n_rows": d.n_rows, "columns": d.column_names, "content_hash": d.fingerprint()},
        "config": {
            "t_mode": cfg.t_mode, "dmax": cfg.dmax, "cond_list": list(cfg.cond_list),
            "time_budget": cfg.time_budget, "cuts_per_column": cfg.cuts_per_column,
            "target_columns": list(target_columns), "bins": bins, "inclusive_cut": inclusive,
        },
        "truncated": result.truncated,
        "passes": [{"target": p.target.positive_class, "depth": p.depth, "truncated": p.truncated,
                    "frontier_size": len(p.frontier)} for p in result.passes],
        "patterns": patterns,
        "set_stats": set_stats_block(d, pattern_triples(result.patterns)),
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_document(doc: dict, path) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


def read_document(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read pattern document {path}: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("patterns"), list):
        raise DataError(f"{path}: not a pattern document (missing 'patterns' list)")
    return doc


def document_target(doc: dict) -> tuple[list[str] | None, int | None]:
    cfg = doc.get("config") or {}
    return cfg.get("target_columns"), cfg.get("bins")


def evaluate_document(doc: dict, d: Dataset):
    """Recompute every pattern of ``doc`` against the resolved dataset ``d``.

    Returns the (selectors, target, stats) triples; stored stats are ignored.
    """
    classes = set(d.column(d.target_column))
    triples = []
    for i, raw in enumerate(doc["patterns"]):
        try:
            cls = raw["target"]
            sels = tuple(selector_from_dict(s, d) for s in raw["selectors"])
        except (KeyError, TypeError) as exc:
            raise DataError(f"pattern {i}: malformed entry") from exc
        if cls not in classes:
            raise DataError(f"pattern {i}: target class {cls!r} not present in the data")
        if not sels:
            raise DataError(f"pattern {i}: no selectors")
        t = TargetSpec(d.target_column, cls)
        try:
            triples.append((sels, t, evaluate(d, t, sels)))
        except ValueError as exc:
            raise DataError(f"pattern {i}: {exc}") from exc
    return triples

