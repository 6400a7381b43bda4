"""Command-line interface: ``igsd discover|evaluate|agree|oracle``.

Exit codes: 0 ok, 1 usage error, 2 data error, 3 oracle mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from . import document as docmod
from .dataset import DataError, load_csv, read_schema_hints, resolve_target
from .measures import ACCEPT, REJECT, UndefinedMeasureError, ac1, icc, set_stats
from .oracle import GuardExceeded, replay
from .pipeline import run
from .search import T_MODES, SearchConfig

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_MISMATCH = 0, 1, 2, 3

log = logging.getLogger("igsd")

METRIC_COLUMNS = [
    ("size", "size"), ("length", "length"), ("coverage", "cov_mean"), ("wracc", "wracc_mean"),
    ("confidence", "cnf_mean"), ("accuracy", "accuracy"), ("info_gained", "ig_mean"),
    ("odd-range", "orr_mean"), ("p-value", "p_value_agg"),
]
LOWER_IS_BETTER = {"p-value"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _add_search_flags(p):
    p.add_argument("--data", required=True, help="input CSV (header row, comma-separated)")
    p.add_argument("--target", action="append", required=True,
                   help="target column; repeat for a multi-target conjunction")
    p.add_argument("--schema", help="optional column=nominal|numeric hints file")
    p.add_argument("--t-mode", choices=T_MODES, default="dynamic")
    p.add_argument("--dmax", type=_positive_int, help="maximum depth (default: number of attributes)")
    p.add_argument("--cond", default="", help="comma-separated attributes every pattern must contain")
    p.add_argument("--time-budget", type=_positive_float, default=3600.0, help="seconds (default 3600)")
    p.add_argument("--bins", type=_positive_int, default=2, help="bins for a numeric target (default 2)")
    p.add_argument("--cuts", type=_positive_int, default=9, help="quantile bins per numeric column (default 9)")
    p.add_argument("--exclusive-cut", action="store_true",
                   help="drop the cut selector itself (compatibility mode)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="igsd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("discover", help="discover subgroups and write a pattern document")
    _add_search_flags(p)
    p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("evaluate", help="recompute set metrics for pattern documents")
    p.add_argument("--data", required=True)
    p.add_argument("--patterns", nargs="+", required=True)
    p.add_argument("--target", action="append", help="override the document's target columns")
    p.add_argument("--bins", type=_positive_int, help="override the document's numeric-target bins")
    p.add_argument("--schema")
    p.add_argument("--format", choices=("csv", "md", "json"), default="csv")
    p.add_argument("--out")

    p = sub.add_parser("agree", help="inter-rater agreement (AC1, ICC)")
    p.add_argument("--ratings", required=True, help="CSV with header item,rater,rating")

    p = sub.add_parser("oracle", help="check the engine against exhaustive enumeration")
    _add_search_flags(p)
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load(args, targets, bins):
    hints = read_schema_hints(args.schema) if args.schema else None
    return resolve_target(load_csv(args.data, hints), targets, bins)


def _config(args) -> SearchConfig:
    cond = tuple(a.strip() for a in args.cond.split(",") if a.strip())
    return SearchConfig(t_mode=args.t_mode, dmax=args.dmax, cond_list=cond,
                        time_budget=args.time_budget, cuts_per_column=args.cuts)


def cmd_discover(args) -> int:
    d = _load(args, args.target, args.bins)
    try:
        cfg = _config(args).resolved(d)
    except ValueError as exc:
        if isinstance(exc, DataError):
            raise
        raise UsageError(str(exc)) from exc
    inclusive = not args.exclusive_cut
    result = run(d, cfg, inclusive=inclusive)
    doc = docmod.build_document(d, result, args.target, args.bins, inclusive)
    _emit(docmod.dumps(doc), args.out)
    overall = doc["set_stats"]["overall"]
    log.info("%d patterns, mean length %s%s", overall["size"], overall["length"],
             " (truncated by time budget)" if result.truncated else "")
    return EXIT_OK


def _fmt_metric(name, v) -> str:
    if v is None:
        return "-"
    if name == "size":
        return str(v)
    if name == "p-value" and v < 1e-3:
        return f"{v:.2E}"
    return f"{v:.4g}"


def evaluate_rows(data_path, pattern_paths, targets=None, bins=None, schema=None) -> list[dict]:
    hints = read_schema_hints(schema) if schema else None
    raw = load_csv(data_path, hints)
    rows = []
    for path in pattern_paths:
        doc = docmod.read_document(path)
        doc_targets, doc_bins = docmod.document_target(doc)
        t_cols = targets or doc_targets
        if not t_cols:
            raise DataError(f"{path}: document names no target; pass --target")
        d = resolve_target(raw, t_cols, bins or doc_bins or 2)
        fp = doc.get("dataset") or {}
        if fp.get("columns") is not None and fp["columns"] != d.column_names:
            raise DataError(f"{path}: columns {fp['columns']} do not match the data {d.column_names}")
        if fp.get("n_rows") is not None and fp["n_rows"] != d.n_rows:
            raise DataError(f"{path}: document has {fp['n_rows']} rows, data has {d.n_rows}")
        if fp.get("content_hash") and fp["content_hash"] != d.fingerprint():
            log.warning("%s: content hash differs from the data", path)
        s = set_stats(d, docmod.evaluate_document(doc, d))
        row = {"document": doc.get("label") or Path(path).name}
        for name, attr in METRIC_COLUMNS:
            row[name] = getattr(s, attr)
        rows.append(row)
    return rows


def _annotate(rows) -> list[str]:
    notes = [[] for _ in rows]
    if len(rows) < 2:
        return ["" for _ in rows]
    for name, _ in METRIC_COLUMNS:
        vals = [(r[name], i) for i, r in enumerate(rows) if r[name] is not None]
        if len({v for v, _ in vals}) < 2:
            continue
        sign = -1 if name in LOWER_IS_BETTER else 1
        best = max(sign * v for v, _ in vals)
        worst = min(sign * v for v, _ in vals)
        for v, i in vals:
            if sign * v == best:
                notes[i].append(f"best {name}")
            elif sign * v == worst:
                notes[i].append(f"worst {name}")
    return ["; ".join(n) for n in notes]


def render_rows(rows, fmt) -> str:
    names = ["document"] + [n for n, _ in METRIC_COLUMNS]
    if fmt == "json":
        return json.dumps(rows, sort_keys=True, indent=2, allow_nan=False) + "\n"
    cells = [[r["document"]] + [_fmt_metric(n, r[n]) for n, _ in METRIC_COLUMNS] for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(names)
        w.writerows(cells)
        return buf.getvalue()
    notes = _annotate(rows)
    lines = ["| " + " | ".join(names + ["notes"]) + " |",
             "|" + "|".join(["---"] * (len(names) + 1)) + "|"]
    for c, n in zip(cells, notes):
        lines.append("| " + " | ".join(c + [n]) + " |")
    return "\n".join(lines) + "\n"


def cmd_evaluate(args) -> int:
    rows = evaluate_rows(args.data, args.patterns, args.target, args.bins, args.schema)
    _emit(render_rows(rows, args.format), args.out)
    return EXIT_OK


def read_ratings(path) -> dict[str, dict[str, str]]:
    """rater -> {item: rating} from an ``item,rater,rating`` CSV."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["item", "rater", "rating"]:
                raise DataError(f"{path}: header must be item,rater,rating")
            out: dict[str, dict[str, str]] = {}
            for n, row in enumerate(reader, 2):
                item, rater, rating = (row[k].strip() for k in ("item", "rater", "rating"))
                if item in out.setdefault(rater, {}):
                    raise DataError(f"{path}:{n}: rater {rater!r} rated item {item!r} twice")
                out[rater][item] = rating
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not out:
        raise DataError(f"{path}: no ratings")
    return out


def agreement(ratings: dict[str, dict[str, str]]) -> dict:
    raters = list(ratings)
    items = list(dict.fromkeys(i for r in raters for i in ratings[r]))
    values = {v for r in raters for v in ratings[r].values()}
    binary = values <= {ACCEPT, REJECT}
    result = {"N": len(items), "R": len(raters), "AC1": None, "ICC": None}
    if binary:
        result["AC1"] = ac1(ratings)
        code = {ACCEPT: 1.0, REJECT: 0.0}
    else:
        try:
            code = {v: float(int(v)) for v in values}
        except ValueError:
            raise DataError("ratings must be accept/reject or integer codes") from None
    if any(len(ratings[r]) != len(items) for r in raters):
        raise DataError("ICC needs every rater to rate every item")
    matrix = [[code[ratings[r][i]] for r in raters] for i in items]
    result["ICC"] = icc(matrix)
    return result


def cmd_agree(args) -> int:
    res = agreement(read_ratings(args.ratings))
    ac1_text = "n/a (ratings are not accept/reject)" if res["AC1"] is None else f"{res['AC1']:.6f}"
    sys.stdout.write(f"AC1 {ac1_text}\nICC {res['ICC']:.6f}\nN {res['N']}\nR {res['R']}\n")
    return EXIT_OK


def render_report(rep) -> str:
    lines = [
        f"enumerated combinations: {rep.enumerated_count}",
        f"frontier match: {rep.frontier_match}",
        f"final set match: {rep.final_match}",
        "max metric deltas: " + ", ".join(f"{k}={v:.3g}" for k, v in rep.per_pattern_stat_deltas.items()),
    ]
    lines += [f"  mismatch: {m}" for m in rep.mismatches]
    lines.append("PASS" if rep.passed else "FAIL")
    return "\n".join(lines) + "\n"


def cmd_oracle(args) -> int:
    d = _load(args, args.target, args.bins)
    try:
        cfg = _config(args).resolved(d)
    except ValueError as exc:
        if isinstance(exc, DataError):
            raise
        raise UsageError(str(exc)) from exc
    inclusive = not args.exclusive_cut
    try:
        rep = replay(d, cfg, engine=lambda dd, cc: run(dd, cc, inclusive=inclusive), inclusive=inclusive)
    except GuardExceeded as exc:
        sys.stderr.write(f"igsd oracle: refused: {exc}\n")
        return EXIT_DATA
    sys.stdout.write(render_report(rep))
    return EXIT_OK if rep.passed else EXIT_MISMATCH


COMMANDS = {"discover": cmd_discover, "evaluate": cmd_evaluate, "agree": cmd_agree, "oracle": cmd_oracle}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"igsd {args.command}: {exc}\n")
        return EXIT_USAGE
    except (DataError, UndefinedMeasureError, ValueError) as exc:
        sys.stderr.write(f"igsd {args.command}: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
