"""Tabular data loading, target resolution and selector generation.

A :class:`Dataset` is an immutable, typed table. Columns are either nominal
(exact string match) or numeric (finite reals). Missing cells are stored as
``None`` and never match any selector.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

NOMINAL = "nominal"
NUMERIC = "numeric"
MISSING_MARKERS = frozenset({"", "?"})


class DataError(ValueError):
    """Raised for unreadable, malformed or degenerate input data."""


class Op(str, enum.Enum):
    EQ = "=="
    LE = "<="
    GE = ">="

    @property
    def rank(self) -> int:
        return _OP_RANK[self]


_OP_RANK = {Op.EQ: 0, Op.LE: 1, Op.GE: 2}


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str
    index: int


@dataclass(frozen=True, order=False)
class Selector:
    """One ``attribute op value`` test."""

    attribute: str
    op: Op
    value: object

    def __str__(self) -> str:
        return f"{self.attribute}{self.op.value}{format_value(self.value)}"


@dataclass(frozen=True)
class TargetSpec:
    column: str
    positive_class: str
    source_columns: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class Dataset:
    schema: tuple[ColumnSchema, ...]
    rows: tuple[tuple, ...]
    target_column: str | None = None
    _by_name: dict = field(default=None, init=False, repr=False)
    _columns: dict = field(default=None, init=False, repr=False)
    _masks: dict = field(default=None, init=False, repr=False)

    def __post_init__(self):
        names = [c.name for c in self.schema]
        if len(set(names)) != len(names):
            raise DataError("duplicate column names")
        if not self.rows:
            raise DataError("empty table")
        width = len(self.schema)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise DataError(f"row {i} has {len(row)} cells, expected {width}")
        object.__setattr__(self, "_by_name", {c.name: c for c in self.schema})
        cols = {c.name: tuple(r[c.index] for r in self.rows) for c in self.schema}
        object.__setattr__(self, "_columns", cols)
        object.__setattr__(self, "_masks", {})

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.schema]

    @property
    def attributes(self) -> list[ColumnSchema]:
        """Non-target columns in schema order."""
        return [c for c in self.schema if c.name != self.target_column]

    def column_schema(self, name: str) -> ColumnSchema:
        try:
            return self._by_name[name]
        except KeyError:
            raise DataError(f"unknown column {name!r}") from None

    def column(self, name: str) -> tuple:
        self.column_schema(name)
        return self._columns[name]

    def record(self, i: int) -> dict:
        return {c.name: self.rows[i][c.index] for c in self.schema}

    def mask(self, s: Selector) -> int:
        """Bitset (bit i = row i) of the rows matched by ``s``. Cached."""
        m = self._masks.get(s)
        if m is None:
            m = 0
            for i, v in enumerate(self.column(s.attribute)):
                if _match_value(s.op, s.value, v):
                    m |= 1 << i
            self._masks[s] = m
        return m

    def class_mask(self, column: str, value: str) -> int:
        key = ("__class__", column, value)
        m = self._masks.get(key)
        if m is None:
            m = 0
            for i, v in enumerate(self.column(column)):
                if v == value:
                    m |= 1 << i
            self._masks[key] = m
        return m

    def fingerprint(self) -> str:
        """SHA-256 over a canonical serialization of schema and cells."""
        h = hashlib.sha256()
        for c in self.schema:
            h.update(f"{c.name}\x1f{c.kind}\x1e".encode())
        for row in self.rows:
            h.update("\x1f".join("\x00" if v is None else format_value(v) for v in row).encode())
            h.update(b"\x1e")
        return h.hexdigest()


def format_value(v) -> str:
    if isinstance(v, float):
        if v.is_integer() and abs(v) < 1e16:
            return str(int(v))
        return repr(v)
    return str(v)


def _parse_float(text: str):
    try:
        x = float(text)
    except ValueError:
        return None
    return x if math.isfinite(x) else None


def _match_value(op: Op, value, cell) -> bool:
    if cell is None:
        return False
    if op is Op.EQ:
        return cell == value
    if op is Op.LE:
        return cell <= value
    return cell >= value


def read_schema_hints(path) -> dict[str, str]:
    """Parse a hints file of ``column=nominal|numeric`` lines."""
    hints = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read schema hints {path}: {exc}") from exc
    for n, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, sep, kind = line.partition("=")
        kind = kind.strip()
        if not sep or kind not in (NOMINAL, NUMERIC):
            raise DataError(f"{path}:{n}: expected 'column=nominal|numeric'")
        hints[name.strip()] = kind
    return hints


def build_dataset(header: Sequence[str], cells: Sequence[Sequence[str]],
                  schema_hints: Mapping[str, str] | None = None) -> Dataset:
    """Type raw string cells into a :class:`Dataset`."""
    schema_hints = dict(schema_hints or {})
    header = [h.strip() for h in header]
    if not cells:
        raise DataError("empty table")
    for i, row in enumerate(cells):
        if len(row) != len(header):
            raise DataError(f"ragged row {i + 1}: {len(row)} cells, header has {len(header)}")
    unknown = set(schema_hints) - set(header)
    if unknown:
        raise DataError(f"schema hints name unknown columns: {sorted(unknown)}")

    schema, typed_cols = [], []
    for j, name in enumerate(header):
        raw = [row[j].strip() for row in cells]
        present = [x for x in raw if x not in MISSING_MARKERS]
        kind = schema_hints.get(name)
        if kind is None:
            kind = NUMERIC if present and all(_parse_float(x) is not None for x in present) else NOMINAL
        if kind == NUMERIC:
            col = []
            for i, x in enumerate(raw):
                if x in MISSING_MARKERS:
                    col.append(None)
                    continue
                v = _parse_float(x)
                if v is None:
                    raise DataError(f"column {name!r} row {i + 1}: {x!r} is not a finite number")
                col.append(v)
        else:
            col = [None if x in MISSING_MARKERS else x for x in raw]
        schema.append(ColumnSchema(name, kind, j))
        typed_cols.append(col)
    rows = tuple(zip(*typed_cols))
    return Dataset(tuple(schema), rows)


def load_csv(path, schema_hints: Mapping[str, str] | None = None) -> Dataset:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            table = [r for r in csv.reader(fh) if r]
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not table:
        raise DataError(f"{path}: no header row")
    return build_dataset(table[0], table[1:], schema_hints)


def _with_columns(d: Dataset, drop: Iterable[str], new_name: str, new_values: list,
                  position: int) -> Dataset:
    drop = set(drop)
    keep = [c for c in d.schema if c.name not in drop]
    names = [c.name for c in keep]
    names.insert(position, new_name)
    cols = [d.column(c.name) for c in keep]
    cols.insert(position, tuple(new_values))
    kinds = [c.kind for c in keep]
    kinds.insert(position, NOMINAL)
    schema = tuple(ColumnSchema(n, k, i) for i, (n, k) in enumerate(zip(names, kinds)))
    return Dataset(schema, tuple(zip(*cols)), target_column=new_name)


def equal_frequency_edges(values: Sequence[float], bins: int) -> list[float]:
    """Upper bin edges at the k/bins order statistics (lower rule), deduplicated."""
    xs = np.sort(np.asarray(values, dtype=float))
    edges = []
    for k in range(1, bins):
        e = float(np.quantile(xs, k / bins, method="lower"))
        if e < xs[-1] and (not edges or e > edges[-1]):
            edges.append(e)
    return edges


def bin_labels(lo: float, edges: Sequence[float], hi: float) -> list[str]:
    bounds = [lo, *edges, hi]
    labels = []
    for k in range(len(bounds) - 1):
        left = "[" if k == 0 else "("
        labels.append(f"{left}{format_value(bounds[k])},{format_value(bounds[k + 1])}]")
    return labels


def resolve_target(d: Dataset, target_columns: Sequence[str], bins: int = 2) -> Dataset:
    """Return a copy of ``d`` whose ``target_column`` is a single nominal column.

    One nominal column is used as-is; one numeric column is equal-frequency
    binned into ``bins`` labelled intervals; several columns are joined into
    one conjunction class ``"a=x&b=y"``.
    """
    target_columns = list(target_columns)
    if not target_columns:
        raise DataError("no target column given")
    if len(set(target_columns)) != len(target_columns):
        raise DataError("target columns repeated")
    if bins < 1:
        raise DataError("bins must be positive")
    cols = [d.column_schema(name) for name in target_columns]
    for c in cols:
        if any(v is None for v in d.column(c.name)):
            raise DataError(f"target column {c.name!r} has missing values")

    if len(cols) == 1 and cols[0].kind == NOMINAL:
        out = Dataset(d.schema, d.rows, target_column=cols[0].name)
    elif len(cols) == 1:
        c = cols[0]
        values = d.column(c.name)
        edges = equal_frequency_edges(values, bins)
        labels = bin_labels(min(values), edges, max(values))
        binned = [labels[int(np.searchsorted(edges, v, side="left"))] for v in values]
        out = _with_columns(d, [c.name], c.name, binned, c.index)
    else:
        parts = [d.column(c.name) for c in cols]
        joined = ["&".join(f"{c.name}={format_value(v)}" for c, v in zip(cols, vals))
                  for vals in zip(*parts)]
        name = "&".join(target_columns)
        if name in d.column_names and name not in target_columns:
            raise DataError(f"combined target name {name!r} clashes with an existing column")
        out = _with_columns(d, target_columns, name, joined, min(c.index for c in cols))

    if len(set(out.column(out.target_column))) < 2:
        raise DataError(f"target {out.target_column!r} is constant (single class)")
    return out


def ovr_passes(d: Dataset) -> list[TargetSpec]:
    """One One-vs-Rest pass per target class, in order of first appearance."""
    if d.target_column is None:
        raise DataError("target not resolved")
    sources = tuple(d.target_column.split("&")) if "&" in d.target_column else (d.target_column,)
    seen = dict.fromkeys(d.column(d.target_column))
    return [TargetSpec(d.target_column, cls, sources) for cls in seen]


def numeric_cut_points(values: Sequence[float], cuts_per_column: int) -> list[float]:
    """Linear-interpolated quantiles at k/cuts_per_column, k = 1..cuts_per_column-1."""
    xs = np.asarray([v for v in values if v is not None], dtype=float)
    if xs.size == 0:
        return []
    qs = [k / cuts_per_column for k in range(1, cuts_per_column)]
    return sorted({float(q) for q in np.quantile(xs, qs)}) if qs else []


def selector_universe(d: Dataset, cuts_per_column: int = 9) -> list[Selector]:
    """Candidate selectors ordered by column index, then operator, then value."""
    if cuts_per_column < 1:
        raise DataError("cuts_per_column must be positive")
    out = []
    for c in d.attributes:
        present = [v for v in d.column(c.name) if v is not None]
        if len(set(present)) < 2:
            continue
        if c.kind == NOMINAL:
            out.extend(Selector(c.name, Op.EQ, v) for v in sorted(set(present)))
        else:
            cuts = numeric_cut_points(present, cuts_per_column)
            out.extend(Selector(c.name, Op.LE, v) for v in cuts)
            out.extend(Selector(c.name, Op.GE, v) for v in cuts)
    return out


def check_selector(d: Dataset, s: Selector) -> None:
    """Raise :class:`DataError` if ``s`` does not fit the dataset's schema."""
    c = d.column_schema(s.attribute)
    if c.name == d.target_column:
        raise DataError(f"selector on the target column {c.name!r}")
    if (c.kind == NOMINAL) != (s.op is Op.EQ):
        raise DataError(f"operator {s.op.value} not valid for {c.kind} column {c.name!r}")


def matches(s: Selector, row: Mapping[str, object]) -> bool:
    return _match_value(s.op, s.value, row.get(s.attribute))


def cover_mask(d: Dataset, p: Sequence[Selector]) -> int:
    m = (1 << d.n_rows) - 1
    for s in p:
        m &= d.mask(s)
    return m


def cover(d: Dataset, p: Sequence[Selector]) -> frozenset[int]:
    """Row indices matched by every selector of ``p``."""
    return frozenset(mask_indices(cover_mask(d, p)))


def mask_indices(m: int) -> list[int]:
    out = []
    i = 0
    while m:
        if m & 1:
            out.append(i)
        m >>= 1
        i += 1
    return out
