"""Typed columnar catalogs of feature vectors.

A catalog is an ordered set of equally long columns, each either numeric
(64-bit floats) or categorical (text). Cells can be missing; numeric
columns never store non-finite values (those are turned into missing
cells on construction).

CSV ingestion follows RFC 4180: UTF-8, mandatory header row, quoted
fields, LF or CRLF line endings.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    AllMissingError,
    DuplicateHeaderError,
    EmptyInputError,
    RaggedRowError,
)

DEFAULT_MISSING_TOKENS = ("", "NA", "NaN", "null")

NUMERIC = "numeric"
CATEGORICAL = "categorical"


def format_float_shortest(value: float) -> str:
    """Shortest decimal string that parses back to exactly ``value``.

    ``repr`` already produces the shortest form for fractional floats;
    for integral floats the bare integer digits are shorter and still
    round-trip, unless scientific notation wins (e.g. 1e+20).
    """
    v = float(value)
    text = repr(v)
    if math.isfinite(v) and v == int(v):
        as_int = str(int(v))
        if len(as_int) < len(text) and float(as_int) == v:
            return as_int
    return text


def _parse_numeric(cell: str) -> Optional[float]:
    # Underscore grouping is a Python literal feature, not decimal notation.
    if "_" in cell:
        return None
    try:
        v = float(cell)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def infer_column_kind(cells: Sequence[Optional[str]]) -> str:
    """Return ``"numeric"`` iff every present cell parses as a finite
    decimal float, else ``"categorical"``.

    Raises AllMissingError when no cell is present. Non-finite spellings
    such as ``"inf"`` force categorical.
    """
    any_present = False
    all_numeric = True
    for cell in cells:
        if cell is None:
            continue
        any_present = True
        if all_numeric and _parse_numeric(cell) is None:
            all_numeric = False
    if not any_present:
        raise AllMissingError("column has no present cells")
    return NUMERIC if all_numeric else CATEGORICAL


class Column:
    """One named catalog column.

    Numeric columns hold a float64 array in which NaN marks a missing
    cell; the present values are always finite. Categorical columns hold
    a list of ``str | None``.
    """

    __slots__ = ("name", "kind", "_numeric", "_cells", "missing_count")

    def __init__(self, name: str, kind: str, cells: Iterable):
        self.name = name
        self.kind = kind
        if kind == NUMERIC:
            data = np.asarray(
                [math.nan if c is None else float(c) for c in cells], dtype=np.float64
            )
            # Non-finite inputs become missing rather than corrupting transforms.
            data[~np.isfinite(data)] = np.nan
            data.flags.writeable = False
            self._numeric = data
            self._cells = None
            self.missing_count = int(np.isnan(data).sum())
        elif kind == CATEGORICAL:
            vals = [None if c is None else str(c) for c in cells]
            self._numeric = None
            self._cells = vals
            self.missing_count = sum(1 for c in vals if c is None)
        else:
            raise ValueError(f"unknown column kind {kind!r}")

    @classmethod
    def numeric(cls, name: str, values: Iterable) -> "Column":
        return cls(name, NUMERIC, values)

    @classmethod
    def categorical(cls, name: str, values: Iterable[Optional[str]]) -> "Column":
        return cls(name, CATEGORICAL, values)

    @classmethod
    def from_array(cls, name: str, data: np.ndarray) -> "Column":
        """Numeric column straight from a float array (NaN = missing)."""
        col = cls.__new__(cls)
        col.name = name
        col.kind = NUMERIC
        arr = np.asarray(data, dtype=np.float64).copy()
        arr[~np.isfinite(arr)] = np.nan
        arr.flags.writeable = False
        col._numeric = arr
        col._cells = None
        col.missing_count = int(np.isnan(arr).sum())
        return col

    def __len__(self) -> int:
        if self._numeric is not None:
            return len(self._numeric)
        return len(self._cells)

    @property
    def values(self) -> list:
        """Cells as a list of ``float | str | None``."""
        if self.kind == NUMERIC:
            return [None if math.isnan(v) else v for v in self._numeric.tolist()]
        return list(self._cells)

    @property
    def data(self) -> np.ndarray:
        """Numeric payload (NaN marks missing). Numeric columns only."""
        if self._numeric is None:
            raise TypeError(f"column {self.name!r} is categorical")
        return self._numeric

    @property
    def present_mask(self) -> np.ndarray:
        if self.kind == NUMERIC:
            return ~np.isnan(self._numeric)
        return np.asarray([c is not None for c in self._cells], dtype=bool)

    @property
    def n_present(self) -> int:
        return len(self) - self.missing_count

    def cell(self, row: int):
        if self.kind == NUMERIC:
            v = self._numeric[row]
            return None if math.isnan(v) else float(v)
        return self._cells[row]


@dataclass(frozen=True)
class ColumnStats:
    """Summary of a column's present cells."""

    n_present: int
    min: Optional[float] = None
    max: Optional[float] = None
    mean: Optional[float] = None
    distinct_categories: Optional[list[str]] = None


def column_stats(column: Column) -> ColumnStats:
    """Stats over present cells only; raises AllMissingError if none."""
    if column.n_present == 0:
        raise AllMissingError(f"column {column.name!r} has no present cells")
    if column.kind == NUMERIC:
        present = column.data[~np.isnan(column.data)]
        return ColumnStats(
            n_present=int(present.size),
            min=float(present.min()),
            max=float(present.max()),
            mean=float(present.mean()),
        )
    cats = sorted({c for c in column._cells if c is not None})
    return ColumnStats(n_present=column.n_present, distinct_categories=cats)


class Catalog:
    """Ordered, immutable collection of equally long columns."""

    __slots__ = ("columns", "_by_name")

    def __init__(self, columns: Iterable[Column]):
        cols = tuple(columns)
        seen = set()
        for c in cols:
            if c.name in seen:
                raise DuplicateHeaderError(f"duplicate column name {c.name!r}")
            seen.add(c.name)
        if cols:
            n = len(cols[0])
            for c in cols[1:]:
                if len(c) != n:
                    raise ValueError(
                        f"column {c.name!r} has {len(c)} rows, expected {n}"
                    )
        self.columns = cols
        self._by_name = {c.name: c for c in cols}

    @property
    def n_rows(self) -> int:
        return len(self.columns[0]) if self.columns else 0

    @property
    def n_columns(self) -> int:
        return len(self.columns)

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def column(self, name: str) -> Column:
        return self._by_name[name]

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray]) -> "Catalog":
        """Catalog of numeric columns from float arrays (NaN = missing)."""
        return cls(Column.from_array(name, a) for name, a in arrays.items())

    def to_csv(self) -> str:
        """Serialize back to RFC-4180 CSV (missing cells become empty)."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.column_names)
        cols = [c.values for c in self.columns]
        for r in range(self.n_rows):
            row = []
            for c in cols:
                v = c[r]
                if v is None:
                    row.append("")
                elif isinstance(v, float):
                    row.append(format_float_shortest(v))
                else:
                    row.append(v)
            writer.writerow(row)
        return buf.getvalue()


def parse_catalog(
    data,
    delimiter: str = ",",
    missing_tokens: Iterable[str] = DEFAULT_MISSING_TOKENS,
) -> Catalog:
    """Parse CSV bytes or text into a typed Catalog.

    The first row is the header. Cells equal (case-insensitively) to a
    missing token are missing. A column is numeric iff every present
    cell parses as a finite decimal float. All-missing columns carry no
    type evidence and default to numeric.

    Raises EmptyInputError, DuplicateHeaderError, or RaggedRowError.
    """
    if isinstance(data, bytes):
        text = data.decode("utf-8-sig")
    else:
        text = data
    missing = {t.lower() for t in missing_tokens}

    reader = csv.reader(io.StringIO(text, newline=""), delimiter=delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyInputError("input has no header row") from None
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise DuplicateHeaderError(f"duplicate header fields: {', '.join(dupes)}")

    n_cols = len(header)
    raw: list[list[Optional[str]]] = [[] for _ in range(n_cols)]
    row_idx = 0
    for row in reader:
        if not row:
            # A bare empty line is one empty cell for a single-column
            # catalog; in wider files it is ignored (lenient, as most
            # CSV writers never emit blank lines).
            if n_cols != 1:
                continue
            row = [""]
        if len(row) != n_cols:
            raise RaggedRowError(row_idx, len(row), n_cols)
        for j, cell in enumerate(row):
            raw[j].append(None if cell.lower() in missing else cell)
        row_idx += 1

    columns = []
    for name, cells in zip(header, raw):
        try:
            kind = infer_column_kind(cells)
        except AllMissingError:
            kind = NUMERIC
        if kind == NUMERIC:
            columns.append(
                Column.numeric(name, [None if c is None else float(c) for c in cells])
            )
        else:
            columns.append(Column.categorical(name, cells))
    return Catalog(columns)
