"""Categorical datasets: loading, level encoding and joint counts."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np


class TableParseError(ValueError):
    """Malformed dataset file. ``line`` is 1-based."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class CategoricalTable:
    """N samples of m categorical variables stored as dense level codes.

    ``codes[:, k]`` holds values in ``[0, levels[k])`` and ``labels[k][c]`` is
    the original token for code ``c`` of variable ``k``.
    """

    names: tuple[str, ...]
    codes: np.ndarray
    levels: tuple[int, ...]
    labels: tuple[tuple[str, ...], ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        codes = np.ascontiguousarray(self.codes, dtype=np.int64)
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        if codes.ndim != 2 or codes.shape[1] != len(self.names):
            raise ValueError("codes must be an N x m matrix matching names")
        if codes.shape[0] < 1:
            raise ValueError("a table needs at least one sample")
        if len(set(self.names)) != len(self.names):
            raise ValueError("variable names must be unique")
        if len(self.levels) != len(self.names) or len(self.labels) != len(self.names):
            raise ValueError("levels and labels must have one entry per variable")
        for k, r in enumerate(self.levels):
            if r < 1 or len(self.labels[k]) != r:
                raise ValueError(f"variable {self.names[k]!r}: bad level count {r}")
            col = codes[:, k]
            if col.min() < 0 or col.max() >= r:
                raise ValueError(f"variable {self.names[k]!r}: code out of range")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(self.names)})

    @property
    def n_samples(self) -> int:
        return self.codes.shape[0]

    @property
    def n_vars(self) -> int:
        return self.codes.shape[1]

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    @classmethod
    def from_columns(cls, names: Sequence[str], columns: Sequence[Sequence]) -> "CategoricalTable":
        """Encode raw columns, assigning codes in first-appearance order."""
        codes, levels, labels = [], [], []
        for col in columns:
            arr = np.asarray(col)
            uniq, first, inverse = np.unique(arr, return_index=True, return_inverse=True)
            order = np.argsort(first, kind="stable")
            rank = np.empty_like(order)
            rank[order] = np.arange(len(order))
            codes.append(rank[inverse.ravel()])
            levels.append(len(uniq))
            labels.append(tuple(str(u) for u in uniq[order]))
        return cls(tuple(names), np.column_stack(codes), tuple(levels), tuple(labels))

    def select(self, columns: Sequence[int]) -> "CategoricalTable":
        cols = list(columns)
        return CategoricalTable(
            tuple(self.names[c] for c in cols),
            self.codes[:, cols],
            tuple(self.levels[c] for c in cols),
            tuple(self.labels[c] for c in cols),
        )

    def resample(self, rng: np.random.Generator) -> "CategoricalTable":
        """Bootstrap replicate: rows drawn with replacement, then re-encoded."""
        rows = rng.integers(0, self.n_samples, size=self.n_samples)
        cols = [np.asarray(self.labels[k], dtype=object)[self.codes[rows, k]] for k in range(self.n_vars)]
        return CategoricalTable.from_columns(self.names, cols)

    def constant_variables(self) -> list[str]:
        return [n for n, r in zip(self.names, self.levels) if r == 1]


@dataclass(frozen=True)
class CountVector:
    """Joint occurrence counts of a variable subset; zero cells omitted."""

    subset: tuple[int, ...]
    cells: dict[tuple[int, ...], int]

    @property
    def total(self) -> int:
        return sum(self.cells.values())


def load_table(source: TextIO | str) -> CategoricalTable:
    """Parse a comma-separated dataset with a header row of variable names."""
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise TableParseError("empty input: no header row", 1) from None
    names = [h.strip() for h in header]
    if not names or any(n == "" for n in names):
        raise TableParseError("header contains an empty variable name", 1)
    seen = set()
    for n in names:
        if n in seen:
            raise TableParseError(f"duplicate variable name {n!r}", 1)
        seen.add(n)

    rows = []
    for row in reader:
        line = reader.line_num
        if not row or all(not f.strip() for f in row):
            continue
        if len(row) != len(names):
            raise TableParseError(f"row has {len(row)} fields, header has {len(names)}", line)
        row = [f.strip() for f in row]
        for name, value in zip(names, row):
            if value == "":
                raise TableParseError(f"missing value for {name!r}", line)
        rows.append(row)
    if not rows:
        raise TableParseError("no data rows", 2)
    columns = list(zip(*rows))
    return CategoricalTable.from_columns(names, [np.array(c, dtype=object) for c in columns])


def write_table(table: CategoricalTable, sink: TextIO) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(table.names)
    labels = [np.asarray(lab, dtype=object) for lab in table.labels]
    decoded = np.column_stack([labels[k][table.codes[:, k]] for k in range(table.n_vars)])
    writer.writerows(decoded.tolist())


def _check_subset(table: CategoricalTable, subset: Iterable[int]) -> tuple[int, ...]:
    sub = tuple(subset)
    if not sub:
        raise ValueError("subset must be nonempty")
    for k in sub:
        if not 0 <= k < table.n_vars:
            raise IndexError(f"variable index {k} out of range")
    if len(set(sub)) != len(sub):
        raise ValueError("subset has repeated variables")
    return sub


def joint_keys(table: CategoricalTable, subset: Sequence[int]) -> np.ndarray:
    """Mixed-radix key per row identifying the joint configuration of ``subset``."""
    keys = np.zeros(table.n_samples, dtype=np.int64)
    radix = 1
    for k in reversed(subset):
        keys += table.codes[:, k] * radix
        radix *= table.levels[k]
        if radix > 2**62:
            # re-compress to dense ranks to keep the key within int64
            _, keys = np.unique(keys, return_inverse=True)
            keys = keys.astype(np.int64).ravel()
            radix = int(keys.max()) + 1
    return keys


def cell_counts(table: CategoricalTable, subset: Sequence[int]) -> np.ndarray:
    """Nonzero joint counts of ``subset`` (order of cells unspecified)."""
    if len(subset) == 0:
        return np.array([table.n_samples], dtype=np.int64)
    keys = joint_keys(table, subset)
    span = int(keys.max()) + 1
    if span <= 4 * table.n_samples + 1024:
        c = np.bincount(keys, minlength=span)
        return c[c > 0]
    return np.unique(keys, return_counts=True)[1]


def counts(table: CategoricalTable, subset: Iterable[int]) -> CountVector:
    sub = _check_subset(table, subset)
    cols = table.codes[:, list(sub)]
    uniq, cnt = np.unique(cols, axis=0, return_counts=True)
    cells = {tuple(int(v) for v in u): int(c) for u, c in zip(uniq, cnt)}
    return CountVector(sub, cells)


def scoring_warnings(table: CategoricalTable) -> list[str]:
    """Names of single-level variables, which carry no information to score."""
    const = table.constant_variables()
    if const:
        warnings.warn(f"single-level variables excluded from scoring: {', '.join(const)}", stacklevel=2)
    return const
