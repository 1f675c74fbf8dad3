"""Discrete Bayesian networks: a small text format, forward sampling and column hiding.

    # comment
    var A: lo,hi
    var B: x,y,z
    cpt A: 0.3 0.7
    cpt B | A: 0.2 0.3 0.5 ; 0.6 0.2 0.2

One probability row per parent configuration, in row-major order over the
parents as listed (first parent varies slowest).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, TextIO

import numpy as np

from .graph import ARROW, TAIL, MixedGraph, topological_order
from .tabular import CategoricalTable

ROW_TOLERANCE = 1e-6


class NetworkParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class DiscreteNetwork:
    """Variables, level labels, parent lists and CPTs.

    ``cpts[v]`` has shape ``(prod parent levels, levels of v)``.
    """

    names: tuple[str, ...]
    labels: tuple[tuple[str, ...], ...]
    parents: tuple[tuple[int, ...], ...]
    cpts: tuple[np.ndarray, ...]

    def __post_init__(self):
        m = len(self.names)
        if not (len(self.labels) == len(self.parents) == len(self.cpts) == m):
            raise ValueError("names, labels, parents and cpts must have one entry per variable")
        if len(set(self.names)) != m:
            raise ValueError("variable names must be unique")
        try:
            tuple(TopologicalSorter({v: ps for v, ps in enumerate(self.parents)}).static_order())
        except CycleError:
            raise ValueError("parent structure has a directed cycle") from None
        for v in range(m):
            q = math.prod(len(self.labels[p]) for p in self.parents[v])
            t = self.cpts[v]
            if t.shape != (q, len(self.labels[v])):
                raise ValueError(f"cpt of {self.names[v]!r} has shape {t.shape}, expected {(q, len(self.labels[v]))}")
            if (t < 0).any() or not np.allclose(t.sum(axis=1), 1.0, atol=1e-9, rtol=0):
                raise ValueError(f"cpt rows of {self.names[v]!r} must be nonnegative and sum to 1")

    @property
    def n_vars(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}") from None

    def dag(self) -> MixedGraph:
        edges = [(p, v, TAIL, ARROW) for v, ps in enumerate(self.parents) for p in ps]
        return MixedGraph(self.names, edges)

    def config_index(self, v: int, parent_codes: np.ndarray) -> np.ndarray:
        """Row of ``cpts[v]`` for each sample, given an (N, |parents|) code matrix."""
        idx = np.zeros(parent_codes.shape[0], dtype=np.int64)
        for j, p in enumerate(self.parents[v]):
            idx = idx * len(self.labels[p]) + parent_codes[:, j]
        return idx

    def joint(self) -> np.ndarray:
        """Full joint probability array, one axis per variable (small networks only)."""
        shape = tuple(len(l) for l in self.labels)
        p = np.ones(shape)
        for v in range(self.n_vars):
            for cell in itertools.product(*(range(r) for r in shape)):
                row = 0
                for q in self.parents[v]:
                    row = row * shape[q] + cell[q]
                p[cell] *= self.cpts[v][row, cell[v]]
        return p


def _normalize_row(row: list[float], lineno: int, what: str) -> np.ndarray:
    arr = np.array(row, dtype=float)
    if (arr < 0).any():
        raise NetworkParseError(f"{what} has a negative probability", lineno)
    s = arr.sum()
    if abs(s - 1.0) > ROW_TOLERANCE:
        raise NetworkParseError(f"{what} sums to {s:.6g}, not 1", lineno)
    return arr / s


def parse_network(source: TextIO | str) -> DiscreteNetwork:
    text = source if isinstance(source, str) else source.read()
    names: list[str] = []
    labels: dict[str, tuple[str, ...]] = {}
    cpt_lines: dict[str, tuple[int, list[str], str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, _, rest = line.partition(" ")
        if keyword == "var":
            name, sep, levels = rest.partition(":")
            name = name.strip()
            levs = tuple(s.strip() for s in levels.split(",") if s.strip())
            if not sep or not name:
                raise NetworkParseError("expected 'var NAME: level1,level2,...'", lineno)
            if name in labels:
                raise NetworkParseError(f"variable {name!r} declared twice", lineno)
            if len(levs) < 1 or len(set(levs)) != len(levs):
                raise NetworkParseError(f"variable {name!r} needs distinct levels", lineno)
            names.append(name)
            labels[name] = levs
        elif keyword == "cpt":
            head, sep, body = rest.partition(":")
            if not sep:
                raise NetworkParseError("expected 'cpt NAME | PARENTS: rows'", lineno)
            child, _, pas = head.partition("|")
            child = child.strip()
            parents = [p.strip() for p in pas.split(",") if p.strip()]
            if child in cpt_lines:
                raise NetworkParseError(f"second cpt for {child!r}", lineno)
            cpt_lines[child] = (lineno, parents, body)
        else:
            raise NetworkParseError(f"unknown directive {keyword!r}", lineno)

    parents_idx, cpts = [], []
    for name in names:
        if name not in cpt_lines:
            raise NetworkParseError(f"variable {name!r} has no cpt")
        lineno, parents, body = cpt_lines[name]
        for p in parents:
            if p not in labels:
                raise NetworkParseError(f"unknown parent {p!r} of {name!r}", lineno)
        if name in parents or len(set(parents)) != len(parents):
            raise NetworkParseError(f"bad parent list for {name!r}", lineno)
        q = math.prod(len(labels[p]) for p in parents)
        rows = [r.split() for r in body.split(";")]
        if len(rows) != q:
            raise NetworkParseError(f"cpt of {name!r} has {len(rows)} rows, expected {q}", lineno)
        table = []
        for i, r in enumerate(rows, start=1):
            if len(r) != len(labels[name]):
                raise NetworkParseError(f"cpt of {name!r} row {i} has {len(r)} entries, expected {len(labels[name])}", lineno)
            try:
                vals = [float(x) for x in r]
            except ValueError:
                raise NetworkParseError(f"cpt of {name!r} row {i} is not numeric", lineno) from None
            table.append(_normalize_row(vals, lineno, f"cpt of {name!r} row {i}"))
        parents_idx.append(tuple(names.index(p) for p in parents))
        cpts.append(np.vstack(table))
    extra = set(cpt_lines) - set(names)
    if extra:
        name = sorted(extra)[0]
        raise NetworkParseError(f"cpt for undeclared variable {name!r}", cpt_lines[name][0])
    try:
        return DiscreteNetwork(tuple(names), tuple(labels[n] for n in names), tuple(parents_idx), tuple(cpts))
    except ValueError as exc:
        raise NetworkParseError(str(exc)) from None


def format_network(net: DiscreteNetwork) -> str:
    lines = [f"var {n}: {','.join(l)}" for n, l in zip(net.names, net.labels)]
    for v, name in enumerate(net.names):
        head = name + (" | " + ",".join(net.names[p] for p in net.parents[v]) if net.parents[v] else "")
        rows = " ; ".join(" ".join(repr(float(x)) for x in row) for row in net.cpts[v])
        lines.append(f"cpt {head}: {rows}")
    return "\n".join(lines) + "\n"


def sample(net: DiscreteNetwork, n: int, seed: int | np.random.Generator | np.random.SeedSequence) -> CategoricalTable:
    """Forward sampling in topological order; columns in declaration order."""
    if n < 1:
        raise ValueError("sample size must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    codes = np.zeros((n, net.n_vars), dtype=np.int64)
    for v in topological_order(net.dag()):
        rows = net.config_index(v, codes[:, list(net.parents[v])])
        cdf = np.cumsum(net.cpts[v], axis=1)
        cdf[:, -1] = 1.0
        u = rng.random(n)
        codes[:, v] = (u[:, None] >= cdf[rows]).sum(axis=1)
    # re-encode through labels so level counts reflect what was observed
    cols = [np.asarray(net.labels[v], dtype=object)[codes[:, v]] for v in range(net.n_vars)]
    return CategoricalTable.from_columns(net.names, cols)


def hide(table: CategoricalTable, hidden: Iterable[str]) -> CategoricalTable:
    hidden = set(hidden)
    unknown = hidden - set(table.names)
    if unknown:
        raise KeyError(f"unknown variables {sorted(unknown)}")
    keep = [k for k, n in enumerate(table.names) if n not in hidden]
    if not keep:
        raise ValueError("cannot hide every variable")
    return table.select(keep)


def random_network(names: list[str], parents: list[tuple[int, ...]], levels: list[int],
                   rng: np.random.Generator, concentration: float = 1.0) -> DiscreteNetwork:
    """Random CPTs drawn row-wise from a symmetric Dirichlet."""
    labels = tuple(tuple(f"s{k}" for k in range(r)) for r in levels)
    cpts = []
    for v, ps in enumerate(parents):
        q = math.prod(levels[p] for p in ps)
        cpts.append(rng.dirichlet([concentration] * levels[v], size=q))
    return DiscreteNetwork(tuple(names), labels, tuple(tuple(p) for p in parents), tuple(cpts))
