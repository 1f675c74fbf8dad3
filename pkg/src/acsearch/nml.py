"""fNML parametric complexity and the local and global likelihood scores.

Scores are per-sample cross-entropies in nats (lower is better). Local
scores follow the node / pair / edge-orientation layout of the search; the
global score sums signed multivariate information over ac-connected
subsets of a graph.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import gammaln, logsumexp, xlogy

from .graph import GraphError, MixedGraph, iter_ac_connected, DEFAULT_SUBSET_CEILING
from .infotheory import DEFAULT_MAX_ORDER, Estimator, estimator
from .tabular import CategoricalTable

SZPANKOWSKI_THRESHOLD = 1000
ORIENTATIONS = ("x_to_y", "y_to_x", "bidirected")
PAIR_KINDS = ("disconnected", "x_to_y", "y_to_x")


def log_c2_exact(n: int) -> float:
    """log of sum_h binom(n,h) (h/n)^h ((n-h)/n)^(n-h), with 0^0 = 1."""
    if n == 0:
        return 0.0
    h = np.arange(n + 1, dtype=float)
    terms = gammaln(n + 1) - gammaln(h + 1) - gammaln(n - h + 1) + xlogy(h, h / n) + xlogy(n - h, (n - h) / n)
    return float(logsumexp(terms))


def log_c2_szpankowski(n: int) -> float:
    """Large-n expansion of log C^2_n."""
    return 0.5 * math.log(n * math.pi / 2) + math.sqrt(8 / (9 * n * math.pi)) + (3 * math.pi - 16) / (36 * n * math.pi)


def log_complexity(r: int, n: int, threshold: int = SZPANKOWSKI_THRESHOLD) -> float:
    """log C^r_n by the ratio recursion D^r_n = 1 + n / ((r-2) D^{r-1}_n)."""
    if r < 1:
        raise ValueError("level count must be >= 1")
    if n < 0:
        raise ValueError("sample count must be >= 0")
    if n == 0 or r == 1:
        return 0.0
    log_c2 = log_c2_exact(n) if n <= threshold else log_c2_szpankowski(n)
    if r == 2:
        return log_c2
    d = math.exp(log_c2)
    total = log_c2
    for k in range(3, r + 1):
        d = 1.0 + n / ((k - 2) * d)
        total += math.log(d)
    return total


class ComplexityCache:
    """Tables of log C^r_n for n = 0..n_max, one per level count r.

    Tables only grow; a racing rebuild writes identical values.
    """

    def __init__(self, threshold: int = SZPANKOWSKI_THRESHOLD):
        self.threshold = threshold
        self._tables: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    def table(self, r: int, n_max: int) -> np.ndarray:
        t = self._tables.get(r)
        if t is None or len(t) <= n_max:
            size = max(n_max + 1, 2 * len(t) if t is not None else 0)
            t = self._build(r, size)
            with self._lock:
                cur = self._tables.get(r)
                if cur is None or len(cur) < len(t):
                    self._tables[r] = t
        return t

    def _build(self, r: int, size: int) -> np.ndarray:
        n = np.arange(size, dtype=float)
        if r == 1:
            return np.zeros(size)
        out = np.empty(size)
        exact_upto = min(size - 1, self.threshold)
        out[: exact_upto + 1] = [log_c2_exact(k) for k in range(exact_upto + 1)]
        big = n[exact_upto + 1:]
        if big.size:
            out[exact_upto + 1:] = (0.5 * np.log(big * math.pi / 2) + np.sqrt(8 / (9 * big * math.pi))
                                    + (3 * math.pi - 16) / (36 * big * math.pi))
        if r == 2:
            return out
        d = np.exp(out)
        total = out.copy()
        for k in range(3, r + 1):
            d = 1.0 + n / ((k - 2) * d)
            total += np.log(d)
        total[0] = 0.0
        return total

    def __call__(self, r: int, n: int) -> float:
        return float(self.table(r, n)[n])

    def summed(self, r: int, cell_counts: np.ndarray) -> float:
        """sum_j log C^r_{n_j} over the given configuration counts."""
        t = self.table(r, int(cell_counts.max()) if len(cell_counts) else 0)
        return float(t[cell_counts].sum())


_default_cache = ComplexityCache()


@dataclass
class ScoreContext:
    """Data, entropy cache and complexity cache shared by all local scores.

    ``regularizer`` is ``"fnml"`` (default) or ``"bic"``.
    """

    table: CategoricalTable
    regularizer: str = "fnml"
    complexity: ComplexityCache = None

    def __post_init__(self):
        if self.regularizer not in ("fnml", "bic"):
            raise ValueError(f"unknown regularizer {self.regularizer!r}")
        if self.complexity is None:
            self.complexity = _default_cache
        self.est: Estimator = estimator(self.table)
        self._penalty: dict = {}

    @property
    def n(self) -> int:
        return self.table.n_samples

    def level(self, v: int) -> int:
        return self.table.levels[v]

    def config_product(self, subset: Iterable[int]) -> int:
        return math.prod(self.table.levels[v] for v in subset)

    def penalty(self, child: int, cond: Iterable[int]) -> float:
        """Total (not per-sample) complexity of ``child`` given configurations of ``cond``."""
        cond = tuple(sorted(cond))
        key = (child, cond)
        hit = self._penalty.get(key)
        if hit is None:
            r = self.level(child)
            if self.regularizer == "fnml":
                hit = self.complexity.summed(r, self.est.cell_counts(cond))
            else:
                hit = 0.5 * (r - 1) * self.config_product(cond) * math.log(self.n)
            self._penalty[key] = hit
        return hit

    def cond_entropy(self, x: int, cond: Iterable[int]) -> float:
        cond = set(cond)
        return self.est.entropy(cond | {x}) - self.est.entropy(cond)

    def cmi(self, x: int, y: int, cond: Iterable[int]) -> float:
        cond = set(cond)
        e = self.est.entropy
        return math.fsum((e(cond | {x}), e(cond | {y}), -e(cond | {x, y}), -e(cond)))


def _ctx(data, regularizer="fnml") -> ScoreContext:
    return data if isinstance(data, ScoreContext) else ScoreContext(data, regularizer)


def _disjoint(x, pa, what):
    if x in pa:
        raise ValueError(f"{what} contains the scored variable itself")


def node_score(data, x: int, pa: Iterable[int] = ()) -> float:
    """H(X | Pa) + (1/N) sum_j log C^{r_x}_{n_j} over realized parent configurations."""
    ctx = _ctx(data)
    pa = frozenset(pa)
    _disjoint(x, pa, "parent set")
    return ctx.cond_entropy(x, pa) + ctx.penalty(x, pa) / ctx.n


def pair_score(data, x: int, y: int, pa_x: Iterable[int], pa_y: Iterable[int], kind: str) -> float:
    pa_x, pa_y = frozenset(pa_x), frozenset(pa_y)
    for s in (pa_x, pa_y):
        if x in s or y in s:
            raise ValueError("parent sets must exclude both x and y")
    if kind == "disconnected":
        return node_score(data, x, pa_x) + node_score(data, y, pa_y)
    if kind == "x_to_y":
        return node_score(data, x, pa_x) + node_score(data, y, pa_y | {x})
    if kind == "y_to_x":
        return node_score(data, x, pa_x | {y}) + node_score(data, y, pa_y)
    raise ValueError(f"unknown pair kind {kind!r}")


def _directed_penalty(ctx: ScoreContext, child: int, other: int, cond: frozenset) -> float:
    """Complexity added to ``child`` when ``other`` joins its conditioning set."""
    return ctx.penalty(child, cond | {other}) - ctx.penalty(child, cond)


def edge_orientation_score(data, x: int, y: int, pa_x_not_y: Iterable[int], pa_y_not_x: Iterable[int],
                           orientation: str, symmetrize: bool = True) -> float:
    """Local score of one orientation of the x-y edge given surrounding parents/spouses.

    ``-I(X;Y | cond) + complexity / N`` with ``cond`` the parents of the head
    (``x_to_y``: those of y; ``y_to_x``: those of x; bidirected: the union).
    The symmetrized complexity averages the two directed penalties, so all
    three orientations score identically when both parent sets coincide.
    """
    ctx = _ctx(data)
    px, py = frozenset(pa_x_not_y), frozenset(pa_y_not_x)
    for s in (px, py):
        if x in s or y in s:
            raise ValueError("parent sets must exclude both x and y")
    if orientation == "x_to_y":
        info = ctx.cmi(x, y, py)
    elif orientation == "y_to_x":
        info = ctx.cmi(x, y, px)
    elif orientation == "bidirected":
        px = py = px | py
        info = ctx.cmi(x, y, px)
    else:
        raise ValueError(f"unknown orientation {orientation!r}")

    if not symmetrize:
        if orientation == "x_to_y":
            comp = _directed_penalty(ctx, y, x, py)
        elif orientation == "y_to_x":
            comp = _directed_penalty(ctx, x, y, px)
        else:
            raise ValueError("the bidirected score is only defined with symmetrized complexity")
        return -info + comp / ctx.n
    comp = 0.5 * (_directed_penalty(ctx, x, y, px) + _directed_penalty(ctx, y, x, py))
    return -info + comp / ctx.n


def orientation_scores(data, x: int, y: int, pa_x_not_y: Iterable[int], pa_y_not_x: Iterable[int]) -> dict[str, float]:
    return {o: edge_orientation_score(data, x, y, pa_x_not_y, pa_y_not_x, o) for o in ORIENTATIONS}


# global decomposition score

@dataclass(frozen=True)
class ScoreTerm:
    subset: tuple[int, ...]
    sign: int  # contribution is sign * info
    info: float


def _subset_info(est: Estimator, subset: tuple[int, ...]) -> float:
    from itertools import combinations

    terms = []
    for k in range(1, len(subset) + 1):
        sgn = 1.0 if k % 2 else -1.0
        for s in combinations(subset, k):
            terms.append(sgn * est.entropy(s))
    return math.fsum(terms)


def score_terms(table: CategoricalTable, g: MixedGraph, regularizer: str = "none", max_subset: int | None = None,
                max_colliders: int | None = None, ceiling: int = DEFAULT_SUBSET_CEILING,
                max_order: int = DEFAULT_MAX_ORDER) -> list[ScoreTerm]:
    """Signed information terms of every ac-connected subset of ``g``."""
    if regularizer not in ("none", "bic"):
        raise ValueError(f"unknown regularizer {regularizer!r}")
    if g.names != table.names:
        raise GraphError("graph vertices must match the table columns in order")
    if g.has_undirected() or g.has_circles():
        raise GraphError("the decomposition is only defined for directed and bidirected edges; "
                         "resolve undirected edges first")
    if max_subset is None:
        max_subset = min(g.n, max_order)
    if max_subset > max_order:
        from .infotheory import ResourceLimitError
        raise ResourceLimitError(f"subset size {max_subset} exceeds the information order cap {max_order}")
    est = estimator(table)
    n = table.n_samples
    out = []
    for c in iter_ac_connected(g, max_subset, max_colliders, ceiling):
        info = _subset_info(est, c)
        if regularizer == "bic":
            info -= 0.5 * math.prod(1 - table.levels[k] for k in c) * math.log(n) / n
        # H(p,q) = -sum (-1)^|C| I(C)
        out.append(ScoreTerm(c, -((-1) ** len(c)), info))
    return out


def global_score(table: CategoricalTable, g: MixedGraph, regularizer: str = "none", max_subset: int | None = None,
                 max_colliders: int | None = None, ceiling: int = DEFAULT_SUBSET_CEILING) -> float:
    """Cross-entropy of an ancestral graph summed over its ac-connected subsets."""
    terms = score_terms(table, g, regularizer, max_subset, max_colliders, ceiling)
    return math.fsum(t.sign * t.info for t in terms)


def dag_conditional_entropy(table: CategoricalTable, dag: MixedGraph) -> float:
    """sum_i H(X_i | Pa_i) for a purely directed graph."""
    est = estimator(table)
    parts = []
    for v in range(dag.n):
        pa = dag.parents(v)
        parts.append(est.entropy(pa | {v}) - est.entropy(pa))
    return math.fsum(parts)
