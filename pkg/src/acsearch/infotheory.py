"""Plug-in entropies and multivariate information by inclusion-exclusion.

All values are in nats. Entropies of a table are memoized per table on the
canonical (sorted) variable subset, so the many re-reads done by the
alternating sums below cost a dictionary lookup.
"""

from __future__ import annotations

import math
import threading
import weakref
from itertools import combinations
from typing import Iterable

import numpy as np

from .tabular import CategoricalTable, _check_subset, cell_counts

DEFAULT_MAX_ORDER = 12


class ResourceLimitError(RuntimeError):
    """A computation would exceed a configured size ceiling."""


class Estimator:
    """Entropy and count cache bound to one immutable table.

    Lookups are lock-free; inserts are serialized. Values are deterministic
    functions of the key, so a racing duplicate insert is harmless.
    """

    def __init__(self, table: CategoricalTable):
        self.table = table
        self._counts: dict[tuple[int, ...], np.ndarray] = {}
        self._entropy: dict[tuple[int, ...], float] = {}
        self._lock = threading.Lock()

    def cell_counts(self, subset: Iterable[int]) -> np.ndarray:
        key = tuple(sorted(subset))
        hit = self._counts.get(key)
        if hit is None:
            hit = cell_counts(self.table, key)
            with self._lock:
                self._counts.setdefault(key, hit)
        return hit

    def entropy(self, subset: Iterable[int]) -> float:
        key = tuple(sorted(subset))
        if not key:
            return 0.0
        hit = self._entropy.get(key)
        if hit is None:
            c = self.cell_counts(key)
            n = self.table.n_samples
            # H = ln N - (1/N) sum n_j ln n_j
            hit = math.log(n) - float(np.dot(c, np.log(c))) / n
            if hit < 0.0 and hit > -1e-12:
                hit = 0.0
            with self._lock:
                self._entropy.setdefault(key, hit)
        return hit


_estimators: "weakref.WeakKeyDictionary[CategoricalTable, Estimator]" = weakref.WeakKeyDictionary()
_registry_lock = threading.Lock()


def estimator(table: CategoricalTable) -> Estimator:
    est = _estimators.get(table)
    if est is None:
        with _registry_lock:
            est = _estimators.setdefault(table, Estimator(table))
    return est


def _alternating_sum(terms: Iterable[tuple[int, float]]) -> float:
    # group by subset size, then add with exact float summation
    return math.fsum(v for _, v in sorted(terms, key=lambda t: t[0]))


def entropy(table: CategoricalTable, subset: Iterable[int]) -> float:
    sub = _check_subset(table, subset)
    return estimator(table).entropy(sub)


def conditional_entropy(table: CategoricalTable, target: Iterable[int], cond: Iterable[int] = ()) -> float:
    tgt, cnd = set(target), set(cond)
    est = estimator(table)
    return est.entropy(tgt | cnd) - est.entropy(cnd)


def multi_information(table: CategoricalTable, subset: Iterable[int], max_order: int = DEFAULT_MAX_ORDER) -> float:
    """I(V) = -sum_{S subseteq V} (-1)^|S| H(S) over nonempty S."""
    sub = _check_subset(table, subset)
    return conditional_multi_information(table, sub, (), max_order=max_order)


def conditional_multi_information(
    table: CategoricalTable,
    subset: Iterable[int],
    cond: Iterable[int] = (),
    max_order: int = DEFAULT_MAX_ORDER,
) -> float:
    """I(V|Z) with H(S|Z) = H(S u Z) - H(Z)."""
    sub = _check_subset(table, subset)
    cnd = tuple(cond)
    if set(sub) & set(cnd):
        raise ValueError("subset and conditioning set must be disjoint")
    if len(sub) > max_order:
        raise ResourceLimitError(f"information order {len(sub)} exceeds cap {max_order}")
    est = estimator(table)
    h_cond = est.entropy(cnd)
    terms = []
    for k in range(1, len(sub) + 1):
        sign = 1.0 if k % 2 else -1.0
        for s in combinations(sub, k):
            terms.append((k, sign * (est.entropy(s + cnd) - h_cond)))
    return _alternating_sum(terms)


def conditional_mi(table: CategoricalTable, x: int, y: int, cond: Iterable[int] = ()) -> float:
    """I(X;Y|A) = H(X,A) + H(Y,A) - H(X,Y,A) - H(A)."""
    cnd = tuple(cond)
    if x == y:
        raise ValueError("x and y must differ")
    if x in cnd or y in cnd:
        raise ValueError("x and y must not be in the conditioning set")
    _check_subset(table, (x, y) + cnd)
    est = estimator(table)
    return math.fsum((est.entropy((x,) + cnd), est.entropy((y,) + cnd),
                      -est.entropy((x, y) + cnd), -est.entropy(cnd)))


def mutual_information(table: CategoricalTable, x: int, y: int) -> float:
    return conditional_mi(table, x, y, ())
