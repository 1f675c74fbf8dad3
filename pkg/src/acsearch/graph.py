"""Mixed graphs with directed, bidirected and undirected edges.

Edges carry one end mark per endpoint. ``g.mark(u, v)`` is the mark at the
``v`` end of the edge between ``u`` and ``v``; ``u -> v`` therefore has
``mark(u, v) == ARROW`` and ``mark(v, u) == TAIL``. Circle marks only appear
in equivalence-class summaries produced by :func:`pag_oracle`.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from itertools import combinations, product
from math import comb
from typing import Iterable, Iterator, Sequence

from .infotheory import ResourceLimitError

DEFAULT_SUBSET_CEILING = 1_000_000


class Mark(str, enum.Enum):
    TAIL = "-"
    ARROW = ">"
    CIRCLE = "o"


TAIL, ARROW, CIRCLE = Mark.TAIL, Mark.ARROW, Mark.CIRCLE


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    kind: str  # "directed_cycle" | "almost_directed_cycle"
    vertices: tuple[int, ...]


class MixedGraph:
    """Immutable mixed graph over named vertices ``0..n-1``."""

    __slots__ = ("names", "_ends", "_adj", "_index", "_anc_cache")

    def __init__(self, names: Sequence[str], edges: Iterable[tuple[int, int, Mark, Mark]] = ()):
        self.names = tuple(names)
        if len(set(self.names)) != len(self.names):
            raise GraphError("vertex names must be unique")
        self._index = {n: i for i, n in enumerate(self.names)}
        ends: dict[tuple[int, int], Mark] = {}
        adj: list[set[int]] = [set() for _ in self.names]
        n = len(self.names)
        for u, v, mu, mv in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range")
            if u == v:
                raise GraphError(f"self-loop at {self.names[u]}")
            if (u, v) in ends:
                raise GraphError(f"more than one edge between {self.names[u]} and {self.names[v]}")
            ends[(v, u)] = Mark(mu)
            ends[(u, v)] = Mark(mv)
            adj[u].add(v)
            adj[v].add(u)
        self._ends = ends
        self._adj = tuple(tuple(sorted(a)) for a in adj)
        self._anc_cache: dict = {}

    # construction helpers

    @classmethod
    def from_specs(cls, names: Sequence[str], specs: Iterable[str]) -> "MixedGraph":
        """Build from strings such as ``"X -> Y"``, ``"Z <-> T"``, ``"A -- B"``."""
        from .graphio import parse_edge_line

        index = {n: i for i, n in enumerate(names)}
        edges = []
        for s in specs:
            a, b, ma, mb = parse_edge_line(s)
            try:
                edges.append((index[a], index[b], ma, mb))
            except KeyError as exc:
                raise GraphError(f"unknown vertex {exc.args[0]!r}") from None
        return cls(names, edges)

    @classmethod
    def empty(cls, names: Sequence[str]) -> "MixedGraph":
        return cls(names)

    def _edge_list(self) -> list[tuple[int, int, Mark, Mark]]:
        return [(u, v, self._ends[(v, u)], self._ends[(u, v)]) for u, v in self.edge_pairs()]

    def with_edge(self, u: int, v: int, mu: Mark, mv: Mark) -> "MixedGraph":
        """Copy with the ``u``-``v`` edge set (replacing any existing one)."""
        edges = [e for e in self._edge_list() if {e[0], e[1]} != {u, v}]
        edges.append((u, v, mu, mv))
        return MixedGraph(self.names, edges)

    def without_edge(self, u: int, v: int) -> "MixedGraph":
        return MixedGraph(self.names, [e for e in self._edge_list() if {e[0], e[1]} != {u, v}])

    def relabel(self, perm: Sequence[int]) -> "MixedGraph":
        """Vertex ``i`` becomes vertex ``perm[i]``; names travel with vertices."""
        names = [None] * len(self.names)
        for i, p in enumerate(perm):
            names[p] = self.names[i]
        return MixedGraph(names, [(perm[u], perm[v], mu, mv) for u, v, mu, mv in self._edge_list()])

    # queries

    @property
    def n(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise GraphError(f"unknown vertex {name!r}") from None

    def adjacent(self, u: int, v: int) -> bool:
        return (u, v) in self._ends

    def mark(self, u: int, v: int) -> Mark:
        """Mark at the ``v`` end of the ``u``-``v`` edge."""
        return self._ends[(u, v)]

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def edge_pairs(self) -> list[tuple[int, int]]:
        return sorted((u, v) for (u, v) in self._ends if u < v)

    def edges(self) -> list[tuple[int, int, Mark, Mark]]:
        """``(u, v, mark_at_u, mark_at_v)`` with ``u < v``, sorted."""
        return self._edge_list()

    @property
    def n_edges(self) -> int:
        return len(self._ends) // 2

    def is_directed(self, u: int, v: int) -> bool:
        """True for ``u -> v``."""
        return self._ends.get((u, v)) is ARROW and self._ends.get((v, u)) is TAIL

    def is_bidirected(self, u: int, v: int) -> bool:
        return self._ends.get((u, v)) is ARROW and self._ends.get((v, u)) is ARROW

    def is_undirected(self, u: int, v: int) -> bool:
        return self._ends.get((u, v)) is TAIL and self._ends.get((v, u)) is TAIL

    def parents(self, v: int) -> set[int]:
        return {u for u in self._adj[v] if self.is_directed(u, v)}

    def children(self, v: int) -> set[int]:
        return {u for u in self._adj[v] if self.is_directed(v, u)}

    def spouses(self, v: int) -> set[int]:
        return {u for u in self._adj[v] if self.is_bidirected(u, v)}

    def has_undirected(self) -> bool:
        return any(self.is_undirected(u, v) for u, v in self.edge_pairs())

    def has_circles(self) -> bool:
        return any(m is CIRCLE for m in self._ends.values())

    def ancestors(self, targets: Iterable[int]) -> frozenset[int]:
        """Reflexive ancestor set: targets plus everything with a directed path into them."""
        key = frozenset(targets)
        hit = self._anc_cache.get(key)
        if hit is not None:
            return hit
        seen = set(key)
        stack = list(key)
        while stack:
            v = stack.pop()
            for u in self._adj[v]:
                if u not in seen and self.is_directed(u, v):
                    seen.add(u)
                    stack.append(u)
        hit = frozenset(seen)
        if len(self._anc_cache) < 4096:
            self._anc_cache[key] = hit
        return hit

    def fingerprint(self) -> frozenset:
        """Order-independent identity of the edge/mark multiset."""
        return frozenset((u, v, self._ends[(v, u)].value, self._ends[(u, v)].value) for u, v in self.edge_pairs())

    def __eq__(self, other):
        return isinstance(other, MixedGraph) and self.names == other.names and self._ends == other._ends

    def __hash__(self):
        return hash((self.names, self.fingerprint()))

    def __repr__(self):
        from .graphio import edge_line

        body = ", ".join(edge_line(self, u, v) for u, v in self.edge_pairs())
        return f"MixedGraph([{body}])"


# ancestral validity

def _directed_cycles(g: MixedGraph) -> list[tuple[int, ...]]:
    """One directed cycle per nontrivial strongly connected component."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = [0]

    def strongconnect(v):
        # iterative Tarjan
        work = [(v, iter(sorted(g.children(v))))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(g.children(w)))))
                    advanced = True
                    break
                if w in on_stack:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                if len(comp) > 1:
                    comps.append(sorted(comp))

    for v in range(g.n):
        if v not in index:
            strongconnect(v)

    cycles = []
    for comp in sorted(comps):
        members = set(comp)
        start = comp[0]
        # BFS inside the component back to start
        prev = {start: None}
        queue = deque([start])
        found = None
        while queue and found is None:
            v = queue.popleft()
            for w in sorted(g.children(v)):
                if w not in members:
                    continue
                if w == start:
                    found = v
                    break
                if w not in prev:
                    prev[w] = v
                    queue.append(w)
        path = []
        v = found
        while v is not None:
            path.append(v)
            v = prev[v]
        cycles.append(tuple(reversed(path)))
    return cycles


def validate_ancestral(g: MixedGraph) -> list[Violation]:
    """Directed and almost directed cycles; empty list for an ancestral graph."""
    out = [Violation("directed_cycle", c) for c in _directed_cycles(g)]
    for u, v in g.edge_pairs():
        if not g.is_bidirected(u, v):
            continue
        if u in g.ancestors({v}):
            out.append(Violation("almost_directed_cycle", (u, v)))
        elif v in g.ancestors({u}):
            out.append(Violation("almost_directed_cycle", (v, u)))
    return out


def is_ancestral(g: MixedGraph) -> bool:
    return not validate_ancestral(g)


def is_acyclic_dag(g: MixedGraph) -> bool:
    return all(g.is_directed(u, v) or g.is_directed(v, u) for u, v in g.edge_pairs()) and not _directed_cycles(g)


def topological_order(g: MixedGraph) -> list[int]:
    indeg = [len(g.parents(v)) for v in range(g.n)]
    ready = [v for v in range(g.n) if indeg[v] == 0]
    order = []
    while ready:
        ready.sort()
        v = ready.pop(0)
        order.append(v)
        for w in g.children(v):
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    if len(order) != g.n:
        raise GraphError("graph has a directed cycle")
    return order


# separation

CRITERIA = ("m", "m_prime", "ac")


def _check_query(g: MixedGraph, x: int, y: int, cond: frozenset[int], criterion: str):
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}")
    if x == y:
        raise ValueError("x and y must differ")
    if criterion == "m" and (x in cond or y in cond):
        raise ValueError("m-separation requires x, y outside the conditioning set")
    if g.has_circles():
        raise GraphError("separation is undefined on graphs with circle marks")


def _collider_support(g: MixedGraph, x: int, y: int, cond: frozenset[int], criterion: str) -> frozenset[int]:
    if criterion == "m":
        return g.ancestors(cond) if cond else frozenset()
    return g.ancestors(cond | {x, y})


def _step_allowed(v: int, collider: bool, cond, support, criterion) -> bool:
    if collider:
        return v in support
    if criterion == "ac":
        return False
    return v not in cond


def is_separated(g: MixedGraph, x: int, y: int, cond: Iterable[int] = (), criterion: str = "m") -> bool:
    """m-, m'- or ac-separation of ``x`` and ``y`` given ``cond``.

    Breadth-first search over (vertex, arrowhead-on-arrival) states, which
    decides whether a connecting path exists without enumerating paths.
    """
    cond = frozenset(cond)
    _check_query(g, x, y, cond, criterion)
    support = _collider_support(g, x, y, cond, criterion)
    start = [(w, g.mark(x, w) is ARROW) for w in g.neighbors(x)]
    seen = set(start)
    queue = deque(start)
    while queue:
        v, into = queue.popleft()
        if v == y:
            return False
        for w in g.neighbors(v):
            collider = into and g.mark(w, v) is ARROW
            if not _step_allowed(v, collider, cond, support, criterion):
                continue
            state = (w, g.mark(v, w) is ARROW)
            if state not in seen:
                seen.add(state)
                queue.append(state)
    return True


def connecting_path(g: MixedGraph, x: int, y: int, cond: Iterable[int] = (), criterion: str = "m") -> list[int] | None:
    """A connecting path (distinct vertices) under ``criterion``, or None."""
    cond = frozenset(cond)
    _check_query(g, x, y, cond, criterion)
    support = _collider_support(g, x, y, cond, criterion)
    if is_separated(g, x, y, cond, criterion):
        return None

    def extend(path, on_path):
        v = path[-1]
        into = len(path) > 1 and g.mark(path[-2], v) is ARROW
        for w in g.neighbors(v):
            if w in on_path:
                continue
            if len(path) > 1:
                collider = into and g.mark(w, v) is ARROW
                if not _step_allowed(v, collider, cond, support, criterion):
                    continue
            if w == y:
                return path + [w]
            on_path.add(w)
            found = extend(path + [w], on_path)
            on_path.discard(w)
            if found:
                return found
        return None

    return extend([x], {x})


# ac-connected subsets

def _collider_connected(g: MixedGraph, u: int, v: int, allowed: frozenset[int], max_colliders: int | None) -> bool:
    """Collider path u *-> z1 <-> ... <-> zk <-* v with every z in ``allowed``."""
    frontier = [z for z in g.neighbors(u) if z != v and z in allowed and g.mark(u, z) is ARROW]
    seen = set(frontier)
    depth = 1
    while frontier:
        if max_colliders is not None and depth > max_colliders:
            return False
        nxt = []
        for z in frontier:
            if g.adjacent(v, z) and g.mark(v, z) is ARROW:
                return True
            for w in g.neighbors(z):
                if w in seen or w == u or w == v or w not in allowed:
                    continue
                if g.is_bidirected(z, w):
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
        depth += 1
    return False


def ac_connected(g: MixedGraph, subset: Iterable[int], max_colliders: int | None = None) -> bool:
    """Every pair of ``subset`` adjacent or joined by a collider path inside An(subset)."""
    c = frozenset(subset)
    if not c:
        raise ValueError("subset must be nonempty")
    if len(c) == 1:
        return True
    anc = g.ancestors(c)
    for u, v in combinations(sorted(c), 2):
        if g.adjacent(u, v):
            continue
        if not _collider_connected(g, u, v, anc, max_colliders):
            return False
    return True


def subset_count(n: int, max_size: int) -> int:
    return sum(comb(n, k) for k in range(1, max_size + 1))


def iter_ac_connected(g: MixedGraph, max_size: int | None = None, max_colliders: int | None = None,
                      ceiling: int = DEFAULT_SUBSET_CEILING) -> Iterator[tuple[int, ...]]:
    max_size = g.n if max_size is None else min(max_size, g.n)
    total = subset_count(g.n, max_size)
    if total > ceiling:
        raise ResourceLimitError(f"{total} candidate subsets exceed the ceiling of {ceiling}")
    if g.has_circles():
        raise GraphError("ac-connectivity is undefined on graphs with circle marks")
    for k in range(1, max_size + 1):
        for c in combinations(range(g.n), k):
            if ac_connected(g, c, max_colliders):
                yield c


def enumerate_ac_connected(g: MixedGraph, max_size: int | None = None, max_colliders: int | None = None,
                           ceiling: int = DEFAULT_SUBSET_CEILING) -> list[tuple[int, ...]]:
    """All ac-connected subsets, ordered by size then lexicographically."""
    return list(iter_ac_connected(g, max_size, max_colliders, ceiling))


def ac_family_difference(g1: MixedGraph, g2: MixedGraph) -> tuple[list[tuple[int, ...]], list[tuple[int, ...]]]:
    """Subsets ac-connected only in ``g1`` and only in ``g2``."""
    if g1.names != g2.names:
        raise GraphError("graphs must share the same vertex list")
    f1, f2 = set(enumerate_ac_connected(g1)), set(enumerate_ac_connected(g2))
    key = lambda c: (len(c), c)  # noqa: E731
    return sorted(f1 - f2, key=key), sorted(f2 - f1, key=key)


def markov_equivalent(g1: MixedGraph, g2: MixedGraph) -> bool:
    only1, only2 = ac_family_difference(g1, g2)
    return not only1 and not only2


def is_maximal(g: MixedGraph) -> bool:
    """No non-adjacent pair joined by an inducing (ac-connecting given nothing) path."""
    for u, v in combinations(range(g.n), 2):
        if not g.adjacent(u, v) and _collider_connected(g, u, v, g.ancestors({u, v}), None):
            return False
    return True


def unshielded_colliders(g: MixedGraph) -> set[tuple[int, int, int]]:
    out = set()
    for z in range(g.n):
        for a, b in combinations(g.neighbors(z), 2):
            if not g.adjacent(a, b) and g.mark(a, z) is ARROW and g.mark(b, z) is ARROW:
                out.add((a, z, b))
    return out


# latent projection and equivalence-class summary

def latent_project(dag: MixedGraph, observed: Iterable[int]) -> MixedGraph:
    """Maximal ancestral graph over ``observed`` implied by a DAG with the rest hidden.

    Two observed vertices are adjacent iff no set of other observed vertices
    d-separates them; the ancestral set An({x, y}) restricted to the observed
    vertices is a sufficient test set. Orientation follows ancestry in the DAG.
    """
    if not is_acyclic_dag(dag):
        raise GraphError("latent projection needs an acyclic, purely directed graph")
    obs = sorted(set(observed))
    if not obs:
        raise ValueError("observed set must be nonempty")
    pos = {v: i for i, v in enumerate(obs)}
    obs_set = frozenset(obs)
    edges = []
    for x, y in combinations(obs, 2):
        anc = dag.ancestors({x, y})
        sep = (anc & obs_set) - {x, y}
        if is_separated(dag, x, y, sep, "m"):
            continue
        if x in dag.ancestors({y}):
            edges.append((pos[x], pos[y], TAIL, ARROW))
        elif y in dag.ancestors({x}):
            edges.append((pos[x], pos[y], ARROW, TAIL))
        else:
            edges.append((pos[x], pos[y], ARROW, ARROW))
    return MixedGraph([dag.names[v] for v in obs], edges)


_ORIENTATIONS = ((TAIL, ARROW), (ARROW, TAIL), (ARROW, ARROW))


def markov_class(mag: MixedGraph, max_edges: int = 12) -> list[MixedGraph]:
    """All ancestral graphs on the skeleton of ``mag`` that are Markov equivalent to it."""
    if mag.n_edges > max_edges:
        raise ResourceLimitError(f"{mag.n_edges} edges exceed the oracle limit of {max_edges}")
    pairs = mag.edge_pairs()
    target_colliders = unshielded_colliders(mag)
    target_family = set(enumerate_ac_connected(mag))

    # unshielded triples checked as soon as both of their edges are assigned
    pair_pos = {p: i for i, p in enumerate(pairs)}
    triples_at: list[list[tuple[int, int, int, int, int]]] = [[] for _ in pairs]
    for z in range(mag.n):
        for a, b in combinations(mag.neighbors(z), 2):
            if mag.adjacent(a, b):
                continue
            ia, ib = pair_pos[tuple(sorted((a, z)))], pair_pos[tuple(sorted((b, z)))]
            triples_at[max(ia, ib)].append((a, z, b, ia, ib))

    chosen: list[tuple[Mark, Mark]] = [None] * len(pairs)

    def mark_at(i, vertex):
        u, v = pairs[i]
        return chosen[i][0] if vertex == u else chosen[i][1]

    out = []

    def rec(i):
        if i == len(pairs):
            g = MixedGraph(mag.names, [(u, v, mu, mv) for (u, v), (mu, mv) in zip(pairs, chosen)])
            if is_ancestral(g) and set(enumerate_ac_connected(g)) == target_family:
                out.append(g)
            return
        for o in _ORIENTATIONS:
            chosen[i] = o
            ok = True
            for a, z, b, ia, ib in triples_at[i]:
                coll = mark_at(ia, z) is ARROW and mark_at(ib, z) is ARROW
                if coll != ((a, z, b) in target_colliders or (b, z, a) in target_colliders):
                    ok = False
                    break
            if ok:
                rec(i + 1)
        chosen[i] = None

    rec(0)
    return out


def pag_oracle(mag: MixedGraph, max_edges: int = 12) -> MixedGraph:
    """Per-end consensus over the Markov class: agreed marks kept, others become circles."""
    members = markov_class(mag, max_edges)
    if not members:
        raise GraphError("input is not ancestral")
    edges = []
    for u, v in mag.edge_pairs():
        mu = {m.mark(v, u) for m in members}
        mv = {m.mark(u, v) for m in members}
        edges.append((u, v, mu.pop() if len(mu) == 1 else CIRCLE, mv.pop() if len(mv) == 1 else CIRCLE))
    return MixedGraph(mag.names, edges)
