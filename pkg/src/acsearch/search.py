"""Two-step greedy search over ancestral graphs.

Step 1 picks, for every node, the subset of its current neighbours that
minimizes the node score; the choices prime edge marks and edges chosen by
neither endpoint are dropped. Step 2 then repeatedly applies the single
edge re-orientation with the largest score decrement that does not close a
directed or almost directed triangle.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

from .graph import (ARROW, TAIL, GraphError, MixedGraph, Violation, validate_ancestral)
from .nml import ORIENTATIONS, ScoreContext, edge_orientation_score, node_score
from .tabular import CategoricalTable

log = logging.getLogger(__name__)

_MARKS = {"x_to_y": (TAIL, ARROW), "y_to_x": (ARROW, TAIL), "bidirected": (ARROW, ARROW)}
_RANK = {o: i for i, o in enumerate(ORIENTATIONS)}
# moves must beat the current orientation by more than rounding noise
_MIN_DECREMENT = 1e-12


@dataclass
class SearchOptions:
    max_parents: int = 5
    max_iterations: int = 1000
    regularizer: str = "fnml"
    seed: int = 0
    max_subset: int | None = None
    workers: int = 1


@dataclass(frozen=True)
class Move:
    edge: tuple[int, int]
    before: str
    after: str
    delta: float


@dataclass(frozen=True)
class Repair:
    edge: tuple[int, int]
    before: str
    after: str
    violation: Violation


@dataclass
class SearchReport:
    graph: MixedGraph
    termination: str  # "converged" | "limit_cycle" | "max_iterations"
    trajectory: list[float]
    removed_edges: list[tuple[int, int]] = field(default_factory=list)
    edge_scores: dict[tuple[int, int], dict[str, float]] = field(default_factory=dict)
    moves: list[Move] = field(default_factory=list)
    objective: list[float] = field(default_factory=list)
    residual_cycles: list[Violation] = field(default_factory=list)
    repairs: list[Repair] = field(default_factory=list)
    assignment: dict[int, frozenset] = field(default_factory=dict)
    initial_graph: MixedGraph | None = None
    primed_graph: MixedGraph | None = None
    excluded: list[str] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.termination == "converged"

    def equivalent_orientations(self) -> list[tuple[int, int]]:
        """Edges whose three orientation scores tie (Markov-equivalent choices)."""
        out = []
        for e, s in sorted(self.edge_scores.items()):
            vals = [s[o] for o in ORIENTATIONS]
            if max(vals) - min(vals) <= 1e-12:
                out.append(e)
        return out


def orientation_of(g: MixedGraph, u: int, v: int) -> str:
    """Orientation name of the ``u``-``v`` edge read with ``x=u``, ``y=v``."""
    if g.is_directed(u, v):
        return "x_to_y"
    if g.is_directed(v, u):
        return "y_to_x"
    if g.is_bidirected(u, v):
        return "bidirected"
    raise GraphError(f"edge {g.names[u]}-{g.names[v]} is not directed or bidirected")


def reoriented(g: MixedGraph, u: int, v: int, orientation: str) -> MixedGraph:
    mu, mv = _MARKS[orientation]
    return g.with_edge(u, v, mu, mv)


def parents_and_spouses(g: MixedGraph, v: int, exclude: int) -> frozenset[int]:
    return frozenset((g.parents(v) | g.spouses(v)) - {exclude})


# skeleton initializer

def init_skeleton(data, skip: set[int] = frozenset()) -> MixedGraph:
    """Undirected edge wherever a directed link beats disconnection with no other parents."""
    ctx = data if isinstance(data, ScoreContext) else ScoreContext(data)
    m = ctx.table.n_vars
    edges = []
    for x, y in combinations(range(m), 2):
        if x in skip or y in skip:
            continue
        if edge_orientation_score(ctx, x, y, (), (), "x_to_y") < 0:
            edges.append((x, y, TAIL, TAIL))
    return MixedGraph(ctx.table.names, edges)


# step 1

def _subsets(cands: list[int]):
    for k in range(len(cands) + 1):
        yield from combinations(cands, k)


def best_parent_set(ctx: ScoreContext, v: int, cands: list[int], max_parents: int) -> frozenset[int]:
    """Exhaustive search up to ``max_parents`` candidates, greedy add/remove above."""
    cands = sorted(cands)
    if len(cands) <= max_parents:
        best, best_score = (), node_score(ctx, v, ())
        for s in _subsets(cands):
            sc = node_score(ctx, v, s)
            if sc < best_score - _MIN_DECREMENT:
                best, best_score = s, sc
        return frozenset(best)

    chosen: set[int] = set()
    score = node_score(ctx, v, ())
    while True:
        changed = False
        # forward
        while True:
            trial = [(node_score(ctx, v, chosen | {c}), c) for c in cands if c not in chosen]
            if not trial:
                break
            sc, c = min(trial)
            if sc < score - _MIN_DECREMENT:
                chosen.add(c)
                score = sc
                changed = True
            else:
                break
        # backward
        while chosen:
            sc, c = min((node_score(ctx, v, chosen - {c}), c) for c in sorted(chosen))
            if sc < score - _MIN_DECREMENT:
                chosen.discard(c)
                score = sc
                changed = True
            else:
                break
        if not changed:
            return frozenset(chosen)


def step1(data, g0: MixedGraph, max_parents: int = 5, skip: set[int] = frozenset()):
    """Node-level parent/spouse selection, mark priming and edge removal.

    Returns the primed graph and the per-node selection. An unoriented edge
    (undirected or carrying circles) gets an arrowhead at every endpoint that
    selected the other end; directed and bidirected edges keep their marks.
    Edges selected by neither endpoint are removed.
    """
    ctx = data if isinstance(data, ScoreContext) else ScoreContext(data)
    if g0.names != ctx.table.names:
        raise GraphError("initial graph vertices must match the table columns in order")
    pairs = {p for p in g0.edge_pairs() if p[0] not in skip and p[1] not in skip}
    assignment: dict[int, frozenset] = {}
    while True:
        nbrs = {v: [] for v in range(g0.n)}
        for u, v in pairs:
            nbrs[u].append(v)
            nbrs[v].append(u)
        new = {v: best_parent_set(ctx, v, nbrs[v], max_parents) if nbrs[v] else frozenset() for v in range(g0.n)}
        kept = {(u, v) for u, v in pairs if u in new[v] or v in new[u]}
        if new == assignment and kept == pairs:
            break
        assignment, pairs = new, kept
    edges = []
    for u, v in sorted(pairs):
        if g0.is_directed(u, v) or g0.is_directed(v, u) or g0.is_bidirected(u, v):
            edges.append((u, v, g0.mark(v, u), g0.mark(u, v)))
            continue
        mu = ARROW if v in assignment[u] else TAIL
        mv = ARROW if u in assignment[v] else TAIL
        edges.append((u, v, mu, mv))
    return MixedGraph(g0.names, edges), assignment


# step 2

class _Scorer:
    def __init__(self, ctx: ScoreContext, workers: int = 1):
        self.ctx = ctx
        self.workers = workers
        self._cache: dict = {}

    def edge(self, g: MixedGraph, u: int, v: int) -> dict[str, float]:
        px = parents_and_spouses(g, u, v)
        py = parents_and_spouses(g, v, u)
        key = (u, v, px, py)
        hit = self._cache.get(key)
        if hit is None:
            hit = {o: edge_orientation_score(self.ctx, u, v, px, py, o) for o in ORIENTATIONS}
            self._cache[key] = hit
        return hit

    def all_edges(self, g: MixedGraph) -> dict[tuple[int, int], dict[str, float]]:
        pairs = g.edge_pairs()
        if self.workers > 1 and len(pairs) > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                scores = list(pool.map(lambda p: self.edge(g, *p), pairs))
        else:
            scores = [self.edge(g, u, v) for u, v in pairs]
        return dict(zip(pairs, scores))

    def objective(self, g: MixedGraph, scores=None) -> float:
        scores = scores if scores is not None else self.all_edges(g)
        return math.fsum(s[orientation_of(g, u, v)] for (u, v), s in scores.items())


def triangular_cycle(g: MixedGraph, u: int, v: int) -> tuple[int, int, int] | None:
    """A directed or almost directed cycle on a triangle through the ``u``-``v`` edge."""
    for w in g.neighbors(u):
        if w == v or not g.adjacent(w, v):
            continue
        tri = (u, v, w)
        for a, b, c in ((u, v, w), (v, w, u), (w, u, v), (u, w, v), (w, v, u), (v, u, w)):
            if g.is_directed(a, b) and g.is_directed(b, c) and g.is_directed(c, a):
                return tri
            # a -> b -> c together with a <-> c
            if g.is_directed(a, b) and g.is_directed(b, c) and g.is_bidirected(a, c):
                return tri
    return None


def step2(data, g1: MixedGraph, max_iterations: int = 1000, workers: int = 1) -> SearchReport:
    """Greedy edge re-orientation until no improving move, a revisited graph, or the iteration cap."""
    ctx = data if isinstance(data, ScoreContext) else ScoreContext(data)
    if g1.names != ctx.table.names:
        raise GraphError("graph vertices must match the table columns in order")
    if g1.has_undirected() or g1.has_circles():
        raise GraphError("step 2 needs every edge primed as directed or bidirected")
    scorer = _Scorer(ctx, workers)
    g = g1
    scores = scorer.all_edges(g)
    objective = [scorer.objective(g, scores)]
    trajectory = [objective[0]]
    history = {g.fingerprint(): 0}
    visited = [g]
    moves: list[Move] = []
    termination = "max_iterations"

    for _ in range(max_iterations):
        candidates = []
        for (u, v), s in scores.items():
            cur = orientation_of(g, u, v)
            for o in ORIENTATIONS:
                if o == cur:
                    continue
                delta = s[o] - s[cur]
                if delta < -_MIN_DECREMENT:
                    candidates.append((delta, (u, v), _RANK[o], o, cur))
        candidates.sort()
        chosen = None
        for delta, (u, v), _, o, cur in candidates:
            trial = reoriented(g, u, v, o)
            if triangular_cycle(trial, u, v) is None:
                chosen = (trial, Move((u, v), cur, o, delta))
                break
        if chosen is None:
            termination = "converged"
            break
        g, move = chosen
        moves.append(move)
        scores = scorer.all_edges(g)
        objective.append(scorer.objective(g, scores))
        trajectory.append(trajectory[-1] + move.delta)
        fp = g.fingerprint()
        if fp in history:
            termination = "limit_cycle"
            cycle = visited[history[fp]:]
            g = min(cycle, key=lambda h: (scorer.objective(h), sorted(h.fingerprint())))
            scores = scorer.all_edges(g)
            break
        history[fp] = len(visited)
        visited.append(g)

    residual = validate_ancestral(g)
    g, repairs = _repair(scorer, g)
    if repairs:
        scores = scorer.all_edges(g)
    return SearchReport(
        graph=g,
        termination=termination,
        trajectory=trajectory,
        edge_scores=scores,
        moves=moves,
        objective=objective,
        residual_cycles=residual,
        repairs=repairs,
        primed_graph=g1,
    )


def _repair(scorer: _Scorer, g: MixedGraph, limit: int = 100) -> tuple[MixedGraph, list[Repair]]:
    """Break cycles longer than triangles left by the local guard; every edit is returned."""
    repairs: list[Repair] = []
    violations = validate_ancestral(g)
    while violations and len(repairs) < limit:
        viol = violations[0]
        if viol.kind == "directed_cycle":
            cyc = viol.vertices
            cand_edges = [tuple(sorted((cyc[i], cyc[(i + 1) % len(cyc)]))) for i in range(len(cyc))]
        else:
            a, b = viol.vertices
            cand_edges = [tuple(sorted((a, b)))]
            # edges on directed paths a -> ... -> b
            anc_b = g.ancestors({b})
            cand_edges += [tuple(sorted((p, q))) for p in anc_b for q in g.children(p) if q in anc_b and p != q]
        best = None
        base = scorer.objective(g)
        for u, v in sorted(set(cand_edges)):
            cur = orientation_of(g, u, v)
            for o in ORIENTATIONS:
                if o == cur:
                    continue
                trial = reoriented(g, u, v, o)
                left = validate_ancestral(trial)
                key = (len(left), scorer.objective(trial) - base, (u, v), _RANK[o])
                if best is None or key < best[0]:
                    best = (key, trial, Repair((u, v), cur, o, viol), left)
        if best is None or best[0][0] >= len(violations):
            log.warning("could not repair %s", viol)
            break
        _, g, rep, violations = best
        repairs.append(rep)
    return g, repairs


def learn(table: CategoricalTable, options: SearchOptions | None = None, initial: MixedGraph | None = None) -> SearchReport:
    """Skeleton (or user graph), then step 1, then step 2."""
    options = options or SearchOptions()
    ctx = ScoreContext(table, options.regularizer)
    skip = {k for k, r in enumerate(table.levels) if r == 1}
    excluded = [table.names[k] for k in sorted(skip)]
    if excluded:
        log.warning("single-level variables excluded from scoring: %s", ", ".join(excluded))
    g0 = initial if initial is not None else init_skeleton(ctx, skip)
    if g0.names != table.names:
        raise GraphError("initial graph vertices must match the table columns in order")
    g1, assignment = step1(ctx, g0, options.max_parents, skip)
    report = step2(ctx, g1, options.max_iterations, options.workers)
    kept = set(g1.edge_pairs())
    report.removed_edges = [p for p in g0.edge_pairs() if p not in kept]
    report.assignment = assignment
    report.initial_graph = g0
    report.excluded = excluded
    return report
