"""Benchmark harness: sample, hide, learn, project the truth and grade.

Grading: an edge present in both graphs is a true positive when every mark
agrees, a circle in the truth matching any mark. A shared edge with a
disagreeing mark counts once as a false positive and once as a false
negative; extra predicted edges are false positives and missing truth
edges false negatives.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, TextIO

import numpy as np
from scipy import stats

from .graph import CIRCLE, GraphError, MixedGraph, latent_project, pag_oracle
from .graphio import edge_line
from .network import DiscreteNetwork, hide, sample
from .search import SearchOptions, learn

PAG_EDGE_LIMIT = 12


@dataclass(frozen=True)
class EdgeVerdict:
    pair: tuple[str, str]
    verdict: str  # "tp" | "fp" | "fn" | "mismatch"
    predicted: str | None
    truth: str | None


@dataclass
class BenchmarkResult:
    tp: int
    fp: int
    fn: int
    verdicts: list[EdgeVerdict] = field(default_factory=list)
    truth_mode: str = "pag"

    @property
    def precision(self) -> float | None:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else None

    @property
    def recall(self) -> float | None:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else None


def _marks_compatible(pred: MixedGraph, truth: MixedGraph, u: int, v: int) -> bool:
    for a, b in ((u, v), (v, u)):
        t = truth.mark(a, b)
        if t is not CIRCLE and pred.mark(a, b) is not t:
            return False
    return True


def grade(predicted: MixedGraph, truth: MixedGraph, truth_mode: str = "pag") -> BenchmarkResult:
    if predicted.names != truth.names:
        raise GraphError("predicted and true graphs must share the same vertices in the same order")
    tp = fp = fn = 0
    verdicts = []
    pairs = sorted(set(predicted.edge_pairs()) | set(truth.edge_pairs()))
    for u, v in pairs:
        in_p, in_t = predicted.adjacent(u, v), truth.adjacent(u, v)
        p_line = edge_line(predicted, u, v) if in_p else None
        t_line = edge_line(truth, u, v) if in_t else None
        if in_p and in_t:
            if _marks_compatible(predicted, truth, u, v):
                tp += 1
                kind = "tp"
            else:
                fp += 1
                fn += 1
                kind = "mismatch"
        elif in_p:
            fp += 1
            kind = "fp"
        else:
            fn += 1
            kind = "fn"
        verdicts.append(EdgeVerdict((truth.names[u], truth.names[v]), kind, p_line, t_line))
    return BenchmarkResult(tp, fp, fn, verdicts, truth_mode)


def _connected(g: MixedGraph) -> bool:
    if g.n == 0:
        return True
    seen, stack = {0}, [0]
    while stack:
        v = stack.pop()
        for w in g.neighbors(v):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == g.n


def choose_hidden(net: DiscreteNetwork, count: int, rng: np.random.Generator) -> list[str]:
    """Seeded sequential choice of variables whose hiding keeps the projected graph connected."""
    dag = net.dag()
    hidden: list[int] = []
    for _ in range(count):
        observed = [v for v in range(net.n_vars) if v not in hidden]
        for v in rng.permutation(observed):
            rest = [w for w in observed if w != v]
            if rest and _connected(latent_project(dag, rest)):
                hidden.append(int(v))
                break
        else:
            raise ValueError(f"cannot hide {count} variables without disconnecting the observed graph")
    return sorted((net.names[v] for v in hidden), key=net.names.index)


def true_graph(net: DiscreteNetwork, hidden: Iterable[str], edge_limit: int = PAG_EDGE_LIMIT) -> tuple[MixedGraph, str]:
    """Projection of the network onto the observed variables, summarized as a PAG when small enough."""
    hidden = set(hidden)
    observed = [v for v, n in enumerate(net.names) if n not in hidden]
    mag = latent_project(net.dag(), observed)
    if mag.n_edges <= edge_limit:
        return pag_oracle(mag, edge_limit), "pag"
    return mag, "mag"


def hidden_count(n_vars: int, fraction: float) -> int:
    if not 0.0 <= fraction < 1.0:
        raise ValueError("hide fraction must lie in [0, 1)")
    k = int(round(fraction * n_vars))
    if k >= n_vars:
        raise ValueError("hide fraction leaves no observed variable")
    return k


@dataclass(frozen=True)
class Replicate:
    seed: int
    n: int
    hide_fraction: float
    replicate: int


def replicate_data(net: DiscreteNetwork, job: Replicate, bootstrap: bool = False):
    """Hidden variables and observed table of one replicate, fixed by its seed coordinates."""
    ss = np.random.SeedSequence(job.seed, spawn_key=(job.n, int(round(job.hide_fraction * 1e6)), job.replicate))
    hide_ss, data_ss, boot_ss = ss.spawn(3)
    hidden = choose_hidden(net, hidden_count(net.n_vars, job.hide_fraction), np.random.default_rng(hide_ss))
    table = hide(sample(net, job.n, data_ss), hidden)
    if bootstrap:
        table = table.resample(np.random.default_rng(boot_ss))
    return hidden, table


def run_replicate(net: DiscreteNetwork, job: Replicate, options: SearchOptions, bootstrap: bool = False,
                  timing: bool = False) -> dict:
    """One pipeline run; failures are returned as records with an ``error`` field."""
    record = {"seed": job.seed, "replicate": job.replicate, "n": job.n, "hide_fraction": job.hide_fraction}
    t0 = time.perf_counter()
    try:
        hidden, table = replicate_data(net, job, bootstrap)
        report = learn(table, options)
        truth, mode = true_graph(net, hidden)
        result = grade(report.graph, truth, mode)
        record.update(hidden=hidden, tp=result.tp, fp=result.fp, fn=result.fn, precision=result.precision,
                      recall=result.recall, truth_mode=mode, termination=report.termination,
                      repairs=len(report.repairs), error=None)
    except Exception as exc:  # recorded so the rest of the run continues
        record.update(hidden=None, tp=None, fp=None, fn=None, precision=None, recall=None, truth_mode=None,
                      termination=None, repairs=None, error=f"{type(exc).__name__}: {exc}")
    record["runtime"] = round(time.perf_counter() - t0, 3) if timing else None
    return record


def benchmark(net: DiscreteNetwork, sizes: Iterable[int], fractions: Iterable[float], replicates: int, seed: int,
              options: SearchOptions | None = None, workers: int = 1, bootstrap: bool = False,
              timing: bool = False) -> list[dict]:
    options = options or SearchOptions(seed=seed)
    fractions = list(fractions)
    for f in fractions:
        hidden_count(net.n_vars, f)
    jobs = [Replicate(seed, n, f, r) for n in sizes for f in fractions for r in range(replicates)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            futures = [pool.submit(run_replicate, net, j, options, bootstrap, timing) for j in jobs]
            return [f.result() for f in futures]
    return [run_replicate(net, j, options, bootstrap, timing) for j in jobs]


def mean_interval(values: list[float], level: float = 0.95) -> tuple[float, float, float]:
    """Mean with a Student-t confidence interval; the interval collapses for one value."""
    arr = np.asarray(values, dtype=float)
    m = float(arr.mean())
    if len(arr) < 2:
        return m, m, m
    half = float(stats.t.ppf(0.5 + level / 2, len(arr) - 1) * arr.std(ddof=1) / math.sqrt(len(arr)))
    return m, m - half, m + half


@dataclass
class CellSummary:
    n: int
    hide_fraction: float
    runs: int
    failures: int
    precision: tuple[float, float, float] | None
    recall: tuple[float, float, float] | None


def summarize(records: list[dict]) -> list[CellSummary]:
    cells: dict[tuple[int, float], list[dict]] = {}
    for r in records:
        cells.setdefault((r["n"], r["hide_fraction"]), []).append(r)
    out = []
    for (n, f), rs in cells.items():
        ok = [r for r in rs if r["error"] is None]
        prec = [r["precision"] for r in ok if r["precision"] is not None]
        rec = [r["recall"] for r in ok if r["recall"] is not None]
        out.append(CellSummary(n, f, len(rs), len(rs) - len(ok),
                               mean_interval(prec) if prec else None, mean_interval(rec) if rec else None))
    return out


def write_records(records: list[dict], sink: TextIO) -> None:
    for r in records:
        sink.write(json.dumps(r, sort_keys=True) + "\n")


def read_records(source: TextIO) -> list[dict]:
    return [json.loads(line) for line in source if line.strip()]


def summary_dict(s: CellSummary) -> dict:
    return asdict(s)
