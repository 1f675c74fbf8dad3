"""Command-line interface.

Exit codes: 0 success, 1 invalid input (parse or contract errors), 2 usage
errors and unreadable paths.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import bench
from .graph import (CRITERIA, GraphError, ac_family_difference, connecting_path, is_separated, latent_project,
                    markov_equivalent, pag_oracle, validate_ancestral)
from .graphio import format_graph, read_graph
from .infotheory import ResourceLimitError
from .network import NetworkParseError, hide, parse_network, sample
from .nml import dag_conditional_entropy, score_terms
from .search import SearchOptions, learn
from .tabular import TableParseError, load_table, write_table

log = logging.getLogger("acsearch")


class Unreadable(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise Unreadable(f"cannot read {path}: {exc.strerror or exc}") from None


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise Unreadable(f"cannot write {path}: {exc.strerror or exc}") from None


def _names(arg: str | None) -> list[str]:
    return [s.strip() for s in arg.split(",") if s.strip()] if arg else []


def _seed(args) -> int:
    if args.seed is None:
        args.seed = int(np.random.SeedSequence().entropy % (2**32))
    return args.seed


def _convert(value: float, units: str) -> float:
    return value / math.log(2) if units == "bits" else value


def _fmt_set(names) -> str:
    return "{" + ",".join(names) + "}"


def _options(args) -> SearchOptions:
    return SearchOptions(max_parents=args.max_parents, max_iterations=args.max_iterations,
                         regularizer=args.regularizer, seed=args.seed, max_subset=args.max_subset,
                         workers=args.workers)


# subcommands

def cmd_learn(args) -> int:
    seed = _seed(args)
    table = load_table(_read(args.data))
    initial = read_graph(_read(args.initial)) if args.initial else None
    report = learn(table, _options(args), initial)
    g = report.graph
    graph_text = format_graph(g)
    names = table.names
    record = {
        "seed": seed,
        "termination": report.termination,
        "trajectory": [_convert(v, args.units) for v in report.trajectory],
        "units": args.units,
        "removed_edges": [[names[u], names[v]] for u, v in report.removed_edges],
        "moves": [{"edge": [names[m.edge[0]], names[m.edge[1]]], "from": m.before, "to": m.after,
                   "delta": _convert(m.delta, args.units)} for m in report.moves],
        "edge_scores": [{"edge": [names[u], names[v]], **{o: _convert(s, args.units) for o, s in sc.items()}}
                        for (u, v), sc in sorted(report.edge_scores.items())],
        "equivalent_orientations": [[names[u], names[v]] for u, v in report.equivalent_orientations()],
        "residual_cycles": [{"kind": c.kind, "vertices": [names[k] for k in c.vertices]} for c in report.residual_cycles],
        "repairs": [{"edge": [names[r.edge[0]], names[r.edge[1]]], "from": r.before, "to": r.after}
                    for r in report.repairs],
        "excluded": report.excluded,
    }
    if args.output:
        _write(args.output, graph_text)
    if args.report:
        _write(args.report, json.dumps(record, indent=2, sort_keys=True) + "\n")
    print(f"# seed: {seed}")
    print(f"# termination: {report.termination} after {len(report.moves)} moves")
    if report.residual_cycles:
        print(f"# repaired {len(report.repairs)} edges to break {len(report.residual_cycles)} longer cycles")
    if not args.output:
        sys.stdout.write(graph_text)
    return 0


def cmd_score(args) -> int:
    table = load_table(_read(args.data))
    g = read_graph(_read(args.graph))
    problems = validate_ancestral(g)
    if problems:
        raise GraphError(f"graph is not ancestral: {problems[0].kind} on "
                         + ",".join(g.names[k] for k in problems[0].vertices))
    if g.has_undirected() or g.has_circles():
        raise GraphError("the ac-subset decomposition covers directed and bidirected edges only; "
                         "orient undirected or circle-marked edges first")
    if g.names != table.names:
        raise GraphError("graph vertices must match the data columns in the same order")
    terms = score_terms(table, g, args.regularizer, args.max_subset, args.max_colliders)
    total = math.fsum(t.sign * t.info for t in terms)
    print(f"score: {_convert(total, args.units):.12g} {args.units}")
    print(f"subsets: {len(terms)}")
    if args.oracle_bn:
        if any(g.is_bidirected(u, v) for u, v in g.edge_pairs()):
            raise GraphError("--oracle-bn needs a purely directed graph")
        oracle = dag_conditional_entropy(table, g)
        print(f"oracle: {_convert(oracle, args.units):.12g} {args.units}")
    if args.ledger:
        for t in terms:
            sign = "+" if t.sign > 0 else "-"
            print(f"{_fmt_set(g.names[k] for k in t.subset)}\t{sign}\t{_convert(t.info, args.units):.12g}")
    return 0


def cmd_equiv(args) -> int:
    g1 = read_graph(_read(args.graph1))
    g2 = read_graph(_read(args.graph2))
    if g1.names != g2.names:
        raise GraphError("graphs must have the same vertices in the same order")
    for g in (g1, g2):
        if validate_ancestral(g):
            raise GraphError("both graphs must be ancestral")
    if markov_equivalent(g1, g2):
        print("equivalent")
        return 0
    only1, only2 = ac_family_difference(g1, g2)
    print("not equivalent")
    for s in only1:
        print(f"only in first: {_fmt_set(g1.names[k] for k in s)}")
    for s in only2:
        print(f"only in second: {_fmt_set(g1.names[k] for k in s)}")
    return 0


def cmd_separation(args) -> int:
    g = read_graph(_read(args.graph))
    x, y = g.index(args.x), g.index(args.y)
    cond = [g.index(n) for n in _names(args.given)]
    if is_separated(g, x, y, cond, args.criterion):
        print("separated")
    else:
        path = connecting_path(g, x, y, cond, args.criterion)
        print("connected")
        if path:
            print("path: " + " ".join(g.names[k] for k in path))
    return 0


def _hidden_for(net, args, rng) -> list[str]:
    if args.hide and args.hide_fraction is not None:
        raise ValueError("give either --hide or --hide-fraction, not both")
    if args.hide:
        names = _names(args.hide)
        for n in names:
            net.index(n)
        if len(set(names)) >= net.n_vars:
            raise ValueError("cannot hide every variable")
        return [n for n in net.names if n in set(names)]
    if args.hide_fraction:
        return bench.choose_hidden(net, bench.hidden_count(net.n_vars, args.hide_fraction), rng)
    return []


def cmd_simulate(args) -> int:
    seed = _seed(args)
    net = parse_network(_read(args.network))
    hide_ss, data_ss = np.random.SeedSequence(seed).spawn(2)
    hidden = _hidden_for(net, args, np.random.default_rng(hide_ss))
    table = hide(sample(net, args.n, data_ss), hidden)
    buf = io.StringIO()
    write_table(table, buf)
    _write(args.output, buf.getvalue())
    if args.truth:
        observed = [v for v, n in enumerate(net.names) if n not in hidden]
        _write(args.truth, format_graph(latent_project(net.dag(), observed)))
    print(f"# seed: {seed}")
    print(f"hidden: {','.join(hidden) if hidden else '-'}")
    print(f"samples: {table.n_samples} variables: {table.n_vars}")
    return 0


def cmd_project(args) -> int:
    net = parse_network(_read(args.network))
    hidden = set(_names(args.hide))
    for n in hidden:
        net.index(n)
    observed = [v for v, n in enumerate(net.names) if n not in hidden]
    if not observed:
        raise ValueError("cannot hide every variable")
    g = latent_project(net.dag(), observed)
    if args.pag:
        g = pag_oracle(g)
    text = format_graph(g)
    if args.output:
        _write(args.output, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_benchmark(args) -> int:
    seed = _seed(args)
    net = parse_network(_read(args.network))
    sizes = [int(s) for s in _names(args.n)]
    fractions = [float(s) for s in _names(args.hide_fractions)]
    for f in fractions:
        bench.hidden_count(net.n_vars, f)
    records = bench.benchmark(net, sizes, fractions, args.replicates, seed, _options(args), args.workers,
                              args.bootstrap, args.timing)
    buf = io.StringIO()
    bench.write_records(records, buf)
    _write(args.output, buf.getvalue())
    print(f"# seed: {seed}")
    print("n\thidden\truns\tfailed\tprecision [95% CI]\trecall [95% CI]")
    for s in bench.summarize(records):
        def cell(v):
            return "-" if v is None else f"{v[0]:.3f} [{v[1]:.3f}, {v[2]:.3f}]"
        print(f"{s.n}\t{s.hide_fraction:g}\t{s.runs}\t{s.failures}\t{cell(s.precision)}\t{cell(s.recall)}")
    return 0


# parser

def _add_search_flags(p, regularizers=("fnml", "bic"), default="fnml"):
    p.add_argument("--max-parents", type=int, default=5)
    p.add_argument("--max-iterations", type=int, default=1000)
    p.add_argument("--regularizer", choices=regularizers, default=default)
    p.add_argument("--max-subset", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="acsearch", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--units", choices=("nats", "bits"), default="nats")
        return p

    p = common(sub.add_parser("learn", help="learn an ancestral graph from data"))
    p.add_argument("data")
    p.add_argument("--initial", help="initial graph instead of the pairwise skeleton")
    p.add_argument("--output", help="graph file (default: standard output)")
    p.add_argument("--report", help="JSON report file")
    _add_search_flags(p)
    p.set_defaults(func=cmd_learn)

    p = common(sub.add_parser("score", help="likelihood score of a graph summed over ac-connected subsets"))
    p.add_argument("data")
    p.add_argument("graph")
    p.add_argument("--regularizer", choices=("none", "bic"), default="none")
    p.add_argument("--max-subset", type=int, default=None)
    p.add_argument("--max-colliders", type=int, default=None)
    p.add_argument("--ledger", action="store_true", help="print every subset term")
    p.add_argument("--oracle-bn", action="store_true", help="also print the conditional-entropy sum of a DAG")
    p.set_defaults(func=cmd_score)

    p = common(sub.add_parser("equiv", help="Markov equivalence of two ancestral graphs"))
    p.add_argument("graph1")
    p.add_argument("graph2")
    p.set_defaults(func=cmd_equiv)

    p = common(sub.add_parser("separation", help="separation query"))
    p.add_argument("graph")
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("--given", default="", help="comma-separated conditioning set")
    p.add_argument("--criterion", choices=CRITERIA, default="m")
    p.set_defaults(func=cmd_separation)

    p = common(sub.add_parser("simulate", help="sample a dataset from a network"))
    p.add_argument("network")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--hide", help="comma-separated hidden variables")
    p.add_argument("--hide-fraction", type=float, default=None)
    p.add_argument("--output", required=True)
    p.add_argument("--truth", help="write the projected true graph here")
    p.set_defaults(func=cmd_simulate)

    p = common(sub.add_parser("project", help="project a network onto its observed variables"))
    p.add_argument("network")
    p.add_argument("--hide", default="")
    p.add_argument("--pag", action="store_true", help="mark non-invariant ends with circles")
    p.add_argument("--output")
    p.set_defaults(func=cmd_project)

    p = common(sub.add_parser("benchmark", help="repeated sample/hide/learn/grade runs"))
    p.add_argument("network")
    p.add_argument("--n", required=True, help="comma-separated sample sizes")
    p.add_argument("--hide-fractions", default="0")
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--output", required=True)
    p.add_argument("--bootstrap", action="store_true")
    p.add_argument("--timing", action="store_true", help="record runtimes (makes reruns differ)")
    _add_search_flags(p)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except Unreadable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TableParseError, NetworkParseError, GraphError, ResourceLimitError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
