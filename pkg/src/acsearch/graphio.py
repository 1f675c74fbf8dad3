"""Edge-list text format for mixed graphs.

    vertices: A,B,C,D
    # comment
    A -> B
    B <-> C
    C -- D
    A o-> D

An edge token is an optional left mark (``<`` arrow, ``o`` circle), one or
more dashes, and an optional right mark (``>`` arrow, ``o`` circle); a
missing mark is a tail.
"""

from __future__ import annotations

import re
from typing import TextIO

from .graph import ARROW, CIRCLE, TAIL, GraphError, Mark, MixedGraph

_EDGE = re.compile(r"^\s*(\S+)\s+([<o]?-+[>o]?)\s+(\S+)\s*$")
_LEFT = {"<": ARROW, "o": CIRCLE, "": TAIL}
_RIGHT = {">": ARROW, "o": CIRCLE, "": TAIL}
_LEFT_SYM = {ARROW: "<", CIRCLE: "o", TAIL: ""}
_RIGHT_SYM = {ARROW: ">", CIRCLE: "o", TAIL: ""}


def parse_edge_line(line: str) -> tuple[str, str, Mark, Mark]:
    m = _EDGE.match(line)
    if not m:
        raise GraphError(f"cannot parse edge {line.strip()!r}")
    a, token, b = m.groups()
    left = token[0] if token[0] in "<o" else ""
    right = token[-1] if token[-1] in ">o" else ""
    if token.strip("<>o") == "" or set(token.strip("<>o")) != {"-"}:
        raise GraphError(f"cannot parse edge {line.strip()!r}")
    return a, b, _LEFT[left], _RIGHT[right]


def edge_line(g: MixedGraph, u: int, v: int) -> str:
    mu, mv = g.mark(v, u), g.mark(u, v)
    # put the arrowhead on the right when only one end has one
    if mu is ARROW and mv is not ARROW:
        u, v, mu, mv = v, u, mv, mu
    token = _LEFT_SYM[mu] + ("--" if mu is TAIL and mv is TAIL else "-") + _RIGHT_SYM[mv]
    return f"{g.names[u]} {token} {g.names[v]}"


def read_graph(source: TextIO | str) -> MixedGraph:
    text = source if isinstance(source, str) else source.read()
    names = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.lower().startswith("vertices:"):
            if names is not None:
                raise GraphError(f"line {lineno}: duplicate vertices declaration")
            names = [n.strip() for n in line.split(":", 1)[1].split(",") if n.strip()]
            continue
        if names is None:
            raise GraphError(f"line {lineno}: edges before the 'vertices:' declaration")
        try:
            edges.append(parse_edge_line(line))
        except GraphError as exc:
            raise GraphError(f"line {lineno}: {exc}") from None
    if names is None:
        raise GraphError("missing 'vertices:' declaration")
    index = {n: i for i, n in enumerate(names)}
    triples = []
    for a, b, ma, mb in edges:
        if a not in index or b not in index:
            missing = a if a not in index else b
            raise GraphError(f"edge mentions undeclared vertex {missing!r}")
        triples.append((index[a], index[b], ma, mb))
    return MixedGraph(names, triples)


def format_graph(g: MixedGraph) -> str:
    lines = ["vertices: " + ",".join(g.names)]
    lines += [edge_line(g, u, v) for u, v in g.edge_pairs()]
    return "\n".join(lines) + "\n"


def write_graph(g: MixedGraph, sink: TextIO) -> None:
    sink.write(format_graph(g))
