import random

import pytest
from hypothesis import given, settings, strategies as st

from acsearch.graph import ARROW, CIRCLE, TAIL, GraphError, MixedGraph
from acsearch.graphio import format_graph, parse_edge_line, read_graph
import oracles


def test_edge_tokens():
    assert parse_edge_line("A -> B") == ("A", "B", TAIL, ARROW)
    assert parse_edge_line("A <-> B") == ("A", "B", ARROW, ARROW)
    assert parse_edge_line("A -- B") == ("A", "B", TAIL, TAIL)
    assert parse_edge_line("A o-> B") == ("A", "B", CIRCLE, ARROW)
    assert parse_edge_line("A <- B") == ("A", "B", ARROW, TAIL)
    with pytest.raises(GraphError):
        parse_edge_line("A => B")


def test_isolated_vertices_and_comments_survive():
    g = read_graph("# note\nvertices: A,B,C\nA -> B\n")
    assert g.n == 3 and g.neighbors(2) == ()
    assert read_graph(format_graph(g)) == g


def test_errors_name_the_line():
    with pytest.raises(GraphError, match="line 2"):
        read_graph("vertices: A,B\nA ~ B\n")
    with pytest.raises(GraphError):
        read_graph("A -> B\n")
    with pytest.raises(GraphError):
        read_graph("vertices: A,B\nA -> C\n")


def test_arrowhead_written_on_the_right():
    g = MixedGraph(["A", "B"], [(0, 1, ARROW, TAIL)])
    assert format_graph(g).splitlines()[1] == "B -> A"


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(1, 7))
def test_round_trip(seed, n):
    rng = random.Random(seed)
    g = oracles.random_ancestral(n, rng)
    # sprinkle circles and undirected edges; the format carries any marks
    edges = []
    for u, v, a, b in g.edges():
        if rng.random() < 0.2:
            a = CIRCLE
        if rng.random() < 0.1:
            a, b = TAIL, TAIL
        edges.append((u, v, a, b))
    h = MixedGraph(g.names, edges)
    assert read_graph(format_graph(h)) == h
