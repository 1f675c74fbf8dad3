import json

import pytest

from acsearch.cli import main
from acsearch.data import data_path
from acsearch.graphio import read_graph
from acsearch.bench import read_records
from acsearch.tabular import load_table

CHAIN_NET = """var A: a0,a1
var B: b0,b1
var C: c0,c1
cpt A: 0.5 0.5
cpt B | A: 0.9 0.1 ; 0.1 0.9
cpt C | B: 0.85 0.15 ; 0.15 0.85
"""

VSTRUCT_NET = """var X: 0,1,2
var W: 0,1,2
var Z: 0,1,2
cpt X: 0.34 0.33 0.33
cpt W: 0.33 0.34 0.33
cpt Z | X,W: 0.9 0.05 0.05 ; 0.6 0.3 0.1 ; 0.3 0.4 0.3 ; 0.6 0.3 0.1 ; 0.3 0.4 0.3 ; 0.1 0.3 0.6 ; 0.3 0.4 0.3 ; 0.1 0.3 0.6 ; 0.05 0.05 0.9
"""


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def vdata(tmp_path, capsys):
    net = tmp_path / "v.net"
    net.write_text(VSTRUCT_NET)
    data = tmp_path / "v.csv"
    code, _, _ = run(capsys, "simulate", net, "--n", 5000, "--seed", 1, "--output", data)
    assert code == 0
    return data


def test_learn_v_structure(vdata, tmp_path, capsys):
    out_graph = tmp_path / "g.txt"
    report = tmp_path / "r.json"
    code, out, _ = run(capsys, "learn", vdata, "--seed", 7, "--output", out_graph, "--report", report)
    assert code == 0 and "# seed: 7" in out
    lines = out_graph.read_text().splitlines()
    assert "X -> Z" in lines and "W -> Z" in lines
    rec = json.loads(report.read_text())
    assert rec["termination"] == "converged" and rec["seed"] == 7


def test_learn_twice_is_byte_identical(vdata, tmp_path, capsys):
    for name in ("a", "b"):
        run(capsys, "learn", vdata, "--seed", 7, "--output", tmp_path / f"{name}.txt", "--report", tmp_path / f"{name}.json")
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_learn_to_stdout_reloads(vdata, capsys):
    code, out, _ = run(capsys, "learn", vdata, "--seed", 1)
    g = read_graph(out)
    assert g.names == ("X", "W", "Z")


def test_unreadable_path_exit_code(capsys, tmp_path):
    code, _, err = run(capsys, "learn", tmp_path / "missing.csv")
    assert code == 2 and "cannot read" in err


def test_random_seed_is_echoed(vdata, capsys):
    code, out, _ = run(capsys, "learn", vdata)
    assert code == 0 and out.startswith("# seed: ")


def test_score_empty_graph_and_oracle(vdata, tmp_path, capsys):
    t = load_table(vdata.read_text())
    empty = tmp_path / "e.txt"
    empty.write_text("vertices: X,W,Z\n")
    code, out, _ = run(capsys, "score", vdata, empty)
    from acsearch.infotheory import entropy
    assert float(out.split()[1]) == pytest.approx(sum(entropy(t, [k]) for k in range(3)), abs=1e-9)
    dag = tmp_path / "d.txt"
    dag.write_text("vertices: X,W,Z\nX -> Z\nW -> Z\n")
    code, out, _ = run(capsys, "score", vdata, dag, "--oracle-bn", "--ledger")
    lines = out.splitlines()
    assert float(lines[0].split()[1]) == pytest.approx(float(lines[2].split()[1]), abs=1e-9)
    assert lines[1] == "subsets: 6"
    assert any(line.startswith("{X,W,Z}\t+") for line in lines)


def test_score_bits(vdata, tmp_path, capsys):
    empty = tmp_path / "e.txt"
    empty.write_text("vertices: X,W,Z\n")
    _, nats, _ = run(capsys, "score", vdata, empty)
    _, bits, _ = run(capsys, "score", vdata, empty, "--units", "bits")
    assert float(bits.split()[1]) == pytest.approx(float(nats.split()[1]) / 0.6931471805599453)


def test_score_rejects_undirected(vdata, tmp_path, capsys):
    g = tmp_path / "u.txt"
    g.write_text("vertices: X,W,Z\nX -- Z\n")
    code, _, err = run(capsys, "score", vdata, g)
    assert code == 1 and "undirected" in err


def test_score_difference_of_confounded_and_directed(tmp_path, capsys):
    data = tmp_path / "g.csv"
    run(capsys, "simulate", data_path("bidirected_path.net"), "--n", 20000, "--seed", 2, "--hide", "L1,L2",
        "--output", data)
    _, g_out, _ = run(capsys, "score", data, data_path("bidirected_path.graph"))
    _, f_out, _ = run(capsys, "score", data, data_path("directed_variant.graph"))
    from acsearch.infotheory import conditional_multi_information
    t = load_table(data.read_text())
    x, y, z, tt = (t.index(n) for n in "XYZT")
    expected = conditional_multi_information(t, [x, y, tt], [z])
    diff = float(g_out.split()[1]) - float(f_out.split()[1])
    assert diff == pytest.approx(expected, abs=1e-9)


def test_equiv(capsys):
    code, out, _ = run(capsys, "equiv", data_path("equivalent_dag.graph"), data_path("equivalent_mixed.graph"))
    assert code == 0 and out.strip() == "equivalent"
    code, out, _ = run(capsys, "equiv", data_path("directed_variant.graph"), data_path("bidirected_path.graph"))
    assert out.splitlines() == ["not equivalent", "only in second: {X,Y,T}", "only in second: {X,Y,Z,T}"]
    code, out, _ = run(capsys, "equiv", data_path("directed_variant.graph"), data_path("directed_variant.graph"))
    assert out.strip() == "equivalent"


def test_equiv_vertex_mismatch(tmp_path, capsys):
    other = tmp_path / "o.txt"
    other.write_text("vertices: A,B,C,D\n")
    code, _, err = run(capsys, "equiv", data_path("directed_variant.graph"), other)
    assert code == 1


def test_separation(tmp_path, capsys):
    g = tmp_path / "v.txt"
    g.write_text("vertices: X,Z,Y\nX -> Z\nY -> Z\n")
    assert run(capsys, "separation", g, "X", "Y")[1].strip() == "separated"
    code, out, _ = run(capsys, "separation", g, "X", "Y", "--given", "Z")
    assert out.splitlines() == ["connected", "path: X Z Y"]
    code, out, _ = run(capsys, "separation", g, "X", "Y", "--given", "Z", "--criterion", "ac")
    assert out.splitlines()[0] == "connected"
    code, _, err = run(capsys, "separation", g, "X", "Q")
    assert code == 1


def test_simulate_and_project(tmp_path, capsys):
    net = tmp_path / "c.net"
    net.write_text(CHAIN_NET)
    data, truth = tmp_path / "c.csv", tmp_path / "c.truth"
    code, out, _ = run(capsys, "simulate", net, "--n", 300, "--seed", 4, "--hide", "B", "--output", data,
                       "--truth", truth)
    assert code == 0 and "hidden: B" in out
    assert load_table(data.read_text()).names == ("A", "C")
    assert read_graph(truth.read_text()).is_directed(0, 1)
    code, out, _ = run(capsys, "project", net, "--hide", "B", "--pag")
    assert out.splitlines() == ["vertices: A,C", "A o-o C"]
    code, out, _ = run(capsys, "simulate", net, "--n", 10, "--hide", "Q", "--output", data)
    assert code == 1


def test_benchmark(tmp_path, capsys):
    net = tmp_path / "c.net"
    net.write_text(CHAIN_NET)
    out1, out2 = tmp_path / "r1.jsonl", tmp_path / "r2.jsonl"
    code, out, _ = run(capsys, "benchmark", net, "--n", 50000, "--replicates", 1, "--seed", 3, "--output", out1)
    assert code == 0
    rec = read_records(open(out1))[0]
    assert rec["precision"] == 1 and rec["recall"] == 1
    run(capsys, "benchmark", net, "--n", 2000, "--replicates", 2, "--seed", 3, "--output", out1)
    run(capsys, "benchmark", net, "--n", 2000, "--replicates", 2, "--seed", 3, "--output", out2)
    assert out1.read_bytes() == out2.read_bytes()
    code, _, err = run(capsys, "benchmark", net, "--n", 100, "--hide-fractions", "1.0", "--output", out1)
    assert code == 1 and "fraction" in err
