import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acsearch.tabular import (CategoricalTable, TableParseError, cell_counts, counts, load_table,
                              scoring_warnings, write_table)
from conftest import random_table


def test_minimal_table():
    t = load_table("A,B\n0,1\n1,0\n")
    assert t.n_vars == 2 and t.n_samples == 2
    assert t.levels == (2, 2)


def test_first_appearance_encoding():
    t = load_table("A\nx\nx\ny\n")
    assert t.codes[:, 0].tolist() == [0, 0, 1]
    assert t.levels == (2,)
    assert t.labels[0] == ("x", "y")


def test_encoding_does_not_depend_on_sort_order():
    t = load_table("A\nzeta\nalpha\nzeta\n")
    assert t.codes[:, 0].tolist() == [0, 1, 0]


def test_ragged_row_reports_line():
    with pytest.raises(TableParseError) as err:
        load_table("A,B\n0,1\n0,1,2\n")
    assert err.value.line == 3
    assert "line 3" in str(err.value)


def test_missing_value_rejected():
    with pytest.raises(TableParseError) as err:
        load_table("A,B\n0,\n")
    assert err.value.line == 2


def test_duplicate_names_and_empty_input():
    with pytest.raises(TableParseError):
        load_table("A,A\n0,1\n")
    with pytest.raises(TableParseError):
        load_table("")
    with pytest.raises(TableParseError):
        load_table("A,B\n")


def test_codes_are_read_only():
    t = load_table("A\n0\n1\n")
    with pytest.raises(ValueError):
        t.codes[0, 0] = 1


def test_round_trip_through_csv():
    rng = np.random.default_rng(3)
    t = random_table(rng, 50, 4)
    buf = io.StringIO()
    write_table(t, buf)
    back = load_table(buf.getvalue())
    assert back.names == t.names
    assert np.array_equal(back.codes, t.codes)
    assert back.labels == t.labels


def test_counts_uniform_grid():
    t = CategoricalTable.from_columns(["A", "B"], [[0, 0, 1, 1], [0, 1, 0, 1]])
    c = counts(t, [0, 1])
    assert sorted(c.cells.values()) == [1, 1, 1, 1]
    assert sorted(counts(t, [0]).cells.values()) == [2, 2]


def test_counts_xor(xor_table):
    c = counts(xor_table, [0, 1, 2])
    assert len(c.cells) == 4 and set(c.cells.values()) == {1}


def test_counts_empty_subset_rejected(xor_table):
    with pytest.raises(ValueError):
        counts(xor_table, [])


def test_single_level_warning():
    t = load_table("A,B\n0,1\n0,0\n")
    with pytest.warns(UserWarning):
        assert scoring_warnings(t) == ["A"]


def test_bootstrap_resample_is_seeded():
    t = random_table(np.random.default_rng(0), 30, 3)
    a = t.resample(np.random.default_rng(5))
    b = t.resample(np.random.default_rng(5))
    assert np.array_equal(a.codes, b.codes) and a.n_samples == t.n_samples


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), m=st.integers(2, 5))
def test_marginal_consistency(seed, m):
    rng = np.random.default_rng(seed)
    t = random_table(rng, 60, m)
    full = counts(t, range(m))
    assert full.total == t.n_samples
    for k in range(m):
        sub = [j for j in range(m) if j != k]
        summed = {}
        for cell, c in full.cells.items():
            key = tuple(cell[j] for j in sub)
            summed[key] = summed.get(key, 0) + c
        assert summed == counts(t, sub).cells
        assert sorted(cell_counts(t, sub).tolist()) == sorted(summed.values())
