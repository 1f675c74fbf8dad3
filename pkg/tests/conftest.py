import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from acsearch.tabular import CategoricalTable


def random_table(rng: np.random.Generator, n: int, m: int, max_levels: int = 4) -> CategoricalTable:
    levels = rng.integers(2, max_levels + 1, size=m)
    cols = [rng.integers(0, r, size=n) for r in levels]
    return CategoricalTable.from_columns([f"V{k}" for k in range(m)], cols)


@pytest.fixture
def xor_table():
    rows = [(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)]
    return CategoricalTable.from_columns(["A", "B", "C"], list(zip(*rows)))


def network_table(names, parents, n, seed, weight=1.5):
    from acsearch.network import sample
    from acsearch.toymodels import build

    net = build(names, parents, {(p, c): weight for c, ps in parents.items() for p in ps})
    return sample(net, n, seed)


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one acceptance line; the lines are printed in the terminal summary."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
