from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from onlinematch.graph_core import BipartiteGraph

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


@st.composite
def graphs(draw, max_left: int = 8, max_right: int = 8, max_degree: int = 4) -> BipartiteGraph:
    n = draw(st.integers(1, max_left))
    m = draw(st.integers(1, max_right))
    d = draw(st.integers(1, max_degree))
    rows = draw(st.lists(st.lists(st.integers(0, m - 1), min_size=d, max_size=d), min_size=n, max_size=n))
    return BipartiteGraph(n, m, d, tuple(map(tuple, rows)))


def eps_grid() -> list[Fraction]:
    return sorted({Fraction(a, b) for b in (2, 3, 4, 6, 8, 12) for a in range(1, b)})


@pytest.fixture
def tmp_text(tmp_path):
    def write(name: str, text: str) -> str:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return write


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
