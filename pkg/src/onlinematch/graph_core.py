"""Left-regular bipartite multigraphs and their counting primitives.

A graph is stored as an N x D edge table: row ``x`` lists the right
endpoints of the D edges leaving left node ``x`` (slot ``y`` holds the
``y``-th neighbor). Repeated ids in a row are parallel edges.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .errors import GraphFormatError, InvalidNodeError

__all__ = [
    "BipartiteGraph",
    "MatchParams",
    "neighbors",
    "neighbor_set",
    "crossing_count",
    "crossing_counts",
    "excess",
    "parse_graph",
    "format_graph",
    "parse_fraction",
    "format_fraction",
    "identity_graph",
    "complete_graph",
    "star_graph",
    "FIG1",
]


@dataclass(frozen=True)
class BipartiteGraph:
    left_count: int
    right_count: int
    left_degree: int
    edge_table: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.left_count < 1 or self.right_count < 1 or self.left_degree < 1:
            raise ValueError("left_count, right_count and left_degree must be positive")
        table = tuple(tuple(int(p) for p in row) for row in self.edge_table)
        object.__setattr__(self, "edge_table", table)
        if len(table) != self.left_count:
            raise ValueError(f"edge table has {len(table)} rows, expected {self.left_count}")
        for x, row in enumerate(table):
            if len(row) != self.left_degree:
                raise ValueError(f"row {x} has {len(row)} entries, expected {self.left_degree}")
            for p in row:
                if not 0 <= p < self.right_count:
                    raise ValueError(f"row {x}: right id {p} out of range")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], right_count: int | None = None) -> "BipartiteGraph":
        rows = [tuple(r) for r in rows]
        if not rows:
            raise ValueError("graph needs at least one left node")
        if right_count is None:
            right_count = max(max(r) for r in rows) + 1
        return cls(len(rows), right_count, len(rows[0]), tuple(rows))

    # Cached per-node views; the graph is immutable so these never go stale.
    @cached_property
    def row_sets(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset(row) for row in self.edge_table)

    @cached_property
    def row_counts(self) -> tuple[Counter, ...]:
        return tuple(Counter(row) for row in self.edge_table)

    @cached_property
    def row_masks(self) -> tuple[int, ...]:
        masks = []
        for row in self.edge_table:
            m = 0
            for p in row:
                m |= 1 << p
            masks.append(m)
        return tuple(masks)

    def check_left(self, x: int) -> int:
        if not isinstance(x, int) or not 0 <= x < self.left_count:
            raise InvalidNodeError(f"left node {x!r} not in [0, {self.left_count})")
        return x

    def check_right(self, p: int) -> int:
        if not isinstance(p, int) or not 0 <= p < self.right_count:
            raise InvalidNodeError(f"right node {p!r} not in [0, {self.right_count})")
        return p

    def check_set(self, s: Iterable[int]) -> frozenset[int]:
        s = frozenset(s)
        for x in s:
            self.check_left(x)
        return s

    @property
    def edge_count(self) -> int:
        return self.left_count * self.left_degree


@dataclass(frozen=True)
class MatchParams:
    """Capacity K, slack epsilon and sharing bound r of a matching guarantee."""

    capacity: int
    epsilon: Fraction
    share_bound: int = 1

    def __post_init__(self):
        eps = Fraction(self.epsilon)
        object.__setattr__(self, "epsilon", eps)
        if self.capacity < 1 or self.share_bound < 1:
            raise ValueError("capacity and share_bound must be positive")
        if not 0 < eps < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {eps}")

    @property
    def guarantee_applies(self) -> bool:
        return 4 * self.epsilon < 1


def neighbors(g: BipartiteGraph, x: int) -> tuple[int, ...]:
    """The multiset of neighbors of ``x``, as its edge-table row."""
    return g.edge_table[g.check_left(x)]


def neighbor_set(g: BipartiteGraph, s: Iterable[int]) -> frozenset[int]:
    out: set[int] = set()
    for x in g.check_set(s):
        out |= g.row_sets[x]
    return frozenset(out)


def crossing_count(g: BipartiteGraph, s: Iterable[int], p: int) -> int:
    """Number of edges (with multiplicity) from members of ``s`` to ``p``."""
    g.check_right(p)
    return sum(g.row_counts[x][p] for x in g.check_set(s))


def crossing_counts(g: BipartiteGraph, s: Iterable[int]) -> Counter:
    total: Counter = Counter()
    for x in g.check_set(s):
        total.update(g.row_counts[x])
    return total


def excess(g: BipartiteGraph, s: Iterable[int], r: int) -> int:
    """Edges that must be discarded so every right node keeps at most ``r`` from ``s``."""
    if r < 1:
        raise ValueError("r must be at least 1")
    return sum(c - r for c in crossing_counts(g, s).values() if c > r)


# -- text format -----------------------------------------------------------

def parse_fraction(text: str | int | Fraction) -> Fraction:
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(int(text))


def format_fraction(q: Fraction | int) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_graph(text: str) -> tuple[BipartiteGraph, dict[str, str]]:
    """Parse the ``N M D`` + rows format.

    An optional leading line of ``key=value`` tokens (e.g. ``t=8 poly=b``)
    is returned as the header dict.
    """
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    header: dict[str, str] = {}
    i = 0
    if lines and "=" in lines[0]:
        for tok in lines[0].split():
            if "=" not in tok:
                raise GraphFormatError(f"bad header token {tok!r}", 1)
            k, v = tok.split("=", 1)
            header[k] = v
        i = 1
    if i >= len(lines):
        raise GraphFormatError("missing 'N M D' line", i + 1)
    try:
        n, m, d = (int(tok) for tok in lines[i].split())
    except ValueError:
        raise GraphFormatError("expected three integers 'N M D'", i + 1) from None
    rows = []
    for k in range(n):
        ln = i + 1 + k
        if ln >= len(lines):
            raise GraphFormatError(f"expected {n} rows, file ends after {k}", ln + 1)
        try:
            row = tuple(int(tok) for tok in lines[ln].split())
        except ValueError:
            raise GraphFormatError("non-integer right id", ln + 1) from None
        if len(row) != d:
            raise GraphFormatError(f"row has {len(row)} entries, expected {d}", ln + 1)
        if any(not 0 <= p < m for p in row):
            raise GraphFormatError(f"right id out of range [0, {m})", ln + 1)
        rows.append(row)
    if len(lines) > i + 1 + n:
        raise GraphFormatError("trailing content after edge table", i + 2 + n)
    return BipartiteGraph(n, m, d, tuple(rows)), header


def format_graph(g: BipartiteGraph, header: Mapping[str, object] | None = None) -> str:
    out = []
    if header:
        out.append(" ".join(f"{k}={v}" for k, v in header.items()))
    out.append(f"{g.left_count} {g.right_count} {g.left_degree}")
    out.extend(" ".join(map(str, row)) for row in g.edge_table)
    return "\n".join(out) + "\n"


# -- small named graphs ----------------------------------------------------

def identity_graph(n: int, degree: int) -> BipartiteGraph:
    """Left node i sends all ``degree`` edges to right node i."""
    return BipartiteGraph(n, n, degree, tuple((i,) * degree for i in range(n)))


def complete_graph(n_left: int, n_right: int) -> BipartiteGraph:
    """Every left node has one edge to each right node (D = n_right)."""
    return BipartiteGraph(n_left, n_right, n_right, tuple(tuple(range(n_right)) for _ in range(n_left)))


def star_graph(n_left: int) -> BipartiteGraph:
    return BipartiteGraph(n_left, 1, 1, tuple((0,) for _ in range(n_left)))


# The offline-yes / online-no example: x1 - y1 - x2 - y2 - x3, made
# 2-left-regular by doubling the single edges of x1 and x3.
FIG1 = BipartiteGraph(3, 2, 2, ((0, 0), (0, 1), (1, 1)))
