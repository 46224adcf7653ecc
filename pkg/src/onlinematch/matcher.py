"""Online assignment f(S, x) for graphs with bounded right degree.

For a request list S and an element x of S, the assignment starts from
the set S_0 of elements up to and including the first occurrence of x,
repeatedly shrinks to the deficient members while x stays deficient, and
finally gives x its edge slots that avoid the heavy right nodes of the
last core. Because S_0 only depends on the prefix ending at x, the result
never changes when S is extended.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .errors import CapacityError, MatchingStalled, StackDisciplineError
from .graph_core import BipartiteGraph


def ceil_log2(k: int) -> int:
    return max(k - 1, 0).bit_length()


def iteration_bound(k: int) -> int:
    """Upper bound on while-loop rounds for a list of length k."""
    return ceil_log2(k)


def sharing_bound(k: int, r: int) -> int:
    """How many distinct elements may share one right node, for a list of length k.

    This is 2*ceil(log2 k)*r, except that a one-element list is given the
    trivial bound 2r (ceil(log2 1) = 0 would forbid the lone element from
    receiving anything).
    """
    return 2 * max(1, ceil_log2(k)) * r


class RequestList:
    """A list of left nodes mutated only at its end (push / pop)."""

    def __init__(self, capacity: int, entries: Iterable[int] = ()):
        self.capacity = capacity
        self._entries: list[int] = []
        for x in entries:
            self.push(x)

    def push(self, x: int) -> None:
        if len(self._entries) >= self.capacity:
            raise CapacityError(f"request list is full (capacity {self.capacity})")
        self._entries.append(x)

    def pop(self) -> int:
        if not self._entries:
            raise StackDisciplineError("pop from an empty request list")
        return self._entries.pop()

    def snapshot(self) -> tuple[int, ...]:
        return tuple(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[int]:
        return iter(self._entries)

    def __contains__(self, x: object) -> bool:
        return x in self._entries

    def __repr__(self) -> str:
        return f"RequestList({self._entries!r}, capacity={self.capacity})"


@dataclass(frozen=True)
class AssignmentResult:
    slots: frozenset[int]
    iterations: int
    final_core: frozenset[int]
    cores: tuple[frozenset[int], ...] = ()

    def right_nodes(self, g: BipartiteGraph, x: int) -> tuple[int, ...]:
        row = g.edge_table[x]
        return tuple(sorted(row[y] for y in self.slots))

    def __len__(self) -> int:
        return len(self.slots)


EMPTY = AssignmentResult(frozenset(), 0, frozenset(), ())


def heavy_set(g: BipartiteGraph, s: Iterable[int], r: int) -> frozenset[int]:
    """Right nodes with more than 2r distinct neighbors in ``s``."""
    distinct: Counter = Counter()
    for x in g.check_set(s):
        distinct.update(g.row_sets[x])
    return frozenset(p for p, c in distinct.items() if c > 2 * r)


def _heavy_edges(g: BipartiteGraph, x: int, heavy: frozenset[int]) -> int:
    counts = g.row_counts[x]
    return sum(counts[p] for p in heavy if p in counts)


def _is_deficient(g: BipartiteGraph, x: int, heavy: frozenset[int], eps: Fraction) -> bool:
    # |E(x, HEAVY)| >= 4 eps D, compared exactly
    return _heavy_edges(g, x, heavy) * eps.denominator >= 4 * eps.numerator * g.left_degree


def deficient_set(g: BipartiteGraph, s: Iterable[int], r: int, epsilon: Fraction) -> frozenset[int]:
    """Members of ``s`` with at least 4*eps*D edges into the heavy nodes of ``s``."""
    s = g.check_set(s)
    eps = Fraction(epsilon)
    heavy = heavy_set(g, s, r)
    if not heavy:
        return frozenset()
    return frozenset(x for x in s if _is_deficient(g, x, heavy, eps))


def _check_eps(epsilon) -> Fraction:
    eps = Fraction(epsilon)
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    return eps


def assign(g: BipartiteGraph, s: Sequence[int] | RequestList, x: int, r: int, epsilon: Fraction,
           capacity: int | None = None) -> AssignmentResult:
    """Compute f(S, x), recording every core S_0, ..., S_t visited."""
    seq = s.snapshot() if isinstance(s, RequestList) else tuple(s)
    if capacity is not None and len(seq) > capacity:
        raise CapacityError(f"request list of length {len(seq)} exceeds capacity {capacity}")
    g.check_left(x)
    eps = _check_eps(epsilon)
    if x not in seq:
        return EMPTY
    j = seq.index(x) + 1
    core = g.check_set(seq[:j])
    cores = [core]
    heavy = heavy_set(g, core, r)
    while heavy and _is_deficient(g, x, heavy, eps):
        nxt = frozenset(z for z in core if _is_deficient(g, z, heavy, eps))
        if nxt == core:
            raise MatchingStalled(
                f"deficient set of a {len(core)}-element core did not shrink; "
                "the graph lacks bounded right degree for these parameters")
        core = nxt
        cores.append(core)
        heavy = heavy_set(g, core, r)
    row = g.edge_table[x]
    slots = frozenset(y for y, p in enumerate(row) if p not in heavy)
    return AssignmentResult(slots, len(cores) - 1, core, tuple(cores))


@dataclass
class MatchReport:
    assignments: dict[int, AssignmentResult] = field(default_factory=dict)
    load: Counter = field(default_factory=Counter)
    length: int = 0


def match_all(g: BipartiteGraph, s: Sequence[int] | RequestList, r: int, epsilon: Fraction,
              capacity: int | None = None) -> MatchReport:
    """Assign every distinct element of ``s`` and tally per-right-node load."""
    seq = s.snapshot() if isinstance(s, RequestList) else tuple(s)
    if capacity is not None and len(seq) > capacity:
        raise CapacityError(f"request list of length {len(seq)} exceeds capacity {capacity}")
    report = MatchReport(length=len(seq))
    for x in dict.fromkeys(seq):
        res = assign(g, seq, x, r, epsilon)
        report.assignments[x] = res
        row = g.edge_table[x]
        report.load.update({row[y] for y in res.slots})
    return report


def guarantee_violations(g: BipartiteGraph, report: MatchReport, r: int, epsilon: Fraction) -> list[str]:
    """Check a report against the bounded-right-degree guarantees.

    Returns human-readable descriptions of every violated bound: assignment
    size (1-4eps)D, load 2*ceil(log2 k)*r, loop rounds ceil(log2 k), and
    halving of the deficient cores.
    """
    eps = Fraction(epsilon)
    k = report.length
    need = (1 - 4 * eps) * g.left_degree
    out = []
    for x, res in report.assignments.items():
        if len(res.slots) < need:
            out.append(f"size x={x} got={len(res.slots)} need={need}")
        if res.iterations > iteration_bound(k):
            out.append(f"iterations x={x} got={res.iterations} bound={iteration_bound(k)}")
        for a, b in zip(res.cores, res.cores[1:]):
            if 2 * len(b) > len(a):
                out.append(f"halving x={x} core {len(a)} -> deficient {len(b)}")
    bound = sharing_bound(k, r)
    for p, c in sorted(report.load.items()):
        if c > bound:
            out.append(f"load p={p} got={c} bound={bound}")
    return out


class OnlineMatcher:
    """f(S, x) bound to one graph and parameter set, with a prefix cache.

    The cache is keyed by the prefix of S ending at the first occurrence
    of x, which is all the assignment depends on.
    """

    def __init__(self, g: BipartiteGraph, r: int, epsilon: Fraction, capacity: int):
        self.graph = g
        self.r = r
        self.epsilon = _check_eps(epsilon)
        self.capacity = capacity
        self._cache: dict[tuple[int, ...], AssignmentResult] = {}

    @property
    def sharing(self) -> int:
        return sharing_bound(self.capacity, self.r)

    def assign(self, s: Sequence[int], x: int) -> AssignmentResult:
        seq = tuple(s)
        if len(seq) > self.capacity:
            raise CapacityError(f"request list of length {len(seq)} exceeds capacity {self.capacity}")
        if x not in seq:
            self.graph.check_left(x)
            return EMPTY
        prefix = seq[: seq.index(x) + 1]
        res = self._cache.get(prefix)
        if res is None:
            res = assign(self.graph, prefix, x, self.r, self.epsilon)
            self._cache[prefix] = res
        return res
