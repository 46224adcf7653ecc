"""Removing sharing by polynomial hashing over GF(2^s).

Every base edge (x, p) is replaced by t edges (x, (p, x(a), a)), one per
field element a, where x(a) evaluates the 0/1-coefficient polynomial whose
coefficients are the bits of x's label. Two distinct labels of n bits
agree on at most n-1 points, so the elements sharing a base right node
can be told apart on all but a few of the t copies.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .errors import CapacityError, InvalidElementError
from .graph_core import BipartiteGraph
from .matcher import OnlineMatcher, ceil_log2

__all__ = [
    "BinaryField",
    "least_irreducible",
    "pick_t",
    "field_eval",
    "label_width",
    "TransformedGraph",
    "transformed_neighbor",
    "assign_noshare",
    "NoShareMatching",
    "BaseMatching",
]


def _clmul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def _polymod(a: int, m: int) -> int:
    dm = m.bit_length()
    while a.bit_length() >= dm:
        a ^= m << (a.bit_length() - dm)
    return a


def _is_irreducible(poly: int) -> bool:
    deg = poly.bit_length() - 1
    for div in range(2, 1 << (deg // 2 + 1)):
        if _polymod(poly, div) == 0:
            return False
    return True


@lru_cache(maxsize=None)
def least_irreducible(degree: int) -> int:
    """Numerically smallest irreducible polynomial over GF(2) of the given degree."""
    if degree < 1:
        raise ValueError("degree must be at least 1")
    for cand in range(1 << degree, 1 << (degree + 1)):
        if _is_irreducible(cand):
            return cand
    raise AssertionError("unreachable: irreducibles exist in every degree")


class BinaryField:
    """GF(t) for t = 2^s, elements as ints in [0, t) (bit i = coefficient of z^i)."""

    def __init__(self, order: int, modulus: int | None = None):
        if order < 2 or order & (order - 1):
            raise ValueError(f"field order must be a power of two >= 2, got {order}")
        self.order = order
        self.degree = order.bit_length() - 1
        self.modulus = least_irreducible(self.degree) if modulus is None else modulus
        if self.modulus.bit_length() - 1 != self.degree or not _is_irreducible(self.modulus):
            raise ValueError(f"modulus {self.modulus:#x} is not irreducible of degree {self.degree}")

    def __repr__(self) -> str:
        return f"BinaryField(t={self.order}, poly={self.modulus:x})"

    def __eq__(self, other) -> bool:
        return isinstance(other, BinaryField) and (self.order, self.modulus) == (other.order, other.modulus)

    def __hash__(self) -> int:
        return hash((self.order, self.modulus))

    def check(self, a: int) -> int:
        if not isinstance(a, int) or not 0 <= a < self.order:
            raise InvalidElementError(f"{a!r} is not an element of GF({self.order})")
        return a

    @staticmethod
    def add(a: int, b: int) -> int:
        return a ^ b

    def mul(self, a: int, b: int) -> int:
        return _polymod(_clmul(a, b), self.modulus)

    def pow(self, a: int, e: int) -> int:
        out = 1
        while e:
            if e & 1:
                out = self.mul(out, a)
            a = self.mul(a, a)
            e >>= 1
        return out

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no inverse")
        return self.pow(a, self.order - 2)

    def header(self) -> str:
        return f"t={self.order} poly={self.modulus:x}"


def pick_t(n: int, r: int, epsilon: Fraction) -> int:
    """Smallest power of two >= (n-1)(r-1)/eps, and at least 2."""
    eps = Fraction(epsilon)
    if n < 1 or r < 1 or not 0 < eps < 1:
        raise ValueError("need n >= 1, r >= 1 and 0 < eps < 1")
    bound = Fraction((n - 1) * (r - 1)) / eps
    t = 2
    while t < bound:
        t *= 2
    return t


def field_eval(field: BinaryField, label: int, a: int) -> int:
    """Evaluate sum_i bit_i(label) * a^i in the field by Horner's rule."""
    field.check(a)
    acc = 0
    for i in range(label.bit_length() - 1, -1, -1):
        acc = field.mul(acc, a) ^ ((label >> i) & 1)
    return acc


def label_width(left_count: int) -> int:
    """Number of label bits n = ceil(log2 |L|), at least 1."""
    return max(1, ceil_log2(left_count))


class TransformedGraph:
    """G' over the base graph: left side unchanged, D' = D*t, |R'| = M*t^2.

    Slot k of x stands for the pair (y, a) = divmod(k, t); its right
    endpoint is the triple (Gamma(x, y), x(a), a), numbered
    (p*t + x(a))*t + a. The edge table is never materialized.
    """

    def __init__(self, base: BipartiteGraph, field: BinaryField):
        self.base = base
        self.field = field
        self._evals: dict[int, tuple[int, ...]] = {}
        self._ids: dict[int, tuple[int, ...]] = {}

    @property
    def t(self) -> int:
        return self.field.order

    @property
    def left_count(self) -> int:
        return self.base.left_count

    @property
    def degree(self) -> int:
        return self.base.left_degree * self.t

    @property
    def right_count(self) -> int:
        return self.base.right_count * self.t * self.t

    @property
    def label_width(self) -> int:
        return label_width(self.base.left_count)

    def evaluations(self, x: int) -> tuple[int, ...]:
        """(x(0), x(1), ..., x(t-1))."""
        ev = self._evals.get(x)
        if ev is None:
            self.base.check_left(x)
            ev = tuple(field_eval(self.field, x, a) for a in range(self.t))
            self._evals[x] = ev
        return ev

    def encode(self, p: int, v: int, a: int) -> int:
        return (p * self.t + v) * self.t + a

    def decode(self, pid: int) -> tuple[int, int, int]:
        rest, a = divmod(pid, self.t)
        p, v = divmod(rest, self.t)
        return p, v, a

    def neighbor_ids(self, x: int) -> tuple[int, ...]:
        ids = self._ids.get(x)
        if ids is None:
            ev = self.evaluations(x)
            t = self.t
            ids = tuple((p * t + ev[a]) * t + a for p in self.base.edge_table[x] for a in range(t))
            self._ids[x] = ids
        return ids


def transformed_neighbor(tg: TransformedGraph, x: int, slot: int | tuple[int, int]) -> tuple[int, int, int]:
    """Right endpoint (p, x(a), a) of slot (y, a) of x."""
    tg.base.check_left(x)
    if isinstance(slot, tuple):
        y, a = slot
    else:
        if not 0 <= slot < tg.degree:
            raise InvalidElementError(f"slot {slot} not in [0, {tg.degree})")
        y, a = divmod(slot, tg.t)
    if not 0 <= y < tg.base.left_degree:
        raise InvalidElementError(f"base slot {y} not in [0, {tg.base.left_degree})")
    tg.field.check(a)
    return tg.base.edge_table[x][y], tg.evaluations(x)[a], a


def _noshare_slots(tg: TransformedGraph, matcher: OnlineMatcher, seq: tuple[int, ...], x: int) -> frozenset[int]:
    base = matcher.assign(seq, x)
    if not base.slots:
        return frozenset()
    rows = tg.base.edge_table
    t = tg.t
    first = seq.index(x)
    # Distinct elements that arrived before x, with their base right nodes.
    earlier = list(dict.fromkeys(seq[:first]))
    taken = {z: {rows[z][y] for y in matcher.assign(seq, z).slots} for z in earlier}
    ev_x = tg.evaluations(x)
    keep: dict[int, list[int]] = {}
    for y in sorted(base.slots):
        p = rows[x][y]
        if p not in keep:
            sharers = [tg.evaluations(z) for z in earlier if p in taken[z]]
            keep[p] = [a for a in range(t) if all(ev_x[a] != ev[a] for ev in sharers)]
    return frozenset(y * t + a for y in base.slots for a in keep[rows[x][y]])


def assign_noshare(tg: TransformedGraph, s: Sequence[int], x: int, r: int, epsilon: Fraction,
                   capacity: int | None = None) -> frozenset[int]:
    """Slots of x in G' assigned without sharing (indices y*t + a)."""
    seq = tuple(s)
    matcher = OnlineMatcher(tg.base, r, epsilon, len(seq) if capacity is None else capacity)
    tg.base.check_left(x)
    return _noshare_slots(tg, matcher, seq, x)


class NoShareMatching:
    """((1-eps')D', 1) online matching on G', ready for the applications.

    ``epsilon_bound`` is the exact miss fraction guaranteed when the base
    graph has (r, capacity, base_epsilon) bounded right degree:
    1 - (1 - hash_slack)(1 - 4*base_epsilon), where hash_slack is
    (n-1)(sharing-1)/t for the field actually used.
    """

    def __init__(self, base: BipartiteGraph, capacity: int, base_epsilon: Fraction, r: int = 1,
                 hash_epsilon: Fraction | None = None, t: int | None = None):
        base_epsilon = Fraction(base_epsilon)
        self.matcher = OnlineMatcher(base, r, base_epsilon, capacity)
        self.capacity = capacity
        self.base_epsilon = base_epsilon
        self.r = r
        n = label_width(base.left_count)
        if t is None:
            t = pick_t(n, self.matcher.sharing, base_epsilon if hash_epsilon is None else hash_epsilon)
        self.tg = TransformedGraph(base, BinaryField(t))
        self.hash_slack = min(Fraction(1), Fraction((n - 1) * (self.matcher.sharing - 1), t))
        self.epsilon_bound = 1 - (1 - self.hash_slack) * (1 - 4 * base_epsilon)

    @property
    def left_count(self) -> int:
        return self.tg.left_count

    @property
    def degree(self) -> int:
        return self.tg.degree

    @property
    def right_count(self) -> int:
        return self.tg.right_count

    def neighbor_ids(self, x: int) -> tuple[int, ...]:
        return self.tg.neighbor_ids(x)

    def assign(self, s: Sequence[int], x: int) -> frozenset[int]:
        seq = tuple(s)
        if len(seq) > self.capacity:
            raise CapacityError(f"request list of length {len(seq)} exceeds capacity {self.capacity}")
        self.tg.base.check_left(x)
        return _noshare_slots(self.tg, self.matcher, seq, x)


@dataclass(frozen=True)
class BaseMatching:
    """The sharing assignment on a plain graph, behind the same interface.

    Assigned sets of different elements may overlap (up to the sharing
    bound); only graphs whose matcher never shares give disjoint sets.
    """

    graph: BipartiteGraph
    capacity: int
    epsilon: Fraction
    r: int = 1

    def __post_init__(self):
        object.__setattr__(self, "matcher", OnlineMatcher(self.graph, self.r, self.epsilon, self.capacity))

    @property
    def epsilon_bound(self) -> Fraction:
        return min(Fraction(1), 4 * Fraction(self.epsilon))

    @property
    def left_count(self) -> int:
        return self.graph.left_count

    @property
    def degree(self) -> int:
        return self.graph.left_degree

    @property
    def right_count(self) -> int:
        return self.graph.right_count

    def neighbor_ids(self, x: int) -> tuple[int, ...]:
        return self.graph.edge_table[x]

    def assign(self, s: Sequence[int], x: int) -> frozenset[int]:
        return self.matcher.assign(s, x).slots
