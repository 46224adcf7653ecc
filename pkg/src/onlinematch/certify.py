"""Brute-force certification oracles and random graph search.

Everything here is exhaustive and exact: subsets are enumerated in
lexicographic order, ratios are kept as :class:`fractions.Fraction`, and
each enumeration is checked against a caller-supplied budget before it
starts.
"""

from __future__ import annotations

import itertools
import math
import os
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .errors import BudgetExceededError, InfeasibleError, InvalidSourceError, SearchFailure
from .graph_core import BipartiteGraph, crossing_counts, excess, format_fraction

DEFAULT_BUDGET = int(os.environ.get("ONLINEMATCH_BUDGET", "5000000"))


def subset_count(n: int, k: int) -> int:
    """Number of nonempty subsets of an n-set with at most k members."""
    return sum(math.comb(n, j) for j in range(1, min(n, k) + 1))


def _check_budget(n: int, k: int, budget: int | None) -> None:
    budget = DEFAULT_BUDGET if budget is None else budget
    need = subset_count(n, k)
    if need > budget:
        raise BudgetExceededError(budget, need)


def _report(pairs: Iterable[tuple[str, object]]) -> str:
    out = []
    for k, v in pairs:
        if isinstance(v, Fraction):
            v = format_fraction(v)
        elif isinstance(v, (set, frozenset, tuple, list)):
            v = ",".join(map(str, sorted(v)))
        out.append(f"{k}={v}")
    return "\n".join(out) + "\n"


# -- expansion and bounded right degree ------------------------------------

@dataclass(frozen=True)
class ExpansionCertificate:
    capacity: int
    min_ratio: Fraction
    witness_set: frozenset[int]
    left_degree: int

    def is_expander(self, epsilon: Fraction) -> bool:
        """Whether the graph is a (K, (1-eps)D) expander."""
        return self.min_ratio >= (1 - Fraction(epsilon)) * self.left_degree

    def to_report(self) -> str:
        return _report([
            ("certificate", "expansion"),
            ("capacity", self.capacity),
            ("left_degree", self.left_degree),
            ("min_ratio", self.min_ratio),
            ("witness_set", self.witness_set),
        ])


@dataclass(frozen=True)
class DegreeCertificate:
    capacity: int
    share_bound: int
    max_normalized_excess: Fraction
    witness_set: frozenset[int]

    def holds(self, epsilon: Fraction) -> bool:
        """Whether the graph has (r, K, eps) bounded right degree."""
        return self.max_normalized_excess <= Fraction(epsilon)

    def to_report(self) -> str:
        return _report([
            ("certificate", "bounded_degree"),
            ("capacity", self.capacity),
            ("share_bound", self.share_bound),
            ("max_normalized_excess", self.max_normalized_excess),
            ("witness_set", self.witness_set),
        ])


def _walk_masks(g: BipartiteGraph, k: int):
    """Yield (members, |N(S)|) for every nonempty S, |S| <= k, lexicographically."""
    masks = g.row_masks
    n = g.left_count
    members: list[int] = []

    def rec(start: int, acc: int):
        for x in range(start, n):
            m = acc | masks[x]
            members.append(x)
            yield members, m.bit_count()
            if len(members) < k:
                yield from rec(x + 1, m)
            members.pop()

    yield from rec(0, 0)


def _walk_excess(g: BipartiteGraph, k: int, r: int):
    """Yield (members, excess_S(r)) for every nonempty S, |S| <= k, lexicographically."""
    counts = [0] * g.right_count
    rows = [tuple(c.items()) for c in g.row_counts]
    n = g.left_count
    members: list[int] = []

    def rec(start: int, exc: int):
        for x in range(start, n):
            delta = 0
            for p, c in rows[x]:
                old = counts[p]
                new = old + c
                counts[p] = new
                delta += max(new - r, 0) - max(old - r, 0)
            members.append(x)
            yield members, exc + delta
            if len(members) < k:
                yield from rec(x + 1, exc + delta)
            members.pop()
            for p, c in rows[x]:
                counts[p] -= c

    yield from rec(0, 0)


def certify_expansion(g: BipartiteGraph, capacity: int, budget: int | None = None) -> ExpansionCertificate:
    """Exact min of |N(S)|/|S| over nonempty S with |S| <= capacity."""
    _check_budget(g.left_count, capacity, budget)
    best_num, best_den, witness = None, 1, ()
    for members, size in _walk_masks(g, capacity):
        s = len(members)
        if best_num is None or size * best_den < best_num * s:
            best_num, best_den, witness = size, s, tuple(members)
    return ExpansionCertificate(capacity, Fraction(best_num, best_den), frozenset(witness), g.left_degree)


def certify_bounded_degree(g: BipartiteGraph, capacity: int, share_bound: int,
                           budget: int | None = None) -> DegreeCertificate:
    """Exact max of excess_S(r) / (D|S|) over nonempty S with |S| <= capacity."""
    if share_bound < 1:
        raise ValueError("share_bound must be at least 1")
    _check_budget(g.left_count, capacity, budget)
    best_num, best_den, witness = -1, 1, ()
    for members, exc in _walk_excess(g, capacity, share_bound):
        s = len(members)
        if exc * best_den > best_num * s:
            best_num, best_den, witness = exc, s, tuple(members)
    value = Fraction(best_num, best_den * g.left_degree)
    return DegreeCertificate(capacity, share_bound, value, frozenset(witness))


def check_expander_degree_duality(g: BipartiteGraph, capacity: int, epsilon: Fraction,
                                  budget: int | None = None) -> bool:
    """(1,K,eps) bounded right degree holds exactly when G is a (K,(1-eps)D) expander.

    Both sides are certified independently; the return value says whether
    they agree.
    """
    deg = certify_bounded_degree(g, capacity, 1, budget).holds(epsilon)
    exp = certify_expansion(g, capacity, budget).is_expander(epsilon)
    return deg == exp


def first_violation(g: BipartiteGraph, capacity: int, epsilon: Fraction, share_bound: int = 1,
                    budget: int | None = None) -> tuple[int, ...] | None:
    """First S (lexicographic) with excess_S(r) > eps*D*|S|, or None."""
    _check_budget(g.left_count, capacity, budget)
    eps = Fraction(epsilon)
    num, den = eps.numerator * g.left_degree, eps.denominator
    if share_bound == 1:
        for members, size in _walk_masks(g, capacity):
            s = len(members)
            if (g.left_degree * s - size) * den > num * s:
                return tuple(members)
        return None
    for members, exc in _walk_excess(g, capacity, share_bound):
        if exc * den > num * len(members):
            return tuple(members)
    return None


# -- offline matching ------------------------------------------------------

@dataclass(frozen=True)
class OfflineMatching:
    success: bool
    assigned: dict[int, frozenset[int]] = field(default_factory=dict)
    failed_round: int | None = None
    hall_violator: frozenset[int] | None = None


def _max_matching(adj: dict, order: list) -> dict:
    """Augmenting-path maximum matching; returns left -> right."""
    match_right: dict = {}

    def augment(u, seen: set) -> bool:
        for v in adj[u]:
            if v in seen:
                continue
            seen.add(v)
            if v not in match_right or augment(match_right[v], seen):
                match_right[v] = u
                return True
        return False

    for u in order:
        augment(u, set())
    return {u: v for v, u in match_right.items()}


def _hall_violator(adj: dict, order: list, matching: dict) -> set:
    """Left vertices reachable from unmatched ones by alternating paths; |N(Z)| < |Z|."""
    match_right = {v: u for u, v in matching.items()}
    reach = {u for u in order if u not in matching}
    queue = deque(u for u in order if u in reach)
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            w = match_right.get(v)
            if w is not None and w not in reach:
                reach.add(w)
                queue.append(w)
    return reach


def offline_match(g: BipartiteGraph, s: Iterable[int], rounds: int) -> OfflineMatching:
    """Give every member of ``s`` ``rounds`` private right neighbors.

    Each member is split into ``rounds`` copies and one maximum matching
    of the copies is computed; it is perfect exactly when the assignment
    exists. On failure ``failed_round`` is the number of copies per member
    that could be served in full (the rounds that would succeed), and
    ``hall_violator`` is a member set whose copies violate Hall's
    condition.
    """
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    members = sorted(g.check_set(s))
    order = [(x, j) for j in range(rounds) for x in members]
    adj = {(x, j): sorted(g.row_sets[x]) for x, j in order}
    matching = _max_matching(adj, order)
    if len(matching) < len(order):
        served = min(sum(1 for j in range(rounds) if (x, j) in matching) for x in members)
        violator = _hall_violator(adj, order, matching)
        return OfflineMatching(False, {}, served, frozenset(x for x, _ in violator))
    assigned: dict[int, set[int]] = {x: set() for x in members}
    for (x, _), p in matching.items():
        assigned[x].add(p)
    return OfflineMatching(True, {x: frozenset(v) for x, v in assigned.items()})


# -- condensers through flat sources ---------------------------------------

@dataclass(frozen=True)
class CondenserParams:
    """Bit lengths of a condenser C: {0,1}^n x {0,1}^d -> {0,1}^m."""

    n: int
    d: int
    m: int
    e: int
    k_max: int

    @classmethod
    def of_graph(cls, g: BipartiteGraph, e: int, k_max: int) -> "CondenserParams":
        sizes = (g.left_count, g.left_degree, g.right_count)
        if any(v & (v - 1) for v in sizes):
            raise InvalidSourceError("condenser graphs need power-of-two N, D and M")
        n, d, m = (v.bit_length() - 1 for v in sizes)
        return cls(n, d, m, e, k_max)

    @property
    def overhead(self) -> int:
        return self.m - self.k_max

    @property
    def has_room(self) -> bool:
        return self.m >= self.k_max + self.d - self.e


def _clipped_mass(g: BipartiteGraph, s: frozenset[int], e: int) -> Fraction:
    # Y(p) = |E(S,p)| / (|S|D); a distribution of min-entropy log|S|+d-e
    # puts at most 2^e / (|S|D) on each point.
    total = len(s) * g.left_degree
    cap = Fraction(2 ** e, total)
    dist = Fraction(0)
    for c in crossing_counts(g, s).values():
        y = Fraction(c, total)
        if y > cap:
            dist += y - cap
    return dist


def condenser_distance(g: BipartiteGraph, s: Iterable[int], e: int) -> Fraction:
    """Distance from C(U_S, U_d) to the nearest source capped at min-entropy log|S|+d-e.

    Computed from the output distribution as the probability mass above
    the cap.
    """
    s = g.check_set(s)
    if not s or len(s) & (len(s) - 1):
        raise InvalidSourceError(f"flat source needs a power-of-two size, got {len(s)}")
    if e < 0:
        raise ValueError("entropy loss must be non-negative")
    return _clipped_mass(g, s, e)


def is_condenser(g: BipartiteGraph, params: CondenserParams, epsilon: Fraction,
                 budget: int | None = None) -> bool:
    """Whether ``g`` is a k ->_eps k+d-e condenser for every integer 2^k <= 2^k_max.

    Checks every flat source of size 1..2^k_max: the cap must be
    satisfiable on 2^m points and the clipped mass at most eps.
    """
    eps = Fraction(epsilon)
    kmax = 2 ** params.k_max
    _check_budget(g.left_count, kmax, budget)
    for size in range(1, min(kmax, g.left_count) + 1):
        if g.right_count * 2 ** params.e < size * g.left_degree:
            return False
        for s in itertools.combinations(range(g.left_count), size):
            if _clipped_mass(g, frozenset(s), params.e) > eps:
                return False
    return True


@dataclass(frozen=True)
class Redirection:
    """Moved edges as (left node, slot, old right node, new right node)."""

    moves: tuple[tuple[int, int, int, int], ...]
    rows: dict[int, tuple[int, ...]]

    @property
    def moved(self) -> int:
        return len(self.moves)


def redirect_edges(g: BipartiteGraph, s: Iterable[int], e: int) -> Redirection:
    """Move the fewest edges out of ``s`` so no right node keeps more than 2^e.

    The number of moved edges equals excess_S(2^e). Raises
    :class:`InfeasibleError` when M * 2^e < D|S|, since then the
    overloaded nodes cannot all be drained.
    """
    s = g.check_set(s)
    cap = 2 ** e
    if g.right_count * cap < g.left_degree * len(s):
        raise InfeasibleError(
            f"room condition fails: {g.right_count}*2^{e} < {g.left_degree}*{len(s)}")
    counts = crossing_counts(g, s)
    rows = {x: list(g.edge_table[x]) for x in sorted(s)}
    # Surplus edges: for each overloaded p, its last (count - cap) edges in
    # (left node, slot) order.
    surplus: list[tuple[int, int, int]] = []
    seen: dict[int, int] = {}
    for x in sorted(s):
        for y, p in enumerate(rows[x]):
            seen[p] = seen.get(p, 0) + 1
            if seen[p] > cap:
                surplus.append((x, y, p))
    free = [(p, cap - counts.get(p, 0)) for p in range(g.right_count) if counts.get(p, 0) < cap]
    moves = []
    it = iter(free)
    p_new, room = None, 0
    for x, y, p_old in surplus:
        while room == 0:
            p_new, room = next(it)
        rows[x][y] = p_new
        room -= 1
        moves.append((x, y, p_old, p_new))
    return Redirection(tuple(moves), {x: tuple(r) for x, r in rows.items()})


# -- exhaustive online-matchability game -----------------------------------

@dataclass(frozen=True)
class AdversaryMove:
    """The adversary requests ``element``; ``replies`` maps each legal
    assignment (sorted right ids) to the adversary's next move."""

    element: int
    replies: dict[tuple[int, ...], "AdversaryMove"]

    def lines(self, prefix: tuple[int, ...] = ()) -> list[str]:
        seq = prefix + (self.element,)
        if not self.replies:
            return [f"request {','.join(map(str, seq))}: no legal assignment"]
        out = []
        for choice, nxt in sorted(self.replies.items()):
            out.extend(f"{ln} [after {self.element}->{{{','.join(map(str, choice))}}}]"
                       for ln in nxt.lines(seq))
        return out


@dataclass(frozen=True)
class Matchability:
    matchable: bool
    witness: AdversaryMove | None
    states: int


GAME_BUDGET = 200_000


def refute_online_matchability(g: BipartiteGraph, capacity: int, ell: int, r: int,
                               budget: int | None = None) -> Matchability:
    """Decide by exhaustive game search whether ``g`` admits (ell, r) online matching up to ``capacity``.

    The adversary pushes new left nodes; the assignment function commits
    to ell slots of each arrival; the function loses when some right node
    would serve more than r arrivals. Repeated requests are never useful
    to the adversary and are not explored.
    """
    if ell < 0 or r < 1 or capacity < 0:
        raise ValueError("need ell >= 0, r >= 1, capacity >= 0")
    if ell == 0:
        return Matchability(True, None, 0)
    if budget is None:
        budget = GAME_BUDGET

    choices: list[list[frozenset[int]]] = []
    for row in g.edge_table:
        supports = {frozenset(combo) for combo in itertools.combinations(row, ell)} if ell <= len(row) else set()
        choices.append(sorted(supports, key=sorted))

    memo: dict[tuple[frozenset[int], tuple[int, ...]], int | None] = {}
    limit = [budget]

    def legal(loads: tuple[int, ...], support: frozenset[int]) -> bool:
        return all(loads[p] < r for p in support)

    def bump(loads: tuple[int, ...], support: frozenset[int]) -> tuple[int, ...]:
        lst = list(loads)
        for p in support:
            lst[p] += 1
        return tuple(lst)

    def attack(present: frozenset[int], loads: tuple[int, ...]) -> int | None:
        """Adversary's winning next request from this state, or None."""
        key = (present, loads)
        if key in memo:
            return memo[key]
        limit[0] -= 1
        if limit[0] < 0:
            raise BudgetExceededError(budget, budget + 1, "game states")
        result = None
        if len(present) < capacity:
            for z in range(g.left_count):
                if z in present:
                    continue
                nxt = present | {z}
                if not any(legal(loads, a) and attack(nxt, bump(loads, a)) is None for a in choices[z]):
                    result = z
                    break
        memo[key] = result
        return result

    def build(present: frozenset[int], loads: tuple[int, ...]) -> AdversaryMove:
        z = memo[(present, loads)]
        replies = {}
        for a in choices[z]:
            if legal(loads, a):
                nxt, nl = present | {z}, bump(loads, a)
                replies[tuple(sorted(a))] = build(nxt, nl)
        return AdversaryMove(z, replies)

    start = (frozenset(), (0,) * g.right_count)
    z = attack(*start)
    states = budget - limit[0]
    if z is None:
        return Matchability(True, None, states)
    return Matchability(False, build(*start), states)


# -- random search ---------------------------------------------------------

def random_graph(n_left: int, n_right: int, degree: int, rng: random.Random) -> BipartiteGraph:
    rows = tuple(tuple(rng.randrange(n_right) for _ in range(degree)) for _ in range(n_left))
    return BipartiteGraph(n_left, n_right, degree, rows)


def search_random_expander(n_left: int, n_right: int, degree: int, capacity: int, epsilon: Fraction,
                           seed: int, max_tries: int = 1000,
                           budget: int | None = None) -> tuple[BipartiteGraph, ExpansionCertificate]:
    """First seeded uniform draw that is a (K, (1-eps)D) expander."""
    eps = Fraction(epsilon)
    rng = random.Random(seed)
    best: Fraction | None = None
    for _ in range(max_tries):
        g = random_graph(n_left, n_right, degree, rng)
        if first_violation(g, capacity, eps, 1, budget) is None:
            cert = certify_expansion(g, capacity, budget)
            assert cert.is_expander(eps)
            return g, cert
        ratio = certify_expansion(g, capacity, budget).min_ratio
        if best is None or ratio > best:
            best = ratio
    raise SearchFailure(
        f"no ({capacity}, {format_fraction((1 - eps) * degree)}) expander in {max_tries} draws; "
        f"best min_ratio={format_fraction(best)}", best)


def search_bounded_degree(n_left: int, n_right: int, degree: int, capacity: int, share_bound: int,
                          epsilon: Fraction, seed: int, max_tries: int = 1000,
                          budget: int | None = None) -> tuple[BipartiteGraph, DegreeCertificate]:
    """First seeded uniform draw with (r, K, eps) bounded right degree."""
    eps = Fraction(epsilon)
    rng = random.Random(seed)
    best: Fraction | None = None
    for _ in range(max_tries):
        g = random_graph(n_left, n_right, degree, rng)
        if first_violation(g, capacity, eps, share_bound, budget) is None:
            cert = certify_bounded_degree(g, capacity, share_bound, budget)
            assert cert.holds(eps)
            return g, cert
        val = certify_bounded_degree(g, capacity, share_bound, budget).max_normalized_excess
        if best is None or val < best:
            best = val
    raise SearchFailure(
        f"no ({share_bound}, {capacity}, {format_fraction(eps)}) bounded-degree graph in {max_tries} draws; "
        f"best max_normalized_excess={format_fraction(best)}", best)
