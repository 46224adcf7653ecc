"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Every check here is exact (rational arithmetic, exhaustive enumeration)
except the Monte Carlo routing rate in criterion 8, which is compared
against its bound minus three binomial standard errors.
"""

from __future__ import annotations

import itertools
import math
import random
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from onlinematch.certify import (
    certify_bounded_degree,
    certify_expansion,
    check_expander_degree_duality,
    condenser_distance,
    offline_match,
    random_graph,
    redirect_edges,
    refute_online_matchability,
    search_bounded_degree,
    search_random_expander,
)
from onlinematch.disjointify import BaseMatching, BinaryField, NoShareMatching, field_eval
from onlinematch.errors import InfeasibleError
from onlinematch.graph_core import FIG1, BipartiteGraph, excess, format_graph
from onlinematch.matcher import assign, match_all, guarantee_violations
from onlinematch.netsim import Network, RoutingState, disconnect, route, route_probabilistic, verify_disjoint
from onlinematch.oneprobe import OneProbeStore

from conftest import eps_grid

EIGHTH = Fraction(1, 8)
RESULTS: list[str] = []


@pytest.fixture
def report(capsys):
    def emit(number: int, ok: bool, elapsed: float, limit: float, detail: str) -> None:
        ok = ok and elapsed < limit
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f}s / {limit:.0f}s) {detail}"
        RESULTS.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return emit


# -- graph families --------------------------------------------------------

# (N, M, D, K, r) at eps = 1/8, each drawn with two seeds
UNIFORM = [
    (8, 256, 8, 3, 1), (10, 512, 8, 3, 1), (8, 128, 8, 2, 1), (12, 256, 8, 2, 1), (10, 512, 8, 4, 1),
    (12, 64, 8, 4, 2), (12, 32, 8, 3, 3), (12, 128, 4, 3, 1), (16, 64, 8, 3, 2), (8, 96, 8, 4, 2),
]


def uniform_graphs() -> list[tuple[BipartiteGraph, int, int, Fraction]]:
    out = []
    for n, m, d, k, r in UNIFORM:
        for seed in (0, 1):
            g, cert = search_bounded_degree(n, m, d, k, r, EIGHTH, seed)
            out.append((g, k, r, EIGHTH))
    return out


def planted_graph(seed: int, degree: int, extra: int) -> tuple[BipartiteGraph, int, list[int]]:
    """A graph whose deficient-set loop fires.

    Node x sends two edges to hub 0 and one each to hubs 1 and 2; every
    hub has two further one-edge partners; all other edges are private.
    With eps = 1/degree this is tight: the seven structural nodes have
    excess exactly eps*D*7. Labels and right ids are shuffled by seed.
    """
    rng = random.Random(seed)
    split = (2, 1, 1)
    n = 1 + 2 * len(split) + extra
    labels = list(range(n))
    rng.shuffle(labels)
    m = 1 << 12
    free = rng.sample(range(m), n * degree)
    hubs = [free.pop() for _ in split]
    rows: dict[int, list[int]] = {}
    head = [h for h, c in zip(hubs, split) for _ in range(c)]
    rows[labels[0]] = head + [free.pop() for _ in range(degree - len(head))]
    k = 1
    for h in hubs:
        for _ in range(2):
            rows[labels[k]] = [h] + [free.pop() for _ in range(degree - 1)]
            k += 1
    for j in range(k, n):
        rows[labels[j]] = [free.pop() for _ in range(degree)]
    for row in rows.values():
        rng.shuffle(row)
    g = BipartiteGraph(n, m, degree, tuple(tuple(rows[i]) for i in range(n)))
    return g, labels[0], labels[1:k]


def planted_graphs() -> list[tuple[BipartiteGraph, int, int, Fraction, int, list[int]]]:
    out = []
    for seed, (degree, k) in enumerate([(8, 7), (8, 8), (12, 7), (16, 8)]):
        g, x, partners = planted_graph(seed, degree, extra=1 + seed % 3)
        eps = Fraction(1, degree)
        assert certify_bounded_degree(g, k, 1).holds(eps)
        out.append((g, k, 1, eps, x, partners))
    return out


# -- criterion 1 -----------------------------------------------------------

def test_criterion_1_duality(report):
    start = time.perf_counter()
    rng = random.Random(2024)
    grid = eps_grid() + [Fraction(0)]
    graphs = mismatches = 0
    for _ in range(240):
        n, d, k = rng.randint(1, 12), rng.randint(1, 3), rng.randint(1, 3)
        g = random_graph(n, rng.randint(1, 3 * d + 2), d, rng)
        deg = certify_bounded_degree(g, k, 1)
        exp = certify_expansion(g, k)
        # the two certificates are computed by separate enumerations
        mismatches += deg.max_normalized_excess != 1 - exp.min_ratio / d
        mismatches += sum(deg.holds(eps) != exp.is_expander(eps) for eps in grid)
        graphs += 1
    mismatches += not check_expander_degree_duality(FIG1, 2, Fraction(1, 2))
    report(1, mismatches == 0, time.perf_counter() - start, 60,
           f"graphs={graphs} eps_values={len(grid)} mismatches={mismatches}")


# -- criterion 2 -----------------------------------------------------------

def sequences(rng: random.Random, n: int, k: int, count: int):
    for _ in range(count):
        yield tuple(rng.randrange(n) for _ in range(rng.randint(1, k)))


def test_criterion_2_matcher_guarantees(report):
    start = time.perf_counter()
    rng = random.Random(7)
    violations: list[str] = []
    checked = loops = 0
    graphs = uniform_graphs()
    for g, k, r, eps in graphs:
        assert certify_bounded_degree(g, k, r).holds(eps) and 4 * eps < 1
        alphabet = rng.sample(range(g.left_count), 6)
        exhaustive = (s for size in range(1, k + 1) for s in itertools.product(alphabet, repeat=size))
        for seq in itertools.chain(sequences(rng, g.left_count, k, 10_000), exhaustive):
            rep = match_all(g, seq, r, eps)
            violations += guarantee_violations(g, rep, r, eps)
            loops += sum(a.iterations > 0 for a in rep.assignments.values())
            checked += 1
    planted = planted_graphs()
    planted_loops = 0
    for g, k, r, eps, x, partners in planted:
        structure = [x] + partners
        perms = (p for size in range(1, len(structure) + 1) for p in itertools.permutations(structure, size))
        for seq in itertools.chain(sequences(rng, g.left_count, k, 10_000), perms):
            rep = match_all(g, seq, r, eps)
            violations += guarantee_violations(g, rep, r, eps)
            planted_loops += sum(a.iterations > 0 for a in rep.assignments.values())
            checked += 1
        res = assign(g, tuple(partners) + (x,), x, r, eps)
        if res.iterations != 1 or 2 * len(res.cores[1]) > len(res.cores[0]):
            violations.append("planted deficient loop did not run as expected")
    report(2, not violations and planted_loops > 0, time.perf_counter() - start, 300,
           f"graphs={len(graphs)}+{len(planted)} sequences={checked} loop_runs={loops + planted_loops} "
           f"violations={len(violations)}")


# -- criterion 3 -----------------------------------------------------------

def test_criterion_3_monotonicity(report):
    start = time.perf_counter()
    rng = random.Random(11)
    cases = [c for c in uniform_graphs()[::4]] + [c[:4] for c in planted_graphs()[:2]]
    bad = triples = 0
    for g, k, r, eps in cases:
        for _ in range(10_000):
            size = rng.randint(1, k)
            seq = tuple(rng.randrange(g.left_count) for _ in range(size))
            ext = tuple(rng.randrange(g.left_count) for _ in range(rng.randint(0, k - size)))
            x = rng.choice(seq)
            bad += assign(g, seq, x, r, eps) != assign(g, seq + ext, x, r, eps)
            triples += 1
    report(3, bad == 0, time.perf_counter() - start, 60,
           f"graphs={len(cases)} triples={triples} violations={bad}")


# -- criterion 4 -----------------------------------------------------------

def test_criterion_4_fig1_counterexample(report):
    start = time.perf_counter()
    res = refute_online_matchability(FIG1, 2, 1, 1)
    offline = all(offline_match(FIG1, s, 1).success for s in itertools.combinations(range(3), 2))
    ok = (not res.matchable and res.witness is not None and res.witness.element == 1 and offline)
    witness = " | ".join(res.witness.lines()) if res.witness else "-"
    report(4, ok, time.perf_counter() - start, 1, f"online_matchable={res.matchable} offline_all_pairs={offline} "
           f"witness=[{witness}]")


# -- criterion 5 -----------------------------------------------------------

def field_axioms_hold(t: int) -> bool:
    f = BinaryField(t)
    for a in range(t):
        if f.mul(a, 1) != a or (a and f.mul(a, f.inv(a)) != 1):
            return False
        for b in range(t):
            if f.mul(a, b) != f.mul(b, a):
                return False
            for c in range(t):
                if f.mul(a, f.mul(b, c)) != f.mul(f.mul(a, b), c):
                    return False
                if f.mul(a, b ^ c) != f.mul(a, b) ^ f.mul(a, c):
                    return False
    return True


def max_agreement(t: int, n: int) -> int:
    f = BinaryField(t)
    evals = [tuple(field_eval(f, lab, a) for a in range(t)) for lab in range(1 << n)]
    return max(sum(u == v for u, v in zip(evals[i], evals[j])) for i in range(1 << n) for j in range(i))


def test_criterion_5_disjointify(report):
    start = time.perf_counter()
    rng = random.Random(5)
    fails: list[str] = []
    for t in (2, 4, 8, 16):
        if not field_axioms_hold(t):
            fails.append(f"field axioms t={t}")
        for n in range(1, 7):
            if max_agreement(t, n) > n - 1:
                fails.append(f"agreement t={t} n={n}")
    bases = [c for c in uniform_graphs()[::5]] + [c[:4] for c in planted_graphs()[:2]]
    seqs = 0
    for g, k, r, eps in bases:
        m = NoShareMatching(g, k, eps, r)
        hash_eps = eps
        tested = list(sequences(rng, g.left_count, k, 1500))
        tested += [s for size in range(1, min(k, 4) + 1)
                   for s in itertools.product(range(min(4, g.left_count)), repeat=size)]
        for seq in tested:
            owner: dict[int, int] = {}
            for z in dict.fromkeys(seq):
                slots = m.assign(seq, z)
                base = len(m.matcher.assign(seq, z).slots)
                if len(slots) < (1 - hash_eps) * base * m.tg.t or len(slots) < (1 - m.hash_slack) * base * m.tg.t:
                    fails.append(f"count seq={seq} z={z}")
                ids = m.neighbor_ids(z)
                for s in slots:
                    if owner.setdefault(ids[s], z) != z:
                        fails.append(f"collision seq={seq} node={ids[s]}")
            seqs += 1
    report(5, not fails, time.perf_counter() - start, 300,
           f"bases={len(bases)} sequences={seqs} failures={len(fails)} {fails[:3] if fails else ''}".rstrip())


# -- criterion 6 -----------------------------------------------------------

def flat_sources(n_left: int):
    size = 1
    while size <= n_left:
        yield from itertools.combinations(range(n_left), size)
        size *= 2


def condenser_case(g: BipartiteGraph, s: tuple[int, ...], e: int) -> bool:
    total = g.left_degree * len(s)
    exc = excess(g, s, 2 ** e)
    if condenser_distance(g, s, e) * total != exc:
        return False
    room = g.right_count * 2 ** e >= total
    try:
        red = redirect_edges(g, s, e)
    except InfeasibleError:
        return not room
    return room and red.moved == exc


def test_criterion_6_condenser_equivalence(report):
    start = time.perf_counter()
    bad = checks = 0
    # full enumeration: n=2, d=1, m=2 -> 4 left nodes, degree 2, 4 right nodes
    sources = list(flat_sources(4))
    for flat in itertools.product(range(4), repeat=8):
        g = BipartiteGraph(4, 4, 2, (flat[0:2], flat[2:4], flat[4:6], flat[6:8]))
        for s in sources:
            for e in (0, 1, 2):
                bad += not condenser_case(g, s, e)
                checks += 1
    full = checks
    rng = random.Random(6)
    shapes = [(n, m) for n in (1, 2, 3) for m in (1, 2, 3)]
    for i in range(100_000):
        n, m = shapes[i % len(shapes)]
        g = random_graph(2 ** n, 2 ** m, 2, rng)
        srcs = list(flat_sources(g.left_count))
        for _ in range(2):
            bad += not condenser_case(g, rng.choice(srcs), rng.randint(0, 2))
            checks += 1
    report(6, bad == 0, time.perf_counter() - start, 300,
           f"enumerated_tables=65536 sampled_tables=100000 checks={checks} (full={full}) mismatches={bad}")


# -- criterion 7 -----------------------------------------------------------

def legal_history(rng: random.Random, universe: int, budget: int, length: int, stack: bool) -> list[tuple[str, int]]:
    inserted: list[int] = []
    live: list[int] = []
    out = []
    for _ in range(length):
        if stack:
            if live and rng.random() < 0.4:
                out.append(("delete", live.pop()))
            elif len(live) < budget:
                x = rng.choice([z for z in range(universe) if z not in live])
                live.append(x)
                out.append(("insert", x))
            continue
        if rng.random() < 0.35 and inserted:
            out.append(("delete", rng.choice(inserted)))
            continue
        choices = inserted if len(inserted) >= budget else list(range(universe))
        x = rng.choice(choices)
        if x not in inserted:
            inserted.append(x)
        out.append(("insert", x))
    return out


def store_step_ok(store: OneProbeStore, op: str, x: int, universe: int) -> bool:
    written: list[int] = []
    getattr(store, op)(x, on_write=lambda pos, bit: written.append(pos))
    if written and set(written) != store.footprint(x):
        return False
    seen: set[int] = set()
    for e in store.state:
        fp = store.footprint(e.element)
        if fp & seen or any(store.table[p] != e.on for p in fp):
            return False
        seen |= fp
    if sum(store.table) != sum(len(store.footprint(e.element)) for e in store.state if e.on):
        return False
    return all(store.exact_error(z) <= store.epsilon for z in range(universe))


def interleavings_ok(base: BipartiteGraph) -> tuple[bool, int]:
    """Every history of <= 4 updates over 3 elements, checked at every single bit write."""
    matching = NoShareMatching(base, 3, EIGHTH)
    ops = [(op, x) for op in ("insert", "delete") for x in range(3)]
    points = 0
    for length in range(1, 5):
        for history in itertools.product(ops, repeat=length):
            distinct = {x for op, x in history if op == "insert"}
            if len(distinct) > 2:
                continue
            store = OneProbeStore(matching, 2)
            for op, x in history:
                others = [z for z in range(3) if z != x]
                # footprints are taken against the list as it stands after the update
                after = store.order() + ((x,) if op == "insert" and x not in store.order() else ())
                ids = {z: matching.neighbor_ids(z) for z in others}
                guarded = {z: np.array([ids[z][k] for k in matching.assign(after if z in after else after + (z,), z)],
                                       dtype=np.int64) for z in others}
                snap = {z: store._bits[guarded[z]].copy() for z in others}
                before = {z: store.is_member(z) for z in range(3)}
                failures = []

                def hook(pos: int, bit: int) -> None:
                    nonlocal points
                    points += 1
                    for z in others:
                        # other elements: their bits untouched, error within eps
                        if not np.array_equal(store._bits[guarded[z]], snap[z]):
                            failures.append(z)
                        if store.exact_error(z) > store.epsilon:
                            failures.append(z)

                getattr(store, op)(x, on_write=hook)
                if failures or any(store.is_member(z) != before[z] for z in others):
                    return False, points
    return True, points


def test_criterion_7_one_probe_dictionary(report):
    start = time.perf_counter()
    rng = random.Random(77)
    small, _ = search_random_expander(8, 128, 8, 3, EIGHTH, seed=3)
    wide, _ = search_random_expander(10, 512, 8, 4, EIGHTH, seed=0)
    setups = [(small, 3, 2, "dynamic"), (wide, 4, 3, "dynamic"), (small, 3, 2, "stack")]
    histories = steps = 0
    ok = True
    worst = Fraction(0)
    for i in range(120):
        base, cap, budget, mode = setups[i % len(setups)]
        store = OneProbeStore(NoShareMatching(base, cap, EIGHTH), budget, mode)
        for op, x in legal_history(rng, base.left_count, budget, 10, mode == "stack"):
            ok &= store_step_ok(store, op, x, base.left_count)
            worst = max([worst] + [store.exact_error(z) for z in range(base.left_count)])
            steps += 1
        histories += 1
    inter_ok, points = interleavings_ok(small)
    eps = NoShareMatching(small, 3, EIGHTH).epsilon_bound
    report(7, ok and inter_ok, time.perf_counter() - start, 600,
           f"histories={histories} steps={steps} worst_error={worst} eps={eps} "
           f"interleaving_points={points} interleavings_ok={inter_ok}")


# -- criterion 8 -----------------------------------------------------------

def deterministic_ok(net: Network, rng: random.Random, count: int) -> tuple[int, int]:
    conflicts = 0
    k = net.bandwidth
    n = net.terminals
    for i in range(count):
        state = RoutingState()
        us, vs = rng.sample(range(n), k), rng.sample(range(n), k)
        for u, v in zip(us, vs):
            route(net, (u, v), state)
        if i % 3 == 0:
            # tear down the newest path and route a fresh request in its place
            disconnect(state)
            u = rng.choice([z for z in range(n) if z not in state.inputs])
            v = rng.choice([z for z in range(n) if z not in state.outputs])
            route(net, (u, v), state)
        ok, _ = verify_disjoint(state.paths)
        conflicts += not ok or any(p.length != 3 or not net.is_valid_path(p) for p in state.paths)
    return conflicts, count


def probabilistic_rate(net: Network, rng: random.Random, batches: int) -> Fraction:
    k, n = net.bandwidth, net.terminals
    good = 0
    for _ in range(batches):
        state = RoutingState()
        for u, v in zip(rng.sample(range(n), k), rng.sample(range(n), k)):
            route_probabilistic(net, (u, v), state, rng)
        good += verify_disjoint(state.paths)[0]
    return Fraction(good, batches)


def test_criterion_8_network_routing(report):
    start = time.perf_counter()
    rng = random.Random(88)
    g16, _ = search_random_expander(16, 256, 8, 3, EIGHTH, seed=0)
    g_loose, _ = search_random_expander(8, 1024, 16, 2, Fraction(1, 32), seed=0)
    g_free, cert = search_random_expander(8, 512, 4, 3, Fraction(1, 1024), seed=0)
    assert cert.min_ratio == 4  # no two of any three nodes share a neighbor
    nets = {
        "N16": Network(NoShareMatching(g16, 3, EIGHTH), 3),
        "loose": Network(NoShareMatching(g_loose, 2, Fraction(1, 32), hash_epsilon=Fraction(1, 64)), 2),
        "free": Network(NoShareMatching(g_free, 3, Fraction(1, 1024), hash_epsilon=Fraction(1, 32)), 3),
        "free_base": Network(BaseMatching(g_free, 3, Fraction(1, 1024)), 3),
    }
    ok = True
    parts = []
    for name, net in nets.items():
        conflicts, total = deterministic_ok(net, rng, 1000 if name != "free_base" else 300)
        ok &= conflicts == 0
        m = net.matching
        ok &= net.edge_count == 2 * m.left_count * m.degree + m.right_count ** 2
        batches = 10_000
        rate = probabilistic_rate(net, rng, batches)
        bound = 1 - 2 * net.bandwidth * m.epsilon_bound
        p0 = min(max(float(bound), 0.0), 1.0)
        sigma = math.sqrt(p0 * (1 - p0) / batches)
        ok &= float(rate) >= float(bound) - 3 * sigma
        if name.startswith("free"):
            ok &= rate == 1
        parts.append(f"{name}: det={total} conflicts={conflicts} rate={float(rate):.4f} "
                     f"bound={float(bound):.4f}")
    # explicit count on the N=16 network: 2*N*D' edges on the sides plus |W|^2 in the middle
    m = nets["N16"].matching
    side = sum(len(m.neighbor_ids(x)) for x in range(16))
    ok &= nets["N16"].edge_count == 2 * side + m.right_count * m.right_count
    report(8, ok, time.perf_counter() - start, 600, "; ".join(parts))


# -- criterion 9 -----------------------------------------------------------

def cli(*args: str, cwd) -> bytes:
    proc = subprocess.run([sys.executable, "-m", "onlinematch", *args], cwd=cwd, capture_output=True, check=False)
    return proc.returncode.to_bytes(1, "big") + proc.stdout


def test_criterion_9_reproducibility(report, tmp_path):
    start = time.perf_counter()
    (tmp_path / "fig1.txt").write_text(format_graph(FIG1))
    (tmp_path / "t.txt").write_text("push 1\nassign 1\npush 0\nassign 0\n")
    (tmp_path / "d.txt").write_text("insert 1\ninsert 4\nquery 4\nquery 2\ndelete 1\nquery 1 all\n")
    (tmp_path / "r.txt").write_text("connect 0 1\nconnect? 2 3 seed=9\ndisconnect\nconnect 5 6\n")
    commands = [
        ("gen", "-N", "8", "-M", "128", "-D", "8", "-K", "3", "-eps", "1/8", "-seed", "3", "-o", "g.txt",
         "--cert", "c.txt"),
        ("gen", "-N", "12", "-M", "64", "-D", "8", "-K", "3", "-r", "2", "-eps", "1/8", "-seed", "4"),
        ("verify", "g.txt", "--expansion", "--degree", "-K", "3", "--eps", "1/8", "--duality"),
        ("verify", "fig1.txt", "-K", "2", "--online", "--offline", "0,2"),
        ("match", "fig1.txt", "--trace", "t.txt", "-eps", "1/8"),
        ("transform", "g.txt", "-K", "3", "-eps", "1/8", "--trace", "t.txt", "-o", "tg.txt"),
        ("dict", "g.txt", "-K", "2", "-eps", "1/8", "--trace", "d.txt", "--exact", "-seed", "5",
         "--snapshot", "snap.txt"),
        ("route", "g.txt", "-K", "3", "-eps", "1/8", "--trace", "r.txt"),
    ]
    files = ["g.txt", "c.txt", "tg.txt", "snap.txt"]
    runs = []
    for _ in range(2):
        outs = [cli(*cmd, cwd=tmp_path) for cmd in commands]
        outs += [(tmp_path / f).read_bytes() for f in files]
        runs.append(outs)
    same = runs[0] == runs[1]
    codes_ok = all(out[0] == 0 for out in runs[0][: len(commands)])
    report(9, same and codes_ok, time.perf_counter() - start, 60,
           f"commands={len(commands)} files={len(files)} identical={same} exit_codes_ok={codes_ok}")
