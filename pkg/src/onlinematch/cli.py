"""Command-line front end.

Exit codes: 0 success (all checks PASS), 1 a checked guarantee FAILed or a
search found nothing, 2 usage or input-format error, 3 enumeration budget
exceeded. The default budget comes from ONLINEMATCH_BUDGET.

File formats
  graph   line 1 "N M D", then N lines of D right ids; an optional first
          line "t=<order> poly=<hex>" carries the hashing field.
  match / transform trace
          "push <id>", "pop", "assign <id>"
  dict trace
          "insert <id>", "delete <id>", "query <id> <probe>", "query <id> all"
  route trace
          "connect <u> <v>", "disconnect", "connect? <u> <v> seed=<s>"
"""

from __future__ import annotations

import argparse
import random
import sys
from fractions import Fraction
from typing import Callable, Iterator, TextIO

from . import certify
from .disjointify import BaseMatching, NoShareMatching
from .errors import BudgetExceededError, GraphFormatError, OnlineMatchError, SearchFailure
from .graph_core import BipartiteGraph, format_fraction, format_graph, parse_fraction, parse_graph
from .matcher import RequestList, guarantee_violations, match_all
from .netsim import Network, RoutingState, disconnect, route, route_probabilistic, verify_disjoint
from .oneprobe import OneProbeStore

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class Checks:
    """Collects PASS/FAIL summary lines."""

    def __init__(self, out: TextIO):
        self.out = out
        self.failed = False

    def record(self, name: str, ok: bool, detail: str = "") -> None:
        self.failed |= not ok
        tail = f" {detail}" if detail else ""
        print(f"{'PASS' if ok else 'FAIL'} {name}{tail}", file=self.out)

    @property
    def code(self) -> int:
        return EXIT_FAIL if self.failed else EXIT_OK


def _fraction(text: str) -> Fraction:
    try:
        return parse_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a rational like 1/8, got {text!r}") from None


def _read_graph(path: str) -> tuple[BipartiteGraph, dict[str, str]]:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


def _trace(path: str) -> Iterator[tuple[int, list[str]]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if parts and not parts[0].startswith("#"):
                yield lineno, parts


def _int_arg(parts: list[str], i: int, lineno: int) -> int:
    try:
        return int(parts[i])
    except (IndexError, ValueError):
        raise GraphFormatError(f"expected an integer argument in {' '.join(parts)!r}", lineno) from None


def _write(path: str | None, text: str, out: TextIO) -> None:
    if path is None:
        out.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _matching(args, g: BipartiteGraph, header: dict[str, str], capacity: int) -> NoShareMatching:
    t = args.t if args.t is not None else (int(header["t"]) if "t" in header else None)
    return NoShareMatching(g, capacity, args.eps, args.r, hash_epsilon=args.hash_eps, t=t)


# -- subcommands -----------------------------------------------------------

def cmd_gen(args, out: TextIO) -> int:
    try:
        if args.r == 1:
            g, cert = certify.search_random_expander(args.N, args.M, args.D, args.K, args.eps, args.seed,
                                                     args.max_tries, args.budget)
        else:
            g, cert = certify.search_bounded_degree(args.N, args.M, args.D, args.K, args.r, args.eps,
                                                    args.seed, args.max_tries, args.budget)
    except SearchFailure as exc:
        print(f"search=failed\nbest={format_fraction(exc.best)}\nmessage={exc}", file=out)
        return EXIT_FAIL
    _write(args.output, format_graph(g), out)
    report = cert.to_report() + f"seed={args.seed}\nepsilon={format_fraction(args.eps)}\n"
    _write(args.cert, report, out)
    return EXIT_OK


def cmd_verify(args, out: TextIO) -> int:
    g, _ = _read_graph(args.graph)
    checks = Checks(out)
    eps = args.eps
    if args.expansion:
        cert = certify.certify_expansion(g, args.K, args.budget)
        out.write(cert.to_report())
        if eps is not None:
            checks.record("expander", cert.is_expander(eps),
                          f"min_ratio={format_fraction(cert.min_ratio)} need={format_fraction((1 - eps) * g.left_degree)}")
    if args.degree:
        cert = certify.certify_bounded_degree(g, args.K, args.r, args.budget)
        out.write(cert.to_report())
        if eps is not None:
            checks.record("bounded_degree", cert.holds(eps),
                          f"max_normalized_excess={format_fraction(cert.max_normalized_excess)} "
                          f"eps={format_fraction(eps)}")
    if args.duality:
        if eps is None:
            raise argparse.ArgumentTypeError("--duality needs --eps")
        checks.record("duality", certify.check_expander_degree_duality(g, args.K, eps, args.budget))
    if args.condenser:
        if eps is None:
            raise argparse.ArgumentTypeError("--condenser needs --eps")
        params = certify.CondenserParams.of_graph(g, args.e, args.kmax)
        cond = certify.is_condenser(g, params, eps, args.budget)
        deg = certify.certify_bounded_degree(g, 2 ** args.kmax, 2 ** args.e, args.budget).holds(eps)
        print(f"condenser={cond}\nbounded_degree={deg}\nroom={params.has_room}\noverhead={params.overhead}",
              file=out)
        checks.record("condenser_equivalence", cond == (deg and params.has_room))
    if args.online:
        res = certify.refute_online_matchability(g, args.K, args.ell, args.r, args.budget)
        print(f"online_matchable={res.matchable}\nstates={res.states}", file=out)
        if res.witness is not None:
            for ln in res.witness.lines():
                print(f"witness {ln}", file=out)
    if args.offline is not None:
        s = {int(v) for v in args.offline.split(",") if v}
        res = certify.offline_match(g, s, args.rounds)
        if res.success:
            for x, ps in sorted(res.assigned.items()):
                print(f"offline {x} -> {','.join(map(str, sorted(ps)))}", file=out)
        else:
            print(f"offline failed round={res.failed_round} "
                  f"hall_violator={','.join(map(str, sorted(res.hall_violator)))}", file=out)
        checks.record("offline_match", res.success)
    return checks.code


def cmd_match(args, out: TextIO) -> int:
    g, _ = _read_graph(args.graph)
    checks = Checks(out)
    req = RequestList(args.K if args.K is not None else 1 << 30)
    violations: list[str] = []
    for lineno, parts in _trace(args.trace):
        op = parts[0]
        if op == "push":
            req.push(g.check_left(_int_arg(parts, 1, lineno)))
        elif op == "pop":
            req.pop()
        elif op == "assign":
            x = _int_arg(parts, 1, lineno)
            report = match_all(g, req, args.r, args.eps)
            res = report.assignments.get(x)
            if res is None:
                print("slots= iters=0", file=out)
            else:
                print(f"slots={','.join(map(str, sorted(res.slots)))} iters={res.iterations}", file=out)
            violations += guarantee_violations(g, report, args.r, args.eps)
        else:
            raise GraphFormatError(f"unknown command {op!r}", lineno)
    checks.record("matcher_guarantees", not violations, "; ".join(sorted(set(violations))))
    return checks.code


def cmd_transform(args, out: TextIO) -> int:
    g, header = _read_graph(args.graph)
    m = _matching(args, g, header, args.K)
    tg = m.tg
    _write(args.output, format_graph(g, {"t": tg.t, "poly": f"{tg.field.modulus:x}"}), out)
    print(f"t={tg.t}\nD'={tg.degree}\nR'={tg.right_count}\nhash_slack={format_fraction(m.hash_slack)}\n"
          f"epsilon_bound={format_fraction(m.epsilon_bound)}", file=out)
    if args.trace is None:
        return EXIT_OK
    checks = Checks(out)
    req = RequestList(args.K)
    ok_disjoint = ok_count = True
    for lineno, parts in _trace(args.trace):
        op = parts[0]
        if op == "push":
            req.push(g.check_left(_int_arg(parts, 1, lineno)))
        elif op == "pop":
            req.pop()
        elif op == "assign":
            x = _int_arg(parts, 1, lineno)
            seq = req.snapshot()
            ids = tg.neighbor_ids(x)
            slots = m.assign(seq, x)
            triples = sorted(tg.decode(ids[k]) for k in slots)
            bases = sorted({p for p, _, _ in triples})
            print(f"x={x} count={len(triples)} base={','.join(map(str, bases))}", file=out)
            if args.triples:
                print("nodes=" + ",".join(f"{p}:{v}:{a}" for p, v, a in triples), file=out)
            owner: dict[int, int] = {}
            for z in dict.fromkeys(seq):
                zs = m.assign(seq, z)
                base = m.matcher.assign(seq, z).slots
                ok_count &= len(zs) >= (1 - m.hash_slack) * len(base) * tg.t
                for k in zs:
                    pid = tg.neighbor_ids(z)[k]
                    ok_disjoint &= owner.setdefault(pid, z) == z
        else:
            raise GraphFormatError(f"unknown command {op!r}", lineno)
    checks.record("noshare_disjoint", ok_disjoint)
    checks.record("noshare_count", ok_count)
    return checks.code


def cmd_dict(args, out: TextIO) -> int:
    g, header = _read_graph(args.graph)
    store = OneProbeStore(_matching(args, g, header, args.K + 1), args.K, args.mode)
    rng = random.Random(args.seed)
    checks = Checks(out)
    eps = store.epsilon
    print(f"epsilon={format_fraction(eps)}\ntable_bits={len(store.table)}\nprobes={store.degree}", file=out)
    step = 0
    worst = Fraction(0)
    for lineno, parts in _trace(args.trace):
        op = parts[0]
        if op in ("insert", "delete"):
            x = _int_arg(parts, 1, lineno)
            (store.insert if op == "insert" else store.delete)(x)
            step += 1
            if args.exact:
                errs = [store.exact_error(z) for z in range(g.left_count)]
                top = max(errs)
                worst = max(worst, top)
                print(f"step={step} {op} {x} max_error={format_fraction(top)} "
                      f"{'PASS' if top <= eps else 'FAIL'}", file=out)
        elif op == "query":
            x = _int_arg(parts, 1, lineno)
            if len(parts) > 2 and parts[2] == "all":
                err = store.exact_error(x)
                worst = max(worst, err)
                print(f"error x={x} value={format_fraction(err)} bound={format_fraction(eps)} "
                      f"{'PASS' if err <= eps else 'FAIL'}", file=out)
            else:
                probe = _int_arg(parts, 2, lineno) if len(parts) > 2 else None
                ans, pos = store.query(x, probe, rng)
                print(f"query x={x} pos={pos} answer={'yes' if ans else 'no'}", file=out)
        else:
            raise GraphFormatError(f"unknown command {op!r}", lineno)
    checks.record("one_probe_error", worst <= eps, f"worst={format_fraction(worst)} eps={format_fraction(eps)}")
    if args.snapshot:
        _write(args.snapshot, store.dumps(), out)
    return checks.code


def cmd_route(args, out: TextIO) -> int:
    g, header = _read_graph(args.graph)
    matching = BaseMatching(g, args.K, args.eps, args.r) if args.no_hash else _matching(args, g, header, args.K)
    net = Network(matching, args.K)
    for w in net.warnings:
        print(f"warning {w}", file=out)
    state = RoutingState()
    checks = Checks(out)
    for lineno, parts in _trace(args.trace):
        op = parts[0]
        if op == "connect":
            path = route(net, (_int_arg(parts, 1, lineno), _int_arg(parts, 2, lineno)), state)
            print(path, file=out)
        elif op == "connect?":
            seed = 0
            for tok in parts[3:]:
                if tok.startswith("seed="):
                    seed = int(tok[5:])
            path = route_probabilistic(net, (_int_arg(parts, 1, lineno), _int_arg(parts, 2, lineno)), state,
                                       random.Random(seed))
            print(path, file=out)
        elif op == "disconnect":
            path = disconnect(state)
            print(f"disconnected {path.u} {path.v}", file=out)
        else:
            raise GraphFormatError(f"unknown command {op!r}", lineno)
    print(f"edges={net.edge_count}", file=out)
    ok, vertex = verify_disjoint(state.paths)
    checks.record("disjoint_paths", ok, "" if ok else f"vertex={vertex[0]}:{vertex[1]}")
    checks.record("path_length", all(p.length == 3 and net.is_valid_path(p) for p in state.paths))
    return checks.code


# -- parser ----------------------------------------------------------------

def _add_matching_opts(p: argparse.ArgumentParser, need_k: bool = True) -> None:
    p.add_argument("-K", type=int, required=need_k, help="capacity / budget / bandwidth")
    p.add_argument("-r", type=int, default=1, help="share bound of the base graph")
    p.add_argument("-eps", "--eps", type=_fraction, required=True, help="base slack as num/den")
    p.add_argument("--hash-eps", type=_fraction, default=None, help="hashing slack (defaults to --eps)")
    p.add_argument("--t", type=int, default=None, help="override the field order")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="onlinematch", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--budget", type=int, default=None, help="cap on enumerated subsets")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="search a seeded random graph and certify it")
    p.add_argument("-N", type=int, required=True)
    p.add_argument("-M", type=int, required=True)
    p.add_argument("-D", type=int, required=True)
    p.add_argument("-K", type=int, required=True)
    p.add_argument("-r", type=int, default=1)
    p.add_argument("-eps", "--eps", type=_fraction, required=True)
    p.add_argument("-seed", "--seed", type=int, default=0)
    p.add_argument("--max-tries", type=int, default=1000)
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--cert", default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", help="exhaustive certificates for a graph file")
    p.add_argument("graph")
    p.add_argument("-K", type=int, default=1)
    p.add_argument("-r", type=int, default=1)
    p.add_argument("-eps", "--eps", type=_fraction, default=None)
    p.add_argument("--expansion", action="store_true")
    p.add_argument("--degree", action="store_true")
    p.add_argument("--duality", action="store_true")
    p.add_argument("--condenser", action="store_true")
    p.add_argument("-e", type=int, default=0, help="entropy loss")
    p.add_argument("--kmax", type=int, default=0)
    p.add_argument("--online", action="store_true", help="exhaustive online-matchability game")
    p.add_argument("--ell", type=int, default=1)
    p.add_argument("--offline", default=None, help="comma-separated left set")
    p.add_argument("--rounds", type=int, default=1)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("match", help="replay a push/pop/assign trace")
    p.add_argument("graph")
    p.add_argument("--trace", required=True)
    _add_matching_opts(p, need_k=False)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("transform", help="hash a graph into one without sharing")
    p.add_argument("graph")
    p.add_argument("--trace", default=None)
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--triples", action="store_true", help="list every assigned p:v:a triple")
    _add_matching_opts(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("dict", help="replay a one-probe dictionary trace")
    p.add_argument("graph")
    p.add_argument("--trace", required=True)
    p.add_argument("--mode", choices=("dynamic", "stack"), default="dynamic")
    p.add_argument("--exact", action="store_true", help="print exact error after every update")
    p.add_argument("-seed", "--seed", type=int, default=0)
    p.add_argument("--snapshot", default=None)
    _add_matching_opts(p)
    p.set_defaults(func=cmd_dict)

    p = sub.add_parser("route", help="replay a routing trace")
    p.add_argument("graph")
    p.add_argument("--trace", required=True)
    p.add_argument("--no-hash", action="store_true", help="route on the base graph's sharing assignment")
    _add_matching_opts(p)
    p.set_defaults(func=cmd_route)
    return parser


def main(argv: list[str] | None = None, out: TextIO | None = None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    handler: Callable[..., int] = args.func
    try:
        return handler(args, out)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (GraphFormatError, argparse.ArgumentTypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OnlineMatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
