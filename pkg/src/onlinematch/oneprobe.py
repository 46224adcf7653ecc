"""Dynamic one-probe membership dictionary.

The table has one bit per right node of a graph with ((1-eps)D, 1) online
matching up to size K+1. The state list holds every element ever inserted
(in first-insertion order) with an on/off mark; an element's bits are the
positions f(state, x) assigned to it, all 1 while it is on and all 0
otherwise. A query reads the bit behind one random edge of x.

Writers serialize on a lock. Readers never take it: each query reads a
single byte of the table, so it sees either the old or the new value of
any bit being written.
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .disjointify import NoShareMatching
from .errors import CapacityError, GraphFormatError, StackDisciplineError
from .graph_core import format_fraction, format_graph, parse_fraction, parse_graph

WriteHook = Callable[[int, int], None]


@dataclass
class StateEntry:
    element: int
    on: bool


class OneProbeStore:
    """Bit table plus state list over an online-matching graph.

    ``matching`` must expose ``left_count``, ``degree``, ``right_count``,
    ``capacity``, ``epsilon_bound``, ``neighbor_ids(x)`` and
    ``assign(seq, x)`` (see :class:`~onlinematch.disjointify.NoShareMatching`).
    In ``"dynamic"`` mode ``budget`` bounds the number of distinct elements
    ever inserted; in ``"stack"`` mode it bounds the live stack size.
    """

    def __init__(self, matching, budget: int, mode: str = "dynamic"):
        if mode not in ("dynamic", "stack"):
            raise ValueError(f"mode must be 'dynamic' or 'stack', got {mode!r}")
        if matching.capacity < budget + 1:
            raise ValueError(
                f"matching capacity {matching.capacity} must be at least budget + 1 = {budget + 1}")
        self.matching = matching
        self.budget = budget
        self.mode = mode
        self.table = bytearray(matching.right_count)
        self._bits = np.frombuffer(self.table, dtype=np.uint8)
        self.state: list[StateEntry] = []
        self._pos: dict[int, int] = {}
        self._lock = threading.Lock()
        self._ids: dict[int, np.ndarray] = {}

    @property
    def epsilon(self) -> Fraction:
        return self.matching.epsilon_bound

    @property
    def degree(self) -> int:
        return self.matching.degree

    def size_bits(self) -> int:
        """Table bits plus the state list (label bits and one mark bit per entry)."""
        label = max(1, (self.matching.left_count - 1).bit_length())
        return len(self.table) + len(self.state) * (label + 1)

    def _positions(self, x: int) -> np.ndarray:
        ids = self._ids.get(x)
        if ids is None:
            ids = np.asarray(self.matching.neighbor_ids(x), dtype=np.int64)
            self._ids[x] = ids
        return ids

    def order(self) -> tuple[int, ...]:
        return tuple(e.element for e in self.state)

    def _extended(self, x: int) -> tuple[int, ...]:
        seq = self.order()
        return seq if x in self._pos else seq + (x,)

    def footprint(self, x: int) -> frozenset[int]:
        """Table positions f(state + x, x) that encode x."""
        seq = self._extended(x)
        ids = self._positions(x)
        return frozenset(int(ids[k]) for k in self.matching.assign(seq, x))

    def _write(self, x: int, value: int, hook: WriteHook | None) -> None:
        ids = self._positions(x)
        for k in sorted(self.matching.assign(self.order(), x)):
            pos = int(ids[k])
            self.table[pos] = value
            if hook is not None:
                hook(pos, value)

    def insert(self, x: int, on_write: WriteHook | None = None) -> None:
        """Add x to the set; ``on_write(pos, bit)`` runs after each bit store."""
        with self._lock:
            if x not in self._pos:
                if len(self.state) >= self.budget:
                    raise CapacityError(f"store already holds {self.budget} elements")
                self.matching.neighbor_ids(x)  # validates x
                self._pos[x] = len(self.state)
                self.state.append(StateEntry(x, True))
            self.state[self._pos[x]].on = True
            self._write(x, 1, on_write)

    def delete(self, x: int, on_write: WriteHook | None = None) -> None:
        with self._lock:
            if x not in self._pos:
                return
            if self.mode == "stack":
                if self.state[-1].element != x:
                    raise StackDisciplineError(f"only the top element {self.state[-1].element} may be deleted")
                self.state[-1].on = False
                self._write(x, 0, on_write)
                self.state.pop()
                del self._pos[x]
                return
            self.state[self._pos[x]].on = False
            self._write(x, 0, on_write)

    def query(self, x: int, probe: int | None = None, rng: random.Random | None = None) -> tuple[bool, int]:
        """Answer "is x in S?" from one bit; returns (answer, probed position)."""
        ids = self._positions(x)
        if probe is None:
            probe = (rng or random).randrange(len(ids))
        pos = int(ids[probe])
        return self.table[pos] == 1, pos

    def is_member(self, x: int) -> bool:
        i = self._pos.get(x)
        return i is not None and self.state[i].on

    def members(self) -> set[int]:
        return {e.element for e in self.state if e.on}

    def exact_error(self, x: int) -> Fraction:
        """Fraction of the D' probes of x whose bit gives the wrong answer."""
        bits = self._bits[self._positions(x)]
        ones = int(bits.sum())
        wrong = len(bits) - ones if self.is_member(x) else ones
        return Fraction(wrong, len(bits))

    # -- snapshot text -----------------------------------------------------

    def dumps(self) -> str:
        m = self.matching
        lines = [
            f"store mode={self.mode} budget={self.budget} capacity={m.capacity} "
            f"eps={format_fraction(m.base_epsilon)} r={m.r}",
            format_graph(m.tg.base, {"t": m.tg.t, "poly": f"{m.tg.field.modulus:x}"}).rstrip("\n"),
            "bits " + (bytes(np.packbits(self._bits, bitorder="little")).hex() or "-"),
        ]
        lines += [f"state {e.element} {'on' if e.on else 'off'}" for e in self.state]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "OneProbeStore":
        lines = text.rstrip("\n").split("\n")
        if not lines or not lines[0].startswith("store "):
            raise GraphFormatError("expected 'store ...' line", 1)
        opts = dict(tok.split("=", 1) for tok in lines[0].split()[1:])
        n_rows = int(lines[2].split()[0])
        g, header = parse_graph("\n".join(lines[1:3 + n_rows]) + "\n")
        matching = NoShareMatching(g, int(opts["capacity"]), parse_fraction(opts["eps"]), int(opts["r"]),
                                   t=int(header["t"]))
        if f"{matching.tg.field.modulus:x}" != header["poly"]:
            raise GraphFormatError("field polynomial does not match", 2)
        store = cls(matching, int(opts["budget"]), opts["mode"])
        i = 3 + n_rows
        if not lines[i].startswith("bits "):
            raise GraphFormatError("expected 'bits <hex>' line", i + 1)
        hexbits = lines[i].split()[1]
        if hexbits != "-":
            raw = np.unpackbits(np.frombuffer(bytes.fromhex(hexbits), dtype=np.uint8), bitorder="little")
            store._bits[:] = raw[: len(store.table)]
        for k, ln in enumerate(lines[i + 1:], start=i + 2):
            parts = ln.split()
            if len(parts) != 3 or parts[0] != "state" or parts[2] not in ("on", "off"):
                raise GraphFormatError(f"bad state line {ln!r}", k)
            x = int(parts[1])
            store._pos[x] = len(store.state)
            store.state.append(StateEntry(x, parts[2] == "on"))
        return store
