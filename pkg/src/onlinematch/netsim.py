"""Depth-3 non-blocking network built from two copies of a matching graph.

Layers are V1 (inputs), W1, W2 and V2 (outputs). V1 -> W1 and W2 -> V2
use the two copies of the graph, and W1 x W2 is complete (never
materialized). Request i is routed through a node of W1 assigned to u_i
and a node of W2 assigned to v_i; disjoint assignments give vertex-disjoint
paths.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import CapacityError, DuplicateTerminalError, OnlineMatchError, StackDisciplineError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Path:
    u: int
    w: int
    w2: int
    v: int

    def vertices(self) -> tuple[tuple[str, int], ...]:
        return (("V1", self.u), ("W1", self.w), ("W2", self.w2), ("V2", self.v))

    @property
    def length(self) -> int:
        return len(self.vertices()) - 1

    def __str__(self) -> str:
        return f"path {self.u} {self.w} {self.w2} {self.v}"


class Network:
    def __init__(self, matching, bandwidth: int):
        self.matching = matching
        self.bandwidth = bandwidth
        self.warnings: list[str] = []
        if bandwidth > matching.capacity:
            msg = f"bandwidth {bandwidth} exceeds matching capacity {matching.capacity}"
            self.warnings.append(msg)
            log.warning(msg)

    @property
    def terminals(self) -> int:
        return self.matching.left_count

    @property
    def middle(self) -> int:
        return self.matching.right_count

    @property
    def edge_count(self) -> int:
        """2*N*D + |W|^2: both expander copies plus the complete middle layer."""
        return 2 * self.terminals * self.matching.degree + self.middle ** 2

    def has_edge(self, a: tuple[str, int], b: tuple[str, int]) -> bool:
        (la, ia), (lb, ib) = a, b
        if (la, lb) == ("V1", "W1"):
            return ib in self.matching.neighbor_ids(ia)
        if (la, lb) == ("W1", "W2"):
            return 0 <= ia < self.middle and 0 <= ib < self.middle
        if (la, lb) == ("W2", "V2"):
            return ia in self.matching.neighbor_ids(ib)
        return False

    def is_valid_path(self, path: Path) -> bool:
        vs = path.vertices()
        return all(self.has_edge(a, b) for a, b in zip(vs, vs[1:]))


def build_network(matching, bandwidth: int) -> Network:
    return Network(matching, bandwidth)


@dataclass
class RoutingState:
    inputs: list[int] = field(default_factory=list)
    outputs: list[int] = field(default_factory=list)
    paths: list[Path] = field(default_factory=list)


class RoutingFailure(OnlineMatchError):
    pass


def _admit(net: Network, request: tuple[int, int], state: RoutingState) -> tuple[int, int]:
    u, v = request
    if len(state.paths) >= net.bandwidth:
        raise CapacityError(f"bandwidth {net.bandwidth} exhausted")
    if u in state.inputs:
        raise DuplicateTerminalError(f"input {u} is already connected")
    if v in state.outputs:
        raise DuplicateTerminalError(f"output {v} is already connected")
    net.matching.neighbor_ids(u)
    net.matching.neighbor_ids(v)
    return u, v


def route(net: Network, request: tuple[int, int], state: RoutingState) -> Path:
    """Connect u to v through the smallest assigned node on each side."""
    u, v = _admit(net, request, state)
    s1 = tuple(state.inputs) + (u,)
    s2 = tuple(state.outputs) + (v,)
    m = net.matching
    ids_u, ids_v = m.neighbor_ids(u), m.neighbor_ids(v)
    a1 = m.assign(s1, u)
    a2 = m.assign(s2, v)
    if not a1 or not a2:
        raise RoutingFailure(f"no assigned middle node for request ({u}, {v})")
    path = Path(u, min(ids_u[k] for k in a1), min(ids_v[k] for k in a2), v)
    state.inputs.append(u)
    state.outputs.append(v)
    state.paths.append(path)
    return path


def route_probabilistic(net: Network, request: tuple[int, int], state: RoutingState,
                        randomness: random.Random | tuple[int, int]) -> Path:
    """Connect u to v through a uniformly random edge on each side.

    ``randomness`` is either a generator or an explicit pair of slot
    indices. No assignment is computed, so the path may collide with
    earlier ones.
    """
    u, v = _admit(net, request, state)
    ids_u, ids_v = net.matching.neighbor_ids(u), net.matching.neighbor_ids(v)
    if isinstance(randomness, tuple):
        ku, kv = randomness
    else:
        ku, kv = randomness.randrange(len(ids_u)), randomness.randrange(len(ids_v))
    path = Path(u, ids_u[ku], ids_v[kv], v)
    state.inputs.append(u)
    state.outputs.append(v)
    state.paths.append(path)
    return path


def disconnect(state: RoutingState) -> Path:
    """Tear down the most recent connection."""
    if not state.paths:
        raise StackDisciplineError("no connection to tear down")
    state.inputs.pop()
    state.outputs.pop()
    return state.paths.pop()


def verify_disjoint(paths: Iterable[Path]) -> tuple[bool, tuple[str, int] | None]:
    """(True, None) if no vertex lies on two paths, else (False, first shared vertex)."""
    seen: set[tuple[str, int]] = set()
    for path in paths:
        for vert in path.vertices():
            if vert in seen:
                return False, vert
            seen.add(vert)
    return True, None


def route_all(net: Network, requests: Sequence[tuple[int, int]]) -> list[Path]:
    state = RoutingState()
    return [route(net, req, state) for req in requests]
