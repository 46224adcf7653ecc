"""Online matching on bipartite graphs with bounded right degree.

Modules: graph_core (graphs and counts), certify (exhaustive certificates,
search, condensers, the online game), matcher (the assignment f(S, x)),
disjointify (hashing out the sharing), oneprobe (one-bit-probe dictionary)
and netsim (depth-3 non-blocking network).
"""

from __future__ import annotations

from .certify import (
    certify_bounded_degree,
    certify_expansion,
    check_expander_degree_duality,
    condenser_distance,
    offline_match,
    redirect_edges,
    refute_online_matchability,
    search_bounded_degree,
    search_random_expander,
)
from .disjointify import BaseMatching, BinaryField, NoShareMatching, TransformedGraph
from .graph_core import FIG1, BipartiteGraph, excess, parse_graph, format_graph
from .matcher import OnlineMatcher, RequestList, assign, match_all
from .netsim import Network, route, route_probabilistic, verify_disjoint
from .oneprobe import OneProbeStore

__version__ = "0.1.0"

__all__ = [
    "FIG1",
    "BaseMatching",
    "BinaryField",
    "BipartiteGraph",
    "Network",
    "NoShareMatching",
    "OneProbeStore",
    "OnlineMatcher",
    "RequestList",
    "TransformedGraph",
    "assign",
    "certify_bounded_degree",
    "certify_expansion",
    "check_expander_degree_duality",
    "condenser_distance",
    "excess",
    "format_graph",
    "match_all",
    "offline_match",
    "parse_graph",
    "redirect_edges",
    "refute_online_matchability",
    "route",
    "route_probabilistic",
    "search_bounded_degree",
    "search_random_expander",
    "verify_disjoint",
]
