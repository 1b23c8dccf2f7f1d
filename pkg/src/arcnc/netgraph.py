"""Directed multigraph network model.

A Network is immutable after construction: nodes are 0..num_nodes-1, edges
are (tail, head) pairs identified by position (multi-edges allowed, unit
capacity each), one source, and a set of must-decode sinks. Construction
assigns the deterministic breadth-first edge order and, from it, the
zero-initialization mask that puts at least one unit delay on every
directed cycle.
"""

from __future__ import annotations

from collections import deque
from typing import NamedTuple

__all__ = [
    "AdjacentPair",
    "Network",
    "adjacent_pairs",
    "index_edges",
    "zero_init_mask",
    "all_zero_fallback",
    "validate_cycle_delay",
    "has_cycle",
    "min_cut",
    "multicast_rate",
    "to_dot",
]


class AdjacentPair(NamedTuple):
    """Edge pair (e_in, e_out) meeting at a node, e_in incoming, e_out outgoing."""

    e_in: int
    e_out: int


class Network:
    """Directed multigraph with a single source and a set of sinks.

    Use Network.build(); the raw constructor performs no validation or
    edge indexing.
    """

    def __init__(self, num_nodes, edges, source, sinks, shaded=()):
        self.num_nodes = num_nodes
        self.edges = [(int(t), int(h)) for t, h in edges]
        self.source = source
        self.sinks = tuple(sinks)
        self.shaded = frozenset(shaded)
        self.in_edges = [[] for _ in range(num_nodes)]
        self.out_edges = [[] for _ in range(num_nodes)]
        for e, (t, h) in enumerate(self.edges):
            self.out_edges[t].append(e)
            self.in_edges[h].append(e)
        self.edge_order: list[int] = []
        self.edge_pos: list[int] = []
        self.zero_mask: frozenset[AdjacentPair] = frozenset()

    @classmethod
    def build(cls, num_nodes, edges, source, sinks, shaded=(), tiebreak=None, mask="indexed"):
        """Validate, assign the edge order, and compute the zero mask.

        mask 'indexed' derives the minimal-delay mask from the edge order;
        'all_zero' masks every adjacent pair (a unit delay per hop), which
        needs no topology knowledge at all.
        """
        net = cls(num_nodes, edges, source, sinks, shaded)
        for e in net.in_edges[source]:
            raise ValueError(f"source has incoming edge {net.edges[e]}")
        if not net.sinks:
            raise ValueError("network needs at least one sink")
        reach = net.reachable_from_source()
        for r in net.sinks:
            if r not in reach:
                raise ValueError(f"sink {r} unreachable from source")
        net.edge_order = index_edges(net, tiebreak)
        net.edge_pos = [0] * len(net.edges)
        for pos, e in enumerate(net.edge_order):
            net.edge_pos[e] = pos
        if mask == "indexed":
            net.zero_mask = zero_init_mask(net)
        elif mask == "all_zero":
            net.zero_mask = all_zero_fallback(net)
        else:
            raise ValueError(f"unknown mask mode {mask!r}")
        if not validate_cycle_delay(net, net.zero_mask):
            raise AssertionError("zero mask leaves a delay-free cycle")
        return net

    def reachable_from_source(self) -> set[int]:
        seen = {self.source}
        queue = deque([self.source])
        while queue:
            v = queue.popleft()
            for e in self.out_edges[v]:
                h = self.edges[e][1]
                if h not in seen:
                    seen.add(h)
                    queue.append(h)
        return seen

    def tail(self, e: int) -> int:
        return self.edges[e][0]

    def head(self, e: int) -> int:
        return self.edges[e][1]

    def edge_label(self, e: int) -> str:
        """1-based label following the assigned order, e.g. 'e3'."""
        return f"e{self.edge_pos[e] + 1}"

    @property
    def max_in_degree(self) -> int:
        return max(len(ins) for ins in self.in_edges)

    def __repr__(self) -> str:
        return (
            f"Network({self.num_nodes} nodes, {len(self.edges)} edges, "
            f"source={self.source}, sinks={list(self.sinks)})"
        )


def adjacent_pairs(net: Network):
    """All (e_in, e_out) pairs through each non-source node."""
    for v in range(net.num_nodes):
        if v == net.source:
            continue
        for e_in in net.in_edges[v]:
            for e_out in net.out_edges[v]:
                yield AdjacentPair(e_in, e_out)


def index_edges(net: Network, tiebreak=None) -> list[int]:
    """Deterministic edge order from the source; dequeuing a node indexes
    all of its outgoing edges (in edge insertion order) consecutively, so
    the source's out-edges always come first.

    On acyclic graphs nodes are dequeued in topological order, which makes
    every adjacent pair increasing and the zero mask empty: the cyclic
    machinery is a strict no-op on DAGs. Plain breadth-first order from the
    source cannot promise that (a short branch can index a merge node's
    out-edges before a longer branch arrives), so it is used only on cyclic
    graphs, where it yields the shuttle example's canonical labels. Nodes that
    tie (newly visited or newly ready in the same dequeue step) enter the
    queue in ascending node-id order, or by the given tiebreak key. Edges
    of nodes unreached by the traversal are swept up afterwards in node-id
    order; any total order keeps the zero mask covering every cycle.
    """
    key = tiebreak if tiebreak is not None else (lambda v: v)
    order = []
    indexed = [False] * len(net.edges)
    acyclic = _is_acyclic(net)
    if acyclic:
        indeg = [len(ins) for ins in net.in_edges]
        queue = deque([net.source])
        queued = [False] * net.num_nodes
        queued[net.source] = True
        while queue:
            v = queue.popleft()
            ready = []
            for e in net.out_edges[v]:
                order.append(e)
                indexed[e] = True
                h = net.head(e)
                indeg[h] -= 1
                if indeg[h] == 0 and not queued[h]:
                    queued[h] = True
                    ready.append(h)
            for h in sorted(ready, key=key):
                queue.append(h)
    else:
        visited = [False] * net.num_nodes
        visited[net.source] = True
        queue = deque([net.source])
        while queue:
            v = queue.popleft()
            newly = []
            for e in net.out_edges[v]:
                order.append(e)
                indexed[e] = True
                h = net.head(e)
                if not visited[h]:
                    visited[h] = True
                    newly.append(h)
            for h in sorted(newly, key=key):
                queue.append(h)
    for v in range(net.num_nodes):
        for e in net.out_edges[v]:
            if not indexed[e]:
                order.append(e)
                indexed[e] = True
    return order


def _is_acyclic(net: Network) -> bool:
    indeg = [len(ins) for ins in net.in_edges]
    queue = deque(v for v in range(net.num_nodes) if indeg[v] == 0)
    seen = 0
    while queue:
        v = queue.popleft()
        seen += 1
        for e in net.out_edges[v]:
            h = net.head(e)
            indeg[h] -= 1
            if indeg[h] == 0:
                queue.append(h)
    return seen == net.num_nodes


def zero_init_mask(net: Network, order=None) -> frozenset[AdjacentPair]:
    """Adjacent pairs whose t=0 kernel coefficient is forced to zero:
    exactly those with index(e_in) >= index(e_out)."""
    if order is None:
        pos = net.edge_pos
    else:
        pos = [0] * len(net.edges)
        for p, e in enumerate(order):
            pos[e] = p
    return frozenset(p for p in adjacent_pairs(net) if pos[p.e_in] >= pos[p.e_out])


def all_zero_fallback(net: Network) -> frozenset[AdjacentPair]:
    """Mask every adjacent pair: a unit delay per hop, valid on any graph."""
    return frozenset(adjacent_pairs(net))


def validate_cycle_delay(net: Network, mask) -> bool:
    """True iff every directed cycle contains at least one masked pair.

    Checked on the line graph of edge adjacency: drop the masked arcs and
    test acyclicity (Kahn); a delay-free cycle in the network is exactly a
    cycle of unmasked adjacencies.
    """
    mask = set(mask)
    n_edges = len(net.edges)
    succ = [[] for _ in range(n_edges)]
    indeg = [0] * n_edges
    for pair in adjacent_pairs(net):
        if pair not in mask:
            succ[pair.e_in].append(pair.e_out)
            indeg[pair.e_out] += 1
    queue = deque(e for e in range(n_edges) if indeg[e] == 0)
    seen = 0
    while queue:
        e = queue.popleft()
        seen += 1
        for nxt in succ[e]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                queue.append(nxt)
    return seen == n_edges


def has_cycle(net: Network) -> bool:
    """True iff the network contains any directed cycle."""
    return not _is_acyclic(net)


def min_cut(net: Network, sink: int) -> int:
    """Max-flow value from the source to the sink under unit edge capacities,
    by breadth-first augmenting paths (Edmonds-Karp)."""
    if sink == net.source:
        raise ValueError("sink equals source")
    # residual arcs: per edge a forward slot (cap 1) and a back slot (cap 0)
    head = []
    cap = []
    adj = [[] for _ in range(net.num_nodes)]

    def arc(u, v, c):
        adj[u].append(len(head))
        head.append(v)
        cap.append(c)

    for t, h in net.edges:
        arc(t, h, 1)
        arc(h, t, 0)
    flow = 0
    while True:
        prev_arc = [-1] * net.num_nodes
        prev_arc[net.source] = -2
        queue = deque([net.source])
        while queue and prev_arc[sink] == -1:
            u = queue.popleft()
            for a in adj[u]:
                v = head[a]
                if cap[a] > 0 and prev_arc[v] == -1:
                    prev_arc[v] = a
                    queue.append(v)
        if prev_arc[sink] == -1:
            break
        v = sink
        while v != net.source:
            a = prev_arc[v]
            cap[a] -= 1
            cap[a ^ 1] += 1
            v = head[a ^ 1]
        flow += 1
    if flow == 0:
        raise ValueError(f"sink {sink} unreachable from source")
    return flow


def multicast_rate(net: Network) -> int:
    """Source symbol rate: the smallest min-cut over all sinks."""
    return min(min_cut(net, r) for r in net.sinks)


def to_dot(net: Network, name: str = "network") -> str:
    """Graphviz rendering; node shapes mark source, sinks, and relays, and
    masked adjacent pairs are listed in the graph label."""
    lines = [f"digraph {name} {{", "  rankdir=TB;"]
    for v in range(net.num_nodes):
        if v == net.source:
            shape = "box"
        elif v in net.sinks:
            shape = "doublecircle"
        else:
            shape = "ellipse"
        fill = ' style=filled fillcolor=gray80' if v in net.shaded else ""
        lines.append(f'  n{v} [label="{v}" shape={shape}{fill}];')
    for e in net.edge_order:
        t, h = net.edges[e]
        lines.append(f'  n{t} -> n{h} [label="{net.edge_label(e)}"];')
    if net.zero_mask:
        masked = sorted(
            (net.edge_pos[p.e_in], net.edge_pos[p.e_out]) for p in net.zero_mask
        )
        note = ", ".join(f"(e{i + 1},e{o + 1})" for i, o in masked)
        lines.append(f'  label="zero mask: {note}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
