"""Network topology and routing.

A network is described by its routing matrix: a binary L x J incidence
matrix with a 1 wherever a flow's fixed path crosses a link.  Link loads
are the image of the per-flow volumes under this matrix, ``y = R x``.
Routes are treated as static for the lifetime of a matrix.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "RoutingMatrix",
    "links_of_flow",
    "flows_on_link",
    "link_loads",
    "synthetic_topology",
    "load_routing_csv",
    "save_routing_csv",
]


@dataclass(frozen=True)
class RoutingMatrix:
    """Binary link-flow incidence (links are rows, flows are columns).

    Every flow must traverse at least one link.  Links carrying no flow are
    allowed; they simply never receive any sampling allocation.
    """

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries)
        if e.ndim != 2 or e.size == 0:
            raise ValueError("routing matrix must be a nonempty 2-D array")
        if not np.isin(e, (0, 1)).all():
            raise ValueError("routing matrix entries must be 0 or 1")
        e = e.astype(np.int64)
        empty = np.flatnonzero(e.sum(axis=0) < 1)
        if empty.size:
            raise ValueError(f"flow {int(empty[0])} traverses no link")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def n_links(self) -> int:
        return self.entries.shape[0]

    @property
    def n_flows(self) -> int:
        return self.entries.shape[1]


def links_of_flow(routing: RoutingMatrix, j: int) -> set[int]:
    """Set of link indices on flow ``j``'s path (nonempty by construction)."""
    if not 0 <= j < routing.n_flows:
        raise ValueError(f"flow index {j} out of range [0, {routing.n_flows})")
    return set(np.flatnonzero(routing.entries[:, j]).tolist())


def flows_on_link(routing: RoutingMatrix, link: int) -> set[int]:
    """Set of flow indices whose path uses ``link`` (may be empty)."""
    if not 0 <= link < routing.n_links:
        raise ValueError(f"link index {link} out of range [0, {routing.n_links})")
    return set(np.flatnonzero(routing.entries[link]).tolist())


def link_loads(routing: RoutingMatrix, volumes) -> np.ndarray:
    """Aggregate per-flow volumes into per-link loads, ``y = R x``."""
    x = np.asarray(volumes, dtype=float)
    if x.shape != (routing.n_flows,):
        raise ValueError(
            f"expected {routing.n_flows} flow volumes, got shape {x.shape}"
        )
    if (x < 0).any():
        raise ValueError("flow volumes must be nonnegative")
    return routing.entries @ x


def synthetic_topology(
    n_nodes: int = 9,
    n_links: int = 26,
    n_flows: int = 72,
    seed=0,
) -> RoutingMatrix:
    """Random connected backbone-style topology with shortest-path routing.

    Draws ``n_links // 2`` undirected edges (a random spanning tree plus
    random extras), turns each into a pair of directed links, routes one
    flow along the hop-count shortest path of each selected ordered node
    pair, and returns the resulting routing matrix.  The defaults produce
    a 9-node / 26-link / 72-flow network (all ordered pairs routed).

    Link order, pair selection, and path tie-breaking are deterministic
    given the seed.
    """
    if n_nodes < 2:
        raise ValueError("need at least 2 nodes")
    if n_links % 2 != 0:
        raise ValueError("n_links must be even (links come in directed pairs)")
    n_edges = n_links // 2
    max_edges = n_nodes * (n_nodes - 1) // 2
    if not n_nodes - 1 <= n_edges <= max_edges:
        raise ValueError(
            f"n_links/2 must lie in [{n_nodes - 1}, {max_edges}] for {n_nodes} nodes"
        )
    max_flows = n_nodes * (n_nodes - 1)
    if not 1 <= n_flows <= max_flows:
        raise ValueError(f"n_flows must lie in [1, {max_flows}] for {n_nodes} nodes")

    rng = np.random.default_rng(seed)

    # random spanning tree: attach each node to a uniformly chosen earlier one
    order = rng.permutation(n_nodes)
    edges = set()
    for i in range(1, n_nodes):
        a = int(order[i])
        b = int(order[int(rng.integers(i))])
        edges.add((min(a, b), max(a, b)))
    all_pairs = [(a, b) for a in range(n_nodes) for b in range(a + 1, n_nodes)]
    remaining = [p for p in all_pairs if p not in edges]
    extra = n_edges - len(edges)
    if extra > 0:
        picks = rng.choice(len(remaining), size=extra, replace=False)
        for i in picks.tolist():
            edges.add(remaining[i])

    edge_list = sorted(edges)
    link_index = {}
    for a, b in edge_list:
        link_index[(a, b)] = len(link_index)
        link_index[(b, a)] = len(link_index)

    adjacency = {v: [] for v in range(n_nodes)}
    for a, b in edge_list:
        adjacency[a].append(b)
        adjacency[b].append(a)
    for v in adjacency:
        adjacency[v].sort()

    pairs = [(s, d) for s in range(n_nodes) for d in range(n_nodes) if s != d]
    if n_flows < len(pairs):
        picks = sorted(rng.choice(len(pairs), size=n_flows, replace=False).tolist())
        pairs = [pairs[i] for i in picks]

    # BFS parents with sorted adjacency give deterministic shortest paths
    parents = {}
    for s in range(n_nodes):
        parent = {s: None}
        frontier = [s]
        while frontier:
            nxt = []
            for v in frontier:
                for w in adjacency[v]:
                    if w not in parent:
                        parent[w] = v
                        nxt.append(w)
            frontier = nxt
        parents[s] = parent

    entries = np.zeros((n_links, n_flows), dtype=np.int64)
    for col, (s, d) in enumerate(pairs):
        v = d
        while v != s:
            p = parents[s][v]
            entries[link_index[(p, v)], col] = 1
            v = p
    return RoutingMatrix(entries)


def save_routing_csv(routing: RoutingMatrix, path) -> None:
    """Write a routing matrix as ``link,flow_0,...,flow_{J-1}`` rows."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["link"] + [f"flow_{j}" for j in range(routing.n_flows)])
        for link in range(routing.n_links):
            writer.writerow([link] + routing.entries[link].tolist())


def load_routing_csv(path) -> RoutingMatrix:
    """Read a routing matrix CSV; any cell other than 0/1 is rejected."""
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ConfigError(f"{path}: empty routing file")
    header = rows[0]
    n_flows = len(header) - 1
    expected = ["link"] + [f"flow_{j}" for j in range(n_flows)]
    if n_flows < 1 or header != expected:
        raise ConfigError(f"{path}: header must be link,flow_0,...,flow_{{J-1}}")
    entries = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != n_flows + 1:
            raise ConfigError(f"{path}: line {i}: expected {n_flows + 1} cells")
        vals = []
        for cell in row[1:]:
            if cell not in ("0", "1"):
                raise ConfigError(f"{path}: line {i}: cell {cell!r} is not 0 or 1")
            vals.append(int(cell))
        entries.append(vals)
    if not entries:
        raise ConfigError(f"{path}: no link rows")
    try:
        return RoutingMatrix(np.array(entries))
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from e
