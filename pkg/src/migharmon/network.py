"""Directed weighted migration networks and their community structure.

Nodes are state entities, one edge per positive interstate flow, weighted by
the migrant count. Community detection runs Louvain modularity optimization
on the symmetrized weights (w_ij + w_ji); the partition for a given seed is
deterministic, and the community count is stabilized by taking the mode over
a sweep of seeds.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from typing import IO, Iterable

import networkx as nx
from sklearn.metrics import adjusted_rand_score

from .errors import AxisMismatch
from .model import DurationBin, MigrationTable, OriginKind, OriginRef

DEFAULT_SEEDS = tuple(range(50))


@dataclass(frozen=True)
class MigrationNetwork:
    decade: str
    graph: nx.DiGraph

    @property
    def n_nodes(self) -> int:
        return self.graph.number_of_nodes()

    @property
    def n_edges(self) -> int:
        return self.graph.number_of_edges()

    @property
    def total_weight(self) -> float:
        return float(self.graph.size(weight="weight"))


def build_network(
    table: MigrationTable,
    bin_: DurationBin | None = None,
    min_weight: float = 0.0,
) -> MigrationNetwork:
    """Directed graph of interstate flows, origin -> destination.

    ``bin_`` restricts edge weights to a single duration bin; by default the
    pair total is used. Edges at or below ``min_weight`` are dropped, nodes
    are kept even when isolated so the node axis stays comparable.
    """
    graph = nx.DiGraph()
    nodes = set(table.destinations)
    for dest in table.destinations:
        for origin in table.origins(dest):
            if origin.kind is OriginKind.INTERSTATE:
                nodes.add(origin.state)
    graph.add_nodes_from(sorted(nodes))
    for dest in table.destinations:
        for origin in table.origins(dest):
            if origin.kind is not OriginKind.INTERSTATE or origin.state == dest:
                continue
            if bin_ is None:
                weight = table.pair_total(dest, origin)
            else:
                weight = table.get(dest, origin, bin_)
            if weight > min_weight:
                graph.add_edge(origin.state, dest, weight=float(weight))
    return MigrationNetwork(decade=table.decade, graph=graph)


@dataclass(frozen=True)
class NetworkMetrics:
    decade: str
    n_nodes: int
    n_edges: int
    total_weight: float
    density: float
    mean_edge_weight: float


def network_metrics(net: MigrationNetwork) -> NetworkMetrics:
    n, m = net.n_nodes, net.n_edges
    density = m / (n * (n - 1)) if n > 1 else 0.0
    return NetworkMetrics(
        decade=net.decade,
        n_nodes=n,
        n_edges=m,
        total_weight=net.total_weight,
        density=density,
        mean_edge_weight=net.total_weight / m if m else 0.0,
    )


@dataclass(frozen=True)
class Partition:
    decade: str
    seed: int
    labels: dict[str, int]

    @property
    def n_communities(self) -> int:
        return len(set(self.labels.values()))

    def communities(self) -> list[list[str]]:
        groups: dict[int, list[str]] = {}
        for node, label in self.labels.items():
            groups.setdefault(label, []).append(node)
        return [sorted(groups[label]) for label in sorted(groups)]


def symmetrized(net: MigrationNetwork) -> nx.Graph:
    """Undirected view with weight(u, v) = w_uv + w_vu."""
    graph = nx.Graph()
    graph.add_nodes_from(net.graph.nodes)
    for u, v, data in net.graph.edges(data=True):
        w = data["weight"]
        if graph.has_edge(u, v):
            graph[u][v]["weight"] += w
        else:
            graph.add_edge(u, v, weight=w)
    return graph


def detect_communities(net: MigrationNetwork, seed: int = 0) -> Partition:
    """Louvain partition of the symmetrized network, canonically labelled.

    Labels are contiguous integers assigned by each community's smallest
    member name, so identical groupings always produce identical mappings.
    """
    communities = nx.community.louvain_communities(
        symmetrized(net), weight="weight", seed=seed
    )
    ordered = sorted((sorted(c) for c in communities), key=lambda c: c[0])
    labels = {node: i for i, members in enumerate(ordered) for node in members}
    return Partition(decade=net.decade, seed=seed, labels=labels)


def community_count_mode(
    net: MigrationNetwork, seeds: Iterable[int] = DEFAULT_SEEDS
) -> tuple[int, dict[int, int]]:
    """Modal community count over a seed sweep, with the full histogram.

    Ties break toward the smaller count.
    """
    histogram = Counter(
        detect_communities(net, seed=s).n_communities for s in seeds
    )
    mode = min(histogram, key=lambda k: (-histogram[k], k))
    return mode, dict(sorted(histogram.items()))


def compare_partitions(a: Partition, b: Partition) -> float:
    """Adjusted Rand index over the shared node set, clipped to [0, 1]."""
    common = sorted(set(a.labels) & set(b.labels))
    if not common:
        raise AxisMismatch("partitions share no nodes")
    score = adjusted_rand_score(
        [a.labels[n] for n in common], [b.labels[n] for n in common]
    )
    return max(0.0, min(1.0, float(score)))


def export_edge_list(
    net: MigrationNetwork,
    stream: IO[str],
    partition: Partition | None = None,
) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["decade", "origin", "destination", "weight", "origin_community"])
    for u, v in sorted(net.graph.edges):
        community = "" if partition is None else partition.labels.get(u, "")
        writer.writerow([net.decade, u, v, repr(net.graph[u][v]["weight"]), community])
