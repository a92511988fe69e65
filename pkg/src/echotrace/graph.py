"""Directed mention graph, mutual reduction, largest SCC, and descriptive stats.

The mention graph has an edge a -> b for every tweet by a that mentions b
(self-mentions dropped, parallel mentions merged into a count plus a tweet
index). Two edge weightings travel together: the mention count (used for
degree statistics) and the absolute mean sentiment of the edge's tweets
(used for community detection).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .ingest import TweetRecord


@dataclass(frozen=True)
class Edge:
    mention_count: int
    tweet_ids: tuple[str, ...]


@dataclass
class MentionGraph:
    nodes: set[str]
    edges: dict[tuple[str, str], Edge]
    _out: dict[str, set[str]] = field(default_factory=dict, repr=False)
    _in: dict[str, set[str]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for src, dst in self.edges:
            self._out.setdefault(src, set()).add(dst)
            self._in.setdefault(dst, set()).add(src)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        """Merged directed edges (parallel mentions collapsed)."""
        return len(self.edges)

    @property
    def n_mentions(self) -> int:
        """Total directed mentions including parallels."""
        return sum(e.mention_count for e in self.edges.values())

    def out_neighbors(self, node: str) -> set[str]:
        return self._out.get(node, set())

    def in_neighbors(self, node: str) -> set[str]:
        return self._in.get(node, set())

    def reciprocal_edge_count(self) -> int:
        """Directed merged edges whose reverse edge also exists."""
        return sum(1 for (a, b) in self.edges if (b, a) in self.edges)

    def out_adjacency(self) -> dict[str, set[str]]:
        return {n: set(self._out.get(n, set())) for n in self.nodes}


def build_mention_graph(records: Iterable[TweetRecord]) -> MentionGraph:
    """One directed edge per (sender, mentioned user) pair over all tweets."""
    counts: dict[tuple[str, str], int] = {}
    tweets: dict[tuple[str, str], list[str]] = {}
    nodes: set[str] = set()
    for record in records:
        for target in record.mentions:
            if target == record.user_id:
                continue
            key = (record.user_id, target)
            counts[key] = counts.get(key, 0) + 1
            tweets.setdefault(key, []).append(record.tweet_id)
            nodes.add(record.user_id)
            nodes.add(target)
    edges = {
        key: Edge(mention_count=counts[key], tweet_ids=tuple(tweets[key]))
        for key in counts
    }
    return MentionGraph(nodes=nodes, edges=edges)


def mutual_reduce(graph: MentionGraph) -> MentionGraph:
    """Keep only edges whose reverse also exists; drop isolated nodes."""
    edges = {
        key: edge
        for key, edge in graph.edges.items()
        if (key[1], key[0]) in graph.edges
    }
    nodes = {a for a, _ in edges} | {b for _, b in edges}
    return MentionGraph(nodes=nodes, edges=edges)


def strongly_connected_components(graph: MentionGraph) -> list[set[str]]:
    """Tarjan's algorithm, iterative to cope with deep graphs."""
    index: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    components: list[set[str]] = []
    counter = 0

    for root in sorted(graph.nodes):
        if root in index:
            continue
        # Each frame is (node, iterator over sorted out-neighbors).
        work = [(root, iter(sorted(graph.out_neighbors(root))))]
        index[root] = lowlink[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, neighbors = work[-1]
            advanced = False
            for nxt in neighbors:
                if nxt not in index:
                    index[nxt] = lowlink[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(sorted(graph.out_neighbors(nxt)))))
                    advanced = True
                    break
                if nxt in on_stack:
                    lowlink[node] = min(lowlink[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index[node]:
                component = set()
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.add(member)
                    if member == node:
                        break
                components.append(component)
    return components


def largest_scc(graph: MentionGraph) -> MentionGraph:
    """Induced subgraph on the largest SCC; ties pick the smallest member id."""
    if not graph.nodes:
        return MentionGraph(nodes=set(), edges={})
    components = strongly_connected_components(graph)
    best = min(components, key=lambda c: (-len(c), min(c)))
    edges = {
        (a, b): edge
        for (a, b), edge in graph.edges.items()
        if a in best and b in best
    }
    return MentionGraph(nodes=set(best), edges=edges)


def edge_sentiment_weights(graph: MentionGraph, scores: Mapping[str, float]) -> dict[tuple[str, str], float]:
    """Absolute mean sentiment score of each edge's tweets.

    Tweets missing from `scores` are ignored; an edge with no scored tweets
    gets weight 0.
    """
    weights = {}
    for key, edge in graph.edges.items():
        vals = [scores[t] for t in edge.tweet_ids if t in scores]
        weights[key] = abs(sum(vals) / len(vals)) if vals else 0.0
    return weights


def tweet_ids_on_edges(graph: MentionGraph) -> set[str]:
    ids: set[str] = set()
    for edge in graph.edges.values():
        ids.update(edge.tweet_ids)
    return ids


def ccdf_points(values: Iterable[int]) -> list[tuple[int, float]]:
    """(k, P(X >= k)) for each observed value k, non-increasing from 1.0."""
    values = sorted(values)
    n = len(values)
    if n == 0:
        return []
    points = []
    for k in sorted(set(values)):
        at_least = sum(1 for v in values if v >= k)
        points.append((k, at_least / n))
    return points


def undirected_projection(graph: MentionGraph) -> dict[str, set[str]]:
    adj: dict[str, set[str]] = {n: set() for n in graph.nodes}
    for a, b in graph.edges:
        adj[a].add(b)
        adj[b].add(a)
    return adj


def local_clustering(adj: Mapping[str, set[str]]) -> dict[str, float]:
    """Fraction of closed neighbor pairs; degree < 2 nodes get 0 by convention."""
    coeffs = {}
    for node in sorted(adj):
        neighbors = sorted(adj[node])
        k = len(neighbors)
        if k < 2:
            coeffs[node] = 0.0
            continue
        links = 0
        for i, u in enumerate(neighbors):
            for v in neighbors[i + 1:]:
                if v in adj[u]:
                    links += 1
        coeffs[node] = 2 * links / (k * (k - 1))
    return coeffs


def transitivity(adj: Mapping[str, set[str]]) -> float:
    """Global ratio 3 * triangles / connected triples on the projection."""
    triangles = 0
    triples = 0
    for node in adj:
        neighbors = sorted(adj[node])
        k = len(neighbors)
        triples += k * (k - 1) // 2
        for i, u in enumerate(neighbors):
            for v in neighbors[i + 1:]:
                if v in adj[u]:
                    triangles += 1
    return triangles / triples if triples else 0.0


def mean_geodesic_distances(adj: Mapping[str, set[str]]) -> dict[str, float]:
    """BFS from every node; mean shortest-path distance to reachable others."""
    result = {}
    for source in sorted(adj):
        dist = {source: 0}
        frontier = [source]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for node in frontier:
                for neighbor in adj[node]:
                    if neighbor not in dist:
                        dist[neighbor] = d
                        nxt.append(neighbor)
            frontier = nxt
        others = len(dist) - 1
        result[source] = (sum(dist.values()) / others) if others else 0.0
    return result


@dataclass
class GraphStats:
    in_degree_ccdf: list[tuple[int, float]]
    out_degree_ccdf: list[tuple[int, float]]
    in_mention_ccdf: list[tuple[int, float]]
    out_mention_ccdf: list[tuple[int, float]]
    clustering: dict[str, float]
    transitivity: float
    mean_geodesic: dict[str, float]
    reciprocal_edges: int
    avg_out_degree: float
    avg_out_mentions: float

    def summary(self) -> dict:
        cl = list(self.clustering.values())
        ge = list(self.mean_geodesic.values())
        return {
            "transitivity": self.transitivity,
            "reciprocal_edges": self.reciprocal_edges,
            "avg_out_degree": self.avg_out_degree,
            "avg_out_mentions": self.avg_out_mentions,
            "avg_clustering": sum(cl) / len(cl) if cl else 0.0,
            "avg_geodesic": sum(ge) / len(ge) if ge else 0.0,
        }


def compute_stats(graph: MentionGraph) -> GraphStats:
    """Degree CCDFs on the directed graph; clustering, transitivity, and
    geodesics on its undirected projection (BFS per node)."""
    nodes = sorted(graph.nodes)
    out_deg = {n: 0 for n in nodes}
    in_deg = {n: 0 for n in nodes}
    out_men = {n: 0 for n in nodes}
    in_men = {n: 0 for n in nodes}
    for (a, b), edge in graph.edges.items():
        out_deg[a] += 1
        in_deg[b] += 1
        out_men[a] += edge.mention_count
        in_men[b] += edge.mention_count
    adj = undirected_projection(graph)
    n = len(nodes)
    return GraphStats(
        in_degree_ccdf=ccdf_points(in_deg.values()),
        out_degree_ccdf=ccdf_points(out_deg.values()),
        in_mention_ccdf=ccdf_points(in_men.values()),
        out_mention_ccdf=ccdf_points(out_men.values()),
        clustering=local_clustering(adj),
        transitivity=transitivity(adj),
        mean_geodesic=mean_geodesic_distances(adj),
        reciprocal_edges=graph.reciprocal_edge_count(),
        avg_out_degree=(sum(out_deg.values()) / n) if n else 0.0,
        avg_out_mentions=(sum(out_men.values()) / n) if n else 0.0,
    )
