"""Network-structure variables: degree and betweenness centrality, distance to centre.

Degree normalisation counts both arc directions of every undirected segment,
``(in + out) / (n - 1) = 2 * deg / (n - 1)``. On a 108-station network this
puts a terminal at 2/107 = 0.01869 and a four-way transfer at 8/107 = 0.07477.

Betweenness sums pair dependencies over ordered (s, t) pairs and divides by
``(n - 1)(n - 2)``.
"""

from __future__ import annotations

import csv
import logging
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Mapping

from .errors import NumericalError
from .geo import haversine_km
from .ingest import EdgeList, StationTable

log = logging.getLogger(__name__)

# Taipei City Government, Xinyi District
TAIPEI_CITY_HALL = (25.0375, 121.5637)


@dataclass(frozen=True)
class MetroGraph:
    """Undirected station graph stored as symmetric adjacency."""

    nodes: tuple[str, ...]
    adjacency: Mapping[str, tuple[str, ...]]

    @property
    def n(self) -> int:
        return len(self.nodes)

    def neighbors(self, node: str) -> tuple[str, ...]:
        return self.adjacency[node]

    def arcs(self) -> Iterator[tuple[str, str]]:
        for u in self.nodes:
            for v in self.adjacency[u]:
                yield u, v

    @property
    def n_edges(self) -> int:
        return sum(len(nb) for nb in self.adjacency.values()) // 2

    def isolated(self) -> tuple[str, ...]:
        return tuple(v for v in self.nodes if not self.adjacency[v])


@dataclass(frozen=True)
class CentralityVector:
    kind: str
    normalization: str
    values: Mapping[str, float]

    def __getitem__(self, station_id: str) -> float:
        return self.values[station_id]

    def __len__(self) -> int:
        return len(self.values)

    def ordered(self, station_ids) -> list[float]:
        return [self.values[s] for s in station_ids]


def build_graph(stations: StationTable, edges: EdgeList) -> MetroGraph:
    nodes = stations.ids
    adj: dict[str, set[str]] = {s: set() for s in nodes}
    for e in edges:
        adj[e.from_id].add(e.to_id)
        adj[e.to_id].add(e.from_id)
    # neighbor order follows station order so traversal is deterministic
    pos = {s: i for i, s in enumerate(nodes)}
    graph = MetroGraph(nodes, {s: tuple(sorted(adj[s], key=pos.__getitem__)) for s in nodes})
    lonely = graph.isolated()
    if lonely:
        log.warning("isolated stations (no track segments): %s", ", ".join(lonely))
    return graph


def degree_centrality(graph: MetroGraph) -> CentralityVector:
    n = graph.n
    if n < 2:
        raise NumericalError(f"degree centrality needs at least 2 stations, got {n}")
    values = {v: 2 * len(graph.neighbors(v)) / (n - 1) for v in graph.nodes}
    return CentralityVector("degree", "(in-degree + out-degree) / (n - 1)", values)


def raw_betweenness(graph: MetroGraph, exact: bool = False) -> dict[str, float | Fraction]:
    """Unnormalised betweenness summed over ordered (s, t) pairs.

    Brandes' dependency accumulation: one BFS per source counting shortest
    paths (sigma, exact integers), then a reverse sweep accumulating
    ``delta[v] += sigma[v] / sigma[w] * (1 + delta[w])``. With ``exact=True``
    the sweep runs in rational arithmetic and returns Fractions.
    """
    zero = Fraction(0) if exact else 0.0
    ratio = Fraction if exact else (lambda a, b: a / b)
    cb = dict.fromkeys(graph.nodes, zero)
    for s in graph.nodes:
        order = []
        preds: dict[str, list[str]] = {v: [] for v in graph.nodes}
        sigma = dict.fromkeys(graph.nodes, 0)
        dist = dict.fromkeys(graph.nodes, -1)
        sigma[s] = 1
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in graph.neighbors(v):
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = dict.fromkeys(graph.nodes, zero)
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += ratio(sigma[v], sigma[w]) * (1 + delta[w])
            if w != s:
                cb[w] += delta[w]
    return cb


def betweenness_centrality(graph: MetroGraph) -> CentralityVector:
    n = graph.n
    if n < 3:
        raise NumericalError(f"betweenness centrality needs at least 3 stations, got {n}")
    scale = (n - 1) * (n - 2)
    values = {v: b / scale for v, b in raw_betweenness(graph).items()}
    return CentralityVector("betweenness", "ordered-pair sum / ((n - 1)(n - 2))", values)


def distance_to_center(
    stations: StationTable, center: tuple[float, float] = TAIPEI_CITY_HALL
) -> dict[str, float]:
    """Great-circle distance from each station to ``center`` in km."""
    lat0, lon0 = center
    return {s.station_id: haversine_km(s.lat, s.lon, lat0, lon0) for s in stations}


def write_centralities(path, station_ids, *vectors: CentralityVector) -> None:
    """CSV with one row per station and one column per centrality kind."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["station_id", *[v.kind for v in vectors]])
        for sid in station_ids:
            w.writerow([sid, *[repr(float(v[sid])) for v in vectors]])


def write_centrality(path, vector: CentralityVector, station_ids) -> None:
    """Single vector as ``station_id,value``."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["station_id", "value"])
        for sid in station_ids:
            w.writerow([sid, repr(float(vector[sid]))])
