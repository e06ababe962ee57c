"""Intra-group structure metrics: centralization, path length, k-cores.

Each group of a partition induces a subnetwork (group members plus the links
among them, self-links dropped).  On that subnetwork we measure in-degree
centralization against the in-star maximum, the average directed shortest
path over reachable ordered pairs, and the k-core decomposition of the
undirected collapse (a directed total-degree variant is available).
"""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedMetricError, ValidationError
from .network import Layer, Partition


@dataclass(frozen=True)
class GroupSubnetwork:
    """Directed simple subgraph induced by one group's members."""

    label: str
    node_ids: tuple[str, ...]
    src: np.ndarray  # local indices, self-links removed, duplicates merged
    dst: np.ndarray
    weight: np.ndarray

    @property
    def n(self) -> int:
        return len(self.node_ids)

    @property
    def n_links(self) -> int:
        return len(self.src)


def group_subnetwork(layer: Layer, partition: Partition, label: str) -> GroupSubnetwork:
    """Induce the subgraph of the given group on a layer."""
    if label not in partition.labels:
        raise ValidationError(f"label {label!r} not in partition labels")
    members = [node for node in layer.node_ids if partition.label_of(node) == label]
    if not members:
        raise ValidationError(f"group {label!r} has no nodes on layer {layer.name!r}")
    local = {node: i for i, node in enumerate(members)}
    lut = np.full(len(layer.node_ids), -1, dtype=np.int64)
    for i, node in enumerate(layer.node_ids):
        lut[i] = local.get(node, -1)
    src, dst, w = layer.metric_view()
    ls, lt = lut[src], lut[dst]
    keep = (ls >= 0) & (lt >= 0)
    ls, lt, lw = ls[keep], lt[keep], w[keep]
    merged: dict[tuple[int, int], float] = {}
    for s, t, weight in zip(ls.tolist(), lt.tolist(), lw.tolist()):
        merged[(s, t)] = merged.get((s, t), 0.0) + weight
    keys = sorted(merged)
    return GroupSubnetwork(
        label,
        tuple(members),
        np.array([k[0] for k in keys], dtype=np.int64),
        np.array([k[1] for k in keys], dtype=np.int64),
        np.array([merged[k] for k in keys], dtype=np.float64),
    )


def in_degree_centralization(sub: GroupSubnetwork) -> float:
    """Freeman centralization of in-degrees: sum(k*_in - k_in) / (n - 1)^2.

    Degrees count distinct in-neighbors; the in-star scores 1, the complete
    digraph 0.  Undefined for fewer than 2 nodes.
    """
    if sub.n < 2:
        raise UndefinedMetricError("centralization needs at least 2 nodes")
    k_in = np.bincount(sub.dst, minlength=sub.n)
    return float((k_in.max() - k_in).sum() / (sub.n - 1) ** 2)


def average_path_length(sub: GroupSubnetwork, *, symmetrize: bool = False) -> float | None:
    """Mean shortest directed path over reachable ordered pairs, in hops.

    Unreachable pairs are left out of the mean; None when no ordered pair is
    reachable at all.  ``symmetrize`` measures the undirected collapse
    instead.
    """
    if sub.n < 2:
        raise UndefinedMetricError("path length needs at least 2 nodes")
    forward: list[list[int]] = [[] for _ in range(sub.n)]
    for s, t in zip(sub.src.tolist(), sub.dst.tolist()):
        forward[s].append(t)
        if symmetrize:
            forward[t].append(s)
    total = 0
    pairs = 0
    for origin in range(sub.n):
        dist = np.full(sub.n, -1, dtype=np.int64)
        dist[origin] = 0
        queue = deque([origin])
        while queue:
            u = queue.popleft()
            for v in forward[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        reached = dist > 0
        total += int(dist[reached].sum())
        pairs += int(reached.sum())
    if pairs == 0:
        return None
    return total / pairs


CORE_CONVENTIONS = ("undirected", "total_degree")


@dataclass(frozen=True)
class KCoreResult:
    core_numbers: dict[str, int]
    max_kcore: int


def kcore_decomposition(sub: GroupSubnetwork, *, convention: str = "undirected") -> KCoreResult:
    """Iterative-pruning core numbers.

    ``undirected`` collapses mutual links into one edge before counting
    degrees; ``total_degree`` counts in plus out on the directed simple
    graph.  Core numbers do not depend on pruning order; the empty graph is
    all zeros.
    """
    if convention not in CORE_CONVENTIONS:
        raise ValidationError(f"unknown k-core convention {convention!r}")
    n = sub.n
    # multiplicity[i][j]: directed links between i and j (1 or 2), symmetric.
    multiplicity: list[dict[int, int]] = [dict() for _ in range(n)]
    for s, t in zip(sub.src.tolist(), sub.dst.tolist()):
        multiplicity[s][t] = multiplicity[s].get(t, 0) + 1
        multiplicity[t][s] = multiplicity[t].get(s, 0) + 1
    if convention == "undirected":
        current = np.array([len(d) for d in multiplicity], dtype=np.int64)
    else:
        current = np.array([sum(d.values()) for d in multiplicity], dtype=np.int64)
    # Peel the lowest-degree node repeatedly; the running maximum of the
    # degree seen at removal time is each node's core number.
    core = np.zeros(n, dtype=np.int64)
    removed = np.zeros(n, dtype=bool)
    heap = [(int(current[i]), i) for i in range(n)]
    heapq.heapify(heap)
    level = 0
    while heap:
        deg, pick = heapq.heappop(heap)
        if removed[pick] or deg != current[pick]:
            continue
        removed[pick] = True
        level = max(level, deg)
        core[pick] = level
        for j, links in multiplicity[pick].items():
            if not removed[j]:
                current[j] -= 1 if convention == "undirected" else links
                heapq.heappush(heap, (int(current[j]), j))
    return KCoreResult(
        {sub.node_ids[i]: int(core[i]) for i in range(n)},
        int(core.max()) if n else 0,
    )


@dataclass(frozen=True)
class StructureRow:
    """Per-group structure metrics for a report."""

    label: str
    n: int
    links: int
    in_degree_centralization: float
    average_path_length: float | None
    max_kcore: int


def structure_report(
    layer: Layer,
    partition: Partition,
    *,
    min_group_size: int = 200,
    core_convention: str = "undirected",
) -> tuple[StructureRow, ...]:
    """Structure metrics for every group with at least min_group_size members.

    Group size counts partition members present on the layer's registry.
    Groups below the threshold are omitted; ordering follows the partition's
    label order.
    """
    if min_group_size < 2:
        raise ValidationError("min_group_size must be at least 2")
    counts: dict[str, int] = {label: 0 for label in partition.labels}
    for node in layer.node_ids:
        counts[partition.label_of(node)] += 1
    rows = []
    for label in partition.labels:
        if counts[label] < min_group_size:
            continue
        sub = group_subnetwork(layer, partition, label)
        rows.append(
            StructureRow(
                label=label,
                n=sub.n,
                links=sub.n_links,
                in_degree_centralization=in_degree_centralization(sub),
                average_path_length=average_path_length(sub),
                max_kcore=kcore_decomposition(sub, convention=core_convention).max_kcore,
            )
        )
    return tuple(rows)
