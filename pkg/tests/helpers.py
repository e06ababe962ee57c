"""Builders shared across the test modules."""
from __future__ import annotations

from datetime import date
from typing import Sequence

import numpy as np

from polarnet.network import Layer, LayerLink, Partition


def ids(n: int) -> tuple[str, ...]:
    return tuple(f"n{i}" for i in range(n))


def layer_of(
    n: int,
    links: Sequence[tuple],
    *,
    name: str = "links",
    weighted: bool | None = None,
) -> Layer:
    """Layer over nodes n0..n{n-1} from (src, dst[, weight[, day_ordinal]]) rows."""
    records = []
    for row in links:
        s, t = row[0], row[1]
        w = float(row[2]) if len(row) > 2 else 1.0
        day = row[3] if len(row) > 3 else None
        stamp = date.fromordinal(int(day)) if day is not None else None
        records.append(LayerLink(f"n{s}", f"n{t}", w, stamp))
    return Layer.from_links(name, records, weighted=weighted, node_ids=ids(n))


def partition_of(n: int, codes: Sequence[int]) -> Partition:
    """Partition labeling node n{i} with group g{codes[i]}."""
    assignment = {f"n{i}": f"g{codes[i]}" for i in range(n)}
    labels = tuple(f"g{k}" for k in sorted(set(int(c) for c in codes)))
    return Partition.from_assignment(assignment, labels)


def random_digraph(
    rng: np.random.Generator,
    n: int,
    p: float,
    *,
    weighted: bool = False,
    self_links: bool = False,
) -> list[tuple[int, int, float]]:
    """Ordered-pair Bernoulli digraph as (src, dst, weight) rows."""
    links = []
    for i in range(n):
        for j in range(n):
            if i == j and not self_links:
                continue
            if rng.random() < p:
                w = float(rng.integers(1, 6)) if weighted else 1.0
                links.append((i, j, w))
    return links


def random_codes(rng: np.random.Generator, n: int, groups: int) -> list[int]:
    return [int(g) for g in rng.integers(0, groups, size=n)]


def random_dated_links(
    rng: np.random.Generator,
    n: int,
    count: int,
    first_day: int,
    span_days: int,
) -> list[tuple[int, int, float, int]]:
    """Unique (src, dst, weight=1, day) rows with src != dst."""
    seen = set()
    links = []
    while len(links) < count:
        s = int(rng.integers(0, n))
        t = int(rng.integers(0, n))
        if s == t:
            continue
        day = first_day + int(rng.integers(0, span_days))
        if (s, t, day) in seen:
            continue
        seen.add((s, t, day))
        links.append((s, t, 1.0, day))
    return links
