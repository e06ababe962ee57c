"""Multiplex directed network model.

A network is a shared node registry plus named directed layers.  Layers are
ingested from CSV files, carry optional per-link weights and calendar-day
timestamps, and are stored as dense index arrays so whole-layer metrics stay
vectorized.  Partitions assign every node a group label and are the common
currency between the party tables and the community detection output.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, Sequence
from xml.etree import ElementTree

import numpy as np

from .errors import ParseError, ValidationError

# Sentinel for "link has no timestamp" inside int64 day arrays.
MISSING_DAY = np.iinfo(np.int64).min


@dataclass(frozen=True)
class LayerLink:
    """One directed link inside a layer."""

    source: str
    target: str
    weight: float = 1.0
    timestamp: date | None = None


@dataclass(frozen=True)
class LayerSchema:
    """Column naming for layer CSV files; defaults match the canonical header."""

    name: str | None = None
    source: str = "source"
    target: str = "target"
    weight: str = "weight"
    date: str = "date"


class Layer:
    """A named directed layer over a node registry.

    Construction normalizes links: rows merge by (source, target, day) with
    accumulating weights when the layer is weighted, and collapse to a plain
    link set (earliest known timestamp kept) when it is not.  Arrays are
    sorted by (source, target, day), so equal link multisets produce equal
    layers.  Self-links are kept in storage but excluded from metric views.
    Instances are treated as immutable.
    """

    def __init__(
        self,
        name: str,
        node_ids: tuple[str, ...],
        src: np.ndarray,
        dst: np.ndarray,
        weight: np.ndarray,
        days: np.ndarray | None,
        weighted: bool,
        node_count: int | None = None,
    ):
        self.name = name
        self.node_ids = node_ids
        self.src = src
        self.dst = dst
        self.weight = weight
        self.days = days
        self.weighted = weighted
        self.node_count = len(node_ids) if node_count is None else node_count
        self._metric_view: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
        self._link_pairs: frozenset[tuple[int, int]] | None = None

    @classmethod
    def from_links(
        cls,
        name: str,
        links: Iterable[LayerLink],
        *,
        weighted: bool | None = None,
        node_ids: Sequence[str] | None = None,
    ) -> "Layer":
        """Build a layer from link records, extending or reusing a registry."""
        links = list(links)
        if weighted is None:
            weighted = any(link.weight != 1.0 for link in links)
        if node_ids is None:
            index: dict[str, int] = {}
            for link in links:
                index.setdefault(link.source, len(index))
                index.setdefault(link.target, len(index))
            registry = tuple(index)
        else:
            registry = tuple(node_ids)
            index = {node: i for i, node in enumerate(registry)}
        merged: dict[tuple, list] = {}
        for link in links:
            if not np.isfinite(link.weight) or link.weight <= 0:
                raise ValidationError(
                    f"layer {name!r}: non-positive weight {link.weight!r} on "
                    f"{link.source!r} -> {link.target!r}"
                )
            try:
                s, t = index[link.source], index[link.target]
            except KeyError as exc:
                raise ValidationError(f"layer {name!r}: unknown node {exc.args[0]!r}") from None
            day = MISSING_DAY if link.timestamp is None else link.timestamp.toordinal()
            if weighted:
                entry = merged.setdefault((s, t, day), [0.0])
                entry[0] += link.weight
            else:
                if link.weight != 1.0:
                    raise ValidationError(
                        f"layer {name!r}: unweighted layer requires unit weights"
                    )
                entry = merged.setdefault((s, t), [MISSING_DAY])
                # Keep the earliest real timestamp seen for the pair.
                if day != MISSING_DAY and (entry[0] == MISSING_DAY or day < entry[0]):
                    entry[0] = day
        if weighted:
            keys = sorted(merged)
            src = np.array([k[0] for k in keys], dtype=np.int64)
            dst = np.array([k[1] for k in keys], dtype=np.int64)
            day_arr = np.array([k[2] for k in keys], dtype=np.int64)
            w = np.array([merged[k][0] for k in keys], dtype=np.float64)
        else:
            keys = sorted((s, t, merged[(s, t)][0]) for (s, t) in merged)
            src = np.array([k[0] for k in keys], dtype=np.int64)
            dst = np.array([k[1] for k in keys], dtype=np.int64)
            day_arr = np.array([k[2] for k in keys], dtype=np.int64)
            w = np.ones(len(keys), dtype=np.float64)
        days = day_arr if (day_arr != MISSING_DAY).any() else None
        return cls(name, registry, src, dst, w, days, weighted)

    # -- basic accessors ---------------------------------------------------

    @property
    def n_links(self) -> int:
        return len(self.src)

    @property
    def total_weight(self) -> float:
        return float(self.weight.sum())

    @property
    def has_timestamps(self) -> bool:
        return self.days is not None

    def links(self) -> Iterator[LayerLink]:
        days = self.days
        for i in range(self.n_links):
            day = None
            if days is not None and days[i] != MISSING_DAY:
                day = date.fromordinal(int(days[i]))
            yield LayerLink(
                self.node_ids[int(self.src[i])],
                self.node_ids[int(self.dst[i])],
                float(self.weight[i]),
                day,
            )

    def metric_view(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(src, dst, weight) with self-links removed; the view metrics see."""
        if self._metric_view is None:
            keep = self.src != self.dst
            if keep.all():
                self._metric_view = (self.src, self.dst, self.weight)
            else:
                self._metric_view = (self.src[keep], self.dst[keep], self.weight[keep])
        return self._metric_view

    @property
    def metric_weight(self) -> float:
        return float(self.metric_view()[2].sum())

    def link_pairs(self) -> frozenset[tuple[int, int]]:
        """Distinct (source, target) index pairs, self-pairs excluded."""
        if self._link_pairs is None:
            src, dst, _ = self.metric_view()
            self._link_pairs = frozenset(zip(src.tolist(), dst.tolist()))
        return self._link_pairs

    # -- derived copies ----------------------------------------------------

    def _masked(self, keep: np.ndarray, *, node_count: int | None = None) -> "Layer":
        days = None if self.days is None else self.days[keep]
        return Layer(
            self.name,
            self.node_ids,
            self.src[keep],
            self.dst[keep],
            self.weight[keep],
            days,
            self.weighted,
            self.node_count if node_count is None else node_count,
        )

    def remapped(self, node_ids: tuple[str, ...], lut: np.ndarray) -> "Layer":
        """Re-express link endpoints against a new registry via a lookup table."""
        src = lut[self.src]
        dst = lut[self.dst]
        days = self.days if self.days is not None else None
        order_day = np.zeros(len(src), dtype=np.int64) if days is None else days
        order = np.lexsort((order_day, dst, src))
        return Layer(
            self.name,
            node_ids,
            src[order],
            dst[order],
            self.weight[order],
            None if days is None else days[order],
            self.weighted,
        )


# -- ingestion -------------------------------------------------------------


def _parse_weight(cell: str, path: str, line: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"bad weight {cell!r}", path=path, line=line) from None
    if not np.isfinite(value) or value <= 0:
        raise ParseError(f"non-positive weight {cell!r}", path=path, line=line)
    return value


def _parse_date(cell: str, path: str, line: int) -> date | None:
    cell = cell.strip()
    if not cell:
        return None
    try:
        return date.fromisoformat(cell)
    except ValueError:
        raise ParseError(f"bad date {cell!r}", path=path, line=line) from None


def ingest_layer(path: str | Path, schema: LayerSchema | None = None) -> Layer:
    """Read a layer CSV with columns source,target[,weight][,date].

    A header row matching the schema's column names is consumed; otherwise
    rows are read positionally (2 columns unweighted, 3 with weight, 4 with
    weight and date).  The layer is weighted exactly when a weight column is
    present.
    """
    schema = schema or LayerSchema()
    path = Path(path)
    name = schema.name or path.stem
    links: list[LayerLink] = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        rows = iter(enumerate(reader, start=1))
        first = next(rows, None)
        if first is None:
            return Layer.from_links(name, [], weighted=False)
        lineno, cells = first
        header = [c.strip().casefold() for c in cells]
        positions: dict[str, int] | None = None
        if header[:2] == [schema.source.casefold(), schema.target.casefold()]:
            positions = {col: i for i, col in enumerate(header)}
            width = None
        else:
            width = len(cells)
            rows = iter([first] + list(rows))  # first row is data
        weighted = False
        has_weight = has_date = False
        if positions is not None:
            has_weight = schema.weight.casefold() in positions
            has_date = schema.date.casefold() in positions
        else:
            if width not in (2, 3, 4):
                raise ParseError(f"expected 2-4 columns, got {width}", path=str(path), line=lineno)
            has_weight = width >= 3
            has_date = width == 4
        weighted = has_weight
        for lineno, cells in rows:
            if not cells or (len(cells) == 1 and not cells[0].strip()):
                continue
            if positions is not None:
                if len(cells) != len(header):
                    raise ParseError(
                        f"expected {len(header)} columns, got {len(cells)}",
                        path=str(path), line=lineno,
                    )
                source = cells[positions[schema.source.casefold()]].strip()
                target = cells[positions[schema.target.casefold()]].strip()
                wcell = cells[positions[schema.weight.casefold()]] if has_weight else ""
                dcell = cells[positions[schema.date.casefold()]] if has_date else ""
            else:
                if len(cells) != width:
                    raise ParseError(
                        f"expected {width} columns, got {len(cells)}",
                        path=str(path), line=lineno,
                    )
                source = cells[0].strip()
                target = cells[1].strip()
                wcell = cells[2] if has_weight else ""
                dcell = cells[3] if has_date else ""
            if not source or not target:
                raise ParseError("empty node id", path=str(path), line=lineno)
            weight = 1.0
            if has_weight:
                if not wcell.strip():
                    raise ParseError("missing weight", path=str(path), line=lineno)
                weight = _parse_weight(wcell.strip(), str(path), lineno)
            stamp = _parse_date(dcell, str(path), lineno) if has_date else None
            links.append(LayerLink(source, target, weight, stamp))
    return Layer.from_links(name, links, weighted=weighted)


def export_layer_csv(layer: Layer, path: str | Path) -> None:
    """Serialize a layer to its canonical CSV form (round-trips via ingest)."""
    header = ["source", "target"]
    if layer.weighted:
        header.append("weight")
    if layer.has_timestamps:
        header.append("date")
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for link in layer.links():
            row = [link.source, link.target]
            if layer.weighted:
                row.append(format(link.weight, ".12g"))
            if layer.has_timestamps:
                row.append(link.timestamp.isoformat() if link.timestamp else "")
            writer.writerow(row)


export_edge_list = export_layer_csv


# -- node tables and party merge -------------------------------------------


def read_node_table(path: str | Path) -> dict[str, str]:
    """Read node_id,affiliation rows into an ordered mapping."""
    path = Path(path)
    table: dict[str, str] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        for lineno, cells in enumerate(reader, start=1):
            if not cells or (len(cells) == 1 and not cells[0].strip()):
                continue
            if lineno == 1 and [c.strip().casefold() for c in cells[:2]] == ["node_id", "affiliation"]:
                continue
            if len(cells) < 2:
                raise ParseError("expected node_id,affiliation", path=str(path), line=lineno)
            node = cells[0].strip()
            if not node:
                raise ParseError("empty node id", path=str(path), line=lineno)
            table[node] = cells[1].strip()
    return table


@dataclass(frozen=True)
class PartyMergeConfig:
    """Raw affiliation string -> canonical party label, plus the unaligned label."""

    mapping: Mapping[str, str]
    unaligned_label: str = "unaligned"

    @classmethod
    def identity(cls, raw_values: Iterable[str], unaligned_label: str = "unaligned") -> "PartyMergeConfig":
        """Pass-through config: every distinct non-empty raw value maps to itself."""
        mapping = {raw: raw for raw in sorted(set(raw_values)) if raw}
        return cls(mapping, unaligned_label)


def read_merge_config(path: str | Path) -> PartyMergeConfig:
    """Parse key=value lines; the key '*' names the unaligned label."""
    path = Path(path)
    mapping: dict[str, str] = {}
    unaligned = "unaligned"
    with open(path, encoding="utf-8") as handle:
        for lineno, raw_line in enumerate(handle, start=1):
            line = raw_line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError("expected key=value", path=str(path), line=lineno)
            key, value = line.split("=", 1)
            key, value = key.strip(), value.strip()
            if not key or not value:
                raise ParseError("empty key or value", path=str(path), line=lineno)
            if key == "*":
                unaligned = value
                continue
            if key in mapping:
                raise ParseError(f"duplicate key {key!r}", path=str(path), line=lineno)
            mapping[key] = value
    return PartyMergeConfig(mapping, unaligned)


@dataclass(frozen=True)
class Partition:
    """Total assignment of node ids to group labels."""

    assignment: Mapping[str, str]
    labels: tuple[str, ...]

    @classmethod
    def from_assignment(
        cls, assignment: Mapping[str, str], labels: Sequence[str] | None = None
    ) -> "Partition":
        if not assignment:
            raise ValidationError("partition needs at least one node")
        if labels is None:
            seen: dict[str, None] = {}
            for label in assignment.values():
                seen.setdefault(label, None)
            labels = tuple(seen)
        else:
            labels = tuple(labels)
            if len(set(labels)) != len(labels):
                raise ValidationError("partition labels must be distinct")
            missing = set(assignment.values()) - set(labels)
            if missing:
                raise ValidationError(f"labels {sorted(missing)!r} assigned but not declared")
        return cls(dict(assignment), labels)

    def label_of(self, node: str) -> str:
        try:
            return self.assignment[node]
        except KeyError:
            raise ValidationError(f"node {node!r} missing from partition") from None

    def group_sizes(self) -> dict[str, int]:
        sizes = {label: 0 for label in self.labels}
        for label in self.assignment.values():
            sizes[label] += 1
        return sizes


def apply_party_merge(raw_affiliations: Mapping[str, str], config: PartyMergeConfig) -> Partition:
    """Label every node with its canonical party; unmapped raws go unaligned."""
    assignment: dict[str, str] = {}
    used: dict[str, None] = {}
    for node, raw in raw_affiliations.items():
        label = config.mapping.get(raw.strip(), config.unaligned_label)
        assignment[node] = label
        used.setdefault(label, None)
    # Canonical ordering: config value order first, unaligned last.
    order: dict[str, None] = {}
    for value in config.mapping.values():
        if value in used:
            order.setdefault(value, None)
    for label in used:
        if label != config.unaligned_label:
            order.setdefault(label, None)
    if config.unaligned_label in used:
        order[config.unaligned_label] = None
    return Partition.from_assignment(assignment, tuple(order))


# -- the multiplex network -------------------------------------------------


class MultiplexNetwork:
    """Shared node registry plus named directed layers.

    ``inactive`` marks nodes removed by leave-one-out resampling without
    renumbering the registry, so index-aligned caches stay valid across
    jackknife replicates.  Treat instances as immutable.
    """

    def __init__(
        self,
        node_ids: tuple[str, ...],
        layers: Mapping[str, Layer],
        attributes: Mapping[str, Mapping[str, str]] | None = None,
        inactive: frozenset[int] = frozenset(),
    ):
        self.node_ids = node_ids
        self.index = {node: i for i, node in enumerate(node_ids)}
        self.layers = dict(layers)
        self.attributes = {k: dict(v) for k, v in (attributes or {}).items()}
        self.inactive = inactive

    @classmethod
    def assemble(
        cls,
        layers: Sequence[Layer],
        node_table: Mapping[str, str] | None = None,
    ) -> "MultiplexNetwork":
        """Unify layer registries into one network.

        The node universe is the union of node-table ids and every id seen in
        any layer, in first-seen order (table first, then layers in the order
        given).
        """
        index: dict[str, int] = {}
        for node in (node_table or {}):
            index.setdefault(node, len(index))
        for layer in layers:
            for node in layer.node_ids:
                index.setdefault(node, len(index))
        registry = tuple(index)
        remapped: dict[str, Layer] = {}
        for layer in layers:
            if layer.name in remapped:
                raise ValidationError(f"duplicate layer name {layer.name!r}")
            lut = np.array([index[node] for node in layer.node_ids], dtype=np.int64)
            remapped[layer.name] = layer.remapped(registry, lut)
        attributes = {}
        if node_table is not None:
            attributes["affiliation"] = dict(node_table)
        return cls(registry, remapped, attributes)

    @property
    def n(self) -> int:
        """Active node count."""
        return len(self.node_ids) - len(self.inactive)

    def active_indices(self) -> list[int]:
        if not self.inactive:
            return list(range(len(self.node_ids)))
        return [i for i in range(len(self.node_ids)) if i not in self.inactive]

    def layer(self, name: str) -> Layer:
        try:
            return self.layers[name]
        except KeyError:
            raise ValidationError(f"no layer named {name!r}") from None

    def drop_node(self, node: int | str, only_layers: Sequence[str] | None = None) -> "MultiplexNetwork":
        """Leave-one-out copy: the node and its incident links are removed.

        Indices are not renumbered; the node is marked inactive and filtered
        from layer arrays.  When ``only_layers`` is given, the copy contains
        just those layers (the caller's metric must not touch others).
        """
        v = self.index[node] if isinstance(node, str) else int(node)
        if v in self.inactive:
            raise ValidationError(f"node index {v} already removed")
        names = list(self.layers) if only_layers is None else list(only_layers)
        new_layers = {}
        for name in names:
            layer = self.layer(name)
            keep = (layer.src != v) & (layer.dst != v)
            new_layers[name] = layer._masked(keep, node_count=layer.node_count - 1)
        return MultiplexNetwork(self.node_ids, new_layers, self.attributes, self.inactive | {v})

    def induced(self, keep_ids: Iterable[str]) -> "MultiplexNetwork":
        """Rebuild the network on a node subset, renumbering the registry."""
        keep = set(keep_ids)
        registry = tuple(node for node in self.node_ids if node in keep)
        lut = np.full(len(self.node_ids), -1, dtype=np.int64)
        for i, node in enumerate(registry):
            lut[self.index[node]] = i
        new_layers = {}
        for name, layer in self.layers.items():
            mask = (lut[layer.src] >= 0) & (lut[layer.dst] >= 0)
            new_layers[name] = layer._masked(mask, node_count=len(registry)).remapped(registry, lut)
        attributes = {
            key: {node: value for node, value in table.items() if node in keep}
            for key, table in self.attributes.items()
        }
        return MultiplexNetwork(registry, new_layers, attributes)

    def partition_codes(self, partition: Partition) -> np.ndarray:
        """Group code per registry index, following partition label order."""
        label_code = {label: i for i, label in enumerate(partition.labels)}
        codes = np.empty(len(self.node_ids), dtype=np.int64)
        for i, node in enumerate(self.node_ids):
            label = partition.label_of(node)
            try:
                codes[i] = label_code[label]
            except KeyError:
                raise ValidationError(f"label {label!r} not in partition labels") from None
        return codes


def filter_partition(
    network: MultiplexNetwork, partition: Partition, drop_label: str
) -> tuple[MultiplexNetwork, Partition]:
    """Remove every node carrying drop_label, with all incident links."""
    keep_ids = []
    dropped = False
    for node in network.node_ids:
        if network.index[node] in network.inactive:
            continue
        if partition.label_of(node) == drop_label:
            dropped = True
        else:
            keep_ids.append(node)
    if not dropped and drop_label not in partition.labels:
        return network, partition
    if not keep_ids:
        raise ValidationError(f"dropping {drop_label!r} removes every node")
    new_assignment = {
        node: label for node, label in partition.assignment.items() if label != drop_label
    }
    new_labels = tuple(label for label in partition.labels if label != drop_label)
    return network.induced(keep_ids), Partition.from_assignment(new_assignment, new_labels)


# -- synthetic graphs ------------------------------------------------------


def generate_planted_partition(
    groups: int,
    size: int,
    p_in: float,
    p_out: float,
    seed: int,
    layer_name: str = "links",
) -> tuple[MultiplexNetwork, Partition]:
    """Directed planted-partition graph with known group labels.

    Every ordered intra-group pair links with probability p_in, every
    inter-group pair with p_out; no self-links.  Same seed, same graph.
    """
    if groups < 1 or size < 1:
        raise ValidationError("groups and size must be positive")
    if not (0.0 <= p_out < p_in <= 1.0):
        raise ValidationError("need 0 <= p_out < p_in <= 1")
    n = groups * size
    labels = np.repeat(np.arange(groups), size)
    rng = np.random.default_rng(seed)
    draw = rng.random((n, n))
    prob = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    adjacency = draw < prob
    np.fill_diagonal(adjacency, False)
    src, dst = np.nonzero(adjacency)
    node_ids = tuple(f"n{i}" for i in range(n))
    order = np.lexsort((dst, src))
    layer = Layer(
        layer_name,
        node_ids,
        src[order].astype(np.int64),
        dst[order].astype(np.int64),
        np.ones(len(src), dtype=np.float64),
        None,
        False,
    )
    assignment = {node_ids[i]: f"g{labels[i]}" for i in range(n)}
    partition = Partition.from_assignment(assignment, tuple(f"g{k}" for k in range(groups)))
    network = MultiplexNetwork.assemble([layer], node_table=None)
    return network, partition


# -- graph export ----------------------------------------------------------


def export_graphml(
    network: MultiplexNetwork,
    path: str | Path,
    partition: Partition | None = None,
) -> None:
    """Write a GraphML-style XML file for external renderers.

    All layers land in one directed graph; edges carry layer, weight and date
    attributes, nodes carry the partition label when one is given.
    """
    root = ElementTree.Element("graphml")
    def key(kid: str, target: str, name: str, kind: str) -> None:
        ElementTree.SubElement(
            root, "key", id=kid, **{"for": target, "attr.name": name, "attr.type": kind}
        )
    if partition is not None:
        key("d0", "node", "group", "string")
    key("d1", "edge", "layer", "string")
    key("d2", "edge", "weight", "double")
    key("d3", "edge", "date", "string")
    graph = ElementTree.SubElement(root, "graph", id="network", edgedefault="directed")
    for i in network.active_indices():
        node = network.node_ids[i]
        el = ElementTree.SubElement(graph, "node", id=node)
        if partition is not None:
            data = ElementTree.SubElement(el, "data", key="d0")
            data.text = partition.label_of(node)
    for name in network.layers:
        for link in network.layers[name].links():
            el = ElementTree.SubElement(graph, "edge", source=link.source, target=link.target)
            ElementTree.SubElement(el, "data", key="d1").text = name
            ElementTree.SubElement(el, "data", key="d2").text = format(link.weight, ".12g")
            if link.timestamp is not None:
                ElementTree.SubElement(el, "data", key="d3").text = link.timestamp.isoformat()
    tree = ElementTree.ElementTree(root)
    ElementTree.indent(tree)
    tree.write(path, encoding="utf-8", xml_declaration=True)
