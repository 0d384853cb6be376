"""Labeled directed graph shared by the Proteus and PCF ingestion paths.

Graphs are treated as immutable values: every operation in this package
returns a new :class:`LabeledDiGraph` and never mutates its inputs.
"""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Callable, Iterable, Mapping, Optional, Tuple

from .errors import DanglingEdge, DuplicateNodeId, GraphError, IdentityConflict

logger = logging.getLogger(__name__)

Coordinate = Tuple[float, float, float]

# node classes
TANK = "Tank"
PUMP = "Pump"
NOZZLE = "Nozzle"
VALVE = "Valve"
INSTRUMENT = "Instrument"
END_CONNECTION = "EndConnection"
COORDINATE = "Coordinate"
UNKNOWN = "Unknown"
NODE_CLASSES = frozenset(
    {TANK, PUMP, NOZZLE, VALVE, INSTRUMENT, END_CONNECTION, COORDINATE, UNKNOWN}
)

# edge classes (VALVE and UNKNOWN are shared with the node vocabulary)
PIPE = "Pipe"
WELD = "Weld"
SEGMENT = "Segment"
SIGNAL = "Signal"
EDGE_CLASSES = frozenset({PIPE, WELD, VALVE, SEGMENT, SIGNAL, UNKNOWN})

# node origins
PROTEUS = "Proteus"
PCF = "Pcf"
SYNTHETIC = "Synthetic"
ORIGINS = frozenset({PROTEUS, PCF, SYNTHETIC})

SHORT_ID_PREFIX = {
    TANK: "E",
    PUMP: "E",
    NOZZLE: "N",
    INSTRUMENT: "I",
    VALVE: "V",
    COORDINATE: "C",
    END_CONNECTION: "C",
    UNKNOWN: "X",
}


def warning_record(code: str, message: str, **context: Any) -> dict:
    """Build the dict stored under ``metadata["warnings"]`` and log it."""
    logger.warning("%s: %s", code, message)
    return {"code": code, "message": message, **context}


@dataclass(frozen=True)
class GraphNode:
    """A graph node.

    ``node_id`` is the opaque unique name, ``label`` the human readable tag and
    ``node_class`` the component type. ``short_id`` and ``attrs`` do not take
    part in equality.
    """

    node_id: str
    node_class: str = UNKNOWN
    label: str = ""
    coordinate: Optional[Coordinate] = None
    origin: str = SYNTHETIC
    short_id: str = field(default="", compare=False)
    attrs: Mapping[str, Any] = field(default_factory=dict, compare=False, hash=False)


@dataclass(frozen=True)
class GraphEdge:
    source: str
    target: str
    edge_class: str = UNKNOWN
    attrs: Mapping[str, Any] = field(default_factory=dict, compare=False, hash=False)

    @property
    def key(self) -> Tuple[str, str, str]:
        return (self.source, self.target, self.edge_class)

    def undirected_key(self) -> Tuple[frozenset, str]:
        return (frozenset((self.source, self.target)), self.edge_class)

    def reversed(self) -> GraphEdge:
        return replace(self, source=self.target, target=self.source)


@dataclass(frozen=True, eq=False)
class LabeledDiGraph:
    """Node set plus edge multiset.

    Construction checks node-id uniqueness, referential integrity and the
    class vocabularies; anything produced by this package is well formed.
    ``metadata`` carries provenance and the ``warnings`` list and is ignored
    by equality.
    """

    nodes: Tuple[GraphNode, ...] = ()
    edges: Tuple[GraphEdge, ...] = ()
    directed: bool = True
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        seen = set()
        for n in self.nodes:
            if not n.node_id:
                raise GraphError("node with empty node_id")
            if n.node_id in seen:
                raise DuplicateNodeId(f"duplicate node id {n.node_id!r}")
            if n.node_class not in NODE_CLASSES:
                raise GraphError(f"unknown node class {n.node_class!r}")
            if n.origin not in ORIGINS:
                raise GraphError(f"unknown node origin {n.origin!r}")
            seen.add(n.node_id)
        for e in self.edges:
            if e.edge_class not in EDGE_CLASSES:
                raise GraphError(f"unknown edge class {e.edge_class!r}")
            for end in (e.source, e.target):
                if end not in seen:
                    raise DanglingEdge(
                        f"edge {e.source!r}->{e.target!r} references missing node {end!r}"
                    )

    def __eq__(self, other):
        if not isinstance(other, LabeledDiGraph):
            return NotImplemented
        if self.directed != other.directed:
            return False
        if self.node_map != other.node_map:
            return False
        return self._edge_counter() == other._edge_counter()

    __hash__ = None

    def _edge_counter(self) -> Counter:
        if self.directed:
            return Counter(e.key for e in self.edges)
        return Counter(e.undirected_key() for e in self.edges)

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        return f"<LabeledDiGraph {kind} nodes={len(self.nodes)} edges={len(self.edges)}>"

    @cached_property
    def node_map(self) -> dict:
        return {n.node_id: n for n in self.nodes}

    def node(self, node_id: str) -> GraphNode:
        return self.node_map[node_id]

    def __contains__(self, node_id) -> bool:
        return node_id in self.node_map

    @property
    def warnings(self) -> list:
        return list(self.metadata.get("warnings", ()))

    def undirected_adjacency(self) -> dict:
        """Map node id to a list of ``(neighbour, edge_index)`` pairs."""
        adj = {n.node_id: [] for n in self.nodes}
        for i, e in enumerate(self.edges):
            adj[e.source].append((e.target, i))
            adj[e.target].append((e.source, i))
        return adj

    def degree(self, node_id: str) -> int:
        return sum((e.source == node_id) + (e.target == node_id) for e in self.edges)

    def in_degree(self, node_id: str) -> int:
        return sum(e.target == node_id for e in self.edges)

    def evolve(self, **changes) -> LabeledDiGraph:
        return replace(self, **changes)

    def with_warnings(self, extra: Iterable[dict]) -> LabeledDiGraph:
        extra = list(extra)
        if not extra:
            return self
        meta = dict(self.metadata)
        meta["warnings"] = list(meta.get("warnings", ())) + extra
        return replace(self, metadata=meta)


def connected_components(graph: LabeledDiGraph) -> list:
    """Undirected connected components as sorted lists of node ids."""
    adj = graph.undirected_adjacency()
    seen = set()
    out = []
    for start in sorted(adj):
        if start in seen:
            continue
        comp, stack = [], [start]
        seen.add(start)
        while stack:
            cur = stack.pop()
            comp.append(cur)
            for nbr, _ in adj[cur]:
                if nbr not in seen:
                    seen.add(nbr)
                    stack.append(nbr)
        out.append(sorted(comp))
    return out


def dedupe_edges(edges: Iterable[GraphEdge], directed: bool = True) -> list:
    """Keep the first edge per (source, target, class); unordered if undirected."""
    seen = set()
    out = []
    for e in edges:
        k = e.key if directed else e.undirected_key()
        if k not in seen:
            seen.add(k)
            out.append(e)
    return out


def assign_short_ids(graph: LabeledDiGraph) -> LabeledDiGraph:
    """Give every node a short id such as ``E3``, ``N16`` or ``I5``.

    Counters start at 1 per prefix and follow lexicographic node-id order, so
    the result does not depend on node insertion order.
    """
    counters: Counter = Counter()
    short = {}
    for node_id in sorted(graph.node_map):
        prefix = SHORT_ID_PREFIX[graph.node_map[node_id].node_class]
        counters[prefix] += 1
        short[node_id] = f"{prefix}{counters[prefix]}"
    nodes = tuple(replace(n, short_id=short[n.node_id]) for n in graph.nodes)
    return replace(graph, nodes=nodes)


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def _fuse(group: list, warnings: list) -> GraphNode:
    first = group[0]
    attrs: dict = {}
    for n in reversed(group):
        attrs.update(n.attrs)
    fused_from = [n.node_id for n in group[1:]]
    attrs["fused_from"] = sorted(set(attrs.get("fused_from", [])) | set(fused_from))
    coordinate = first.coordinate
    for n in group[1:]:
        if n.label != first.label or n.node_class != first.node_class:
            warnings.append(
                warning_record(
                    "MergeConflict",
                    f"node {n.node_id!r} ({n.node_class} {n.label!r}) fused into "
                    f"{first.node_id!r} ({first.node_class} {first.label!r}); first operand wins",
                    kept=first.node_id,
                    dropped=n.node_id,
                )
            )
        if coordinate is None:
            coordinate = n.coordinate
    return replace(first, coordinate=coordinate, attrs=attrs)


def merge_graphs(
    a: LabeledDiGraph,
    b: LabeledDiGraph,
    identity: Callable[[GraphNode, GraphNode], bool],
) -> LabeledDiGraph:
    """Union of two graphs with identified node pairs fused.

    ``identity`` is evaluated on every (a-node, b-node) pair. Identified pairs
    are closed transitively; a closure class that would fuse two nodes of the
    same operand raises :class:`IdentityConflict`. The fused node keeps the
    node id, label and class of its first-operand member, and label/class
    disagreements are recorded as ``MergeConflict`` warnings. Edges are
    re-pointed and deduplicated per (source, target, class).
    """
    if a.directed != b.directed:
        raise GraphError("cannot merge a directed graph with an undirected one")

    a_ids = [n.node_id for n in a.nodes]
    b_ids = [n.node_id for n in b.nodes]
    tagged = [("a", i) for i in a_ids] + [("b", i) for i in b_ids]
    uf = _UnionFind(tagged)
    for na in a.nodes:
        for nb in b.nodes:
            if identity(na, nb):
                uf.union(("a", na.node_id), ("b", nb.node_id))

    groups = defaultdict(list)
    for t in tagged:
        groups[uf.find(t)].append(t)

    warnings: list = []
    rename = {}
    nodes = []
    for t in tagged:
        members = groups[uf.find(t)]
        if members[0] != t:
            continue
        sides = Counter(side for side, _ in members)
        if sides["a"] > 1 or sides["b"] > 1:
            raise IdentityConflict(
                "identity predicate fuses nodes of the same graph: "
                + ", ".join(sorted(f"{s}:{i}" for s, i in members))
            )
        src = {"a": a.node_map, "b": b.node_map}
        group = [src[s][i] for s, i in members]
        fused = _fuse(group, warnings) if len(group) > 1 else group[0]
        for m in members:
            rename[m] = fused.node_id
        nodes.append(fused)

    ids = Counter(n.node_id for n in nodes)
    clashes = sorted(i for i, c in ids.items() if c > 1)
    if clashes:
        raise DuplicateNodeId(f"unidentified nodes share ids: {clashes}")

    edges = [
        replace(e, source=rename[(side, e.source)], target=rename[(side, e.target)])
        for side, g in (("a", a), ("b", b))
        for e in g.edges
    ]
    edges = dedupe_edges(edges, directed=a.directed)

    meta = _merge_metadata(a.metadata, b.metadata)
    meta["warnings"] = list(meta.get("warnings", [])) + warnings
    return LabeledDiGraph(tuple(nodes), tuple(edges), a.directed, meta)


def _merge_metadata(ma: Mapping, mb: Mapping) -> dict:
    meta = dict(mb)
    meta.update(ma)
    meta["warnings"] = list(ma.get("warnings", [])) + list(mb.get("warnings", []))
    sources = list(ma.get("sources", [])) + [
        s for s in mb.get("sources", []) if s not in ma.get("sources", [])
    ]
    if sources:
        meta["sources"] = sources
    return meta


def never_identical(_a: GraphNode, _b: GraphNode) -> bool:
    return False
