"""Flow orientation of PCF-derived graphs.

A pipeline is treated as a tree hanging from a root end connection; every
edge is then flipped to point away from that root. The root comes from the
pipeline's START-CO-ORDS, the highest end connection (gravity flow), an
explicit node id, or a user table of nozzle roles.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from .errors import (
    AmbiguousRoot,
    ConfigError,
    CycleDetected,
    ElevationTie,
    NoStartCoords,
    RootNotFound,
    UnknownNode,
)
from .graph import END_CONNECTION, LabeledDiGraph, warning_record
from .pcf import DEFAULT_EPSILON, PcfPipeline, quantize

AXES = {"x": 0, "y": 1, "z": 2}
ROLES = ("origin", "terminus")


@dataclass(frozen=True)
class StartCoords:
    pass


@dataclass(frozen=True)
class Elevation:
    up_axis: str = "z"

    def __post_init__(self):
        if self.up_axis.lower() not in AXES:
            raise ValueError(f"up_axis must be one of x, y, z; got {self.up_axis!r}")


@dataclass(frozen=True)
class Explicit:
    node_id: str


@dataclass(frozen=True)
class PumpMap:
    """Nozzle tag to ``origin`` / ``terminus`` role."""

    roles: Mapping[str, str] = field(default_factory=dict)


RootStrategy = Union[StartCoords, Elevation, Explicit, PumpMap]


def load_pump_map(text: str, source: str = "") -> PumpMap:
    """Parse ``tag=origin|terminus`` lines; blank lines and ``#`` comments are skipped."""
    roles = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tag, sep, role = line.partition("=")
        tag, role = tag.strip(), role.strip().lower()
        if not sep or not tag or role not in ROLES:
            raise ConfigError(f"expected 'tag=origin|terminus', got {raw.strip()!r}", source=source, line=lineno)
        roles[tag] = role
    return PumpMap(roles)


def _end_nodes(graph):
    return [n for n in graph.nodes if n.node_class == END_CONNECTION]


def find_root(
    graph: LabeledDiGraph,
    pipeline: Optional[PcfPipeline],
    strategy: RootStrategy,
) -> str:
    """Pick the node the flow originates from, according to ``strategy``."""
    epsilon = graph.metadata.get("epsilon", DEFAULT_EPSILON)

    if isinstance(strategy, Explicit):
        if strategy.node_id not in graph:
            raise UnknownNode(f"node {strategy.node_id!r} is not in the graph")
        return strategy.node_id

    if isinstance(strategy, StartCoords):
        if pipeline is None or pipeline.start_coords is None:
            name = pipeline.name if pipeline is not None else "?"
            raise NoStartCoords(f"pipeline {name} has no START-CO-ORDS")
        key = quantize(pipeline.start_coords, epsilon)
        hits = sorted(
            n.node_id for n in graph.nodes
            if n.coordinate is not None and quantize(n.coordinate, epsilon) == key
        )
        if not hits:
            raise RootNotFound(f"no node at START-CO-ORDS {pipeline.start_coords}")
        return hits[0]

    if isinstance(strategy, Elevation):
        axis = AXES[strategy.up_axis.lower()]
        candidates = [n for n in _end_nodes(graph) if n.coordinate is not None]
        if not candidates:
            raise RootNotFound("graph has no end-connection nodes with coordinates")
        top = max(n.coordinate[axis] for n in candidates)
        best = sorted(n.node_id for n in candidates if top - n.coordinate[axis] < epsilon)
        if len(best) > 1:
            raise ElevationTie(
                f"end connections {best} share the highest {strategy.up_axis} elevation; "
                "choose the root explicitly"
            )
        return best[0]

    if isinstance(strategy, PumpMap):
        ends = _end_nodes(graph)
        role = {n.node_id: strategy.roles.get(n.attrs.get("tag", "")) for n in ends}
        origins = sorted(i for i, r in role.items() if r == "origin")
        if len(origins) > 1:
            raise AmbiguousRoot(f"several end connections are marked origin: {origins}")
        if origins:
            return origins[0]
        # a two-ended pipeline with a known terminus starts at the other end
        termini = [i for i, r in role.items() if r == "terminus"]
        if len(ends) == 2 and len(termini) == 1:
            return next(n.node_id for n in ends if n.node_id != termini[0])
        raise RootNotFound("pump map identifies no origin end connection in this graph")

    raise TypeError(f"unsupported root strategy {strategy!r}")


def orient_from_root(graph: LabeledDiGraph, root: str) -> LabeledDiGraph:
    """Direct every edge of the root's component away from ``root``.

    Breadth-first, neighbours visited in lexicographic order. The component
    must be a tree: any undirected cycle raises :class:`CycleDetected`. Edges
    outside the component are kept as they are and reported as a
    ``DisconnectedFromRoot`` warning.
    """
    if root not in graph:
        raise UnknownNode(f"root {root!r} is not in the graph")
    adj = graph.undirected_adjacency()
    for lst in adj.values():
        lst.sort()

    seen = {root}
    queue = deque([root])
    flip = {}
    while queue:
        cur = queue.popleft()
        for nbr, ei in adj[cur]:
            if ei in flip:
                continue
            if nbr in seen:
                raise CycleDetected(
                    f"undirected cycle through {cur!r} and {nbr!r}; the pipeline is not a tree"
                )
            edge = graph.edges[ei]
            flip[ei] = edge.source != cur
            seen.add(nbr)
            queue.append(nbr)

    edges = tuple(e.reversed() if flip.get(i) else e for i, e in enumerate(graph.edges))
    warnings = []
    untouched = len(graph.edges) - len(flip)
    if untouched:
        warnings.append(
            warning_record(
                "DisconnectedFromRoot",
                f"{untouched} edge(s) are not reachable from {root!r} and were left unchanged",
                root=root,
                count=untouched,
            )
        )
    meta = dict(graph.metadata)
    meta["root"] = root
    out = graph.evolve(edges=edges, directed=True, metadata=meta)
    return out.with_warnings(warnings)
