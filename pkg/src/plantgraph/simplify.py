"""Graph rewrites that bring PCF graphs to P&ID level of detail."""

from __future__ import annotations

import math
from collections import Counter

from .graph import (
    COORDINATE,
    PIPE,
    SYNTHETIC,
    VALVE,
    WELD,
    GraphEdge,
    GraphNode,
    LabeledDiGraph,
    dedupe_edges,
    warning_record,
)

CHAIN_CLASSES = (PIPE, WELD)


def valve_edges_to_nodes(graph: LabeledDiGraph) -> LabeledDiGraph:
    """Replace each Valve edge ``u -> v`` by ``u -> V -> v`` with a Valve node ``V``.

    The new edges are Pipe edges. ``V`` takes the valve's NAME as label when
    the PCF gave one and sits at the midpoint of its two ends.
    """
    nodes = list(graph.nodes)
    edges = []
    taken = set(graph.node_map)
    seen: Counter = Counter()
    for e in graph.edges:
        if e.edge_class != VALVE:
            edges.append(e)
            continue
        seen[(e.source, e.target)] += 1
        base = f"{e.source}~valve~{e.target}"
        vid = base if seen[(e.source, e.target)] == 1 else f"{base}#{seen[(e.source, e.target)]}"
        while vid in taken:
            vid += "'"
        taken.add(vid)
        a, b = graph.node(e.source).coordinate, graph.node(e.target).coordinate
        mid = tuple((x + y) / 2 for x, y in zip(a, b)) if a is not None and b is not None else None
        attrs = {k: v for k, v in e.attrs.items() if k != "name"}
        nodes.append(GraphNode(vid, VALVE, str(e.attrs.get("name", "")), mid, SYNTHETIC, attrs=attrs))
        half = {k: v for k, v in e.attrs.items() if k == "pipeline"}
        edges.append(GraphEdge(e.source, vid, PIPE, dict(half)))
        edges.append(GraphEdge(vid, e.target, PIPE, dict(half)))
    return graph.evolve(nodes=tuple(nodes), edges=tuple(edges))


def _edge_length(graph, e):
    if "length" in e.attrs:
        return float(e.attrs["length"])
    a, b = graph.node(e.source).coordinate, graph.node(e.target).coordinate
    if a is None or b is None:
        return None
    return math.dist(a, b)


def collapse_piping_chains(graph: LabeledDiGraph) -> LabeledDiGraph:
    """Collapse runs of Pipe/Weld edges through plain coordinate nodes.

    A node is a chain interior when it is a Coordinate node of undirected
    degree 2 whose two edges are both Pipe or Weld. Each maximal run through
    such nodes becomes one Pipe edge between its end nodes, carrying
    ``chain_length`` and the summed geometric ``length``. Runs whose edges do
    not all point the same way along the path, closed loops and runs that
    would start and end at the same node are kept and reported.
    """
    adj = graph.undirected_adjacency()

    def interior(node_id):
        inc = adj[node_id]
        return (
            graph.node(node_id).node_class == COORDINATE
            and len(inc) == 2
            and inc[0][1] != inc[1][1]
            and all(graph.edges[ei].edge_class in CHAIN_CLASSES for _, ei in inc)
        )

    inner = {n for n in adj if interior(n)}
    if not inner:
        return graph

    used_edges = set()
    new_edges = []
    removed = set()
    warnings = []

    def walk(start, first_edge):
        """Follow a chain from a non-interior node; return (end, node path, edge path)."""
        path_nodes, path_edges = [start], [first_edge]
        e = graph.edges[first_edge]
        cur = e.target if e.source == start else e.source
        while cur in inner:
            path_nodes.append(cur)
            nxt = next(ei for _, ei in adj[cur] if ei != path_edges[-1])
            path_edges.append(nxt)
            e = graph.edges[nxt]
            cur = e.target if e.source == cur else e.source
        path_nodes.append(cur)
        return path_nodes, path_edges

    for start in sorted(adj):
        if start in inner:
            continue
        for nbr, ei in sorted(adj[start]):
            if ei in used_edges or nbr not in inner:
                continue
            path_nodes, path_edges = walk(start, ei)
            used_edges.update(path_edges)
            end = path_nodes[-1]
            forward = [graph.edges[x].source == path_nodes[i] for i, x in enumerate(path_edges)]
            if end == start:
                warnings.append(
                    warning_record("ChainLoop", f"chain from {start!r} returns to itself; left intact", node=start)
                )
                continue
            if graph.directed and len(set(forward)) > 1:
                warnings.append(
                    warning_record(
                        "MixedDirectionChain",
                        f"chain {start!r} .. {end!r} has edges in both directions; left intact",
                        source=start,
                        target=end,
                    )
                )
                continue
            lengths = [_edge_length(graph, graph.edges[x]) for x in path_edges]
            attrs = {
                "chain_length": sum(int(graph.edges[x].attrs.get("chain_length", 1)) for x in path_edges),
                "collapsed_nodes": path_nodes[1:-1],
            }
            if all(v is not None for v in lengths):
                attrs["length"] = sum(lengths)
            pipelines = sorted({graph.edges[x].attrs["pipeline"] for x in path_edges if "pipeline" in graph.edges[x].attrs})
            if pipelines:
                attrs["pipeline"] = pipelines[0] if len(pipelines) == 1 else pipelines
            src, dst = (start, end) if forward[0] or not graph.directed else (end, start)
            new_edges.append((min(path_edges), GraphEdge(src, dst, PIPE, attrs)))
            removed.update(path_nodes[1:-1])

    loop_edges = {ei for n in inner for _, ei in adj[n]} - used_edges
    if loop_edges:
        warnings.append(
            warning_record("ChainLoop", f"{len(loop_edges)} edge(s) form closed pipe loops; left intact")
        )

    kept = [(i, e) for i, e in enumerate(graph.edges) if i not in used_edges or not _touches(e, removed)]
    ordered = [e for _, e in sorted(kept + new_edges, key=lambda t: t[0])]
    nodes = tuple(n for n in graph.nodes if n.node_id not in removed)
    return graph.evolve(nodes=nodes, edges=tuple(ordered)).with_warnings(warnings)


def _touches(edge, removed):
    return edge.source in removed or edge.target in removed


def strip_directions(graph: LabeledDiGraph) -> LabeledDiGraph:
    """Undirected view: endpoints sorted, one edge per unordered pair and class."""
    edges = [
        e if e.source <= e.target else e.reversed()
        for e in graph.edges
    ]
    meta = dict(graph.metadata)
    meta.pop("root", None)
    return graph.evolve(edges=tuple(dedupe_edges(edges, directed=False)), directed=False, metadata=meta)
