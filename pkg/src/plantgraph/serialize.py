"""GraphDocument JSON interchange plus DOT and GraphML renderings."""

from __future__ import annotations

import json
import re
import xml.etree.ElementTree as ET
from typing import Any

from .errors import DanglingEdge, GraphError, MalformedDocument, VersionMismatch
from .graph import GraphEdge, GraphNode, LabeledDiGraph

FORMAT_VERSION = "1"
FORMATS = ("json", "dot", "graphml")

GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"

_DOT_BARE_ID = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_DOT_KEYWORDS = {"node", "edge", "graph", "digraph", "subgraph", "strict"}


def _sorted_nodes(graph):
    return sorted(graph.nodes, key=lambda n: n.node_id)


def _sorted_edges(graph):
    return sorted(
        graph.edges,
        key=lambda e: (e.source, e.target, e.edge_class, json.dumps(e.attrs, sort_keys=True, default=str)),
    )


def to_document(graph: LabeledDiGraph) -> dict:
    nodes = []
    for n in _sorted_nodes(graph):
        rec: dict[str, Any] = {
            "id": n.node_id,
            "short_id": n.short_id,
            "label": n.label,
            "class": n.node_class,
            "origin": n.origin,
        }
        if n.coordinate is not None:
            rec["coord"] = list(n.coordinate)
        if n.attrs:
            rec["attrs"] = dict(n.attrs)
        nodes.append(rec)
    edges = []
    for e in _sorted_edges(graph):
        rec = {"source": e.source, "target": e.target, "class": e.edge_class}
        if e.attrs:
            rec["attrs"] = dict(e.attrs)
        edges.append(rec)
    metadata = dict(graph.metadata)
    metadata["directed"] = graph.directed
    return {
        "format_version": FORMAT_VERSION,
        "metadata": metadata,
        "nodes": nodes,
        "edges": edges,
    }


def to_json(graph: LabeledDiGraph) -> bytes:
    return (json.dumps(to_document(graph), indent=2, sort_keys=True, default=str) + "\n").encode("utf-8")


def _dot_id(s: str) -> str:
    if _DOT_BARE_ID.match(s) and s.lower() not in _DOT_KEYWORDS:
        return s
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _dot_text(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(graph: LabeledDiGraph) -> bytes:
    kind, arrow = ("digraph", "->") if graph.directed else ("graph", "--")
    lines = [f"{kind} plant {{"]
    for n in _sorted_nodes(graph):
        parts = [n.short_id or n.node_id]
        if n.label:
            parts.append(n.label)
        parts.append(n.node_class)
        label = "\\n".join(_dot_text(p) for p in parts)
        lines.append(f'  {_dot_id(n.node_id)} [label="{label}"];')
    for e in _sorted_edges(graph):
        lines.append(
            f'  {_dot_id(e.source)} {arrow} {_dot_id(e.target)} [label="{_dot_text(e.edge_class)}"];'
        )
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")


_GRAPHML_NODE_KEYS = [
    ("short_id", "string"),
    ("label", "string"),
    ("class", "string"),
    ("origin", "string"),
    ("x", "double"),
    ("y", "double"),
    ("z", "double"),
]


def to_graphml(graph: LabeledDiGraph) -> bytes:
    ET.register_namespace("", GRAPHML_NS)
    q = lambda tag: f"{{{GRAPHML_NS}}}{tag}"  # noqa: E731
    root = ET.Element(q("graphml"))
    for name, typ in _GRAPHML_NODE_KEYS:
        ET.SubElement(root, q("key"), {"id": f"n_{name}", "for": "node", "attr.name": name, "attr.type": typ})
    ET.SubElement(root, q("key"), {"id": "e_class", "for": "edge", "attr.name": "class", "attr.type": "string"})
    g = ET.SubElement(
        root, q("graph"), {"id": "plant", "edgedefault": "directed" if graph.directed else "undirected"}
    )
    for n in _sorted_nodes(graph):
        el = ET.SubElement(g, q("node"), {"id": n.node_id})
        values = {"short_id": n.short_id, "label": n.label, "class": n.node_class, "origin": n.origin}
        if n.coordinate is not None:
            values.update(zip("xyz", (repr(float(c)) for c in n.coordinate)))
        for name, _ in _GRAPHML_NODE_KEYS:
            if name in values:
                ET.SubElement(el, q("data"), {"key": f"n_{name}"}).text = values[name]
    for e in _sorted_edges(graph):
        el = ET.SubElement(g, q("edge"), {"source": e.source, "target": e.target})
        ET.SubElement(el, q("data"), {"key": "e_class"}).text = e.edge_class
    ET.indent(root)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"


def export_graph(graph: LabeledDiGraph, fmt: str = "json") -> bytes:
    """Render ``graph`` as ``json``, ``dot`` or ``graphml`` bytes.

    Output is deterministic: nodes and edges are sorted by node id.
    """
    fmt = fmt.lower()
    if fmt == "json":
        return to_json(graph)
    if fmt == "dot":
        return to_dot(graph)
    if fmt == "graphml":
        return to_graphml(graph)
    raise ValueError(f"unknown export format {fmt!r}; expected one of {FORMATS}")


def _require(rec, key, typ, where):
    if key not in rec:
        raise MalformedDocument(f"{where}: missing key {key!r}")
    val = rec[key]
    if not isinstance(val, typ):
        raise MalformedDocument(f"{where}: {key!r} has wrong type {type(val).__name__}")
    return val


def _coord(val, where):
    if (
        not isinstance(val, list)
        or len(val) != 3
        or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in val)
    ):
        raise MalformedDocument(f"{where}: coord must be a list of 3 numbers")
    return tuple(float(c) for c in val)


def import_graph(doc: bytes | str) -> LabeledDiGraph:
    """Parse a GraphDocument produced by :func:`export_graph` (JSON only)."""
    try:
        data = json.loads(doc)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedDocument(f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise MalformedDocument("top level must be an object")
    version = _require(data, "format_version", str, "document")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"format_version {version!r} is not supported (expected {FORMAT_VERSION!r})")
    metadata = dict(_require(data, "metadata", dict, "document"))
    directed = metadata.pop("directed", True)
    if not isinstance(directed, bool):
        raise MalformedDocument("metadata.directed must be a boolean")

    nodes = []
    for i, rec in enumerate(_require(data, "nodes", list, "document")):
        where = f"nodes[{i}]"
        if not isinstance(rec, dict):
            raise MalformedDocument(f"{where}: must be an object")
        coord = _coord(rec["coord"], where) if rec.get("coord") is not None else None
        nodes.append(
            GraphNode(
                node_id=_require(rec, "id", str, where),
                node_class=_require(rec, "class", str, where),
                label=rec.get("label", "") or "",
                coordinate=coord,
                origin=rec.get("origin", "Synthetic"),
                short_id=rec.get("short_id", "") or "",
                attrs=dict(rec.get("attrs", {})),
            )
        )
    node_ids = {n.node_id for n in nodes}
    edges = []
    for i, rec in enumerate(_require(data, "edges", list, "document")):
        where = f"edges[{i}]"
        if not isinstance(rec, dict):
            raise MalformedDocument(f"{where}: must be an object")
        src = _require(rec, "source", str, where)
        tgt = _require(rec, "target", str, where)
        for end in (src, tgt):
            if end not in node_ids:
                raise DanglingEdge(f"{where}: references unknown node {end!r}")
        edges.append(GraphEdge(src, tgt, _require(rec, "class", str, where), dict(rec.get("attrs", {}))))
    try:
        return LabeledDiGraph(tuple(nodes), tuple(edges), directed, metadata)
    except DanglingEdge:
        raise
    except GraphError as exc:
        raise MalformedDocument(str(exc)) from exc
