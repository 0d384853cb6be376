"""Proteus (DEXPI) P&ID XML to labeled graph.

Only the connectivity subset is read: Equipment with nested Nozzles,
PipingNetworkSegment Connections, and optionally InstrumentComponent /
SignalLine pairs. Elements are matched by local name, so namespaced and
plain exports are handled alike.
"""

from __future__ import annotations

import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import List, Optional

from .errors import MissingId, XmlSyntaxError
from .graph import (
    INSTRUMENT,
    NOZZLE,
    PROTEUS,
    PUMP,
    SEGMENT,
    SIGNAL,
    TANK,
    UNKNOWN,
    GraphEdge,
    GraphNode,
    LabeledDiGraph,
    dedupe_edges,
    warning_record,
)

logger = logging.getLogger(__name__)

INSTRUMENT_TAGS = ("InstrumentComponent", "ProcessInstrument")
SIGNAL_CONNECT_TAGS = ("Connect", "Connection")


@dataclass
class NozzleItem:
    id: str
    tag: str = ""
    component_class: str = ""


@dataclass
class EquipmentItem:
    id: str
    tag: str = ""
    component_class: str = ""
    nozzles: List[NozzleItem] = field(default_factory=list)


@dataclass
class SegmentConnection:
    from_id: str
    to_id: str


@dataclass
class PipingSegment:
    id: str
    connection: Optional[SegmentConnection] = None
    inline_component_ids: List[str] = field(default_factory=list)


@dataclass
class InstrumentItem:
    id: str
    tag: str = ""
    component_class: str = ""


@dataclass
class SignalLink:
    from_id: str
    to_id: str
    id: str = ""


@dataclass
class ProteusModel:
    equipment: List[EquipmentItem] = field(default_factory=list)
    segments: List[PipingSegment] = field(default_factory=list)
    instruments: List[InstrumentItem] = field(default_factory=list)
    signal_lines: List[SignalLink] = field(default_factory=list)
    warnings: List[dict] = field(default_factory=list)
    source: str = ""

    @property
    def nozzles(self):
        return [nz for eq in self.equipment for nz in eq.nozzles]


def _local(tag) -> str:
    if not isinstance(tag, str):  # comments, processing instructions
        return ""
    return tag.rsplit("}", 1)[-1]


def _children(el, name):
    return [c for c in el if _local(c.tag) == name]


def _tag_name(el) -> str:
    tag = el.get("TagName")
    if tag:
        return tag
    for attrs in _children(el, "GenericAttributes"):
        for ga in _children(attrs, "GenericAttribute"):
            if ga.get("Name") == "TagName" and ga.get("Value"):
                return ga.get("Value")
    return ""


def _require_id(el, source) -> str:
    ident = el.get("ID")
    if not ident:
        raise MissingId(f"<{_local(el.tag)}> element without ID attribute", source=source)
    return ident


def parse_proteus(doc: bytes | str, source: str = "") -> ProteusModel:
    """Read the extracted element kinds from a Proteus XML document.

    Raises :class:`XmlSyntaxError` on malformed XML and :class:`MissingId`
    when an extracted element has no ``ID``. Everything else is ignored.
    """
    try:
        root = ET.fromstring(doc)
    except ET.ParseError as exc:
        raise XmlSyntaxError(str(exc), source=source, line=exc.position[0]) from exc

    model = ProteusModel(source=source)
    for el in root.iter():
        name = _local(el.tag)
        if name == "Equipment":
            eq = EquipmentItem(_require_id(el, source), _tag_name(el), el.get("ComponentClass", ""))
            for nz in _children(el, "Nozzle"):
                eq.nozzles.append(
                    NozzleItem(_require_id(nz, source), _tag_name(nz), nz.get("ComponentClass", "Nozzle"))
                )
            model.equipment.append(eq)
        elif name == "PipingNetworkSegment":
            model.segments.append(_parse_segment(el, model, source))
        elif name in INSTRUMENT_TAGS:
            model.instruments.append(
                InstrumentItem(_require_id(el, source), _tag_name(el), el.get("ComponentClass", name))
            )
        elif name == "SignalLine":
            for conn in el.iter():
                if _local(conn.tag) in SIGNAL_CONNECT_TAGS:
                    a, b = conn.get("FromID"), conn.get("ToID")
                    if a and b:
                        model.signal_lines.append(SignalLink(a, b, el.get("ID", "")))
                    else:
                        model.warnings.append(
                            warning_record(
                                "DanglingConnection",
                                f"signal line {el.get('ID', '?')} has an incomplete connection",
                                element=el.get("ID", ""),
                            )
                        )
    nozzle_ids = [nz.id for nz in model.nozzles]
    if len(set(nozzle_ids)) != len(nozzle_ids):
        model.warnings.append(warning_record("DuplicateId", "nozzle ids are not unique"))
    return model


def _parse_segment(el, model, source) -> PipingSegment:
    seg = PipingSegment(_require_id(el, source))
    for child in el:
        cname = _local(child.tag)
        if cname == "Connection":
            a, b = child.get("FromID"), child.get("ToID")
            if a and b and a != b:
                seg.connection = SegmentConnection(a, b)
            else:
                model.warnings.append(
                    warning_record(
                        "DanglingConnection",
                        f"segment {seg.id} has an incomplete or self-referencing Connection",
                        segment=seg.id,
                    )
                )
        elif child.get("ID") and cname not in ("GenericAttributes", "Label", "Position", "Extent"):
            seg.inline_component_ids.append(child.get("ID"))
    return seg


def equipment_node_class(component_class: str) -> str:
    lowered = component_class.lower()
    if "pump" in lowered:
        return PUMP
    if "tank" in lowered or "vessel" in lowered:
        return TANK
    return UNKNOWN


def _piping_nodes(model: ProteusModel):
    nodes, edges = [], []
    for eq in model.equipment:
        nodes.append(
            GraphNode(
                eq.id,
                equipment_node_class(eq.component_class),
                eq.tag,
                origin=PROTEUS,
                attrs={"component_class": eq.component_class},
            )
        )
        for nz in eq.nozzles:
            nodes.append(
                GraphNode(
                    nz.id, NOZZLE, nz.tag, origin=PROTEUS,
                    attrs={"component_class": nz.component_class, "equipment": eq.id},
                )
            )
            edges.append(GraphEdge(nz.id, eq.id, SEGMENT, {"kind": "containment"}))
    return nodes, edges


def _segment_edges(model: ProteusModel, terminals: set):
    """Chain segment Connections through inline components into terminal-to-terminal edges."""
    warnings = []
    inline = {cid for seg in model.segments for cid in seg.inline_component_ids}
    out_links = {}
    for seg in model.segments:
        conn = seg.connection
        if conn is None:
            continue
        unresolved = [i for i in (conn.from_id, conn.to_id) if i not in terminals and i not in inline]
        if unresolved:
            warnings.append(
                warning_record(
                    "DanglingConnection",
                    f"segment {seg.id} references unknown id(s) {', '.join(unresolved)}",
                    segment=seg.id,
                    ids=unresolved,
                )
            )
            continue
        out_links.setdefault(conn.from_id, []).append((conn.to_id, seg.id))

    edges, used = [], set()
    for start in sorted(t for t in terminals if t in out_links):
        for first_to, first_seg in out_links[start]:
            stack = [(first_to, [first_seg])]
            visited = set()
            while stack:
                cur, path = stack.pop()
                if cur in terminals:
                    used.update(path)
                    edges.append(GraphEdge(start, cur, SEGMENT, {"segments": path}))
                    continue
                if cur in visited:
                    continue
                visited.add(cur)
                for nxt, seg_id in reversed(out_links.get(cur, [])):
                    stack.append((nxt, path + [seg_id]))
    edges = [e for e in edges if e.source != e.target]
    for seg_id in sorted(set(_iter_segment_ids(out_links)) - used):
        warnings.append(
            warning_record(
                "UnterminatedChain",
                f"segment {seg_id} does not lie on a path between two equipment/nozzle nodes",
                segment=seg_id,
            )
        )
    return edges, warnings


def _iter_segment_ids(out_links):
    for links in out_links.values():
        for _, seg_id in links:
            yield seg_id


def proteus_to_graph(model: ProteusModel, include_signals: bool = False) -> LabeledDiGraph:
    """Build the piping graph: equipment and nozzle nodes, Segment edges.

    Nozzles point at their equipment. Segment Connections become edges in
    FromID to ToID order; inline valves and instruments are skipped by joining
    consecutive segments that meet at them. With ``include_signals`` the
    signal graph is added alongside (usually disconnected).
    """
    nodes, edges = _piping_nodes(model)
    terminals = {n.node_id for n in nodes}
    seg_edges, warnings = _segment_edges(model, terminals)
    edges = dedupe_edges(edges + seg_edges)
    metadata = {"source_format": "proteus", "include_signals": include_signals}
    if model.source:
        metadata["sources"] = [model.source]
    warnings = list(model.warnings) + warnings

    if include_signals:
        signal = extract_signal_graph(model)
        taken = {n.node_id for n in nodes}
        for n in signal.nodes:
            if n.node_id in taken:
                warnings.append(
                    warning_record("DuplicateId", f"instrument id {n.node_id} collides with a piping node")
                )
            else:
                nodes.append(n)
        edges = dedupe_edges(edges + list(signal.edges))
        warnings += signal.metadata.get("warnings", [])

    metadata["warnings"] = warnings
    return LabeledDiGraph(tuple(nodes), tuple(edges), True, metadata)


def extract_signal_graph(model: ProteusModel) -> LabeledDiGraph:
    """Instrument nodes joined by Signal edges; diagnostic output only."""
    instruments = {i.id: i for i in model.instruments}
    warnings, used, edges = [], [], []
    for link in model.signal_lines:
        missing = [i for i in (link.from_id, link.to_id) if i not in instruments]
        if missing:
            warnings.append(
                warning_record(
                    "DanglingConnection",
                    f"signal line {link.id or '?'} references non-instrument id(s) {', '.join(missing)}",
                    ids=missing,
                )
            )
            continue
        if link.from_id == link.to_id:
            continue
        for i in (link.from_id, link.to_id):
            if i not in used:
                used.append(i)
        edges.append(GraphEdge(link.from_id, link.to_id, SIGNAL, {"signal_line": link.id} if link.id else {}))
    nodes = [
        GraphNode(i, INSTRUMENT, instruments[i].tag, origin=PROTEUS,
                  attrs={"component_class": instruments[i].component_class})
        for i in used
    ]
    metadata = {"source_format": "proteus", "graph": "signals", "warnings": warnings}
    if model.source:
        metadata["sources"] = [model.source]
    return LabeledDiGraph(tuple(nodes), tuple(dedupe_edges(edges)), True, metadata)
