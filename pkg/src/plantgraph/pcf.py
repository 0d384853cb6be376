"""PCF (Piping Component File) parsing and pipeline graphs.

A PCF file is line oriented: an unindented keyword opens a record, indented
lines below it are that record's attributes::

    PIPELINE-REFERENCE L1
    PIPE
        END-POINT 0.0 0.0 0.0 50.0
        END-POINT 0.0 0.0 1000.0 50.0

Every PIPE, WELD and VALVE becomes one edge between the nodes of its two
END-POINTs. End connections become labelled nodes at their coordinate.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import PurePath
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import (
    DegenerateComponent,
    EndpointCountError,
    PcfSyntaxError,
    UnitMismatch,
)
from .graph import (
    COORDINATE,
    END_CONNECTION,
    PCF,
    PIPE,
    VALVE,
    WELD,
    GraphEdge,
    GraphNode,
    LabeledDiGraph,
    merge_graphs,
    warning_record,
)

logger = logging.getLogger(__name__)

Vec3 = Tuple[float, float, float]
QuantizedCoord = Tuple[int, int, int]

DEFAULT_EPSILON = 1.0

TEE_STUB = "TeeStub"
OTHER = "Other"
EQUIPMENT = "Equipment"
PIPELINE_REF = "PipelineRef"

COMPONENT_KINDS = {"PIPE": PIPE, "WELD": WELD, "VALVE": VALVE, "TEE-STUB": TEE_STUB}
EDGE_KINDS = (PIPE, WELD, VALVE)
END_CONNECTION_KINDS = {
    "END-CONNECTION-EQUIPMENT": EQUIPMENT,
    "END-CONNECTION-PIPELINE": PIPELINE_REF,
}
COORD_ATTRS = ("END-POINT", "CO-ORDS")


def default_epsilon() -> float:
    """Tolerance from ``PLANTGRAPH_EPSILON``, falling back to 1.0."""
    raw = os.environ.get("PLANTGRAPH_EPSILON")
    if not raw:
        return DEFAULT_EPSILON
    value = float(raw)
    if not value > 0:
        raise ValueError(f"PLANTGRAPH_EPSILON must be positive, got {raw!r}")
    return value


def quantize(coordinate: Sequence[float], epsilon: float) -> QuantizedCoord:
    return tuple(int(round(c / epsilon)) for c in coordinate)


@dataclass
class PcfEndpoint:
    coordinate: Vec3
    bore: float = 0.0


@dataclass
class PcfComponent:
    kind: str
    keyword: str
    endpoints: List[PcfEndpoint] = field(default_factory=list)
    attrs: Dict[str, str] = field(default_factory=dict)
    line: int = 0

    @property
    def is_edge(self) -> bool:
        return self.kind in EDGE_KINDS


@dataclass
class EndConnection:
    kind: str
    coordinate: Optional[Vec3] = None
    tag: str = ""
    reference: str = ""
    attrs: Dict[str, str] = field(default_factory=dict)
    line: int = 0


@dataclass
class PcfPipeline:
    name: str
    units: Dict[str, str] = field(default_factory=lambda: {"bore": "MM", "coords": "MM"})
    start_coords: Optional[Vec3] = None
    components: List[PcfComponent] = field(default_factory=list)
    end_connections: List[EndConnection] = field(default_factory=list)
    metadata: Dict[str, object] = field(default_factory=dict)
    source: str = ""


def _numbers(tokens, line, source, what) -> List[float]:
    values = []
    for tok in tokens:
        try:
            values.append(float(tok))
        except ValueError:
            break
    if len(values) < 3:
        raise PcfSyntaxError(f"{what} needs 3 numeric coordinates", source=source, line=line)
    if not all(math.isfinite(v) for v in values):
        raise PcfSyntaxError(f"{what} has a non-finite value", source=source, line=line)
    return values


def parse_pcf(text: bytes | str, source: str = "") -> PcfPipeline:
    """Parse one PCF file.

    TEE-STUB and unknown records are kept but never produce edges; FLOW
    attributes are recorded in ``metadata["flow"]`` and otherwise unused.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")

    pipeline = PcfPipeline(name="", source=source)
    flows = []
    record = None  # (keyword, object, line)

    def close(rec):
        if rec is None:
            return
        keyword, obj, line = rec
        if isinstance(obj, PcfComponent) and obj.is_edge and len(obj.endpoints) != 2:
            raise EndpointCountError(
                f"{keyword} has {len(obj.endpoints)} END-POINT lines, expected 2",
                source=source,
                line=line,
            )
        if isinstance(obj, EndConnection) and obj.coordinate is None:
            raise PcfSyntaxError(f"{keyword} without END-POINT/CO-ORDS", source=source, line=line)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        tokens = raw.split()
        keyword, rest = tokens[0], tokens[1:]
        if not raw[0].isspace():
            close(record)
            value = " ".join(rest)
            if keyword == "PIPELINE-REFERENCE":
                pipeline.name = value
                record = (keyword, pipeline, lineno)
            elif keyword == "START-CO-ORDS":
                pipeline.start_coords = tuple(_numbers(rest, lineno, source, keyword)[:3])
                record = (keyword, pipeline, lineno)
            elif keyword == "UNITS-BORE":
                pipeline.units["bore"] = value
                record = (keyword, None, lineno)
            elif keyword == "UNITS-CO-ORDS":
                pipeline.units["coords"] = value
                record = (keyword, None, lineno)
            elif keyword in END_CONNECTION_KINDS:
                ec = EndConnection(END_CONNECTION_KINDS[keyword], line=lineno)
                pipeline.end_connections.append(ec)
                record = (keyword, ec, lineno)
            else:
                comp = PcfComponent(COMPONENT_KINDS.get(keyword, OTHER), keyword, line=lineno)
                if value:
                    comp.attrs["VALUE"] = value
                pipeline.components.append(comp)
                record = (keyword, comp, lineno)
            continue

        if record is None:
            raise PcfSyntaxError(f"attribute {keyword} before any record", source=source, line=lineno)
        owner = record[1]
        value = " ".join(rest)
        if keyword == "FLOW":
            flows.append({"record": record[0], "line": lineno, "value": value})
        if isinstance(owner, PcfComponent):
            if keyword == "END-POINT":
                nums = _numbers(rest, lineno, source, keyword)
                bore = nums[3] if len(nums) > 3 else 0.0
                if bore < 0:
                    raise PcfSyntaxError("negative bore", source=source, line=lineno)
                owner.endpoints.append(PcfEndpoint(tuple(nums[:3]), bore))
            else:
                owner.attrs[keyword] = value
        elif isinstance(owner, EndConnection):
            if keyword in COORD_ATTRS:
                owner.coordinate = tuple(_numbers(rest, lineno, source, keyword)[:3])
            elif keyword == "NAME":
                owner.tag = value
            elif keyword == "PIPELINE-REFERENCE":
                owner.reference = value
            else:
                owner.attrs[keyword] = value
        elif isinstance(owner, PcfPipeline):
            if keyword == "START-CO-ORDS":
                pipeline.start_coords = tuple(_numbers(rest, lineno, source, keyword)[:3])
            else:
                pipeline.metadata.setdefault("header", {})[keyword] = value
    close(record)

    if not pipeline.name:
        pipeline.name = PurePath(source).stem if source else "pipeline"
    if flows:
        pipeline.metadata["flow"] = flows
    return pipeline


def _distance(a, b) -> float:
    return math.dist(a, b)


def pcf_to_graph(pipeline: PcfPipeline, epsilon: float = DEFAULT_EPSILON) -> LabeledDiGraph:
    """Graph of one pipeline.

    One Coordinate node per distinct quantized endpoint and one edge per
    PIPE/WELD/VALVE in END-POINT file order, labelled with the component kind.
    End connections turn their coincident node into an EndConnection node
    labelled ``tag/kind``; an end connection that touches no component still
    gets a node plus a ``DisconnectedEndConnection`` warning.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    name = pipeline.name
    nodes: Dict[QuantizedCoord, GraphNode] = {}
    edges: List[GraphEdge] = []
    warnings: List[dict] = []

    def node_id(key):
        return f"{name}:{key[0]},{key[1]},{key[2]}"

    for comp in pipeline.components:
        if not comp.is_edge:
            continue
        (p, q) = comp.endpoints
        kp, kq = quantize(p.coordinate, epsilon), quantize(q.coordinate, epsilon)
        if kp == kq:
            raise DegenerateComponent(
                f"{comp.keyword} endpoints coincide within epsilon={epsilon}",
                source=pipeline.source,
                line=comp.line,
            )
        for key, ep in ((kp, p), (kq, q)):
            if key not in nodes:
                nodes[key] = GraphNode(
                    node_id(key), COORDINATE, "", ep.coordinate, PCF,
                    attrs={"pipeline": name, "bore": ep.bore},
                )
        attrs = {"pipeline": name, "line": comp.line, "length": _distance(p.coordinate, q.coordinate)}
        if "NAME" in comp.attrs:
            attrs["name"] = comp.attrs["NAME"]
        edges.append(GraphEdge(nodes[kp].node_id, nodes[kq].node_id, comp.kind, attrs))

    for ec in pipeline.end_connections:
        key = quantize(ec.coordinate, epsilon)
        tag = ec.tag or ec.reference
        attrs = {"pipeline": name, "end_kind": ec.kind, "tag": ec.tag, "reference": ec.reference}
        existing = nodes.get(key)
        if existing is None:
            warnings.append(
                warning_record(
                    "DisconnectedEndConnection",
                    f"{pipeline.source or name}:{ec.line}: end connection {tag!r} touches no component",
                    pipeline=name,
                    line=ec.line,
                )
            )
            nodes[key] = GraphNode(node_id(key), END_CONNECTION, f"{tag}/{ec.kind}", ec.coordinate, PCF, attrs=attrs)
        elif existing.node_class == END_CONNECTION:
            warnings.append(
                warning_record(
                    "DuplicateEndConnection",
                    f"{pipeline.source or name}:{ec.line}: second end connection at {existing.node_id}; ignored",
                    pipeline=name,
                    line=ec.line,
                )
            )
        else:
            nodes[key] = GraphNode(
                existing.node_id, END_CONNECTION, f"{tag}/{ec.kind}", existing.coordinate, PCF,
                attrs={**existing.attrs, **attrs},
            )

    metadata = {
        "source_format": "pcf",
        "pipelines": [name],
        "units": dict(pipeline.units),
        "epsilon": epsilon,
        "tee_stubs": sum(c.kind == TEE_STUB for c in pipeline.components),
        "warnings": warnings,
    }
    if pipeline.source:
        metadata["sources"] = [pipeline.source]
    if pipeline.start_coords is not None:
        metadata.setdefault("start_coords", {})[name] = list(pipeline.start_coords)
    if "flow" in pipeline.metadata:
        metadata["flow"] = pipeline.metadata["flow"]
    return LabeledDiGraph(tuple(nodes.values()), tuple(edges), True, metadata)


def pipeline_identity(epsilon: float):
    """Node-identity predicate used to stitch pipelines together.

    Two PCF nodes are the same plant point when they are mutually referencing
    open ends, share a quantized coordinate, or are equipment end connections
    carrying the same non-empty tag.
    """

    def identical(a: GraphNode, b: GraphNode) -> bool:
        aa, ba = a.attrs, b.attrs
        a_kind, b_kind = aa.get("end_kind"), ba.get("end_kind")
        if a_kind == b_kind == PIPELINE_REF:
            if aa.get("reference") == ba.get("pipeline") and ba.get("reference") == aa.get("pipeline"):
                return True
        if a_kind == b_kind == EQUIPMENT and aa.get("tag") and aa.get("tag") == ba.get("tag"):
            return True
        if a.coordinate is not None and b.coordinate is not None:
            return quantize(a.coordinate, epsilon) == quantize(b.coordinate, epsilon)
        return False

    return identical


def merge_pipeline_graphs(graphs: Sequence[LabeledDiGraph], epsilon: Optional[float] = None) -> LabeledDiGraph:
    """Fold per-pipeline graphs into one; all must share the same units."""
    if not graphs:
        raise ValueError("at least one pipeline graph is required")
    first = graphs[0]
    units = first.metadata.get("units")
    for g in graphs[1:]:
        if g.metadata.get("units") != units:
            raise UnitMismatch(
                f"pipeline(s) {g.metadata.get('pipelines')} use units {g.metadata.get('units')}, "
                f"expected {units}"
            )
    if epsilon is None:
        epsilon = first.metadata.get("epsilon", DEFAULT_EPSILON)
    identity = pipeline_identity(epsilon)
    merged = first
    pipelines = list(first.metadata.get("pipelines", []))
    start_coords = dict(first.metadata.get("start_coords", {}))
    for g in graphs[1:]:
        merged = merge_graphs(merged, g, identity)
        pipelines += [p for p in g.metadata.get("pipelines", []) if p not in pipelines]
        start_coords.update(g.metadata.get("start_coords", {}))
    meta = dict(merged.metadata)
    meta["pipelines"] = pipelines
    meta["epsilon"] = epsilon
    if start_coords:
        meta["start_coords"] = start_coords
    return merged.evolve(metadata=meta)


def merge_pipelines(pipelines: Sequence[PcfPipeline], epsilon: float = DEFAULT_EPSILON) -> LabeledDiGraph:
    """Build each pipeline's graph and stitch them into a single graph."""
    if not pipelines:
        raise ValueError("at least one pipeline is required")
    return merge_pipeline_graphs([pcf_to_graph(p, epsilon) for p in pipelines], epsilon)
