"""``plantgraph`` command line.

Every command reads and writes GraphDocument JSON (or DOT/GraphML on
request). Warnings go to a JSON report on stderr (or ``--report FILE``),
never into the graph output. Exit status: 0 ok, 1 warnings under
``--strict``, 2 errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from pathlib import Path
from typing import List, Optional

from . import __version__
from .errors import OrientError, PlantGraphError, UnitMismatch
from .graph import (
    END_CONNECTION,
    INSTRUMENT,
    NOZZLE,
    PROTEUS,
    LabeledDiGraph,
    assign_short_ids,
    connected_components,
    warning_record,
)
from .orient import Elevation, Explicit, StartCoords, find_root, load_pump_map, orient_from_root
from .pcf import EQUIPMENT, default_epsilon, merge_pipeline_graphs, parse_pcf, pcf_to_graph
from .proteus import parse_proteus, proteus_to_graph
from .serialize import FORMATS, export_graph, import_graph
from .simplify import collapse_piping_chains, strip_directions, valve_edges_to_nodes

logger = logging.getLogger("plantgraph")

EXIT_OK, EXIT_WARN, EXIT_ERROR = 0, 1, 2
EXTENSIONS = {"json": ".json", "dot": ".dot", "graphml": ".graphml"}


class UsageError(PlantGraphError):
    pass


def _epsilon(value: Optional[float]) -> float:
    eps = default_epsilon() if value is None else value
    if not eps > 0:
        raise UsageError(f"--epsilon must be positive, got {eps}")
    return eps


def _write(data: bytes, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


def _emit_report(report: dict, path: Optional[str]) -> None:
    text = json.dumps(report, indent=2, sort_keys=True, default=str) + "\n"
    if path:
        Path(path).write_text(text)
    elif report.get("warnings"):
        sys.stderr.write(text)


def _summary(graph: LabeledDiGraph) -> dict:
    return {
        "nodes": len(graph.nodes),
        "edges": len(graph.edges),
        "components": len(connected_components(graph)),
        "node_classes": dict(sorted(Counter(n.node_class for n in graph.nodes).items())),
        "edge_classes": dict(sorted(Counter(e.edge_class for e in graph.edges).items())),
    }


def _read_graph(path: str) -> LabeledDiGraph:
    return import_graph(Path(path).read_bytes())


def cmd_proteus2graph(args) -> dict:
    model = parse_proteus(Path(args.input).read_bytes(), source=args.input)
    graph = assign_short_ids(proteus_to_graph(model, include_signals=args.signals))
    _write(export_graph(graph, args.format), args.output)
    return {"graph": _summary(graph), "warnings": graph.warnings}


def cmd_pcf2graph(args) -> dict:
    eps = _epsilon(args.epsilon)
    graphs = [pcf_to_graph(parse_pcf(Path(p).read_bytes(), source=p), eps) for p in args.inputs]
    if args.merge or len(graphs) == 1:
        graph = graphs[0] if len(graphs) == 1 else merge_pipeline_graphs(graphs, eps)
        graph = assign_short_ids(graph)
        _write(export_graph(graph, args.format), args.output)
        return {"graph": _summary(graph), "warnings": graph.warnings}
    if not args.output:
        raise UsageError("several inputs without --merge need -o DIRECTORY")
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    report = {"graphs": {}, "warnings": []}
    for path, graph in zip(args.inputs, graphs):
        graph = assign_short_ids(graph)
        _write(export_graph(graph, args.format), str(outdir / (Path(path).stem + EXTENSIONS[args.format])))
        report["graphs"][path] = _summary(graph)
        report["warnings"] += graph.warnings
    return report


def cmd_orient(args) -> dict:
    graph = _read_graph(args.input)
    pipeline = None
    if args.start_coords:
        pipeline = parse_pcf(Path(args.start_coords).read_bytes(), source=args.start_coords)
        strategy = StartCoords()
    elif args.elevation_axis:
        strategy = Elevation(args.elevation_axis)
    elif args.root:
        strategy = Explicit(args.root)
    else:
        strategy = load_pump_map(Path(args.pump_map).read_text(), source=args.pump_map)
    root = find_root(graph, pipeline, strategy)
    before = len(graph.warnings)
    graph = orient_from_root(graph, root)
    _write(export_graph(graph, "json"), args.output)
    return {"root": root, "graph": _summary(graph), "warnings": graph.warnings[before:]}


def cmd_simplify(args) -> dict:
    graph = _read_graph(args.input)
    before = len(graph.warnings)
    if args.valves_to_nodes:
        graph = valve_edges_to_nodes(graph)
    if args.collapse:
        graph = collapse_piping_chains(graph)
    if args.undirected:
        graph = strip_directions(graph)
    graph = assign_short_ids(graph)
    _write(export_graph(graph, "json"), args.output)
    return {"graph": _summary(graph), "warnings": graph.warnings[before:]}


def _anchor_labels(pnid: LabeledDiGraph) -> dict:
    """Equipment and nozzle labels of the P&ID graph, keyed by label."""
    return {
        n.label: n
        for n in pnid.nodes
        if n.origin == PROTEUS and n.label and n.node_class != INSTRUMENT
    }


def _anchored(tag: str, labels: dict) -> List[str]:
    """P&ID labels a PCF end-connection tag refers to.

    Exact label equality, or the tag starts with an equipment label followed
    by a separator (``B-100-N1`` anchors to ``B-100``).
    """
    hits = [tag] if tag in labels else []
    for label, node in labels.items():
        if node.node_class == NOZZLE or label == tag:
            continue
        if tag.startswith(label) and not tag[len(label)].isalnum():
            hits.append(label)
    return sorted(set(hits))


def _orient_strategies(policy: str, pipeline) -> list:
    """Root strategies tried in order for one pipeline under ``--orient``."""
    has_start = pipeline.start_coords is not None
    if policy == "start-coords":
        return [StartCoords()] if has_start else []
    if policy == "elevation":
        return [Elevation("z")]
    if policy == "auto":
        return ([StartCoords()] if has_start else []) + [Elevation("z")]
    return []


def cmd_pipeline(args) -> dict:
    eps = _epsilon(args.epsilon)
    outdir = Path(args.output)
    (outdir / "pcf").mkdir(parents=True, exist_ok=True)
    warnings: List[dict] = []

    model = parse_proteus(Path(args.pnid).read_bytes(), source=args.pnid)
    pnid = assign_short_ids(proteus_to_graph(model))
    for w in pnid.warnings:
        warnings.append({"stage": "proteus", **w})
    for fmt in ("json", "dot"):
        _write(export_graph(pnid, fmt), str(outdir / f"pnid{EXTENSIONS[fmt]}"))

    pcf_paths = sorted(p for p in Path(args.pcf_dir).iterdir() if p.suffix.lower() == ".pcf")
    if not pcf_paths:
        raise UsageError(f"no .pcf files in {args.pcf_dir}")
    labels = _anchor_labels(pnid)
    pipelines_report, graphs = [], []
    for path in pcf_paths:
        pipeline = parse_pcf(path.read_bytes(), source=str(path))
        graph = pcf_to_graph(pipeline, eps)
        entry = {"name": pipeline.name, "source": str(path), "oriented": False}
        strategies = _orient_strategies(args.orient, pipeline)
        for i, strategy in enumerate(strategies):
            try:
                root = find_root(graph, pipeline, strategy)
                graph = orient_from_root(graph, root)
                entry.update(oriented=True, root=root, strategy=type(strategy).__name__)
                break
            except OrientError as exc:
                if i == len(strategies) - 1:
                    graph = graph.with_warnings(
                        [warning_record(type(exc).__name__, f"{path}: orientation skipped: {exc}")]
                    )
        graph = assign_short_ids(graph)
        for fmt in ("json", "dot"):
            _write(export_graph(graph, fmt), str(outdir / "pcf" / f"{path.stem}{EXTENSIONS[fmt]}"))
        tags = sorted(
            n.attrs.get("tag", "") for n in graph.nodes
            if n.node_class == END_CONNECTION and n.attrs.get("end_kind") == EQUIPMENT
        )
        anchors = {t: _anchored(t, labels) for t in tags if t}
        entry.update(_summary(graph))
        entry["equipment_tags"] = tags
        entry["anchors"] = {t: a for t, a in anchors.items() if a}
        entry["matched"] = bool(entry["anchors"])
        for w in graph.warnings:
            warnings.append({"stage": "pcf", **w})
        pipelines_report.append(entry)
        graphs.append(graph)

    units = graphs[0].metadata.get("units")
    mergeable = []
    for g in graphs:
        if g.metadata.get("units") == units:
            mergeable.append(g)
        else:
            warnings.append(
                {"stage": "merge", **warning_record(
                    UnitMismatch.__name__,
                    f"pipeline {g.metadata['pipelines'][0]} uses units {g.metadata.get('units')}, "
                    f"expected {units}; left out of the merged graph",
                )}
            )
    merged = assign_short_ids(merge_pipeline_graphs(mergeable, eps))
    simplified = assign_short_ids(collapse_piping_chains(valve_edges_to_nodes(merged)))
    for name, graph in (("pcf_merged", merged), ("pcf_simplified", simplified)):
        for fmt in ("json", "dot"):
            _write(export_graph(graph, fmt), str(outdir / f"{name}{EXTENSIONS[fmt]}"))
    warnings += [{"stage": "merge", **w} for w in merged.warnings if w.get("code") == "MergeConflict"]
    for w in simplified.warnings[len(merged.warnings):]:
        warnings.append({"stage": "simplify", **w})

    unmatched = [p["name"] for p in pipelines_report if not p["matched"]]
    for name in unmatched:
        warnings.append(
            {"stage": "match", **warning_record(
                "UnmatchedPipeline", f"pipeline {name} has no equipment end connection found in the P&ID",
                pipeline=name,
            )}
        )
    used = {label for p in pipelines_report for hits in p["anchors"].values() for label in hits}
    unmatched_equipment = sorted(
        n.label for n in pnid.nodes
        if n.origin == PROTEUS and n.label and n.node_class not in (NOZZLE, INSTRUMENT) and n.label not in used
    )
    report = {
        "version": __version__,
        "epsilon": eps,
        "pnid": {"source": args.pnid, **_summary(pnid)},
        "pipelines": pipelines_report,
        "pcf_merged": _summary(merged),
        "pcf_simplified": _summary(simplified),
        "unmatched_pipelines": unmatched,
        "unmatched_pnid_equipment": unmatched_equipment,
        "warnings": warnings,
    }
    (outdir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True, default=str) + "\n")
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plantgraph", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--strict", action="store_true", help="exit 1 when warnings were reported")
    common.add_argument("--report", metavar="FILE", help="write the JSON report here instead of stderr")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("proteus2graph", parents=[common], help="Proteus XML to graph")
    p.add_argument("input")
    p.add_argument("--signals", action="store_true", help="add instrument nodes and signal edges")
    p.add_argument("--format", choices=FORMATS, default="json")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_proteus2graph)

    p = sub.add_parser("pcf2graph", parents=[common], help="PCF file(s) to graph")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--epsilon", type=float, help="coordinate tolerance (default $PLANTGRAPH_EPSILON or 1.0)")
    p.add_argument("--merge", action="store_true", help="stitch all inputs into one graph")
    p.add_argument("--format", choices=FORMATS, default="json")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_pcf2graph)

    p = sub.add_parser("orient", parents=[common], help="point edges away from a root")
    p.add_argument("input")
    how = p.add_mutually_exclusive_group(required=True)
    how.add_argument("--start-coords", metavar="PCF", help="root at the START-CO-ORDS of this PCF file")
    how.add_argument("--elevation-axis", choices=("x", "y", "z"), help="root at the highest end connection")
    how.add_argument("--root", metavar="NODE_ID")
    how.add_argument("--pump-map", metavar="FILE", help="tag=origin|terminus lines")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_orient)

    p = sub.add_parser("simplify", parents=[common], help="valve nodes, chain collapse, undirected view")
    p.add_argument("input")
    p.add_argument("--valves-to-nodes", action="store_true")
    p.add_argument("--collapse", action="store_true")
    p.add_argument("--undirected", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simplify)

    p = sub.add_parser("pipeline", parents=[common], help="full P&ID + PCF run with summary report")
    p.add_argument("pnid")
    p.add_argument("pcf_dir")
    p.add_argument("--epsilon", type=float)
    p.add_argument(
        "--orient",
        choices=("none", "start-coords", "elevation", "auto"),
        default="start-coords",
        help="per-pipeline flow orientation; auto tries START-CO-ORDS then the highest end (z up)",
    )
    p.add_argument("-o", "--output", default="plantgraph-out")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.ERROR,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        report = args.func(args)
    except PlantGraphError as exc:
        print(f"plantgraph {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        print(f"plantgraph {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.command != "pipeline":
        _emit_report(report, args.report)
    elif args.report:
        _emit_report(report, args.report)
    if args.strict and report.get("warnings"):
        return EXIT_WARN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
