"""Plant topology graphs from Proteus P&ID XML and PCF piping files."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .graph import (  # noqa: F401
    GraphEdge,
    GraphNode,
    LabeledDiGraph,
    assign_short_ids,
    connected_components,
    merge_graphs,
)
from .orient import Elevation, Explicit, PumpMap, StartCoords, find_root, load_pump_map, orient_from_root  # noqa: F401
from .pcf import merge_pipelines, parse_pcf, pcf_to_graph, quantize  # noqa: F401
from .proteus import extract_signal_graph, parse_proteus, proteus_to_graph  # noqa: F401
from .serialize import export_graph, import_graph  # noqa: F401
from .simplify import collapse_piping_chains, strip_directions, valve_edges_to_nodes  # noqa: F401
