"""Exception hierarchy.

Fatal problems raise; recoverable ones are recorded as warning records in
graph metadata (see :func:`plantgraph.graph.warning_record`).
"""


class PlantGraphError(Exception):
    """Base class for every error raised by this package."""

    def __init__(self, message, *, source=None, line=None):
        self.source = source
        self.line = line
        super().__init__(message)

    def __str__(self):
        msg = super().__str__()
        where = ":".join(str(p) for p in (self.source, self.line) if p is not None)
        return f"{where}: {msg}" if where else msg


# graph core
class GraphError(PlantGraphError):
    pass


class DuplicateNodeId(GraphError):
    pass


class DanglingEdge(GraphError):
    pass


class IdentityConflict(GraphError):
    pass


class UnitMismatch(GraphError):
    pass


class MalformedDocument(GraphError):
    pass


class VersionMismatch(GraphError):
    pass


# Proteus XML
class ProteusError(PlantGraphError):
    pass


class XmlSyntaxError(ProteusError):
    pass


class MissingId(ProteusError):
    pass


# PCF
class PcfError(PlantGraphError):
    pass


class PcfSyntaxError(PcfError):
    pass


class EndpointCountError(PcfError):
    pass


class DegenerateComponent(PcfError):
    pass


# orientation
class OrientError(PlantGraphError):
    pass


class NoStartCoords(OrientError):
    pass


class ElevationTie(OrientError):
    pass


class UnknownNode(OrientError):
    pass


class RootNotFound(OrientError):
    pass


class CycleDetected(OrientError):
    pass


class AmbiguousRoot(OrientError):
    pass


class ConfigError(PlantGraphError):
    pass
