from collections import Counter

import pytest

from plantgraph.errors import DanglingEdge, DuplicateNodeId, GraphError, IdentityConflict
from plantgraph.graph import (
    END_CONNECTION,
    INSTRUMENT,
    NOZZLE,
    PIPE,
    PUMP,
    SEGMENT,
    TANK,
    GraphEdge,
    GraphNode,
    LabeledDiGraph,
    assign_short_ids,
    merge_graphs,
    never_identical,
)


def path_graph(ids, cls=PIPE, **node_kw):
    nodes = [GraphNode(i, **node_kw) for i in ids]
    edges = [GraphEdge(a, b, cls) for a, b in zip(ids, ids[1:])]
    return LabeledDiGraph(tuple(nodes), tuple(edges))


def by_id(graph):
    return {n.node_id: n.short_id for n in graph.nodes}


class TestConstruction:
    def test_dangling_edge_rejected(self):
        with pytest.raises(DanglingEdge):
            LabeledDiGraph((GraphNode("A"),), (GraphEdge("A", "B", PIPE),))

    def test_duplicate_node_rejected(self):
        with pytest.raises(DuplicateNodeId):
            LabeledDiGraph((GraphNode("A"), GraphNode("A")))

    def test_unknown_class_rejected(self):
        with pytest.raises(GraphError):
            LabeledDiGraph((GraphNode("A", node_class="Boiler"),))

    def test_equality_ignores_short_id_and_order(self):
        a = LabeledDiGraph((GraphNode("A", TANK, "B-100", short_id="E1"), GraphNode("B")), (GraphEdge("A", "B", PIPE),))
        b = LabeledDiGraph((GraphNode("B"), GraphNode("A", TANK, "B-100", short_id="E9")), (GraphEdge("A", "B", PIPE),))
        assert a == b

    def test_equality_includes_label_and_class(self):
        a = LabeledDiGraph((GraphNode("A", TANK, "B-100"),))
        assert a != LabeledDiGraph((GraphNode("A", TANK, "B-200"),))
        assert a != LabeledDiGraph((GraphNode("A", PUMP, "B-100"),))

    def test_edge_multiset_counts(self):
        nodes = (GraphNode("A"), GraphNode("B"))
        once = LabeledDiGraph(nodes, (GraphEdge("A", "B", PIPE),))
        twice = LabeledDiGraph(nodes, (GraphEdge("A", "B", PIPE),) * 2)
        assert once != twice


class TestShortIds:
    def test_tank_and_two_nozzles(self):
        g = LabeledDiGraph((GraphNode("n2", NOZZLE), GraphNode("t", TANK), GraphNode("n1", NOZZLE)))
        assert by_id(assign_short_ids(g)) == {"t": "E1", "n1": "N1", "n2": "N2"}

    def test_empty(self):
        assert assign_short_ids(LabeledDiGraph()) == LabeledDiGraph()

    def test_mixed_fixture_counts_match_recount(self):
        layout = [("t1", TANK), ("t2", TANK), ("p1", PUMP)] + [(f"n{i}", NOZZLE) for i in range(5)] + [
            (f"i{i}", INSTRUMENT) for i in range(3)
        ]
        g = assign_short_ids(LabeledDiGraph(tuple(GraphNode(i, c) for i, c in layout)))
        # independent recount over the fixture definition
        expected = Counter()
        for _, cls in layout:
            expected[{TANK: "E", PUMP: "E", NOZZLE: "N", INSTRUMENT: "I"}[cls]] += 1
        got = Counter(n.short_id.rstrip("0123456789") for n in g.nodes)
        assert got == expected == Counter({"E": 3, "N": 5, "I": 3})
        assert len({n.short_id for n in g.nodes}) == len(layout)

    def test_overwrites_and_is_idempotent(self):
        g = LabeledDiGraph((GraphNode("a", END_CONNECTION, short_id="ZZ"), GraphNode("b")))
        once = assign_short_ids(g)
        assert by_id(once) == {"a": "C1", "b": "X1"}
        assert by_id(assign_short_ids(once)) == by_id(once)


class TestMerge:
    def test_identified_pair_fuses_into_first(self):
        a = path_graph(["A1", "X"])
        b = path_graph(["Y", "B1"])
        m = merge_graphs(a, b, lambda p, q: (p.node_id, q.node_id) == ("X", "Y"))
        assert {n.node_id for n in m.nodes} == {"A1", "X", "B1"}
        assert {e.key for e in m.edges} == {("A1", "X", PIPE), ("X", "B1", PIPE)}
        assert m.node("X").attrs["fused_from"] == ["Y"]

    def test_disjoint_union(self):
        a, b = path_graph(["a", "b", "c"]), path_graph(["d", "e"])
        m = merge_graphs(a, b, never_identical)
        assert len(m.nodes) == 5 and len(m.edges) == 3

    def test_two_paths_sharing_an_end(self):
        a = path_graph(["a1", "a2", "end"], node_class=END_CONNECTION)
        b = path_graph(["end'", "b2", "b3"], node_class=END_CONNECTION)
        m = merge_graphs(a, b, lambda p, q: p.node_id == "end" and q.node_id == "end'")
        # hand-drawn union: a1 - a2 - end - b2 - b3
        expected = path_graph(["a1", "a2", "end", "b2", "b3"], node_class=END_CONNECTION)
        assert m == expected

    def test_conflict_when_two_nodes_of_one_side_fuse(self):
        a = path_graph(["a1", "a2"])
        b = path_graph(["b1"])
        with pytest.raises(IdentityConflict):
            merge_graphs(a, b, lambda p, q: True)

    def test_label_conflict_first_wins_with_warning(self):
        a = LabeledDiGraph((GraphNode("x", TANK, "B-100"),))
        b = LabeledDiGraph((GraphNode("y", PUMP, "P-100"),))
        m = merge_graphs(a, b, lambda p, q: True)
        assert m.node("x").label == "B-100" and m.node("x").node_class == TANK
        assert [w["code"] for w in m.warnings] == ["MergeConflict"]

    def test_duplicate_edges_removed(self):
        a = path_graph(["u", "v"], cls=SEGMENT)
        b = path_graph(["u2", "v2"], cls=SEGMENT)
        m = merge_graphs(a, b, lambda p, q: p.node_id + "2" == q.node_id)
        assert len(m.edges) == 1

    def test_id_clash_without_identification(self):
        with pytest.raises(DuplicateNodeId):
            merge_graphs(path_graph(["a"]), path_graph(["a"]), never_identical)

    def test_inputs_unchanged(self):
        a, b = path_graph(["a", "b"]), path_graph(["c", "d"])
        snapshot = (a.nodes, a.edges, b.nodes, b.edges)
        merge_graphs(a, b, lambda p, q: p.node_id == "b" and q.node_id == "c")
        assert snapshot == (a.nodes, a.edges, b.nodes, b.edges)
