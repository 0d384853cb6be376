"""Shared test utilities: fixture paths, random PCF generators and brute-force oracles.

The oracles deliberately avoid plantgraph internals (they work on raw text
or plain coordinate lists, or go through networkx) so they check the
implementation rather than restate it.
"""

import random
import re
from pathlib import Path

import networkx as nx

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS = FIXTURES / "corpus"

AXIS_STEPS = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]


def read(path):
    return Path(path).read_bytes()


# ---------------------------------------------------------------------------
# PCF text generation
# ---------------------------------------------------------------------------


def pcf_text(name, components, end_connections=(), start=None, units="MM"):
    """components: [(keyword, p, q)], end_connections: [("EQ"|"REF", p, tag_or_ref)]."""
    lines = [f"UNITS-BORE {units}", f"UNITS-CO-ORDS {units}", f"PIPELINE-REFERENCE {name}"]
    if start is not None:
        lines.append("    START-CO-ORDS " + " ".join(f"{c:.1f}" for c in start))
    for kw, p, q in components:
        lines.append(kw)
        for pt in (p, q):
            lines.append("    END-POINT " + " ".join(f"{c:.1f}" for c in pt) + " 50.0")
    for kind, p, tag in end_connections:
        if kind == "EQ":
            lines += ["END-CONNECTION-EQUIPMENT", "    END-POINT " + " ".join(f"{c:.1f}" for c in p), f"    NAME {tag}"]
        else:
            lines += ["END-CONNECTION-PIPELINE", "    END-POINT " + " ".join(f"{c:.1f}" for c in p),
                      f"    PIPELINE-REFERENCE {tag}"]
    return "\n".join(lines) + "\n"


def random_tree_pipeline(rng, n_components, step=100.0, branch_p=0.3, kinds=("PIPE", "WELD", "VALVE")):
    """Random acyclic pipeline on an axis grid.

    Grows from the origin, every component starting at an existing point and
    ending at a fresh grid point, so the undirected graph is a tree. Endpoint
    order is randomised so edge directions carry no meaning. Returns
    (components, end_connections, points).
    """
    points = [(0.0, 0.0, 0.0)]
    used = {points[0]}
    frontier = [points[0]]
    comps = []
    for _ in range(n_components):
        base = rng.choice(points) if rng.random() < branch_p else frontier[-1]
        for _attempt in range(30):
            d = rng.choice(AXIS_STEPS)
            length = step * rng.randint(1, 4)
            new = tuple(b + length * s for b, s in zip(base, d))
            if new not in used:
                break
        else:
            continue
        used.add(new)
        points.append(new)
        frontier.append(new)
        p, q = (base, new) if rng.random() < 0.5 else (new, base)
        comps.append((rng.choice(kinds), p, q))
    degree = {}
    for _, p, q in comps:
        degree[p] = degree.get(p, 0) + 1
        degree[q] = degree.get(q, 0) + 1
    leaves = sorted(pt for pt, d in degree.items() if d == 1)
    ends = [("EQ", pt, f"EQ-{i}") for i, pt in enumerate(leaves)]
    return comps, ends, points


def random_loose_pipeline(rng, n_components, grid=4, step=100.0):
    """Components with endpoints on a tiny grid: coincidences, branches and loops all occur."""
    comps = []
    while len(comps) < n_components:
        p = tuple(step * rng.randrange(grid) for _ in range(3))
        q = tuple(step * rng.randrange(grid) for _ in range(3))
        if p != q:
            comps.append((rng.choice(("PIPE", "WELD", "VALVE")), p, q))
    return comps


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------


def brute_force_coincidence_components(comps, eps=1.0):
    """O(n^2) pairwise endpoint comparison; returns a partition of component indices.

    Two components touch when any endpoint of one lies within the same
    eps-rounded cell as an endpoint of the other.
    """
    n = len(comps)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    def cell(pt):
        return tuple(round(c / eps) for c in pt)

    for i in range(n):
        for j in range(i + 1, n):
            if any(cell(a) == cell(b) for a in comps[i][1:] for b in comps[j][1:]):
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), set()).add(i)
    return sorted(sorted(g) for g in groups.values())


def nx_graph(graph, directed=None):
    directed = graph.directed if directed is None else directed
    g = nx.MultiDiGraph() if directed else nx.MultiGraph()
    for n in graph.nodes:
        g.add_node(n.node_id)
    for e in graph.edges:
        g.add_edge(e.source, e.target, cls=e.edge_class)
    return g


def nx_components(graph):
    return sorted(sorted(c) for c in nx.connected_components(nx.Graph(nx_graph(graph, directed=False))))


def pairwise_reachability(graph, nodes):
    """Set of unordered node pairs (from ``nodes``) joined by an undirected path."""
    g = nx.Graph(nx_graph(graph, directed=False))
    out = set()
    for comp in nx.connected_components(g):
        members = sorted(comp & set(nodes))
        for i, a in enumerate(members):
            for b in members[i + 1:]:
                out.add((a, b))
    return out


_RECORD = re.compile(r"^(\S+)(?:\s+(.*))?$")


def scan_pcf_declarations(text):
    """Independent line scan of a PCF file: name, keyword counts, equipment tags, references."""
    name, counts, tags, refs = None, {}, [], []
    current = None
    for line in text.splitlines():
        if not line.strip():
            continue
        if not line[0].isspace():
            kw, rest = _RECORD.match(line).groups()
            counts[kw] = counts.get(kw, 0) + 1
            current = kw
            if kw == "PIPELINE-REFERENCE":
                name = rest.strip()
        else:
            parts = line.split(None, 1)
            if current == "END-CONNECTION-EQUIPMENT" and parts[0] == "NAME":
                tags.append(parts[1].strip())
            if current == "END-CONNECTION-PIPELINE" and parts[0] == "PIPELINE-REFERENCE":
                refs.append(parts[1].strip())
    return {"name": name, "counts": counts, "tags": tags, "refs": refs}


def declared_reference_groups(texts):
    """Union-find over pipelines: shared equipment tags or mutual pipeline references."""
    decls = [scan_pcf_declarations(t) for t in texts]
    names = [d["name"] for d in decls]
    parent = {n: n for n in names}

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    by_name = {d["name"]: d for d in decls}
    for a in decls:
        for ref in a["refs"]:
            b = by_name.get(ref)
            if b is not None and a["name"] in b["refs"]:
                parent[find(a["name"])] = find(ref)
        for b in decls:
            if a is not b and set(a["tags"]) & set(b["tags"]):
                parent[find(a["name"])] = find(b["name"])
    groups = {}
    for n in names:
        groups.setdefault(find(n), set()).add(n)
    return sorted(sorted(g) for g in groups.values())


def count_xml_elements(text, local_name):
    """Count opening tags by local name with a regex, bypassing any XML parser."""
    return len(re.findall(rf"<(?:\w+:)?{local_name}[\s/>]", text))


def make_rng(seed):
    return random.Random(seed)
