"""Metric-graph data model: vertices with delta couplings, compact edges, leads.

A graph here is a finite multigraph (parallel edges and loops allowed) whose
edges carry positive lengths, plus a set of semi-infinite leads attached to
vertices (at most one per vertex for admissible graphs).  Vertices carry the
delta coupling constants a_m; kappa = diag{a_1, ..., a_N}.

The module also provides the two combinatorial operations the inverse
pipeline is built on:

* edge contraction -- glue the endpoints of a non-loop edge into one vertex,
  drop the edge, sum the two coupling constants, turn surviving parallel
  edges into loops of their original lengths;
* spanning-tree path enumeration from a root, ordered so that path edge
  counts are non-decreasing.

All types are immutable after construction; operations return new graphs.
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ContractLoopError, DisconnectedGraphError, GraphError

__all__ = [
    "Vertex",
    "Edge",
    "MetricGraph",
    "ValidationReport",
    "PathSet",
    "PathEntry",
    "validate_graph",
    "contract_edge",
    "spanning_tree_paths",
    "rational_independence_check",
    "compact_degrees",
    "graph_to_json",
    "graph_from_json",
    "graph_hash",
    "with_couplings",
]


@dataclass(frozen=True)
class Vertex:
    id: str
    coupling: complex = 0.0
    leads: int = 0

    @property
    def has_lead(self) -> bool:
        return self.leads > 0


@dataclass(frozen=True)
class Edge:
    id: str
    u: str
    v: str
    length: float

    @property
    def is_loop(self) -> bool:
        return self.u == self.v


@dataclass(frozen=True)
class MetricGraph:
    """Immutable metric graph; the single source of geometric truth.

    Vertex order is significant: it fixes the index convention of every
    matrix built from the graph (Weyl matrices, scattering matrices, ...).
    External vertices are those with a lead; P_e projects onto them.
    """

    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self):
        ids = [v.id for v in self.vertices]
        if len(set(ids)) != len(ids):
            raise GraphError("duplicate vertex ids")
        known = set(ids)
        for e in self.edges:
            if e.u not in known or e.v not in known:
                raise GraphError(f"edge {e.id!r} references unknown vertex")
        eids = [e.id for e in self.edges]
        if len(set(eids)) != len(eids):
            raise GraphError("duplicate edge ids")

    # -- index helpers ----------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def index(self, vertex_id: str) -> int:
        for i, v in enumerate(self.vertices):
            if v.id == vertex_id:
                return i
        raise GraphError(f"unknown vertex {vertex_id!r}")

    def vertex(self, vertex_id: str) -> Vertex:
        return self.vertices[self.index(vertex_id)]

    def edge(self, edge_id: str) -> Edge:
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise GraphError(f"unknown edge {edge_id!r}")

    @property
    def external_indices(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.vertices) if v.has_lead)

    @property
    def n_leads(self) -> int:
        return sum(v.leads for v in self.vertices)

    @property
    def couplings(self) -> np.ndarray:
        return np.array([complex(v.coupling) for v in self.vertices])

    @property
    def lengths(self) -> np.ndarray:
        return np.array([e.length for e in self.edges], dtype=float)

    def edge_index_arrays(self):
        """(u_idx, v_idx) int64 arrays in edge order, for kernel assembly."""
        pos = {v.id: i for i, v in enumerate(self.vertices)}
        u = np.array([pos[e.u] for e in self.edges], dtype=np.int64)
        v = np.array([pos[e.v] for e in self.edges], dtype=np.int64)
        return u, v

    @property
    def total_length(self) -> float:
        return float(sum(e.length for e in self.edges))


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_graph(g: MetricGraph) -> ValidationReport:
    """Collect all admissibility violations (empty report iff admissible)."""
    bad = []
    for e in g.edges:
        if not (np.isfinite(e.length) and e.length > 0):
            bad.append(f"edge {e.id!r}: nonpositive length {e.length!r}")
    for v in g.vertices:
        if v.leads < 0:
            bad.append(f"vertex {v.id!r}: negative lead count")
        elif v.leads > 1:
            bad.append(f"vertex {v.id!r}: multiple leads ({v.leads})")
    return ValidationReport(tuple(bad))


# ---------------------------------------------------------------------------
# degree table
# ---------------------------------------------------------------------------

def compact_degrees(g: MetricGraph) -> dict[str, int]:
    """Compact degree per vertex: non-loop endpoint count + 2 per loop.

    Loops count twice (both endpoints land on the vertex); leads do not
    count.  Sum over vertices equals 2 * number of compact edges.
    """
    deg = {v.id: 0 for v in g.vertices}
    for e in g.edges:
        if e.is_loop:
            deg[e.u] += 2
        else:
            deg[e.u] += 1
            deg[e.v] += 1
    return deg


# ---------------------------------------------------------------------------
# contraction (edge gluing)
# ---------------------------------------------------------------------------

def _fresh_merged_id(base_u: str, base_v: str, taken: set[str]) -> str:
    mid = f"({base_u}{base_v})"
    while mid in taken:
        mid += "'"
    return mid


def contract_edge(g: MetricGraph, edge_id: str) -> MetricGraph:
    """Glue the endpoints of a non-loop edge into a single vertex.

    The contracted edge is removed; the merged vertex takes the coupling
    a_V + a_W and inherits every lead of V and W; any other edge between V
    and W becomes a loop of its own length at the merged vertex.  The merged
    vertex occupies the position of the earlier of V, W in vertex order.
    """
    e0 = g.edge(edge_id)
    if e0.is_loop:
        raise ContractLoopError(f"edge {edge_id!r} is a loop")
    iu, iv = g.index(e0.u), g.index(e0.v)
    vu, vv = g.vertices[iu], g.vertices[iv]
    taken = {v.id for v in g.vertices} - {vu.id, vv.id}
    merged = Vertex(
        id=_fresh_merged_id(vu.id, vv.id, taken),
        coupling=complex(vu.coupling) + complex(vv.coupling),
        leads=vu.leads + vv.leads,
    )
    keep_pos = min(iu, iv)
    new_vertices = []
    for i, v in enumerate(g.vertices):
        if i == keep_pos:
            new_vertices.append(merged)
        elif i in (iu, iv):
            continue
        else:
            new_vertices.append(v)

    remap = {vu.id: merged.id, vv.id: merged.id}
    new_edges = []
    for e in g.edges:
        if e.id == edge_id:
            continue
        new_edges.append(
            Edge(e.id, remap.get(e.u, e.u), remap.get(e.v, e.v), e.length)
        )
    return MetricGraph(tuple(new_vertices), tuple(new_edges))


def with_couplings(g: MetricGraph, couplings) -> MetricGraph:
    """Copy of g with the coupling vector replaced (vertex order)."""
    a = np.asarray(couplings)
    if a.shape != (g.n_vertices,):
        raise GraphError(
            f"coupling vector has shape {a.shape}, expected ({g.n_vertices},)"
        )
    vs = tuple(
        Vertex(v.id, complex(a[i]), v.leads) for i, v in enumerate(g.vertices)
    )
    return MetricGraph(vs, g.edges)


# ---------------------------------------------------------------------------
# spanning-tree paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PathEntry:
    vertex: str
    edges: tuple[str, ...]
    lengths: tuple[float, ...]

    @property
    def n_vertices(self) -> int:
        # N^(m): vertices on the path, root included
        return len(self.edges) + 1


@dataclass(frozen=True)
class PathSet:
    root: str
    entries: tuple[PathEntry, ...] = field(default_factory=tuple)

    def entry(self, vertex_id: str) -> PathEntry:
        for p in self.entries:
            if p.vertex == vertex_id:
                return p
        raise GraphError(f"no path entry for vertex {vertex_id!r}")


def spanning_tree_paths(g: MetricGraph, root: str) -> PathSet:
    """Breadth-first spanning tree of the compact part, paths from the root.

    Entries are ordered by non-decreasing path edge count (BFS discovery
    order), root first.  Raises DisconnectedGraphError when some vertex is
    not reachable through compact edges.
    """
    g.index(root)
    adj: dict[str, list[tuple[str, Edge]]] = {v.id: [] for v in g.vertices}
    for e in g.edges:
        if e.is_loop:
            continue  # loops never enter a spanning tree
        adj[e.u].append((e.v, e))
        adj[e.v].append((e.u, e))

    parent_edge: dict[str, Edge | None] = {root: None}
    parent: dict[str, str] = {}
    order = [root]
    queue = deque([root])
    while queue:
        cur = queue.popleft()
        for nxt, e in adj[cur]:
            if nxt in parent_edge:
                continue
            parent_edge[nxt] = e
            parent[nxt] = cur
            order.append(nxt)
            queue.append(nxt)

    missing = [v.id for v in g.vertices if v.id not in parent_edge]
    if missing:
        raise DisconnectedGraphError(
            f"compact part disconnected; unreachable from {root!r}: {missing}"
        )

    entries = []
    for vid in order:
        chain: list[Edge] = []
        cur = vid
        while cur != root:
            chain.append(parent_edge[cur])  # type: ignore[arg-type]
            cur = parent[cur]
        chain.reverse()
        entries.append(
            PathEntry(
                vertex=vid,
                edges=tuple(e.id for e in chain),
                lengths=tuple(e.length for e in chain),
            )
        )
    return PathSet(root=root, entries=tuple(entries))


# ---------------------------------------------------------------------------
# rational (in)dependence advisory
# ---------------------------------------------------------------------------

def rational_independence_check(g: MetricGraph, qmax: int = 1000, tol: float = 1e-9):
    """Flag compact-length pairs whose ratio is near p/q with q <= qmax.

    Advisory only: exact rational independence is undecidable on floats.
    A pair is flagged when the best rational approximation of the length
    ratio with denominator at most qmax lies within tol of the ratio.

    Returns a list of dicts with the offending edge ids, the ratio and the
    approximating fraction.
    """
    if qmax < 2:
        raise ValueError("qmax must be >= 2")
    flagged = []
    edges = g.edges
    for i in range(len(edges)):
        for j in range(i + 1, len(edges)):
            ratio = edges[i].length / edges[j].length
            frac = Fraction(ratio).limit_denominator(qmax)
            err = abs(ratio - float(frac))
            if err < tol:
                flagged.append(
                    {
                        "edges": (edges[i].id, edges[j].id),
                        "ratio": ratio,
                        "approximation": f"{frac.numerator}/{frac.denominator}",
                        "error": err,
                    }
                )
    return flagged


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def graph_to_json(g: MetricGraph) -> dict:
    return {
        "vertices": [
            {
                "id": v.id,
                "coupling": [float(np.real(v.coupling)), float(np.imag(v.coupling))],
                "lead": bool(v.leads) if v.leads <= 1 else int(v.leads),
            }
            for v in g.vertices
        ],
        "edges": [
            {"id": e.id, "u": e.u, "v": e.v, "length": float(e.length)}
            for e in g.edges
        ],
    }


def graph_from_json(obj: dict) -> MetricGraph:
    """Parse the graph JSON schema; tolerant about coupling being a scalar."""
    try:
        vertices = []
        for rec in obj["vertices"]:
            c = rec.get("coupling", 0.0)
            if isinstance(c, (list, tuple)):
                coupling = complex(float(c[0]), float(c[1]))
            else:
                coupling = complex(float(c), 0.0)
            lead = rec.get("lead", False)
            leads = int(lead) if not isinstance(lead, bool) else (1 if lead else 0)
            vertices.append(Vertex(str(rec["id"]), coupling, leads))
        edges = [
            Edge(str(r["id"]), str(r["u"]), str(r["v"]), float(r["length"]))
            for r in obj.get("edges", [])
        ]
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise GraphError(f"malformed graph JSON: {exc}") from exc
    return MetricGraph(tuple(vertices), tuple(edges))


def graph_hash(g: MetricGraph) -> str:
    """Canonical content hash (id order preserved; whitespace-free JSON)."""
    payload = json.dumps(graph_to_json(g), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()
