"""Scattering dataset container and JSON / CSV serialization.

Dataset JSON schema:

    {"graph": <graph object or hash string>,
     "samples": [{"z": [re, im], "sigma": [[[re, im], ...], ...]}, ...]}

plus optional metadata keys ("geometry_hash", "seed", "noise_level").
Complex matrices serialize as row-major nested [re, im] pairs.  CSV export
is for plotting: one row per sample, first column s (= Re z, restricted to
real grids), then row-major re/im entry pairs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import GraphError
from .graph import (
    MetricGraph,
    graph_from_json,
    graph_to_json,
    with_couplings,
)

__all__ = [
    "ScatteringDataset",
    "cmat_to_json",
    "cmat_from_json",
    "geometry_hash",
    "dataset_to_json",
    "dataset_from_json",
    "dataset_to_csv",
]


def cmat_to_json(m: np.ndarray):
    return [[[float(x.real), float(x.imag)] for x in row] for row in np.asarray(m, dtype=complex)]


def cmat_from_json(rows) -> np.ndarray:
    return np.array([[complex(p[0], p[1]) for p in row] for row in rows], dtype=complex)


def geometry_hash(g: MetricGraph) -> str:
    """Hash of the graph with couplings zeroed: identifies the geometry only.

    A dataset generated from the true couplings must still match the
    geometry file handed to the inverse solver, whose couplings are unknown
    (or stale); the coupling values therefore stay out of the hash.
    """
    stripped = with_couplings(g, np.zeros(g.n_vertices))
    payload = json.dumps(graph_to_json(stripped), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


@dataclass(frozen=True)
class ScatteringDataset:
    """(z, Sigma_e(z)) samples tied to the generating graph."""

    graph: MetricGraph | str  # full graph, or its geometry hash
    samples: tuple[tuple[complex, np.ndarray], ...] = field(default_factory=tuple)
    seed: int | None = None
    noise_level: float = 0.0

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    def geometry_hash(self) -> str:
        if isinstance(self.graph, str):
            return self.graph
        return geometry_hash(self.graph)


def dataset_to_json(ds: ScatteringDataset) -> dict:
    obj = {
        "graph": ds.graph if isinstance(ds.graph, str) else graph_to_json(ds.graph),
        "geometry_hash": ds.geometry_hash(),
        "samples": [
            {"z": [float(np.real(z)), float(np.imag(z))], "sigma": cmat_to_json(m)}
            for z, m in ds.samples
        ],
    }
    if ds.seed is not None:
        obj["seed"] = int(ds.seed)
    if ds.noise_level:
        obj["noise_level"] = float(ds.noise_level)
    return obj


def dataset_from_json(obj: dict) -> ScatteringDataset:
    graph = obj["graph"]
    if not isinstance(graph, str):
        graph = graph_from_json(graph)
    samples = tuple(
        (complex(rec["z"][0], rec["z"][1]), cmat_from_json(rec["sigma"]))
        for rec in obj.get("samples", [])
    )
    return ScatteringDataset(
        graph=graph,
        samples=samples,
        seed=obj.get("seed"),
        noise_level=float(obj.get("noise_level", 0.0)),
    )


def dataset_to_csv(ds: ScatteringDataset) -> str:
    """CSV text: header s,re_i_j,im_i_j...; requires real spectral grid."""
    if not ds.samples:
        return "s\n"
    n = ds.samples[0][1].shape[0]
    header = ["s"]
    for i in range(n):
        for j in range(n):
            header += [f"re_{i}_{j}", f"im_{i}_{j}"]
    lines = [",".join(header)]
    for z, m in ds.samples:
        if abs(np.imag(z)) != 0.0:
            raise GraphError("CSV export requires a real spectral grid")
        row = ["%.17g" % np.real(z)]
        for i in range(n):
            for j in range(n):
                row += ["%.17g" % m[i, j].real, "%.17g" % m[i, j].imag]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
