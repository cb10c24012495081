"""Command-line front end.

Commands
--------
forward    graph + spectral grid -> scattering dataset (JSON + CSV)
oracle     same, but samples come from the plane-wave solver
invert     dataset + geometry -> recovery report (JSON)
contract   graph + edge id -> contracted graph (JSON)
verify     run the invariant suites on a seeded random fleet
roundtrip  forward + invert in one step, reporting max coupling error

Exit codes: 0 ok, 1 validation/input error, 2 spectral singularity,
3 non-convergence, 4 verification failure.

Grid syntax: START:STOP:COUNT, optionally prefixed with "log:".  --grid
places points on the real energy axis (s > 0); --tau-grid places them at
z = -tau**2, which the inverse pipeline needs for its asymptotic stage.
Both may be given; 0 is never emitted.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .dataset import (
    ScatteringDataset,
    dataset_from_json,
    dataset_to_csv,
    dataset_to_json,
    geometry_hash,
)
from .errors import (
    GraphError,
    InsufficientDataError,
    SingularSystemError,
    SpectralSingularityError,
    ZeroEnergyError,
)
from .graph import graph_from_json, graph_to_json, contract_edge, validate_graph
from .inverse import RecoveryOptions, recover_couplings
from .oracle import planewave_scattering, synth_dataset
from .verify import dataset_unitarity, run_all_suites

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SINGULAR = 2
EXIT_NONCONVERGENCE = 3
EXIT_VERIFY = 4


def _parse_grid(spec: str) -> list[float]:
    log = False
    body = spec
    if spec.startswith("log:"):
        log = True
        body = spec[4:]
    parts = body.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid spec {spec!r} is not START:STOP:COUNT")
    start, stop = float(parts[0]), float(parts[1])
    count = int(parts[2])
    if count < 1:
        raise ValueError("grid count must be >= 1")
    if log:
        if start <= 0 or stop <= 0:
            raise ValueError("log grid requires positive endpoints")
        pts = np.geomspace(start, stop, count)
    else:
        pts = np.linspace(start, stop, count)
    pts = [float(p) for p in pts if p != 0.0]
    if not pts:
        raise ValueError("grid contains no usable points (0 is excluded)")
    return pts


def _load_graph(path: str):
    with open(path) as fh:
        g = graph_from_json(json.load(fh))
    report = validate_graph(g)
    if not report.ok:
        raise GraphError("; ".join(report.violations))
    return g


def _grid_z(args) -> list[complex]:
    zs: list[complex] = []
    if args.grid:
        zs += [complex(s) for s in _parse_grid(args.grid)]
    if args.tau_grid:
        zs += [complex(-t * t) for t in _parse_grid(args.tau_grid)]
    if not zs:
        raise ValueError("no spectral grid given (use --grid and/or --tau-grid)")
    return zs


def _write_json(path: str, obj) -> None:
    Path(path).write_text(
        json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )


def _emit_dataset(ds: ScatteringDataset, out: str) -> None:
    _write_json(out, dataset_to_json(ds))
    real_only = all(np.imag(z) == 0 for z, _ in ds.samples)
    if real_only:
        Path(out).with_suffix(".csv").write_text(dataset_to_csv(ds), encoding="utf-8")


def cmd_forward(args) -> int:
    g = _load_graph(args.graph)
    zs = _grid_z(args)
    try:
        ds = synth_dataset(g, None, zs, noise_level=args.noise, seed=args.seed)
    except (SpectralSingularityError, ZeroEnergyError) as exc:
        print(f"spectral singularity: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    _emit_dataset(ds, args.out)
    print(f"wrote {ds.n_samples} samples to {args.out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    g = _load_graph(args.graph)
    zs = _grid_z(args)
    samples = []
    for z in zs:
        if np.imag(z) != 0 or np.real(z) <= 0:
            print(f"oracle requires a real positive grid; got z = {z}", file=sys.stderr)
            return EXIT_INPUT
        try:
            samples.append((z, planewave_scattering(g, None, float(np.real(z)))))
        except SingularSystemError as exc:
            print(f"spectral singularity: {exc}", file=sys.stderr)
            return EXIT_SINGULAR
    ds = ScatteringDataset(graph=g, samples=tuple(samples), seed=args.seed)
    _emit_dataset(ds, args.out)
    print(f"wrote {ds.n_samples} oracle samples to {args.out}")
    return EXIT_OK


def cmd_invert(args) -> int:
    g = _load_graph(args.graph)
    with open(args.data) as fh:
        ds = dataset_from_json(json.load(fh))
    if ds.geometry_hash() != geometry_hash(g):
        print("dataset geometry hash does not match --graph", file=sys.stderr)
        return EXIT_INPUT
    opts = RecoveryOptions()
    if args.tol_residual is not None:
        opts.ftol = args.tol_residual
    try:
        report = recover_couplings(ds, g, opts)
    except InsufficientDataError as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _write_json(args.out, report.to_json())
    print(f"recovered couplings: {np.round(report.couplings, 10).tolist()}")
    print(f"residual {report.residual_norm:.3e}; report at {args.out}")
    return EXIT_OK if report.converged else EXIT_NONCONVERGENCE


def cmd_contract(args) -> int:
    g = _load_graph(args.graph)
    try:
        gc = contract_edge(g, args.edge)
    except GraphError as exc:
        print(f"contract: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _write_json(args.out, graph_to_json(gc))
    print(f"wrote contracted graph to {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_all_suites(args.seed)
    if args.data:
        with open(args.data) as fh:
            results.append(dataset_unitarity(dataset_from_json(json.load(fh))))
    payload = [
        {
            "suite": r.name,
            "passed": bool(r.passed),
            "max_error": float(r.max_error),
            "tolerance": float(r.tolerance),
            "detail": r.detail,
        }
        for r in results
    ]
    for r in results:
        print(r.line())
    if args.out:
        _write_json(args.out, payload)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def cmd_roundtrip(args) -> int:
    g = _load_graph(args.graph)
    zs = _grid_z(args)
    try:
        ds = synth_dataset(g, None, zs, noise_level=args.noise, seed=args.seed)
    except (SpectralSingularityError, ZeroEnergyError) as exc:
        print(f"spectral singularity: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    try:
        report = recover_couplings(ds, g)
    except InsufficientDataError as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_INPUT
    true = np.real(g.couplings)
    err = float(np.max(np.abs(report.couplings - true)))
    print(f"max coupling error: {err:.3e}; residual {report.residual_norm:.3e}")
    if args.out:
        _write_json(args.out, report.to_json())
    return EXIT_OK if report.converged else EXIT_NONCONVERGENCE


def _add_common(p, graph=True, grid=False, out_required=True):
    if graph:
        p.add_argument("--graph", required=True, help="metric graph JSON file")
    if grid:
        p.add_argument("--grid", help="real-axis grid START:STOP:COUNT (or log:...)")
        p.add_argument("--tau-grid", dest="tau_grid",
                       help="tau grid START:STOP:COUNT; samples at z = -tau^2")
        p.add_argument("--noise", type=float, default=0.0,
                       help="relative complex Gaussian noise level")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=out_required, help="output path")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qgscatter",
        description="Forward/inverse scattering on metric graphs with delta couplings",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forward", help="generate a scattering dataset")
    _add_common(p, grid=True)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("oracle", help="generate a dataset from the plane-wave solver")
    _add_common(p, grid=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("invert", help="recover coupling constants from a dataset")
    _add_common(p)
    p.add_argument("--data", required=True, help="dataset JSON file")
    p.add_argument("--tol-residual", dest="tol_residual", type=float, default=None)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("contract", help="contract one edge of a graph")
    _add_common(p)
    p.add_argument("--edge", required=True, help="edge id to contract")
    p.set_defaults(func=cmd_contract)

    p = sub.add_parser("verify", help="run invariant suites on a random fleet")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--data", help="optional dataset to unitarity-check")
    p.add_argument("--out", help="optional JSON report path")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("roundtrip", help="forward then invert, report the error")
    _add_common(p, grid=True, out_required=False)
    p.set_defaults(func=cmd_roundtrip)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GraphError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
