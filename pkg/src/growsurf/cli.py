"""Command-line front end.

Subcommands: ``reconstruct`` (one run, writes mesh + stats), ``benchmark``
(inputs x variants x seeds matrix, aggregated CSV), ``validate`` (mesh
topology report), ``sample`` (materialize a point cloud), and
``kernel-bench`` (compiled vs NumPy scan comparison).

Exit codes: 0 success/converged, 1 usage or I/O errors, 2 signal-cap hit
without convergence, 3 strict validation failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from growsurf import kernels
from growsurf.engine import EngineParams, run
from growsurf.metrics import (
    TriMesh,
    extract_mesh,
    genus,
    manifold_check,
    write_stats_csv,
    _edge_face_counts,
)
from growsurf.multi import run_multi, sequential_executor
from growsurf.parallel import ExecConfig, parallel_executor, timed_find
from growsurf.sampling import (
    CloudSource,
    MeshSource,
    SphereSource,
    TorusSource,
    load_off,
    load_xyz,
    save_off,
    save_xyz,
)

VARIANTS = ("single", "indexed", "multi", "multi-parallel")


def parse_input(spec: str):
    """Build a signal source from ``sphere:R``, ``torus:R,r``, or a file path."""
    if spec.startswith("sphere:"):
        try:
            radius = float(spec.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad sphere spec {spec!r}, expected sphere:RADIUS") from None
        src = SphereSource(radius)
    elif spec.startswith("torus:"):
        body = spec.split(":", 1)[1]
        parts = body.split(",")
        if len(parts) != 2:
            raise ValueError(f"bad torus spec {spec!r}, expected torus:MAJOR,MINOR")
        try:
            major, minor = float(parts[0]), float(parts[1])
        except ValueError:
            raise ValueError(f"bad torus spec {spec!r}") from None
        src = TorusSource(major, minor)
    elif spec.endswith(".off"):
        src = MeshSource(load_off(spec), label=spec)
    elif spec.endswith(".xyz"):
        src = CloudSource(load_xyz(spec), label=spec)
    else:
        raise ValueError(
            f"unrecognized input {spec!r}: use sphere:R, torus:R,r, *.off, or *.xyz"
        )
    src.label = spec
    return src


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps-b", type=float, default=0.1, help="winner learning rate")
    p.add_argument("--eps-n", type=float, default=0.01, help="neighbor learning rate")
    p.add_argument("--theta0", default="0.2", help="insertion threshold (benchmark: one value or one per input)")
    p.add_argument("--max-age", type=int, default=200, help="edge age limit")
    p.add_argument("--tau-b", type=float, default=0.05, help="winner habituation decay")
    p.add_argument("--tau-n", type=float, default=0.005, help="neighbor habituation decay")
    p.add_argument("--h-t", type=float, default=0.3, help="trained-habituation threshold")
    p.add_argument("--rho", type=float, default=0.8, help="threshold shrink factor")
    p.add_argument("--ring-patience", type=int, default=500, help="inconsistent wins before shrink")
    p.add_argument("--max-signals", type=int, default=5_000_000, help="signal cap per run")
    p.add_argument("--allow-boundary", action="store_true", help="accept half-disk rings")
    p.add_argument("--cap", type=int, default=8192, help="batch size cap")
    p.add_argument("--workers", type=int, default=0, help="parallel lanes (0: all hardware threads)")
    p.add_argument("--tile", type=int, default=1024, help="snapshot tile length")
    p.add_argument("--cube", type=float, default=None, help="hash grid cell edge (default: theta0)")


def _params_from_args(args, theta0: float) -> EngineParams:
    return EngineParams(
        eps_b=args.eps_b,
        eps_n=args.eps_n,
        theta0=theta0,
        max_age=args.max_age,
        tau_b=args.tau_b,
        tau_n=args.tau_n,
        h_t=args.h_t,
        rho=args.rho,
        ring_patience=args.ring_patience,
        max_signals=args.max_signals,
        allow_boundary=args.allow_boundary,
        batch_cap=args.cap,
        cube=args.cube,
    )


def _run_variant(variant: str, source, params: EngineParams, seed: int, args):
    if variant == "single":
        return run(source, params, seed, dataset=source.label)
    if variant == "indexed":
        return run(source, params, seed, use_grid=True, dataset=source.label)
    if variant == "multi":
        return run_multi(source, params, seed, sequential_executor(), dataset=source.label)
    if variant == "multi-parallel":
        cfg = ExecConfig(workers=args.workers, tile=args.tile)
        return run_multi(
            source, params, seed, parallel_executor(cfg),
            variant="multi-parallel", dataset=source.label,
        )
    raise ValueError(f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}")


def cmd_reconstruct(args) -> int:
    try:
        source = parse_input(args.input)
        theta0 = float(args.theta0)
        params = _params_from_args(args, theta0)
        if args.variant not in VARIANTS:
            raise ValueError(f"unknown variant {args.variant!r}; choose from {', '.join(VARIANTS)}")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    net, stats = _run_variant(args.variant, source, params, args.seed, args)
    mesh = extract_mesh(net)
    cls = manifold_check(mesh)
    if cls == "non_manifold":
        print("warning: extracted mesh is non-manifold", file=sys.stderr)
    try:
        if args.out_mesh:
            save_off(args.out_mesh, mesh)
        if args.out_stats:
            write_stats_csv(args.out_stats, [stats])
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    g = genus(mesh) if cls == "closed" else None
    print(
        f"{args.variant}: units={stats.units} connections={stats.connections} "
        f"signals={stats.signals} discarded={stats.discarded} "
        f"time={stats.total_s:.3f}s manifold={cls}"
        + (f" genus={g}" if g is not None else "")
        + ("" if stats.converged else " NOT CONVERGED")
    )
    return 0 if stats.converged else 2


def cmd_benchmark(args) -> int:
    try:
        inputs = [s for s in args.inputs.split(",") if s]
        variants = [v for v in args.variants.split(",") if v]
        seeds = [int(s) for s in args.seeds.split(",") if s]
        if not inputs or not variants or not seeds:
            raise ValueError("need at least one input, variant, and seed")
        for v in variants:
            if v not in VARIANTS:
                raise ValueError(f"unknown variant {v!r}; choose from {', '.join(VARIANTS)}")
        thetas = [float(t) for t in str(args.theta0).split(",")]
        if len(thetas) == 1:
            thetas = thetas * len(inputs)
        if len(thetas) != len(inputs):
            raise ValueError("--theta0 must give one value, or one per input")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    all_stats = []
    for spec, theta0 in zip(inputs, thetas):
        for variant in variants:
            for seed in seeds:
                try:
                    source = parse_input(spec)
                    params = _params_from_args(args, theta0)
                    net, stats = _run_variant(variant, source, params, seed, args)
                except Exception as exc:  # keep the matrix going
                    print(f"error: {spec}/{variant}/seed={seed}: {exc}", file=sys.stderr)
                    from growsurf.metrics import RunStats

                    stats = RunStats(
                        variant=variant, dataset=spec, seed=seed,
                        iterations=0, signals=0, discarded=0, units=0,
                        connections=0, total_s=0.0, sample_s=0.0,
                        find_s=0.0, update_s=0.0, converged=False,
                    )
                all_stats.append(stats)
                print(
                    f"{spec} {variant} seed={seed}: units={stats.units} "
                    f"signals={stats.signals} discarded={stats.discarded} "
                    f"time={stats.total_s:.3f}s converged={stats.converged}"
                )
    try:
        write_stats_csv(args.out_csv, all_stats)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_validate(args) -> int:
    try:
        loaded = load_off(args.mesh)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    mesh = TriMesh(loaded.vertices, loaded.faces, 0)
    edges = len(_edge_face_counts(mesh.faces))
    cls = manifold_check(mesh)
    line = f"vertices={len(mesh.vertices)} edges={edges} faces={len(mesh.faces)} manifold={cls}"
    if cls == "closed":
        line += f" genus={genus(mesh)}"
    print(line)
    if args.strict and cls != "closed":
        return 3
    return 0


def cmd_sample(args) -> int:
    try:
        source = parse_input(args.spec)
        if args.count < 1:
            raise ValueError("count must be >= 1")
        rng = np.random.Generator(np.random.Philox(args.seed))
        points = source.sample(rng, args.count)
        save_xyz(args.out_xyz, points)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.count} points to {args.out_xyz}")
    return 0


def cmd_kernel_bench(args) -> int:
    """Compare the scan backends on synthetic snapshots."""
    from growsurf.network import Snapshot

    sizes = [int(s) for s in args.units.split(",")]
    m = args.batch
    rng = np.random.Generator(np.random.Philox(7))
    rows = []
    print(f"backends: {', '.join(kernels.available_backends())} "
          f"(default {kernels.DEFAULT_BACKEND_NAME}); hardware threads: {os.cpu_count()}")
    header = f"{'backend':>9} {'units':>7} {'batch':>6} {'workers':>7} {'us/signal':>10} {'signals/s':>12}"
    print(header)
    for n in sizes:
        pos = np.ascontiguousarray(rng.random((n, 3)))
        snap = Snapshot(np.arange(n, dtype=np.int64), pos)
        batch = rng.random((m, 3))
        for name in kernels.available_backends():
            backend = kernels.get_backend(name)
            for workers in (1, os.cpu_count() or 1):
                cfg = ExecConfig(workers=workers, tile=args.tile)
                best = min(
                    timed_find(snap, batch, cfg, backend=backend)[1]
                    for _ in range(args.repeats)
                )
                per_signal = best / m
                rows.append((name, n, m, workers, per_signal))
                print(
                    f"{name:>9} {n:>7} {m:>6} {workers:>7} "
                    f"{per_signal * 1e6:>10.3f} {1.0 / per_signal:>12.0f}"
                )
    if args.out_csv:
        import csv

        with open(args.out_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["backend", "units", "batch", "workers", "seconds_per_signal"])
            for row in rows:
                writer.writerow([*row[:4], repr(row[4])])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="growsurf",
        description="Surface reconstruction from point clouds with growing self-organizing networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reconstruct", help="run one reconstruction")
    p.add_argument("--input", required=True, help="sphere:R, torus:R,r, *.off, or *.xyz")
    p.add_argument("--variant", default="multi", help=f"one of {', '.join(VARIANTS)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-mesh", default=None, help="write the extracted mesh (OFF)")
    p.add_argument("--out-stats", default=None, help="write the run stats (CSV)")
    _add_param_flags(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("benchmark", help="run an inputs x variants x seeds matrix")
    p.add_argument("--inputs", required=True, help="comma-separated input specs")
    p.add_argument("--variants", default=",".join(VARIANTS))
    p.add_argument("--seeds", default="0")
    p.add_argument("--out-csv", required=True)
    _add_param_flags(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("validate", help="check mesh topology")
    p.add_argument("mesh", help="OFF file")
    p.add_argument("--strict", action="store_true", help="exit 3 unless closed manifold")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sample", help="materialize a point cloud")
    p.add_argument("spec", help="sphere:R, torus:R,r, *.off, or *.xyz")
    p.add_argument("count", type=int)
    p.add_argument("out_xyz")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("kernel-bench", help="compare scan backends")
    p.add_argument("--units", default="256,1024,4096,16384")
    p.add_argument("--batch", type=int, default=4096)
    p.add_argument("--tile", type=int, default=1024)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--out-csv", default=None)
    p.set_defaults(func=cmd_kernel_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors
        return 1 if exc.code not in (0, None) else 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
