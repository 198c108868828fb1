"""Run statistics, mesh extraction, and topology validation.

The mesh implied by a converged network is the set of 3-cliques of the
unit graph. ``manifold_check`` classifies it from edge/face incidences
and ``genus`` evaluates the Euler characteristic of a closed, connected
mesh. ``RunStats`` carries the counters and per-phase timings every
engine reports, and ``write_stats_csv`` serializes them with a fixed
column set.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from growsurf.network import Network, StateError

__all__ = [
    "PhaseTimer",
    "RunStats",
    "TriMesh",
    "CSV_COLUMNS",
    "extract_mesh",
    "manifold_check",
    "genus",
    "euler_genus",
    "quantization_error",
    "write_stats_csv",
]


@dataclass
class PhaseTimer:
    """Accumulated seconds per iteration phase."""

    sample_s: float = 0.0
    find_s: float = 0.0
    update_s: float = 0.0

    def measure(self, phase: str):
        return _PhaseContext(self, phase)


class _PhaseContext:
    def __init__(self, timer: PhaseTimer, phase: str):
        self._timer = timer
        self._attr = phase + "_s"
        getattr(timer, self._attr)  # fail early on bad phase names
        self._t0 = 0.0

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        dt = time.perf_counter() - self._t0
        setattr(self._timer, self._attr, getattr(self._timer, self._attr) + dt)
        return False


CSV_COLUMNS = [
    "variant",
    "dataset",
    "seed",
    "iterations",
    "signals",
    "discarded",
    "units",
    "connections",
    "total_s",
    "sample_s",
    "find_s",
    "update_s",
    "time_per_signal_s",
    "find_per_signal_s",
    "converged",
]


@dataclass
class RunStats:
    """Counters and timings for one reconstruction run."""

    variant: str
    dataset: str
    seed: int
    iterations: int
    signals: int
    discarded: int
    units: int
    connections: int
    total_s: float
    sample_s: float
    find_s: float
    update_s: float
    converged: bool
    checkpoints: list = field(default_factory=list, repr=False, compare=False)

    @property
    def time_per_signal_s(self) -> float:
        return self.total_s / self.signals if self.signals else 0.0

    @property
    def find_per_signal_s(self) -> float:
        return self.find_s / self.signals if self.signals else 0.0

    def csv_row(self) -> list:
        return [
            self.variant,
            self.dataset,
            self.seed,
            self.iterations,
            self.signals,
            self.discarded,
            self.units,
            self.connections,
            repr(self.total_s),
            repr(self.sample_s),
            repr(self.find_s),
            repr(self.update_s),
            repr(self.time_per_signal_s),
            repr(self.find_per_signal_s),
            str(self.converged).lower(),
        ]


def write_stats_csv(path, stats) -> None:
    """Write RunStats rows with the fixed column header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for st in stats:
            writer.writerow(st.csv_row())


@dataclass
class TriMesh:
    """Triangulation extracted from a network (or loaded from disk)."""

    vertices: np.ndarray  # (n, 3) float64
    faces: np.ndarray     # (f, 3) int64, indices into vertices
    boundary_edge_count: int = 0


def extract_mesh(net: Network) -> TriMesh:
    """All 3-cliques of the unit graph, each emitted once (a < b < c)."""
    snap = net.snapshot()
    index = {int(uid): i for i, uid in enumerate(snap.ids)}
    faces = []
    for a in net.unit_ids():
        upper = sorted(v for v in net.neighbors(a) if v > a)
        for i, b in enumerate(upper):
            b_nbrs = net.neighbors(b)
            for c in upper[i + 1 :]:
                if c in b_nbrs:
                    faces.append((index[a], index[b], index[c]))
    face_arr = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    boundary = sum(1 for n in _edge_face_counts(face_arr).values() if n == 1)
    return TriMesh(snap.positions, face_arr, boundary)


def _edge_face_counts(faces: np.ndarray) -> dict[tuple[int, int], int]:
    counts: dict[tuple[int, int], int] = {}
    for a, b, c in faces:
        a, b, c = int(a), int(b), int(c)
        for u, v in ((a, b), (a, c), (b, c)):
            key = (u, v) if u < v else (v, u)
            counts[key] = counts.get(key, 0) + 1
    return counts


def manifold_check(mesh: TriMesh) -> str:
    """Classify as "closed", "with_boundary", or "non_manifold".

    Closed: every face edge borders exactly two faces. With boundary:
    every edge borders one or two faces and the boundary edges form
    simple cycles. Anything else (including an empty triangulation) is
    non-manifold.
    """
    if len(mesh.faces) == 0:
        return "non_manifold"
    counts = _edge_face_counts(mesh.faces)
    boundary = []
    for edge, n in counts.items():
        if n > 2:
            return "non_manifold"
        if n == 1:
            boundary.append(edge)
    if not boundary:
        return "closed"
    bdeg: dict[int, int] = {}
    for u, v in boundary:
        bdeg[u] = bdeg.get(u, 0) + 1
        bdeg[v] = bdeg.get(v, 0) + 1
    if all(d == 2 for d in bdeg.values()):
        return "with_boundary"
    return "non_manifold"


def _is_connected(mesh: TriMesh) -> bool:
    n = len(mesh.vertices)
    if n == 0:
        return False
    adj: dict[int, list[int]] = {i: [] for i in range(n)}
    for edge in _edge_face_counts(mesh.faces):
        adj[edge[0]].append(edge[1])
        adj[edge[1]].append(edge[0])
    stack = [0]
    seen = {0}
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == n


def euler_genus(vertices: int, edges: int, faces: int) -> int:
    """Genus from the Euler characteristic of a closed surface."""
    chi = vertices - edges + faces
    if (2 - chi) % 2 != 0:
        raise StateError(f"odd Euler characteristic defect: chi={chi}")
    return (2 - chi) // 2


def genus(mesh: TriMesh) -> int:
    """Number of handles of a closed, connected triangulated surface."""
    cls = manifold_check(mesh)
    if cls != "closed":
        raise StateError(f"genus needs a closed manifold, got {cls}")
    if not _is_connected(mesh):
        raise StateError("genus needs a connected mesh")
    v = len(mesh.vertices)
    e = len(_edge_face_counts(mesh.faces))
    f = len(mesh.faces)
    return euler_genus(v, e, f)


def quantization_error(net: Network, probes, backend=None) -> float:
    """Mean squared distance from probe signals to their winning units."""
    from growsurf import kernels

    probes = np.ascontiguousarray(probes, dtype=np.float64).reshape(-1, 3)
    if probes.shape[0] < 1:
        raise ValueError("need at least one probe signal")
    if net.unit_count < 2:
        raise StateError("need at least 2 units")
    kb = backend if backend is not None else kernels.get_backend()
    snap = net.snapshot(copy=False)
    m = probes.shape[0]
    out_idx = np.empty((m, 2), dtype=np.int64)
    out_d2 = np.empty((m, 2), dtype=np.float64)
    kb.scan_best_two_into(snap.positions, len(snap), probes, out_idx, out_d2, len(snap))
    return float(np.mean(out_d2[:, 0]))
