"""Signal sources and mesh/point-cloud file I/O.

Sources draw i.i.d. points from a target surface or cloud through a
caller-owned ``numpy.random.Generator``. Runs use the counter-based
Philox bit generator, so a seed pins the full signal sequence across
platforms and processes. File formats are ASCII OFF (triangles only) and
XYZ (one point per line, ``#`` comments).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ParseError",
    "TriMeshInput",
    "SphereSource",
    "TorusSource",
    "MeshSource",
    "CloudSource",
    "sphere_source",
    "torus_source",
    "mesh_source",
    "load_off",
    "load_xyz",
    "save_off",
    "save_xyz",
]


class ParseError(ValueError):
    """Malformed input file; carries the 1-based line number."""

    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


@dataclass
class TriMeshInput:
    """Loaded triangle mesh: degenerate (zero-area) faces already dropped."""

    vertices: np.ndarray  # (n, 3) float64
    faces: np.ndarray     # (f, 3) int64


class SphereSource:
    """Uniform sampler on a sphere surface (normalized Gaussian triples)."""

    def __init__(self, radius: float, center=(0.0, 0.0, 0.0)):
        if not (radius > 0.0 and math.isfinite(radius)):
            raise ValueError(f"radius must be positive and finite, got {radius}")
        self.radius = float(radius)
        self.center = np.asarray(center, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(self.center)):
            raise ValueError("center must be finite")
        self.label = f"sphere:{radius:g}"

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        g = rng.standard_normal((n, 3))
        norms = np.sqrt(np.sum(g * g, axis=1))
        while np.any(norms == 0.0):  # probability ~0, kept for strictness
            bad = norms == 0.0
            g[bad] = rng.standard_normal((int(np.sum(bad)), 3))
            norms = np.sqrt(np.sum(g * g, axis=1))
        return self.center + self.radius * (g / norms[:, None])

    def bounds(self):
        r = self.radius
        return self.center - r, self.center + r


class TorusSource:
    """Area-uniform sampler on a torus (rejection-corrected poloidal angle)."""

    def __init__(self, major: float, minor: float):
        if not (major > minor > 0.0 and math.isfinite(major)):
            raise ValueError(f"need major > minor > 0, got {major}, {minor}")
        self.major = float(major)
        self.minor = float(minor)
        self.label = f"torus:{major:g},{minor:g}"

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        # poloidal angle v has density proportional to (major + minor*cos v)
        big_r = self.major
        small_r = self.minor
        if n == 1:
            # scalar path; consumes the stream exactly like the array path
            while True:
                cand = rng.random() * (2.0 * math.pi)
                accept = rng.random() * (big_r + small_r)
                if accept <= big_r + small_r * math.cos(cand):
                    break
            u = rng.random() * (2.0 * math.pi)
            w = big_r + small_r * math.cos(cand)
            return np.array(
                [[w * math.cos(u), w * math.sin(u), small_r * math.sin(cand)]]
            )
        v = np.empty(n, dtype=np.float64)
        need = np.arange(n)
        while need.size:
            cand = rng.random(need.size) * (2.0 * math.pi)
            accept = rng.random(need.size) * (big_r + small_r)
            ok = accept <= big_r + small_r * np.cos(cand)
            v[need[ok]] = cand[ok]
            need = need[~ok]
        u = rng.random(n) * (2.0 * math.pi)
        w = big_r + small_r * np.cos(v)
        out = np.empty((n, 3), dtype=np.float64)
        out[:, 0] = w * np.cos(u)
        out[:, 1] = w * np.sin(u)
        out[:, 2] = small_r * np.sin(v)
        return out

    def bounds(self):
        reach = self.major + self.minor
        return (
            np.array([-reach, -reach, -self.minor]),
            np.array([reach, reach, self.minor]),
        )


class MeshSource:
    """Uniform sampler on a triangle mesh (area-weighted barycentric draws)."""

    def __init__(self, mesh: TriMeshInput, label: str = "mesh"):
        if len(mesh.faces) == 0:
            raise ValueError("mesh has no usable faces")
        self.mesh = mesh
        self.label = label
        tri = mesh.vertices[mesh.faces]
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        areas = 0.5 * np.sqrt(np.sum(cross * cross, axis=1))
        self._cum = np.cumsum(areas)
        self._total = float(self._cum[-1])
        if self._total <= 0.0:
            raise ValueError("mesh has zero total area")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        pick = rng.random(n) * self._total
        fi = np.searchsorted(self._cum, pick, side="right")
        fi = np.minimum(fi, len(self._cum) - 1)
        u = rng.random(n)
        v = rng.random(n)
        flip = u + v > 1.0  # fold onto the lower triangle of the unit square
        u[flip] = 1.0 - u[flip]
        v[flip] = 1.0 - v[flip]
        tri = self.mesh.vertices[self.mesh.faces[fi]]
        return (
            tri[:, 0]
            + u[:, None] * (tri[:, 1] - tri[:, 0])
            + v[:, None] * (tri[:, 2] - tri[:, 0])
        )

    def bounds(self):
        return self.mesh.vertices.min(axis=0), self.mesh.vertices.max(axis=0)


class CloudSource:
    """Uniform sampler over a fixed point set."""

    def __init__(self, points, label: str = "cloud"):
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if pts.shape[0] == 0:
            raise ValueError("point cloud is empty")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud must be finite")
        self.points = pts
        self.label = label

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        idx = rng.integers(0, self.points.shape[0], size=n)
        return self.points[idx]

    def bounds(self):
        return self.points.min(axis=0), self.points.max(axis=0)


def sphere_source(center, radius: float) -> SphereSource:
    return SphereSource(radius, center)


def torus_source(major: float, minor: float) -> TorusSource:
    return TorusSource(major, minor)


def mesh_source(mesh: TriMeshInput, label: str = "mesh") -> MeshSource:
    return MeshSource(mesh, label)


# ----------------------------------------------------------------------
# file I/O

def _content_lines(path):
    """Yield (line_number, stripped_content) skipping blanks and comments."""
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if text:
                yield lineno, text


def load_off(path) -> TriMeshInput:
    """Read an ASCII OFF triangle mesh; zero-area faces are dropped."""
    lines = _content_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise ParseError(path, 1, "empty file, expected OFF header") from None
    if header != "OFF":
        raise ParseError(path, lineno, f"expected 'OFF' header, got {header!r}")
    try:
        lineno, counts = next(lines)
    except StopIteration:
        raise ParseError(path, lineno, "missing counts line") from None
    parts = counts.split()
    if len(parts) < 2:
        raise ParseError(path, lineno, f"counts line needs vertex and face counts: {counts!r}")
    try:
        n_vertices = int(parts[0])
        n_faces = int(parts[1])
    except ValueError:
        raise ParseError(path, lineno, f"bad counts line: {counts!r}") from None
    if n_vertices < 0 or n_faces < 0:
        raise ParseError(path, lineno, "counts must be non-negative")

    vertices = np.empty((n_vertices, 3), dtype=np.float64)
    for i in range(n_vertices):
        try:
            lineno, text = next(lines)
        except StopIteration:
            raise ParseError(path, lineno, f"expected {n_vertices} vertices, file ended at {i}") from None
        parts = text.split()
        if len(parts) != 3:
            raise ParseError(path, lineno, f"vertex line needs 3 coordinates: {text!r}")
        try:
            vertices[i] = [float(p) for p in parts]
        except ValueError:
            raise ParseError(path, lineno, f"bad vertex coordinates: {text!r}") from None
    if n_vertices and not np.all(np.isfinite(vertices)):
        raise ParseError(path, lineno, "non-finite vertex coordinates")

    faces = np.empty((n_faces, 3), dtype=np.int64)
    for i in range(n_faces):
        try:
            lineno, text = next(lines)
        except StopIteration:
            raise ParseError(path, lineno, f"expected {n_faces} faces, file ended at {i}") from None
        parts = text.split()
        if len(parts) != 4 or parts[0] != "3":
            raise ParseError(path, lineno, f"face line must be '3 i j k': {text!r}")
        try:
            idx = [int(p) for p in parts[1:]]
        except ValueError:
            raise ParseError(path, lineno, f"bad face indices: {text!r}") from None
        for k in idx:
            if not (0 <= k < n_vertices):
                raise ParseError(path, lineno, f"face index {k} out of range [0, {n_vertices})")
        faces[i] = idx

    if n_faces:
        tri = vertices[faces]
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        area_sq = np.sum(cross * cross, axis=1)
        faces = faces[area_sq > 0.0]
    return TriMeshInput(vertices, faces)


def load_xyz(path) -> np.ndarray:
    """Read an XYZ point cloud as an (n, 3) float array."""
    points = []
    for lineno, text in _content_lines(path):
        parts = text.split()
        if len(parts) != 3:
            raise ParseError(path, lineno, f"point line needs 3 coordinates: {text!r}")
        try:
            points.append([float(p) for p in parts])
        except ValueError:
            raise ParseError(path, lineno, f"bad coordinates: {text!r}") from None
    return np.asarray(points, dtype=np.float64).reshape(-1, 3)


def save_off(path, mesh) -> None:
    """Write vertices/faces as ASCII OFF with full float precision."""
    vertices = np.asarray(mesh.vertices, dtype=np.float64).reshape(-1, 3)
    faces = np.asarray(mesh.faces, dtype=np.int64).reshape(-1, 3)
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{len(vertices)} {len(faces)} 0\n")
        for x, y, z in vertices:
            fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
        for a, b, c in faces:
            fh.write(f"3 {a} {b} {c}\n")


def save_xyz(path, points) -> None:
    """Write points one per line with full float precision."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    with open(path, "w") as fh:
        for x, y, z in pts:
            fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
