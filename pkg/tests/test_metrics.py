"""Mesh extraction, manifold classification, genus, stats CSV."""

import csv
import itertools
import math

import numpy as np
import pytest

from growsurf.metrics import (
    CSV_COLUMNS,
    RunStats,
    TriMesh,
    euler_genus,
    extract_mesh,
    genus,
    manifold_check,
    quantization_error,
    write_stats_csv,
    _edge_face_counts,
)
from growsurf.network import Network, StateError


def tetra_net():
    net = Network()
    ids = [net.add_unit(p, 0.5) for p in [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]]
    for i in range(4):
        for j in range(i + 1, 4):
            net.connect_or_reset(ids[i], ids[j])
    return net


def torus_grid_mesh(nu=12, nv=8, big_r=2.0, small_r=0.5):
    """Closed genus-1 triangulation from a wrapped parametric grid."""
    vertices = np.empty((nu * nv, 3))
    for i in range(nu):
        for j in range(nv):
            u = 2 * math.pi * i / nu
            v = 2 * math.pi * j / nv
            w = big_r + small_r * math.cos(v)
            vertices[i * nv + j] = (w * math.cos(u), w * math.sin(u), small_r * math.sin(v))
    faces = []
    for i in range(nu):
        for j in range(nv):
            a = i * nv + j
            b = ((i + 1) % nu) * nv + j
            c = i * nv + (j + 1) % nv
            d = ((i + 1) % nu) * nv + (j + 1) % nv
            faces.append((a, b, d))
            faces.append((a, d, c))
    return TriMesh(vertices, np.asarray(faces, dtype=np.int64), 0)


class TestExtractMesh:
    def test_tetrahedron_has_four_faces(self):
        mesh = extract_mesh(tetra_net())
        assert len(mesh.faces) == 4
        assert len(mesh.vertices) == 4
        assert mesh.boundary_edge_count == 0

    def test_triangle_free_network_has_no_faces(self):
        net = Network()
        a = net.add_unit((0, 0, 0), 0.5)
        b = net.add_unit((1, 0, 0), 0.5)
        c = net.add_unit((2, 0, 0), 0.5)
        net.connect_or_reset(a, b)
        net.connect_or_reset(b, c)
        mesh = extract_mesh(net)
        assert len(mesh.faces) == 0

    def test_matches_brute_force_triple_enumeration(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            net = Network()
            ids = [net.add_unit(rng.random(3), 0.5) for _ in range(rng.integers(4, 30))]
            for a, b in itertools.combinations(ids, 2):
                if rng.random() < 0.25:
                    net.connect_or_reset(a, b)
            mesh = extract_mesh(net)
            expected = sum(
                1
                for a, b, c in itertools.combinations(ids, 3)
                if net.has_edge(a, b) and net.has_edge(b, c) and net.has_edge(a, c)
            )
            assert len(mesh.faces) == expected
            # each face emitted once
            seen = {tuple(sorted(f)) for f in mesh.faces.tolist()}
            assert len(seen) == len(mesh.faces)


class TestManifoldCheck:
    def test_tetrahedron_closed(self):
        assert manifold_check(extract_mesh(tetra_net())) == "closed"

    def test_single_triangle_with_boundary(self):
        mesh = TriMesh(np.eye(3), np.array([[0, 1, 2]]), 3)
        assert manifold_check(mesh) == "with_boundary"

    def test_three_faces_on_one_edge_non_manifold(self):
        vertices = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]], dtype=float)
        faces = np.array([[0, 1, 2], [0, 1, 3], [0, 1, 4]])
        assert manifold_check(TriMesh(vertices, faces, 0)) == "non_manifold"

    def test_bowtie_boundary_not_simple_cycles(self):
        # two triangles sharing exactly one vertex: boundary vertex degree 4
        vertices = np.zeros((5, 3))
        vertices[:, 0] = np.arange(5)
        faces = np.array([[0, 1, 2], [2, 3, 4]])
        assert manifold_check(TriMesh(vertices, faces, 0)) == "non_manifold"

    def test_empty_mesh_non_manifold(self):
        mesh = TriMesh(np.zeros((3, 3)), np.zeros((0, 3), dtype=np.int64), 0)
        assert manifold_check(mesh) == "non_manifold"


class TestGenus:
    def test_tetrahedron_genus_zero(self):
        assert genus(extract_mesh(tetra_net())) == 0

    def test_torus_grid_genus_one(self):
        mesh = torus_grid_mesh()
        assert manifold_check(mesh) == "closed"
        assert genus(mesh) == 1

    def test_euler_arithmetic_anchors(self):
        # closed triangulations satisfy 2E = 3F; these unit/edge counts force
        # F and the genus by Euler arithmetic alone
        v1, e1 = 347, 1035
        f1 = 2 * e1 // 3
        assert 2 * e1 == 3 * f1
        assert euler_genus(v1, e1, f1) == 0

        v2, e2 = 658, 1980
        f2 = 2 * e2 // 3
        assert 2 * e2 == 3 * f2
        assert euler_genus(v2, e2, f2) == 2

    def test_open_mesh_rejected(self):
        mesh = TriMesh(np.eye(3), np.array([[0, 1, 2]]), 3)
        with pytest.raises(StateError):
            genus(mesh)

    def test_disconnected_mesh_rejected(self):
        net = tetra_net()
        # second tetrahedron far away -> two components
        ids = [net.add_unit((10 + x, y, z), 0.5) for x, y, z in [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]]
        for i in range(4):
            for j in range(i + 1, 4):
                net.connect_or_reset(ids[i], ids[j])
        mesh = extract_mesh(net)
        assert manifold_check(mesh) == "closed"
        with pytest.raises(StateError):
            genus(mesh)

    def test_genus_invariant_under_relabeling(self):
        mesh = torus_grid_mesh(8, 6)
        rng = np.random.default_rng(3)
        perm = rng.permutation(len(mesh.vertices))
        inverse = np.argsort(perm)
        shuffled = TriMesh(mesh.vertices[perm], inverse[mesh.faces], 0)
        assert genus(shuffled) == genus(mesh) == 1


class TestQuantizationError:
    def test_probes_on_units_give_zero(self):
        net = tetra_net()
        probes = np.array([[0, 0, 0], [1, 0, 0]], dtype=float)
        assert quantization_error(net, probes) == 0.0

    def test_single_pair_squared_distance(self):
        net = Network()
        net.add_unit((0, 0, 0), 0.5)
        net.add_unit((10, 0, 0), 0.5)
        assert quantization_error(net, [[0.5, 0, 0]]) == 0.25

    def test_mean_over_probes(self):
        net = Network()
        net.add_unit((0, 0, 0), 0.5)
        net.add_unit((10, 0, 0), 0.5)
        got = quantization_error(net, [[0.5, 0, 0], [10, 1, 0]])
        assert got == pytest.approx((0.25 + 1.0) / 2, abs=1e-15)

    def test_needs_probes_and_units(self):
        net = Network()
        net.add_unit((0, 0, 0), 0.5)
        with pytest.raises(StateError):
            quantization_error(net, [[0, 0, 0]])
        net.add_unit((1, 0, 0), 0.5)
        with pytest.raises(ValueError):
            quantization_error(net, np.zeros((0, 3)))


def make_stats(**overrides):
    base = dict(
        variant="single", dataset="sphere:1.0", seed=3, iterations=100,
        signals=100, discarded=0, units=50, connections=144,
        total_s=2.0, sample_s=0.25, find_s=1.25, update_s=0.5, converged=True,
    )
    base.update(overrides)
    return RunStats(**base)


class TestStatsCsv:
    def test_header_and_single_row(self, tmp_path):
        path = tmp_path / "stats.csv"
        write_stats_csv(path, [make_stats()])
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == CSV_COLUMNS
        assert len(rows) == 2

    def test_row_fractions_match_in_memory(self, tmp_path):
        st = make_stats()
        path = tmp_path / "stats.csv"
        write_stats_csv(path, [st])
        with open(path) as fh:
            row = list(csv.DictReader(fh))[0]
        assert float(row["find_s"]) / float(row["total_s"]) == st.find_s / st.total_s
        assert float(row["time_per_signal_s"]) == st.total_s / st.signals
        assert row["converged"] == "true"

    def test_four_variant_matrix_rows(self, tmp_path):
        stats = [make_stats(variant=v) for v in ("single", "indexed", "multi", "multi-parallel")]
        path = tmp_path / "m.csv"
        write_stats_csv(path, stats)
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        assert [r["variant"] for r in rows] == ["single", "indexed", "multi", "multi-parallel"]

    def test_phase_sum_bounded_by_total(self):
        st = make_stats()
        assert st.sample_s + st.find_s + st.update_s <= st.total_s
