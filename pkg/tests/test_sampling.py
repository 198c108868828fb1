"""Signal sources: surface membership, uniformity, determinism; file I/O."""

import math

import numpy as np
import pytest

from growsurf.sampling import (
    CloudSource,
    MeshSource,
    ParseError,
    SphereSource,
    TorusSource,
    TriMeshInput,
    load_off,
    load_xyz,
    save_off,
    save_xyz,
)

ALPHA = 0.001


def rng_for(seed=0):
    return np.random.Generator(np.random.Philox(seed))


class TestSphereSource:
    def test_samples_lie_on_sphere(self):
        src = SphereSource(1.0)
        pts = src.sample(rng_for(1), 5000)
        r = np.linalg.norm(pts, axis=1)
        assert np.all(np.abs(r - 1.0) < 1e-9)

    def test_center_and_radius_respected(self):
        src = SphereSource(2.5, center=(1.0, -2.0, 3.0))
        pts = src.sample(rng_for(2), 1000)
        r = np.linalg.norm(pts - np.array([1.0, -2.0, 3.0]), axis=1)
        assert np.all(np.abs(r - 2.5) < 1e-9)

    def test_octant_counts_uniform(self):
        # chi-square over the 8 octants; independent statistical oracle
        from scipy import stats

        pts = SphereSource(1.0).sample(rng_for(3), 80_000)
        octant = (pts[:, 0] > 0) * 4 + (pts[:, 1] > 0) * 2 + (pts[:, 2] > 0)
        counts = np.bincount(octant, minlength=8)
        p = stats.chisquare(counts).pvalue
        assert p >= ALPHA

    def test_bad_radius_rejected(self):
        with pytest.raises(ValueError):
            SphereSource(0.0)
        with pytest.raises(ValueError):
            SphereSource(-1.0)

    def test_bounds_enclose_samples(self):
        src = SphereSource(1.5, center=(0.5, 0.0, 0.0))
        lo, hi = src.bounds()
        pts = src.sample(rng_for(4), 2000)
        assert np.all(pts >= lo - 1e-12) and np.all(pts <= hi + 1e-12)


class TestTorusSource:
    def test_samples_satisfy_implicit_equation(self):
        src = TorusSource(2.0, 0.5)
        pts = src.sample(rng_for(5), 5000)
        val = (np.sqrt(pts[:, 0] ** 2 + pts[:, 1] ** 2) - 2.0) ** 2 + pts[:, 2] ** 2
        assert np.all(np.abs(val - 0.25) < 1e-9)

    def test_poloidal_angle_density(self):
        # KS test against the rejection-corrected CDF: F(v) ~ (R v + r sin v)
        from scipy import stats

        big_r, small_r = 2.0, 0.5
        pts = TorusSource(big_r, small_r).sample(rng_for(6), 40_000)
        w = np.sqrt(pts[:, 0] ** 2 + pts[:, 1] ** 2) - big_r
        v = np.mod(np.arctan2(pts[:, 2] / small_r, w / small_r), 2 * math.pi)

        def cdf(x):
            return (big_r * x + small_r * np.sin(x)) / (2 * math.pi * big_r)

        p = stats.kstest(v, cdf).pvalue
        assert p >= ALPHA

    def test_bad_radii_rejected(self):
        with pytest.raises(ValueError):
            TorusSource(0.5, 0.5)
        with pytest.raises(ValueError):
            TorusSource(1.0, 0.0)


class TestMeshSource:
    def two_triangle_mesh(self):
        # areas 0.5 and 1.5: pick ratio should approach 1:3
        vertices = np.array(
            [
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 3.0],
                [1.0, 0.0, 3.0],
                [0.0, 3.0, 3.0],
            ]
        )
        faces = np.array([[0, 1, 2], [3, 4, 5]])
        return TriMeshInput(vertices, faces)

    def test_area_weighted_face_choice(self):
        from scipy import stats

        src = MeshSource(self.two_triangle_mesh())
        pts = src.sample(rng_for(7), 40_000)
        on_second = pts[:, 2] > 1.5
        k = int(np.sum(on_second))
        p = stats.binomtest(k, 40_000, 0.75).pvalue
        assert p >= ALPHA

    def test_single_triangle_barycentric(self):
        vertices = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        src = MeshSource(TriMeshInput(vertices, np.array([[0, 1, 2]])))
        pts = src.sample(rng_for(8), 4000)
        assert np.all(pts[:, 2] == 0.0)
        assert np.all(pts[:, 0] >= -1e-12)
        assert np.all(pts[:, 1] >= -1e-12)
        assert np.all(pts[:, 0] + pts[:, 1] <= 1.0 + 1e-12)
        assert np.all(np.isfinite(pts))

    def test_empty_mesh_rejected(self):
        with pytest.raises(ValueError):
            MeshSource(TriMeshInput(np.zeros((3, 3)), np.zeros((0, 3), dtype=np.int64)))


class TestCloudSource:
    def test_samples_are_cloud_members(self):
        cloud = np.arange(30, dtype=np.float64).reshape(10, 3)
        src = CloudSource(cloud)
        pts = src.sample(rng_for(9), 500)
        as_set = {tuple(p) for p in cloud}
        assert all(tuple(p) in as_set for p in pts)

    def test_empty_cloud_rejected(self):
        with pytest.raises(ValueError):
            CloudSource(np.zeros((0, 3)))


class TestDeterminism:
    @pytest.mark.parametrize(
        "make",
        [
            lambda: SphereSource(1.0),
            lambda: TorusSource(2.0, 0.5),
            lambda: CloudSource(np.random.default_rng(0).random((50, 3))),
        ],
    )
    def test_same_seed_same_sequence(self, make):
        a = make().sample(rng_for(123), 500)
        b = make().sample(rng_for(123), 500)
        assert np.array_equal(a, b)

    def test_batched_draws_extend_scalar_draws(self):
        # the multi-signal engine draws whole batches; same stream order
        src = SphereSource(1.0)
        a = src.sample(rng_for(5), 6)
        rng = rng_for(5)
        b = np.vstack([src.sample(rng, 1) for _ in range(6)])
        assert np.array_equal(a, b)


class TestOffIO:
    def tetra_text(self):
        return (
            "OFF\n"
            "4 4 6\n"
            "0 0 0\n"
            "1 0 0\n"
            "0 1 0\n"
            "0 0 1\n"
            "3 0 1 2\n"
            "3 0 1 3\n"
            "3 0 2 3\n"
            "3 1 2 3\n"
        )

    def test_minimal_tetrahedron(self, tmp_path):
        path = tmp_path / "tetra.off"
        path.write_text(self.tetra_text())
        mesh = load_off(path)
        assert mesh.vertices.shape == (4, 3)
        assert mesh.faces.shape == (4, 3)

    def test_comments_and_blanks_skipped(self, tmp_path):
        path = tmp_path / "c.off"
        path.write_text("# header comment\nOFF\n\n3 1 0  # counts\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n")
        mesh = load_off(path)
        assert len(mesh.faces) == 1

    def test_face_index_out_of_range_names_line(self, tmp_path):
        path = tmp_path / "bad.off"
        path.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 9\n")
        with pytest.raises(ParseError) as err:
            load_off(path)
        assert err.value.line == 6
        assert "9" in str(err.value)

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "no.off"
        path.write_text("3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n")
        with pytest.raises(ParseError):
            load_off(path)

    def test_non_triangle_face_rejected(self, tmp_path):
        path = tmp_path / "quad.off"
        path.write_text("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n")
        with pytest.raises(ParseError):
            load_off(path)

    def test_degenerate_faces_filtered(self, tmp_path):
        path = tmp_path / "degen.off"
        path.write_text(
            "OFF\n4 3 0\n0 0 0\n1 0 0\n2 0 0\n0 1 0\n"
            "3 0 1 2\n"   # collinear: zero area
            "3 0 1 1\n"   # repeated index
            "3 0 1 3\n"
        )
        mesh = load_off(path)
        assert len(mesh.faces) == 1

    def test_round_trip_full_precision(self, tmp_path):
        rng = np.random.default_rng(0)
        vertices = rng.random((17, 3)) * 2000.0 - 1000.0
        faces = np.array([[0, 1, 2], [3, 4, 5]], dtype=np.int64)
        path = tmp_path / "rt.off"
        save_off(path, TriMeshInput(vertices, faces))
        back = load_off(path)
        assert np.array_equal(back.vertices, vertices)
        assert np.array_equal(back.faces, faces)


class TestXyzIO:
    def test_round_trip_full_precision(self, tmp_path):
        rng = np.random.default_rng(1)
        pts = rng.standard_normal((200, 3)) * 1e6
        path = tmp_path / "cloud.xyz"
        save_xyz(path, pts)
        assert np.array_equal(load_xyz(path), pts)

    def test_comments_allowed(self, tmp_path):
        path = tmp_path / "c.xyz"
        path.write_text("# a comment\n1 2 3\n4 5 6  # trailing\n")
        pts = load_xyz(path)
        assert pts.shape == (2, 3)

    def test_bad_line_names_line_number(self, tmp_path):
        path = tmp_path / "bad.xyz"
        path.write_text("1 2 3\n4 five 6\n")
        with pytest.raises(ParseError) as err:
            load_xyz(path)
        assert err.value.line == 2
