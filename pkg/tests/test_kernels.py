"""Scan kernels: oracle agreement, tiling/worker invariance, backend parity."""

import numpy as np
import pytest

from growsurf import kernels
from growsurf.network import Snapshot
from growsurf.parallel import ExecConfig, _parallel_scan

BACKENDS = kernels.available_backends()


def sort_oracle(pos, sig):
    """Independent best-two: full lexicographic sort on (distance, row)."""
    dx = pos[:, 0] - sig[0]
    dy = pos[:, 1] - sig[1]
    dz = pos[:, 2] - sig[2]
    d = dx * dx + dy * dy + dz * dz
    order = np.lexsort((np.arange(len(pos)), d))
    return int(order[0]), int(order[1]), float(d[order[0]]), float(d[order[1]])


def random_instance(rng, n=None, m=None):
    n = n or int(rng.integers(2, 200))
    m = m or int(rng.integers(1, 40))
    pos = np.ascontiguousarray(rng.random((n, 3)))
    sig = np.ascontiguousarray(rng.random((m, 3)) * 1.4 - 0.2)
    return pos, sig


@pytest.mark.parametrize("backend_name", BACKENDS)
class TestBestTwoSingle:
    def test_matches_sort_oracle_on_random_instances(self, backend_name):
        kb = kernels.get_backend(backend_name)
        rng = np.random.default_rng(42)
        for _ in range(300):
            pos, sig = random_instance(rng, m=1)
            r1, r2, d1, d2 = kb.best_two_single(pos, len(pos), *sig[0])
            o1, o2, od1, od2 = sort_oracle(pos, sig[0])
            assert (r1, r2) == (o1, o2)
            assert d1 == od1 and d2 == od2
            assert d1 <= d2

    def test_tie_goes_to_lower_row(self, backend_name):
        kb = kernels.get_backend(backend_name)
        pos = np.array([[1.0, 0, 0], [-1.0, 0, 0], [2.0, 0, 0]])
        r1, r2, d1, d2 = kb.best_two_single(pos, 3, 0.0, 0.0, 0.0)
        assert (r1, r2) == (0, 1)
        assert d1 == d2 == 1.0

    def test_duplicate_positions(self, backend_name):
        kb = kernels.get_backend(backend_name)
        pos = np.array([[0.5, 0.5, 0.5]] * 4)
        r1, r2, _, _ = kb.best_two_single(pos, 4, 0.1, 0.2, 0.3)
        assert (r1, r2) == (0, 1)


@pytest.mark.parametrize("backend_name", BACKENDS)
class TestScanBatch:
    def test_matches_single_scan_elementwise(self, backend_name):
        kb = kernels.get_backend(backend_name)
        rng = np.random.default_rng(7)
        for _ in range(40):
            pos, sig = random_instance(rng)
            m = len(sig)
            out_idx = np.empty((m, 2), np.int64)
            out_d2 = np.empty((m, 2), np.float64)
            kb.scan_best_two_into(pos, len(pos), sig, out_idx, out_d2, len(pos))
            for j in range(m):
                r1, r2, d1, d2 = kb.best_two_single(pos, len(pos), *sig[j])
                assert (out_idx[j, 0], out_idx[j, 1]) == (r1, r2)
                assert out_d2[j, 0] == d1 and out_d2[j, 1] == d2

    def test_tile_size_never_changes_output(self, backend_name):
        kb = kernels.get_backend(backend_name)
        rng = np.random.default_rng(11)
        pos, sig = random_instance(rng, n=157, m=64)
        results = []
        for tile in (1, 3, 17, 64, 157, 1000):
            out_idx = np.empty((64, 2), np.int64)
            out_d2 = np.empty((64, 2), np.float64)
            kb.scan_best_two_into(pos, len(pos), sig, out_idx, out_d2, tile)
            results.append((out_idx.copy(), out_d2.copy()))
        for idx, d2 in results[1:]:
            assert np.array_equal(idx, results[0][0])
            assert np.array_equal(d2, results[0][1])

    def test_bad_tile_rejected(self, backend_name):
        kb = kernels.get_backend(backend_name)
        pos = np.zeros((4, 3))
        out_idx = np.empty((1, 2), np.int64)
        out_d2 = np.empty((1, 2), np.float64)
        with pytest.raises(ValueError):
            kb.scan_best_two_into(pos, 4, np.zeros((1, 3)), out_idx, out_d2, 0)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")
class TestBackendParity:
    def test_backends_bitwise_identical(self):
        a = kernels.get_backend("compiled")
        b = kernels.get_backend("python")
        rng = np.random.default_rng(3)
        for _ in range(60):
            pos, sig = random_instance(rng)
            m = len(sig)
            outs = []
            for kb in (a, b):
                out_idx = np.empty((m, 2), np.int64)
                out_d2 = np.empty((m, 2), np.float64)
                kb.scan_best_two_into(pos, len(pos), sig, out_idx, out_d2, 32)
                outs.append((out_idx, out_d2))
            assert np.array_equal(outs[0][0], outs[1][0])
            assert np.array_equal(outs[0][1], outs[1][1])  # bitwise: same FP op order


class TestParallelScan:
    @pytest.mark.parametrize("backend_name", BACKENDS)
    def test_workers_and_tiles_bitwise_invariant(self, backend_name):
        kb = kernels.get_backend(backend_name)
        rng = np.random.default_rng(19)
        pos, sig = random_instance(rng, n=333, m=128)
        snap = Snapshot(np.arange(333, dtype=np.int64), pos)
        baseline = None
        for workers in (1, 2, 4, 8):
            for tile in (64, 1024, 333):
                cfg = ExecConfig(workers=workers, tile=tile)
                idx, d2 = _parallel_scan(snap, sig, cfg, backend=kb)
                if baseline is None:
                    baseline = (idx, d2)
                else:
                    assert np.array_equal(idx, baseline[0])
                    assert np.array_equal(d2, baseline[1])

    def test_snapshot_and_batch_unchanged(self):
        rng = np.random.default_rng(23)
        pos, sig = random_instance(rng, n=50, m=32)
        snap = Snapshot(np.arange(50, dtype=np.int64), pos)
        pos_before = pos.copy()
        sig_before = sig.copy()
        _parallel_scan(snap, sig, ExecConfig(workers=4, tile=16))
        assert np.array_equal(pos, pos_before)
        assert np.array_equal(sig, sig_before)
