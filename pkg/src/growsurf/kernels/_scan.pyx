# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled best-two distance scans over a dense position array.

Scan order is fixed: rows are visited in increasing index order and ties
are resolved by strict comparison, so the first (lowest-row) unit wins.
Squared distances are computed as ((dx*dx + dy*dy) + dz*dz); the build
disables FP contraction so results match the NumPy backend bit for bit.
"""

from libc.math cimport INFINITY
from libc.stdint cimport int64_t


def best_two_single(const double[:, ::1] pos, Py_ssize_t n, double x, double y, double z):
    """Rows and squared distances of the two nearest units to (x, y, z)."""
    cdef Py_ssize_t i
    cdef Py_ssize_t i1 = -1, i2 = -1
    cdef double d1 = INFINITY, d2 = INFINITY
    cdef double dx, dy, dz, d
    if n > pos.shape[0]:
        raise ValueError("n exceeds the position array")
    with nogil:
        for i in range(n):
            dx = pos[i, 0] - x
            dy = pos[i, 1] - y
            dz = pos[i, 2] - z
            d = dx * dx + dy * dy + dz * dz
            if d < d1:
                d2 = d1
                i2 = i1
                d1 = d
                i1 = i
            elif d < d2:
                d2 = d
                i2 = i
    return i1, i2, d1, d2


def scan_best_two_into(const double[:, ::1] pos, Py_ssize_t n,
                       const double[:, ::1] signals,
                       int64_t[:, ::1] out_idx, double[:, ::1] out_d2,
                       Py_ssize_t tile):
    """Best-two scan for a batch of signals, tiled over the position rows.

    For each signal j, out_idx[j] holds the rows of the nearest and
    second-nearest units and out_d2[j] their squared distances. The scan
    runs tile by tile over contiguous row ranges; the per-signal merge
    order equals the plain sequential scan, so the result is independent
    of the tile size. Releases the GIL: disjoint output slices may be
    filled from parallel threads.
    """
    cdef Py_ssize_t m = signals.shape[0]
    cdef Py_ssize_t j, i, t0, t1
    cdef Py_ssize_t i1, i2
    cdef double d1, d2, x, y, z, dx, dy, dz, d
    if n > pos.shape[0]:
        raise ValueError("n exceeds the position array")
    if out_idx.shape[0] < m or out_d2.shape[0] < m:
        raise ValueError("output arrays are smaller than the signal batch")
    if tile < 1:
        raise ValueError("tile must be >= 1")
    with nogil:
        for j in range(m):
            out_idx[j, 0] = -1
            out_idx[j, 1] = -1
            out_d2[j, 0] = INFINITY
            out_d2[j, 1] = INFINITY
        t0 = 0
        while t0 < n:
            t1 = t0 + tile
            if t1 > n:
                t1 = n
            for j in range(m):
                x = signals[j, 0]
                y = signals[j, 1]
                z = signals[j, 2]
                i1 = out_idx[j, 0]
                i2 = out_idx[j, 1]
                d1 = out_d2[j, 0]
                d2 = out_d2[j, 1]
                for i in range(t0, t1):
                    dx = pos[i, 0] - x
                    dy = pos[i, 1] - y
                    dz = pos[i, 2] - z
                    d = dx * dx + dy * dy + dz * dz
                    if d < d1:
                        d2 = d1
                        i2 = i1
                        d1 = d
                        i1 = i
                    elif d < d2:
                        d2 = d
                        i2 = i
                out_idx[j, 0] = i1
                out_idx[j, 1] = i2
                out_d2[j, 0] = d1
                out_d2[j, 1] = d2
            t0 = t1
