"""Pure NumPy twin of the compiled scan kernel.

Implements the same fixed scan semantics: rows visited in increasing
index order, strict comparisons so the lowest row wins ties, squared
distances computed as ((dx*dx + dy*dy) + dz*dz). Outputs are bitwise
identical to the compiled backend for the same inputs.
"""

from __future__ import annotations

import numpy as np

# signals are processed in row blocks to bound the (block x tile) scratch
_BLOCK = 256


def best_two_single(pos, n, x, y, z):
    """Rows and squared distances of the two nearest units to (x, y, z)."""
    if n > pos.shape[0]:
        raise ValueError("n exceeds the position array")
    if n == 0:
        return -1, -1, np.inf, np.inf
    dx = pos[:n, 0] - x
    dy = pos[:n, 1] - y
    dz = pos[:n, 2] - z
    d = dx * dx + dy * dy + dz * dz
    i1 = int(np.argmin(d))
    d1 = float(d[i1])
    if n == 1:
        return i1, -1, d1, np.inf
    d[i1] = np.inf
    i2 = int(np.argmin(d))
    return i1, i2, d1, float(d[i2])


def scan_best_two_into(pos, n, signals, out_idx, out_d2, tile):
    """Best-two scan for a batch of signals, tiled over the position rows.

    Same contract as the compiled version: results are independent of the
    tile size, and disjoint output slices may be filled concurrently.
    """
    if n > pos.shape[0]:
        raise ValueError("n exceeds the position array")
    m = signals.shape[0]
    if out_idx.shape[0] < m or out_d2.shape[0] < m:
        raise ValueError("output arrays are smaller than the signal batch")
    if tile < 1:
        raise ValueError("tile must be >= 1")
    out_idx[:m] = -1
    out_d2[:m] = np.inf
    px = pos[:n, 0]
    py = pos[:n, 1]
    pz = pos[:n, 2]
    for b0 in range(0, m, _BLOCK):
        b1 = min(b0 + _BLOCK, m)
        sx = signals[b0:b1, 0:1]
        sy = signals[b0:b1, 1:2]
        sz = signals[b0:b1, 2:3]
        rd1 = out_d2[b0:b1, 0]
        rd2 = out_d2[b0:b1, 1]
        ri1 = out_idx[b0:b1, 0]
        ri2 = out_idx[b0:b1, 1]
        for t0 in range(0, n, tile):
            t1 = min(t0 + tile, n)
            dx = sx - px[t0:t1]
            dy = sy - py[t0:t1]
            dz = sz - pz[t0:t1]
            d = dx * dx + dy * dy + dz * dz
            # tile-local best two; argmin keeps the first (lowest-row) tie
            c1 = np.argmin(d, axis=1)
            rows = np.arange(d.shape[0])
            dc1 = d[rows, c1]
            d[rows, c1] = np.inf
            c2 = np.argmin(d, axis=1)
            dc2 = d[rows, c2]
            _merge(rd1, ri1, rd2, ri2, dc1, c1 + t0)
            _merge(rd1, ri1, rd2, ri2, dc2, c2 + t0)
        out_d2[b0:b1, 0] = rd1
        out_d2[b0:b1, 1] = rd2
        out_idx[b0:b1, 0] = ri1
        out_idx[b0:b1, 1] = ri2


def _merge(rd1, ri1, rd2, ri2, dc, ic):
    """Feed one candidate per signal through the strict best-two update.

    Strict '<' keeps the incumbent on ties, which is correct because the
    running best always comes from lower rows than the candidate.
    """
    better1 = dc < rd1
    better2 = ~better1 & (dc < rd2)
    rd2[:] = np.where(better1, rd1, np.where(better2, dc, rd2))
    ri2[:] = np.where(better1, ri1, np.where(better2, ic, ri2))
    rd1[:] = np.where(better1, dc, rd1)
    ri1[:] = np.where(better1, ic, ri1)
