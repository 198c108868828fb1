"""Spatial hash grid accelerating the single-signal winner search.

A fixed-size cube grid over the input bounding box. A query gathers the
candidates from the signal's cell and its 26 neighbors and picks the best
two by (distance, id); with fewer than two candidates in the block it
falls back to the exhaustive scan. The result can differ from the
exhaustive scan only when a true winner lies outside the 27-cell block,
which is rare once cells match the unit spacing.
"""

from __future__ import annotations

import math

import numpy as np

from growsurf.engine import WinnerResult, find_winners_exhaustive
from growsurf.network import Snapshot, StateError, UnknownUnitError

__all__ = ["HashGrid"]


class HashGrid:
    """Cube partition of an axis-parallel bounding box, indexing unit ids."""

    def __init__(self, bbox_min, bbox_max, cube: float):
        lo = np.asarray(bbox_min, dtype=np.float64).reshape(3)
        hi = np.asarray(bbox_max, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("bounding box must be finite")
        if np.any(hi < lo):
            raise ValueError("bbox_max must dominate bbox_min")
        if not cube > 0.0:
            raise ValueError("cube must be positive")
        self.bbox_min = lo
        self.bbox_max = hi
        self.cube = float(cube)
        span = hi - lo
        if math.isinf(self.cube):
            dims = (1, 1, 1)
        else:
            dims = tuple(max(1, int(math.ceil(s / self.cube))) for s in span)
        self.dims = dims
        self._cells: dict[tuple[int, int, int], set[int]] = {}
        self._cell_of_id: dict[int, tuple[int, int, int]] = {}
        self._pos_of_id: dict[int, tuple[float, float, float]] = {}

    def __len__(self) -> int:
        return len(self._cell_of_id)

    def cell_of(self, p) -> tuple[int, int, int]:
        """Cell triple of a point; out-of-box points clamp to the boundary."""
        out = []
        for axis in range(3):
            if math.isinf(self.cube):
                c = 0
            else:
                c = int(math.floor((float(p[axis]) - self.bbox_min[axis]) / self.cube))
            out.append(min(max(c, 0), self.dims[axis] - 1))
        return tuple(out)

    def insert(self, unit_id: int, p) -> None:
        if unit_id in self._cell_of_id:
            raise ValueError(f"unit {unit_id} is already indexed")
        cell = self.cell_of(p)
        self._cells.setdefault(cell, set()).add(unit_id)
        self._cell_of_id[unit_id] = cell
        self._pos_of_id[unit_id] = (float(p[0]), float(p[1]), float(p[2]))

    def remove(self, unit_id: int) -> None:
        try:
            cell = self._cell_of_id.pop(unit_id)
        except KeyError:
            raise UnknownUnitError(f"unit {unit_id} is not indexed") from None
        del self._pos_of_id[unit_id]
        members = self._cells[cell]
        members.discard(unit_id)
        if not members:
            del self._cells[cell]

    def relocate(self, unit_id: int, p_new) -> None:
        """Move a unit; cell lists are untouched when the cell is unchanged."""
        try:
            old_cell = self._cell_of_id[unit_id]
        except KeyError:
            raise UnknownUnitError(f"unit {unit_id} is not indexed") from None
        self._pos_of_id[unit_id] = (float(p_new[0]), float(p_new[1]), float(p_new[2]))
        new_cell = self.cell_of(p_new)
        if new_cell == old_cell:
            return
        members = self._cells[old_cell]
        members.discard(unit_id)
        if not members:
            del self._cells[old_cell]
        self._cells.setdefault(new_cell, set()).add(unit_id)
        self._cell_of_id[unit_id] = new_cell

    def query_winners(self, snapshot: Snapshot, signal, backend=None) -> WinnerResult:
        """Best two units from the 27-cell block; exhaustive fallback otherwise."""
        if len(snapshot) < 2:
            raise StateError("need at least 2 units to find winners")
        cx, cy, cz = self.cell_of(signal)
        x = float(signal[0])
        y = float(signal[1])
        z = float(signal[2])
        d1 = d2 = math.inf
        i1 = i2 = -1
        count = 0
        cells = self._cells
        for gx in range(max(0, cx - 1), min(self.dims[0], cx + 2)):
            for gy in range(max(0, cy - 1), min(self.dims[1], cy + 2)):
                for gz in range(max(0, cz - 1), min(self.dims[2], cz + 2)):
                    members = cells.get((gx, gy, gz))
                    if not members:
                        continue
                    for uid in members:
                        px, py, pz = self._pos_of_id[uid]
                        dx = px - x
                        dy = py - y
                        dz = pz - z
                        d = dx * dx + dy * dy + dz * dz
                        count += 1
                        if d < d1 or (d == d1 and uid < i1):
                            d2 = d1
                            i2 = i1
                            d1 = d
                            i1 = uid
                        elif d < d2 or (d == d2 and uid < i2):
                            d2 = d
                            i2 = uid
        if count < 2:
            return find_winners_exhaustive(snapshot, signal, backend=backend)
        return WinnerResult(i1, i2, math.sqrt(d1), math.sqrt(d2))

    def audit(self) -> None:
        """Verify cell lists and placement agree; raises AssertionError."""
        seen = 0
        for cell, members in self._cells.items():
            assert members, f"empty cell list left behind at {cell}"
            for uid in members:
                assert self._cell_of_id.get(uid) == cell
                seen += 1
        assert seen == len(self._cell_of_id) == len(self._pos_of_id)
        for uid, pos in self._pos_of_id.items():
            assert all(math.isfinite(c) for c in pos)
            assert self.cell_of(pos) == self._cell_of_id[uid]
