"""Growable 3D unit graph with aged edges and local ring bookkeeping.

Units carry a position (their reference vector), a habituation value in
[0, 1] that decays as the unit wins, and a per-unit insertion threshold.
Edges are undirected, unweighted, and aged. The network additionally keeps
an incrementally maintained classification of every unit's "link ring"
(the subgraph induced on its neighbors), which is what the engines use to
decide when the graph has become a triangulated surface.

Ids are never reused within a run, so traces are unambiguous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = ["RingClass", "Snapshot", "Network", "UnknownUnitError", "StateError"]

_INITIAL_CAPACITY = 64


class UnknownUnitError(KeyError):
    """An operation referenced an id that is not alive in the network."""


class StateError(RuntimeError):
    """The operation is invalid for the current network state."""


class RingClass(Enum):
    """Shape of the edge ring induced on a unit's neighbors.

    DISK: the neighbors form one simple cycle (interior surface vertex).
    HALF_DISK: the neighbors form one simple path (surface boundary vertex).
    INCONSISTENT: anything else, including fewer than 2 neighbors.
    """

    DISK = "disk"
    HALF_DISK = "half-disk"
    INCONSISTENT = "inconsistent"


@dataclass(frozen=True)
class Snapshot:
    """Dense, id-ordered view of unit positions at one point in time.

    Row i of ``positions`` belongs to ``ids[i]``; ids are strictly
    increasing, so "first row" and "lowest id" coincide.
    """

    ids: np.ndarray        # (n,) int64
    positions: np.ndarray  # (n, 3) float64, C-contiguous

    def __len__(self) -> int:
        return self.ids.shape[0]


def _check_position(position) -> np.ndarray:
    pos = np.asarray(position, dtype=np.float64).reshape(-1)
    if pos.shape != (3,):
        raise ValueError(f"position must have 3 components, got shape {pos.shape}")
    if not np.all(np.isfinite(pos)):
        raise ValueError(f"position must be finite, got {pos}")
    return pos


class Network:
    """Growable undirected graph of units in 3D.

    All mutation is single-threaded by contract. ``snapshot()`` produces a
    read-only copy of the position array that may be shared across parallel
    readers.
    """

    def __init__(self):
        cap = _INITIAL_CAPACITY
        self._ids = np.zeros(cap, dtype=np.int64)
        self._pos = np.zeros((cap, 3), dtype=np.float64)
        self._hab = np.zeros(cap, dtype=np.float64)
        self._theta = np.zeros(cap, dtype=np.float64)
        self._n = 0
        self._row = {}   # id -> row in the dense arrays
        self._adj = {}   # id -> {neighbor id: edge age}
        self._next_id = 0
        self._n_edges = 0
        self._ring = {}  # id -> RingClass, always in sync with _adj
        self._ring_counts = {cls: 0 for cls in RingClass}
        self._age_hint = 0   # upper bound on the largest edge age
        self._isolated = 0   # number of units with no edges
        self._version = 0    # bumped whenever the dense arrays may move
        self._watch_limit: int | None = None  # see watch_age_limit
        self._overage: set[tuple[int, int]] = set()

    # ------------------------------------------------------------------
    # introspection

    @property
    def unit_count(self) -> int:
        return self._n

    @property
    def edge_count(self) -> int:
        return self._n_edges

    @property
    def next_id(self) -> int:
        """The id the next added unit will get (counts units ever created)."""
        return self._next_id

    @property
    def version(self) -> int:
        return self._version

    def is_alive(self, unit_id: int) -> bool:
        return unit_id in self._row

    def unit_ids(self) -> list[int]:
        return [int(i) for i in self._ids[: self._n]]

    def position(self, unit_id: int) -> np.ndarray:
        return self._pos[self._require(unit_id)].copy()

    def habituation(self, unit_id: int) -> float:
        return float(self._hab[self._require(unit_id)])

    def local_threshold(self, unit_id: int) -> float:
        return float(self._theta[self._require(unit_id)])

    def neighbors(self, unit_id: int) -> set[int]:
        self._require(unit_id)
        return set(self._adj[unit_id])

    def degree(self, unit_id: int) -> int:
        self._require(unit_id)
        return len(self._adj[unit_id])

    def has_edge(self, a: int, b: int) -> bool:
        return a in self._adj and b in self._adj[a]

    def edge_age(self, a: int, b: int) -> int:
        self._require(a)
        self._require(b)
        try:
            return self._adj[a][b]
        except KeyError:
            raise KeyError(f"no edge between {a} and {b}") from None

    def edges(self) -> list[tuple[int, int, int]]:
        """All edges as (a, b, age) with a < b, sorted."""
        out = [
            (a, b, age)
            for a, nbrs in self._adj.items()
            for b, age in nbrs.items()
            if a < b
        ]
        out.sort()
        return out

    def ring_class_counts(self) -> dict[RingClass, int]:
        return dict(self._ring_counts)

    def all_rings_surface(self, allow_half_disks: bool = False) -> bool:
        """True when every unit's ring is a disk (or half-disk, if allowed)."""
        ok = self._ring_counts[RingClass.DISK]
        if allow_half_disks:
            ok += self._ring_counts[RingClass.HALF_DISK]
        return ok == self._n

    def max_habituation(self) -> float:
        if self._n == 0:
            raise StateError("empty network has no habituation")
        return float(np.max(self._hab[: self._n]))

    def state_arrays(self):
        """Live (ids, positions, habituations, thresholds) prefix views.

        Valid until the next add/remove (watch ``version``). Positions and
        habituations may be adapted in place by the engines; ids must not
        be written.
        """
        n = self._n
        return self._ids[:n], self._pos[:n], self._hab[:n], self._theta[:n]

    def row_of(self, unit_id: int) -> int:
        return self._require(unit_id)

    def snapshot(self, copy: bool = True) -> Snapshot:
        """Id-ordered dense position array.

        With ``copy=False`` the snapshot borrows the live arrays: cheap,
        but only valid until the next mutation and never shareable across
        threads that outlive the current find phase.
        """
        n = self._n
        ids = self._ids[:n]
        pos = self._pos[:n]
        if copy:
            return Snapshot(ids.copy(), pos.copy())
        return Snapshot(ids, pos)

    # ------------------------------------------------------------------
    # mutation

    def add_unit(self, position, threshold: float) -> int:
        """Create a fresh unit (habituation 1, no edges) and return its id."""
        pos = _check_position(position)
        threshold = float(threshold)
        if not (math.isfinite(threshold) and threshold > 0.0):
            raise ValueError(f"threshold must be positive and finite, got {threshold}")
        if self._n == self._ids.shape[0]:
            self._grow()
        row = self._n
        uid = self._next_id
        self._next_id += 1
        self._ids[row] = uid
        self._pos[row] = pos
        self._hab[row] = 1.0
        self._theta[row] = threshold
        self._n = row + 1
        self._row[uid] = row
        self._adj[uid] = {}
        self._ring[uid] = RingClass.INCONSISTENT
        self._ring_counts[RingClass.INCONSISTENT] += 1
        self._isolated += 1
        self._version += 1
        return uid

    def remove_unit(self, unit_id: int) -> None:
        """Remove a unit and all its incident edges."""
        self._require(unit_id)
        affected = list(self._adj[unit_id])
        for nb in affected:
            self._remove_edge_raw(unit_id, nb)
        self._remove_unit_raw(unit_id)
        for nb in affected:
            self._recompute_ring(nb)

    def watch_age_limit(self, max_age: int) -> None:
        """Track over-age edges incrementally so prune(max_age) avoids scans.

        Engines register their run's age limit once; prune calls with the
        watched limit then cost O(candidates) instead of O(E).
        """
        if max_age < 0:
            raise ValueError("max_age must be >= 0")
        self._watch_limit = max_age
        self._overage = {
            (a, b)
            for a, nbrs in self._adj.items()
            for b, age in nbrs.items()
            if a < b and age > max_age
        }

    def _edge_key(self, a: int, b: int) -> tuple[int, int]:
        return (a, b) if a < b else (b, a)

    def connect_or_reset(self, a: int, b: int) -> str:
        """Ensure edge (a, b) exists with age 0; returns "created" or "reset"."""
        if a == b:
            raise ValueError(f"cannot connect unit {a} to itself")
        self._require(a)
        self._require(b)
        if b in self._adj[a]:
            if self._watch_limit is not None and self._adj[a][b] > self._watch_limit:
                self._overage.discard(self._edge_key(a, b))
            self._adj[a][b] = 0
            self._adj[b][a] = 0
            return "reset"
        if not self._adj[a]:
            self._isolated -= 1
        if not self._adj[b]:
            self._isolated -= 1
        self._adj[a][b] = 0
        self._adj[b][a] = 0
        self._n_edges += 1
        for u in self._ring_neighborhood(a, b):
            self._recompute_ring(u)
        return "created"

    def remove_edge(self, a: int, b: int) -> None:
        self._require(a)
        self._require(b)
        if b not in self._adj[a]:
            raise KeyError(f"no edge between {a} and {b}")
        affected = self._ring_neighborhood(a, b)
        self._remove_edge_raw(a, b)
        for u in affected:
            self._recompute_ring(u)

    def age_incident_edges(self, b: int, increment: int, exclude: int | None = None) -> int:
        """Add ``increment`` to every edge incident to b.

        ``exclude`` names one neighbor whose shared edge is left untouched
        (used for the edge that was reset in the same update step).
        Returns the largest resulting age among the touched edges.
        """
        self._require(b)
        if increment < 0:
            raise ValueError("increment must be >= 0")
        nbrs = self._adj[b]
        limit = self._watch_limit
        top = 0
        for nb, age in nbrs.items():
            if nb == exclude:
                continue
            new_age = age + increment
            nbrs[nb] = new_age
            self._adj[nb][b] = new_age
            if new_age > top:
                top = new_age
            if limit is not None and new_age > limit and age <= limit:
                self._overage.add(self._edge_key(b, nb))
        if top > self._age_hint:
            self._age_hint = top
        return top

    def prune(self, max_age: int, removed_units: list[int] | None = None) -> tuple[int, int]:
        """Drop edges older than ``max_age``, then drop edge-less units.

        Unit removal stops before the network would shrink below 2 units
        (it must stay seedable). Removed unit ids are appended to
        ``removed_units`` when a list is given.
        """
        if max_age < 0:
            raise ValueError("max_age must be >= 0")
        watched = self._watch_limit is not None and max_age == self._watch_limit
        if watched:
            if not self._overage and self._isolated == 0:
                return (0, 0)
            overage = sorted(self._overage)
        else:
            if self._age_hint <= max_age and self._isolated == 0:
                return (0, 0)
            overage = [
                (a, b)
                for a, nbrs in self._adj.items()
                for b, age in nbrs.items()
                if a < b and age > max_age
            ]
        affected: set[int] = set()
        for a, b in overage:
            affected.update(self._ring_neighborhood(a, b))
            self._remove_edge_raw(a, b)
        if not watched:
            hint = 0
            for a, nbrs in self._adj.items():
                for age in nbrs.values():
                    if age > hint:
                        hint = age
            self._age_hint = hint
        units_removed = 0
        if self._isolated:
            lonely = sorted(u for u, nbrs in self._adj.items() if not nbrs)
            for u in lonely:
                if self._n <= 2:
                    break
                self._remove_unit_raw(u)
                affected.discard(u)
                if removed_units is not None:
                    removed_units.append(u)
                units_removed += 1
        for u in affected:
            if u in self._adj:
                self._recompute_ring(u)
        return (len(overage), units_removed)

    # ------------------------------------------------------------------
    # ring classification

    def link_ring(self, unit_id: int) -> RingClass:
        """Classification of the subgraph induced on the unit's neighbors."""
        self._require(unit_id)
        return self._ring[unit_id]

    def _classify_ring(self, unit_id: int) -> RingClass:
        nbs = self._adj[unit_id]
        k = len(nbs)
        if k < 2:
            return RingClass.INCONSISTENT
        deg1 = 0
        deg2 = 0
        for v in nbs:
            d = 0
            for w in self._adj[v]:
                if w in nbs:
                    d += 1
                    if d > 2:
                        return RingClass.INCONSISTENT
            if d == 1:
                deg1 += 1
            elif d == 2:
                deg2 += 1
            else:  # d == 0: cannot be part of one cycle/path over all neighbors
                return RingClass.INCONSISTENT
        if deg1 == 0 and deg2 == k and k >= 3:
            shape = RingClass.DISK
        elif deg1 == 2 and deg1 + deg2 == k:
            shape = RingClass.HALF_DISK
        else:
            return RingClass.INCONSISTENT
        # one cycle/path only if the induced subgraph is connected
        stack = [next(iter(nbs))]
        seen = {stack[0]}
        while stack:
            v = stack.pop()
            for w in self._adj[v]:
                if w in nbs and w not in seen:
                    seen.add(w)
                    stack.append(w)
        return shape if len(seen) == k else RingClass.INCONSISTENT

    def _recompute_ring(self, unit_id: int) -> None:
        new = self._classify_ring(unit_id)
        old = self._ring[unit_id]
        if new is not old:
            self._ring[unit_id] = new
            self._ring_counts[old] -= 1
            self._ring_counts[new] += 1

    def _ring_neighborhood(self, a: int, b: int) -> set[int]:
        """Units whose ring can change when edge (a, b) is added or removed."""
        adj_a = self._adj[a]
        adj_b = self._adj[b]
        if len(adj_a) > len(adj_b):
            adj_a, adj_b = adj_b, adj_a
        common = {u for u in adj_a if u in adj_b}
        common.add(a)
        common.add(b)
        return common

    # ------------------------------------------------------------------
    # internals

    def _require(self, unit_id: int) -> int:
        try:
            return self._row[unit_id]
        except (KeyError, TypeError):
            raise UnknownUnitError(f"unit {unit_id!r} is not alive") from None

    def _grow(self) -> None:
        cap = max(self._ids.shape[0] * 2, _INITIAL_CAPACITY)
        for name in ("_ids", "_pos", "_hab", "_theta"):
            old = getattr(self, name)
            new = np.zeros((cap,) + old.shape[1:], dtype=old.dtype)
            new[: self._n] = old[: self._n]
            setattr(self, name, new)
        self._version += 1

    def _remove_edge_raw(self, a: int, b: int) -> None:
        if self._watch_limit is not None and self._adj[a][b] > self._watch_limit:
            self._overage.discard(self._edge_key(a, b))
        del self._adj[a][b]
        del self._adj[b][a]
        self._n_edges -= 1
        if not self._adj[a]:
            self._isolated += 1
        if not self._adj[b]:
            self._isolated += 1

    def _remove_unit_raw(self, unit_id: int) -> None:
        # precondition: no incident edges
        row = self._row.pop(unit_id)
        n = self._n
        if row < n - 1:
            self._ids[row : n - 1] = self._ids[row + 1 : n]
            self._pos[row : n - 1] = self._pos[row + 1 : n]
            self._hab[row : n - 1] = self._hab[row + 1 : n]
            self._theta[row : n - 1] = self._theta[row + 1 : n]
            for i in range(row, n - 1):
                self._row[int(self._ids[i])] = i
        self._n = n - 1
        del self._adj[unit_id]
        cls = self._ring.pop(unit_id)
        self._ring_counts[cls] -= 1
        self._isolated -= 1
        self._version += 1

    # ------------------------------------------------------------------
    # consistency checking / copying

    def audit(self) -> None:
        """Verify every structural invariant; raises AssertionError on damage."""
        n = self._n
        assert n == len(self._row) == len(self._adj) == len(self._ring)
        ids = self._ids[:n]
        assert np.all(np.diff(ids) > 0), "ids must be strictly increasing"
        assert np.all(np.isfinite(self._pos[:n])), "positions must be finite"
        assert np.all((self._hab[:n] >= 0.0) & (self._hab[:n] <= 1.0))
        assert np.all(self._theta[:n] > 0.0)
        for i in range(n):
            assert self._row[int(ids[i])] == i
        edge_halves = 0
        max_age = 0
        isolated = 0
        for a, nbrs in self._adj.items():
            assert a in self._row, f"dangling adjacency for {a}"
            if not nbrs:
                isolated += 1
            for b, age in nbrs.items():
                assert a != b, "self loop"
                assert b in self._row, f"edge {a}-{b} has a dead endpoint"
                assert self._adj[b][a] == age, "asymmetric edge age"
                assert age >= 0
                max_age = max(max_age, age)
                edge_halves += 1
        assert edge_halves == 2 * self._n_edges
        assert isolated == self._isolated
        assert self._age_hint >= max_age
        if self._watch_limit is not None:
            fresh = {
                (a, b)
                for a, nbrs in self._adj.items()
                for b, age in nbrs.items()
                if a < b and age > self._watch_limit
            }
            assert fresh == self._overage, "over-age registry out of sync"
        counts = {cls: 0 for cls in RingClass}
        for uid, cached in self._ring.items():
            fresh = self._classify_ring(uid)
            assert cached is fresh, f"stale ring class for {uid}: {cached} != {fresh}"
            counts[cached] += 1
        assert counts == self._ring_counts

    def clone(self) -> "Network":
        other = Network.__new__(Network)
        other._ids = self._ids[: self._n].copy()
        other._pos = self._pos[: self._n].copy()
        other._hab = self._hab[: self._n].copy()
        other._theta = self._theta[: self._n].copy()
        other._n = self._n
        other._row = dict(self._row)
        other._adj = {a: dict(nbrs) for a, nbrs in self._adj.items()}
        other._next_id = self._next_id
        other._n_edges = self._n_edges
        other._ring = dict(self._ring)
        other._ring_counts = dict(self._ring_counts)
        other._age_hint = self._age_hint
        other._isolated = self._isolated
        other._version = 0
        other._watch_limit = self._watch_limit
        other._overage = set(self._overage)
        return other
