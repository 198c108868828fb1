"""Single-signal reconstruction engine.

One iteration: draw a signal, find the nearest and second-nearest units
(exhaustively or through the spatial hash grid), then update the network:
connect or reset the winner pair, age the winner's other edges, pull the
winner and its neighbors toward the signal, decay their habituation,
insert a new unit when the winner is both far and well trained, prune
over-age edges, and adapt the winner's insertion threshold. The run stops
when every unit is habituated and has a disk-shaped neighbor ring.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from growsurf import kernels
from growsurf.metrics import PhaseTimer, RunStats
from growsurf.network import Network, RingClass, Snapshot, StateError

__all__ = [
    "EngineParams",
    "WinnerResult",
    "find_winners_exhaustive",
    "adapt",
    "habituate",
    "maybe_insert",
    "adapt_threshold",
    "update_single",
    "is_converged",
    "run",
]


@dataclass
class EngineParams:
    """Shared run parameters.

    eps_b / eps_n: learning rates for the winner and its neighbors.
    theta0: initial insertion threshold (also the default grid cell edge).
    max_age: edges older than this are pruned.
    tau_b / tau_n: habituation decay for the winner / its neighbors.
    h_t: habituation below which a unit counts as trained.
    rho: shrink factor applied to a unit's threshold after ring_patience
        consecutive trained wins with an inconsistent ring.
    max_signals: hard cap on sampled signals per run.
    allow_boundary: accept half-disk rings at convergence (open surfaces).
    batch_cap / batch_floor: clamp for the multi-signal batch size.
    cube: grid cell edge for the indexed variant (defaults to theta0).
    """

    eps_b: float = 0.1
    eps_n: float = 0.01
    theta0: float = 0.2
    max_age: int = 200
    tau_b: float = 0.05
    tau_n: float = 0.005
    h_t: float = 0.3
    rho: float = 0.8
    ring_patience: int = 500
    max_signals: int = 5_000_000
    allow_boundary: bool = False
    batch_cap: int = 8192
    batch_floor: int = 64
    cube: float | None = None
    stale_factor: int = 30

    def __post_init__(self):
        if not (0.0 <= self.eps_n < self.eps_b <= 1.0):
            raise ValueError("need 0 <= eps_n < eps_b <= 1")
        if not (self.theta0 > 0.0 and math.isfinite(self.theta0)):
            raise ValueError("theta0 must be positive and finite")
        if self.max_age < 0:
            raise ValueError("max_age must be >= 0")
        for name in ("tau_b", "tau_n", "h_t", "rho"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.ring_patience < 1:
            raise ValueError("ring_patience must be >= 1")
        if self.max_signals < 1:
            raise ValueError("max_signals must be >= 1")
        if not (1 <= self.batch_floor <= self.batch_cap):
            raise ValueError("need 1 <= batch_floor <= batch_cap")
        if self.cube is not None and not (self.cube > 0.0):
            raise ValueError("cube must be positive")
        if self.stale_factor < 1:
            raise ValueError("stale_factor must be >= 1")

    @property
    def grid_cube(self) -> float:
        return self.theta0 if self.cube is None else self.cube


_SWEEP_EVERY = 1024


class RunState:
    """Cross-update bookkeeping for one run.

    patience: per-unit count of consecutive trained wins with an
        inconsistent ring (drives threshold shrinking).
    last_active: per-unit tick of the last top-two appearance; units that
        stay out of the competition for stale_factor * max(V, 100) updates
        are swept away. Winner-driven edge aging cannot reach units that
        stopped winning, so without the sweep a pair of abandoned units
        linked to each other would survive forever and block convergence.
    """

    __slots__ = ("patience", "last_active", "tick", "next_sweep")

    def __init__(self):
        self.patience: dict[int, int] = {}
        self.last_active: dict[int, int] = {}
        self.tick = 0
        self.next_sweep = _SWEEP_EVERY


class WinnerResult:
    """Nearest (winner) and second-nearest unit for one signal."""

    __slots__ = ("winner", "second", "d_winner", "d_second")

    def __init__(self, winner: int, second: int, d_winner: float, d_second: float):
        self.winner = winner
        self.second = second
        self.d_winner = d_winner
        self.d_second = d_second

    def __repr__(self):
        return (
            f"WinnerResult(winner={self.winner}, second={self.second}, "
            f"d_winner={self.d_winner!r}, d_second={self.d_second!r})"
        )

    def __eq__(self, other):
        return (
            isinstance(other, WinnerResult)
            and self.winner == other.winner
            and self.second == other.second
            and self.d_winner == other.d_winner
            and self.d_second == other.d_second
        )


def find_winners_exhaustive(snapshot: Snapshot, signal, backend=None) -> WinnerResult:
    """Scan every unit; ties go to the lower unit id."""
    n = len(snapshot)
    if n < 2:
        raise StateError(f"need at least 2 units to find winners, have {n}")
    kb = backend if backend is not None else kernels.get_backend()
    x, y, z = float(signal[0]), float(signal[1]), float(signal[2])
    r1, r2, d1, d2 = kb.best_two_single(snapshot.positions, n, x, y, z)
    ids = snapshot.ids
    return WinnerResult(int(ids[r1]), int(ids[r2]), math.sqrt(d1), math.sqrt(d2))


def adapt(net: Network, signal, winner: int, eps_b: float, eps_n: float) -> None:
    """Pull the winner (rate eps_b) and its neighbors (rate eps_n) toward the signal."""
    brow = net.row_of(winner)
    _, pos, _, _ = net.state_arrays()
    xi = np.asarray(signal, dtype=np.float64)
    pos[brow] += eps_b * (xi - pos[brow])
    nbs = net.neighbors(winner)
    if nbs:
        rows = np.fromiter((net.row_of(v) for v in nbs), dtype=np.intp, count=len(nbs))
        pos[rows] += eps_n * (xi - pos[rows])


def habituate(net: Network, winner: int, tau_b: float, tau_n: float) -> None:
    """Decay habituation of the winner (tau_b) and its neighbors (tau_n)."""
    brow = net.row_of(winner)
    _, _, hab, _ = net.state_arrays()
    hab[brow] *= 1.0 - tau_b
    nbs = net.neighbors(winner)
    if nbs:
        rows = np.fromiter((net.row_of(v) for v in nbs), dtype=np.intp, count=len(nbs))
        hab[rows] *= 1.0 - tau_n


def maybe_insert(net: Network, params: EngineParams, signal, wr: WinnerResult, grid=None) -> bool:
    """Insert a unit halfway between winner and signal when the winner is
    far (beyond its threshold) and trained (habituation below h_t)."""
    b = wr.winner
    s = wr.second
    if not (net.is_alive(b) and net.is_alive(s)):
        raise StateError(f"stale winner result ({b}, {s})")
    brow = net.row_of(b)
    _, pos, hab, theta = net.state_arrays()
    theta_b = float(theta[brow])
    if not (wr.d_winner > theta_b and float(hab[brow]) < params.h_t):
        return False
    xi = np.asarray(signal, dtype=np.float64)
    midpoint = (pos[brow] + xi) * 0.5
    r = net.add_unit(midpoint, theta_b)
    net.connect_or_reset(r, b)
    net.connect_or_reset(r, s)
    if net.has_edge(b, s):
        net.remove_edge(b, s)
    if grid is not None:
        grid.insert(r, midpoint)
    return True


def adapt_threshold(
    net: Network, params: EngineParams, winner: int, patience: dict[int, int]
) -> None:
    """Shrink the winner's threshold after ring_patience consecutive trained
    wins with a stuck ring; a ring of the target shape resets the count.

    Half-disks count as stuck when a closed surface is demanded: a ring
    that stays a path for hundreds of trained wins is a frustrated
    near-degenerate spot that only local refinement resolves.
    """
    ring = net.link_ring(winner)
    settled = ring is RingClass.DISK or (
        params.allow_boundary and ring is RingClass.HALF_DISK
    )
    if settled:
        patience[winner] = 0
        return
    brow = net.row_of(winner)
    _, _, hab, theta = net.state_arrays()
    if float(hab[brow]) >= params.h_t:
        return
    # only count wins in settled regions: a fresh neighbor means local
    # wiring is still in progress, not that refinement is needed
    for v in net.neighbors(winner):
        if float(hab[net.row_of(v)]) >= params.h_t:
            return
    count = patience.get(winner, 0) + 1
    if count >= params.ring_patience:
        theta[brow] *= params.rho
        count = 0
    patience[winner] = count


def _adapt_threshold_fast(
    net: Network,
    params: EngineParams,
    winner: int,
    patience: dict[int, int],
    brow: int,
    rows: np.ndarray,
) -> None:
    """adapt_threshold with the winner's neighbor rows already gathered.

    Valid only when the topology is unchanged since the gather (no
    insertion, pruning, or sweep in this update).
    """
    ring = net.link_ring(winner)
    if ring is RingClass.DISK or (params.allow_boundary and ring is RingClass.HALF_DISK):
        patience[winner] = 0
        return
    hab = net._hab
    if hab[brow] >= params.h_t or float(hab[rows].max()) >= params.h_t:
        return
    count = patience.get(winner, 0) + 1
    if count >= params.ring_patience:
        net._theta[brow] *= params.rho
        count = 0
    patience[winner] = count


def _sweep_stale(net: Network, params: EngineParams, state: RunState, grid=None) -> None:
    horizon = params.stale_factor * max(net.unit_count, 100)
    cutoff = state.tick - horizon
    if cutoff <= 0:
        return
    stale = [u for u, t in state.last_active.items() if t < cutoff]
    for u in stale:
        del state.last_active[u]
        state.patience.pop(u, None)
        if net.is_alive(u) and net.unit_count > 2:
            net.remove_unit(u)
            if grid is not None:
                grid.remove(u)


def update_single(
    net: Network,
    params: EngineParams,
    signal,
    wr: WinnerResult,
    state: RunState | None = None,
    grid=None,
) -> None:
    """One full network update for one signal, in fixed order.

    Semantically this is connect_or_reset, age_incident_edges, adapt,
    habituate, maybe_insert, prune, adapt_threshold; the body fuses the
    array passes (same arithmetic, element for element).
    """
    b = wr.winner
    s = wr.second
    if not (net.is_alive(b) and net.is_alive(s)):
        raise StateError(f"stale winner result ({b}, {s})")
    if state is None:
        state = RunState()
    tick = state.tick + 1
    state.tick = tick
    state.last_active[b] = tick
    state.last_active[s] = tick
    net.connect_or_reset(b, s)
    net.age_incident_edges(b, 1, exclude=s)

    # adapt + habituate share the winner's neighbor rows
    row_of = net._row
    brow = row_of[b]
    pos = net._pos
    hab = net._hab
    xi = signal if isinstance(signal, np.ndarray) else np.asarray(signal, dtype=np.float64)
    winner_pos = pos[brow]
    eps_b = params.eps_b
    winner_pos[0] += eps_b * (xi[0] - winner_pos[0])
    winner_pos[1] += eps_b * (xi[1] - winner_pos[1])
    winner_pos[2] += eps_b * (xi[2] - winner_pos[2])
    hab[brow] *= 1.0 - params.tau_b
    nbs = net._adj[b]
    rows = None
    if nbs:
        rows = np.fromiter((row_of[v] for v in nbs), dtype=np.intp, count=len(nbs))
        moved = pos[rows]
        moved += params.eps_n * (xi - moved)
        pos[rows] = moved
        hab[rows] *= 1.0 - params.tau_n
    if grid is not None:
        grid.relocate(b, winner_pos)
        for v in nbs:
            grid.relocate(v, pos[row_of[v]])

    inserted = False
    if wr.d_winner > net._theta[brow] and hab[brow] < params.h_t:
        inserted = maybe_insert(net, params, xi, wr, grid=grid)
        if inserted:
            state.last_active[net.next_id - 1] = tick
    removed: list[int] | None = [] if grid is not None else None
    pruned_edges, pruned_units = net.prune(params.max_age, removed_units=removed)
    if removed:
        for u in removed:
            grid.remove(u)
    swept = False
    if tick >= state.next_sweep:
        units_before = net.unit_count
        _sweep_stale(net, params, state, grid)
        state.next_sweep = tick + _SWEEP_EVERY
        swept = net.unit_count != units_before
    if net.is_alive(b):
        if inserted or pruned_edges or pruned_units or swept or rows is None:
            adapt_threshold(net, params, b, state.patience)
        else:
            _adapt_threshold_fast(net, params, b, state.patience, brow, rows)


def is_converged(net: Network, params: EngineParams) -> bool:
    """All units trained (h < h_t) and every ring a disk (half-disks too
    when boundaries are allowed); needs at least 4 units."""
    if net.unit_count < 4:
        return False
    if not net.all_rings_surface(params.allow_boundary):
        return False
    return net.max_habituation() < params.h_t


def run(
    source,
    params: EngineParams,
    seed: int,
    *,
    use_grid: bool = False,
    backend=None,
    checkpoints=(),
    variant: str | None = None,
    dataset: str | None = None,
):
    """Run the single-signal engine to convergence or the signal cap.

    Returns (network, stats). ``checkpoints`` is an optional increasing
    sequence of unit counts; when the network first reaches each count, a
    (units, signals, sample_s, find_s, update_s, total_s) tuple is recorded
    on ``stats.checkpoints``.
    """
    from growsurf.grid import HashGrid  # deferred: grid imports engine types

    rng = np.random.Generator(np.random.Philox(seed))
    kb = backend if backend is not None else kernels.get_backend()
    net = Network()
    net.watch_age_limit(params.max_age)
    seeds = source.sample(rng, 2)
    for k in range(2):
        net.add_unit(seeds[k], params.theta0)

    grid = None
    if use_grid:
        lo, hi = source.bounds()
        grid = HashGrid(lo, hi, params.grid_cube)
        for uid in net.unit_ids():
            grid.insert(uid, net.position(uid))

    state = RunState()
    timer = PhaseTimer()
    signals = 0
    converged = False
    cps = list(checkpoints)
    cp_records = []
    version = -1
    ids = pos = None
    n = 0

    perf = time.perf_counter
    t_start = perf()
    while signals < params.max_signals:
        t0 = perf()
        xi = source.sample(rng, 1)[0]
        t1 = perf()
        if net.version != version:
            ids, pos, _, _ = net.state_arrays()
            n = net.unit_count
            version = net.version
        if grid is not None:
            wr = grid.query_winners(net.snapshot(copy=False), xi, backend=kb)
        else:
            r1, r2, d1, d2 = kb.best_two_single(pos, n, xi[0], xi[1], xi[2])
            wr = WinnerResult(int(ids[r1]), int(ids[r2]), math.sqrt(d1), math.sqrt(d2))
        t2 = perf()
        update_single(net, params, xi, wr, state, grid)
        t3 = perf()
        timer.sample_s += t1 - t0
        timer.find_s += t2 - t1
        timer.update_s += t3 - t2
        signals += 1
        while cps and net.unit_count >= cps[0]:
            cp_records.append(
                (net.unit_count, signals, timer.sample_s, timer.find_s,
                 timer.update_s, perf() - t_start)
            )
            cps.pop(0)
        if is_converged(net, params):
            converged = True
            break
    total = perf() - t_start

    stats = RunStats(
        variant=variant or ("indexed" if use_grid else "single"),
        dataset=dataset or getattr(source, "label", "unknown"),
        seed=seed,
        iterations=signals,
        signals=signals,
        discarded=0,
        units=net.unit_count,
        connections=net.edge_count,
        total_s=total,
        sample_s=timer.sample_s,
        find_s=timer.find_s,
        update_s=timer.update_s,
        converged=converged,
    )
    stats.checkpoints = cp_records
    return net, stats
