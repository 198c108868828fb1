"""Multi-signal engine: batched winner search with winner-locked updates.

Each iteration samples a batch of m signals, finds every signal's two
nearest units against one frozen snapshot, then applies the single-signal
update per signal in batch order. A unit may be claimed as winner by only
one signal per batch; signals whose winner is already claimed, or whose
winner or second died earlier in the batch, are discarded. The batch size
is the smallest power of two strictly above the unit count, clamped to
[batch_floor, batch_cap].
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from growsurf import kernels
from growsurf.engine import EngineParams, RunState, WinnerResult, is_converged, update_single
from growsurf.metrics import PhaseTimer, RunStats
from growsurf.network import Network, Snapshot, StateError

__all__ = [
    "BatchOutcome",
    "batch_size",
    "batch_find_winners",
    "resolve_and_update",
    "sequential_executor",
    "run_multi",
]


@dataclass(frozen=True)
class BatchOutcome:
    """Accounting for one resolved batch: processed + discarded = m."""

    processed: int
    discarded: int
    inserted_units: int


def batch_size(units: int, cap: int = 8192, floor: int = 64) -> int:
    """Smallest power of two strictly greater than ``units``, clamped.

    The cap wins over the strictly-greater rule; the floor keeps early
    batches meaningful.
    """
    if units < 0:
        raise ValueError("unit count must be >= 0")
    if not (1 <= floor <= cap):
        raise ValueError("need 1 <= floor <= cap")
    m = 1 << int(units).bit_length()
    return min(max(m, floor), cap)


def _scan_batch(snapshot: Snapshot, signals: np.ndarray, backend=None, tile: int | None = None):
    n = len(snapshot)
    if n < 2:
        raise StateError(f"need at least 2 units to find winners, have {n}")
    kb = backend if backend is not None else kernels.get_backend()
    signals = np.ascontiguousarray(signals, dtype=np.float64).reshape(-1, 3)
    m = signals.shape[0]
    out_idx = np.empty((m, 2), dtype=np.int64)
    out_d2 = np.empty((m, 2), dtype=np.float64)
    kb.scan_best_two_into(snapshot.positions, n, signals, out_idx, out_d2,
                          n if tile is None else tile)
    return out_idx, out_d2


def _to_results(snapshot: Snapshot, out_idx, out_d2) -> list[WinnerResult]:
    ids = snapshot.ids
    sqrt = math.sqrt
    return [
        WinnerResult(int(ids[i1]), int(ids[i2]), sqrt(d1), sqrt(d2))
        for (i1, i2), (d1, d2) in zip(out_idx, out_d2)
    ]


def batch_find_winners(snapshot: Snapshot, batch, backend=None, tile: int | None = None) -> list[WinnerResult]:
    """Winner pair for every signal in the batch, in batch order.

    Pure: element j equals ``find_winners_exhaustive(snapshot, batch[j])``.
    """
    out_idx, out_d2 = _scan_batch(snapshot, batch, backend=backend, tile=tile)
    return _to_results(snapshot, out_idx, out_d2)


def sequential_executor(backend=None, tile: int | None = None):
    """Executor running the batch scan on the calling thread."""

    def execute(snapshot: Snapshot, batch) -> list[WinnerResult]:
        return batch_find_winners(snapshot, batch, backend=backend, tile=tile)

    return execute


def resolve_and_update(
    net: Network,
    params: EngineParams,
    batch,
    winners: list[WinnerResult],
    state: RunState | None = None,
    grid=None,
) -> BatchOutcome:
    """Apply updates in batch order under the winner lock.

    A signal is discarded when its winner was already claimed this batch,
    or when its winner or second-nearest died from an earlier update in
    the same batch. Units inserted during the batch can never be winners
    here because winners were resolved against the pre-batch snapshot.
    """
    if state is None:
        state = RunState()
    created_before = net.next_id
    claimed: set[int] = set()
    processed = 0
    discarded = 0
    for j, wr in enumerate(winners):
        w = wr.winner
        if w in claimed:
            discarded += 1
            continue
        if not (net.is_alive(w) and net.is_alive(wr.second)):
            discarded += 1
            continue
        claimed.add(w)
        update_single(net, params, batch[j], wr, state, grid)
        processed += 1
    return BatchOutcome(processed, discarded, net.next_id - created_before)


def run_multi(
    source,
    params: EngineParams,
    seed: int,
    executor=None,
    *,
    variant: str = "multi",
    dataset: str | None = None,
):
    """Run the multi-signal engine to convergence or the signal cap.

    ``executor`` maps (snapshot, batch) to a list of WinnerResult; it
    defaults to the sequential scan. Convergence is evaluated once per
    batch, and iterations count batches.
    """
    if executor is None:
        executor = sequential_executor()
    rng = np.random.Generator(np.random.Philox(seed))
    net = Network()
    net.watch_age_limit(params.max_age)
    seeds = source.sample(rng, 2)
    for k in range(2):
        net.add_unit(seeds[k], params.theta0)

    state = RunState()
    timer = PhaseTimer()
    signals = 0
    discarded = 0
    iterations = 0
    converged = False

    perf = time.perf_counter
    t_start = perf()
    while signals < params.max_signals:
        m = batch_size(net.unit_count, params.batch_cap, params.batch_floor)
        t0 = perf()
        batch = source.sample(rng, m)
        t1 = perf()
        winners = executor(net.snapshot(), batch)
        t2 = perf()
        outcome = resolve_and_update(net, params, batch, winners, state)
        t3 = perf()
        timer.sample_s += t1 - t0
        timer.find_s += t2 - t1
        timer.update_s += t3 - t2
        signals += m
        discarded += outcome.discarded
        iterations += 1
        if is_converged(net, params):
            converged = True
            break
    total = perf() - t_start

    stats = RunStats(
        variant=variant,
        dataset=dataset or getattr(source, "label", "unknown"),
        seed=seed,
        iterations=iterations,
        signals=signals,
        discarded=discarded,
        units=net.unit_count,
        connections=net.edge_count,
        total_s=total,
        sample_s=timer.sample_s,
        find_s=timer.find_s,
        update_s=timer.update_s,
        converged=converged,
    )
    return net, stats
