"""Surface reconstruction from point clouds with growing self-organizing networks.

Four engine variants share one network model and one benchmark harness:
a single-signal engine with exhaustive winner search, the same engine
with a spatial hash grid, a multi-signal engine processing one batch per
iteration, and the multi-signal engine with a data-parallel batch scan.
"""

from growsurf.engine import (
    EngineParams,
    WinnerResult,
    find_winners_exhaustive,
    is_converged,
    run,
    update_single,
)
from growsurf.grid import HashGrid
from growsurf.metrics import (
    RunStats,
    TriMesh,
    extract_mesh,
    genus,
    manifold_check,
    quantization_error,
    write_stats_csv,
)
from growsurf.multi import (
    BatchOutcome,
    batch_find_winners,
    batch_size,
    resolve_and_update,
    run_multi,
    sequential_executor,
)
from growsurf.network import Network, RingClass, Snapshot, StateError, UnknownUnitError
from growsurf.parallel import ExecConfig, parallel_batch_find_winners, parallel_executor, timed_find
from growsurf.sampling import (
    CloudSource,
    MeshSource,
    SphereSource,
    TorusSource,
    load_off,
    load_xyz,
    save_off,
    save_xyz,
)

__version__ = "0.1.0"

__all__ = [
    "BatchOutcome",
    "CloudSource",
    "EngineParams",
    "ExecConfig",
    "HashGrid",
    "MeshSource",
    "Network",
    "RingClass",
    "RunStats",
    "Snapshot",
    "SphereSource",
    "StateError",
    "TorusSource",
    "TriMesh",
    "UnknownUnitError",
    "WinnerResult",
    "batch_find_winners",
    "batch_size",
    "extract_mesh",
    "find_winners_exhaustive",
    "genus",
    "is_converged",
    "load_off",
    "load_xyz",
    "manifold_check",
    "parallel_batch_find_winners",
    "parallel_executor",
    "quantization_error",
    "resolve_and_update",
    "run",
    "run_multi",
    "save_off",
    "save_xyz",
    "sequential_executor",
    "timed_find",
    "update_single",
    "write_stats_csv",
]
