"""Distance-scan kernels: compiled extension when available, NumPy otherwise.

Both backends expose the same two functions with identical semantics and
bitwise-identical outputs:

    best_two_single(pos, n, x, y, z) -> (row1, row2, d2_1, d2_2)
    scan_best_two_into(pos, n, signals, out_idx, out_d2, tile) -> None

The active backend is chosen once at import; ``get_backend`` gives tests
and benchmarks explicit access to either implementation.
"""

from __future__ import annotations

from growsurf.kernels import fallback

try:
    from growsurf.kernels import _scan as compiled
except ImportError:  # extension not built; pure NumPy lane
    compiled = None

HAVE_COMPILED = compiled is not None

DEFAULT_BACKEND_NAME = "compiled" if HAVE_COMPILED else "python"

_BACKENDS = {"python": fallback}
if HAVE_COMPILED:
    _BACKENDS["compiled"] = compiled


def get_backend(name: str | None = None):
    """Resolve a backend by name: "compiled", "python", or None for the default."""
    if name is None or name == "auto":
        return _BACKENDS[DEFAULT_BACKEND_NAME]
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown backend {name!r}; available: {sorted(_BACKENDS)}"
        ) from None


def available_backends() -> list[str]:
    return sorted(_BACKENDS)
