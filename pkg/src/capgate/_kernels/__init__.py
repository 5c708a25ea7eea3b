"""Hot-loop kernels with backend selection.

Imports the compiled extension when present, otherwise falls back to the
numpy implementations. Set CAPGATE_PURE=1 to force the pure backend (used
by the benchmark and the backend-equivalence tests). Both backends expose
the same functions and agree to floating-point roundoff; random number
generation never happens here, so the backend choice cannot change which
samples a simulation sees.
"""

from __future__ import annotations

import os

from . import _fallback

__all__ = ["BACKEND", "row_stats", "row_capability"]

_force_pure = os.environ.get("CAPGATE_PURE", "").strip().lower() in {"1", "true", "yes"}

if not _force_pure:
    try:
        from . import _native as _impl

        BACKEND = "native"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"
else:
    _impl = _fallback
    BACKEND = "python"

row_stats = _impl.row_stats
row_capability = _impl.row_capability
