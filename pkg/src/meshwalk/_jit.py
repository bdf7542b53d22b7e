"""Optional numba acceleration.

Kernels in :mod:`meshwalk.kernels` exist in two flavours: an ``@njit`` loop
version and a vectorized numpy version that produces bit-identical results.
The loop version is used when numba imports cleanly, unless
``MESHWALK_DISABLE_JIT=1`` is set in the environment (read once, at import).
"""
import os

DISABLED = os.environ.get("MESHWALK_DISABLE_JIT", "").strip().lower() in ("1", "true", "yes", "on")

try:
    import numba

    NUMBA_AVAILABLE = True
    njit = numba.njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrapper(f):
            return f

        return wrapper


USE_NUMBA = NUMBA_AVAILABLE and not DISABLED


def backend():
    """Name of the active kernel backend: ``"numba"`` or ``"numpy"``."""
    return "numba" if USE_NUMBA else "numpy"
