"""JIT switch for the hot kernels.

Kernels are compiled with ``numba.njit`` when numba imports and the
``PORTSTOW_JIT`` environment variable is not set to ``0``.  Otherwise every
kernel runs as plain Python/numpy with identical results (same RNG draws,
same summation order).
"""

import os

_flag = os.environ.get("PORTSTOW_JIT", "1").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

JIT_ENABLED = numba is not None and _flag not in ("0", "false", "no", "off")


def jit(func):
    """Compile ``func`` in nopython mode, or return it untouched."""
    if JIT_ENABLED:
        return numba.njit(cache=True)(func)
    return func
