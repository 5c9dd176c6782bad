"""Optional numba acceleration.

Set ``COPULA_CCVAR_DISABLE_NUMBA=1`` to force the pure-numpy kernels, e.g.
for debugging or on platforms without an LLVM toolchain.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is optional at runtime
    numba = None

_DISABLED = os.environ.get("COPULA_CCVAR_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

USE_NUMBA = numba is not None and not _DISABLED


def njit(func):
    """``numba.njit(cache=True)`` when available, otherwise the function itself."""
    if numba is None:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
