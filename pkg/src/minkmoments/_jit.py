"""Optional numba acceleration.

Set ``MINKMOMENTS_DISABLE_NUMBA=1`` to force the pure-numpy kernels, e.g. to
compare timings or to run where numba is unavailable.
"""
import os
import warnings

_FALSY = {"", "0", "false", "no", "off"}

DISABLED = os.environ.get("MINKMOMENTS_DISABLE_NUMBA", "0").strip().lower() not in _FALSY

try:
    if DISABLED:
        raise ImportError("disabled by MINKMOMENTS_DISABLE_NUMBA")
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError as exc:  # pragma: no cover - depends on environment
    HAVE_NUMBA = False
    if not DISABLED:
        warnings.warn(f"numba unavailable ({exc}); using numpy kernels")

numba_default = {
    "nogil": True,
    "cache": True,
    "fastmath": False,  # summation order and rounding must stay reproducible
    "error_model": "numpy",
}


def maybe_njit(func):
    """Compile ``func`` with numba when enabled, else return ``None``.

    Callers keep a numpy implementation next to each loop kernel and pick
    whichever exists; a plain-Python loop over millions of entries is never
    a useful fallback.
    """
    if not HAVE_NUMBA:
        return None
    return _njit(**numba_default)(func)
