"""Float64/int64 hot loops: Stern blocks, box-power sums and log sums.

Every kernel has a numba loop and a vectorised numpy twin.  The public
wrappers pick numba unless it is disabled (see :mod:`minkmoments._jit`);
pass ``impl="numpy"`` or ``impl="numba"`` to force one.
"""
from __future__ import annotations

import math

import numpy as np

from ._jit import HAVE_NUMBA, maybe_njit

__all__ = [
    "HAVE_NUMBA",
    "stern_range",
    "box_power_sums",
    "log_sum",
    "resolve_impl",
]

# s(n) <= n, so int64 is safe for every index below 2**62
_MAX_START_BITS = 62


def resolve_impl(impl: str | None) -> str:
    if impl is None:
        return "numba" if HAVE_NUMBA else "numpy"
    if impl not in ("numba", "numpy"):
        raise ValueError(f"unknown kernel implementation {impl!r}")
    if impl == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba kernels requested but numba is disabled")
    return impl


def _stern_scalar(n: int) -> int:
    a, b = 1, 0
    while n:
        if n & 1:
            b += a
        else:
            a += b
        n >>= 1
    return b


def _stern_range_loop(start, count, s0, s1, out):
    # Newman-style successor: s(n+2) = s(n) + s(n+1) - 2 (s(n) mod s(n+1))
    if count > 0:
        out[0] = s0
    if count > 1:
        out[1] = s1
    a = s0
    b = s1
    for i in range(2, count):
        c = a + b - 2 * (a % b)
        out[i] = c
        a = b
        b = c
    return out


_stern_range_nb = maybe_njit(_stern_range_loop)


def _stern_range_np(start: int, count: int) -> np.ndarray:
    n = np.arange(start, start + count, dtype=np.int64)
    a = np.ones(count, dtype=np.int64)
    b = np.zeros(count, dtype=np.int64)
    nbits = max(int(start + count - 1).bit_length(), 1)
    for _ in range(nbits):
        odd = (n & 1).astype(bool)
        b = np.where(odd, b + a, b)
        a = np.where(odd, a, a + b)
        n >>= 1
    return b


def stern_range(start: int, count: int, impl: str | None = None) -> np.ndarray:
    """s(start), ..., s(start+count-1) as an int64 array."""
    if start < 0 or count < 0:
        raise ValueError("start and count must be nonnegative")
    if (start + count).bit_length() > _MAX_START_BITS:
        raise OverflowError("indices beyond the int64-safe range")
    impl = resolve_impl(impl)
    if impl == "numpy" or count == 0:
        return _stern_range_np(start, count)
    out = np.empty(count, dtype=np.int64)
    if start == 0:
        # the successor rule divides by s(n+1); seed past s(0) = 0
        out[0] = 0
        if count > 1:
            _stern_range_nb(1, count - 1, 1, 1, out[1:])
        return out
    return _stern_range_nb(start, count, _stern_scalar(start), _stern_scalar(start + 1), out)


def _box_power_sums_loop(num, den, nmax, out):
    for i in range(num.shape[0]):
        q = num[i] / den[i]
        p = 1.0
        for n in range(nmax + 1):
            out[n] += p
            p *= q
    return out


_box_power_sums_nb = maybe_njit(_box_power_sums_loop)


def _box_power_sums_np(num: np.ndarray, den: np.ndarray, nmax: int) -> np.ndarray:
    q = num.astype(np.float64) / den.astype(np.float64)
    out = np.empty(nmax + 1)
    p = np.ones_like(q)
    for n in range(nmax + 1):
        out[n] = p.sum()
        p *= q
    return out


def box_power_sums(num: np.ndarray, den: np.ndarray, nmax: int, impl: str | None = None) -> np.ndarray:
    """Sums of (num/den)**n over the arrays, for n = 0..nmax.

    Each power is built by repeated multiplication, so every summand has
    relative error at most (2n) units in the last place; see
    :func:`minkmoments.stern.moment_oracle` for how this is certified.
    """
    if num.shape != den.shape:
        raise ValueError("num and den must have the same shape")
    impl = resolve_impl(impl)
    if impl == "numpy":
        return _box_power_sums_np(num, den, nmax)
    out = np.zeros(nmax + 1)
    return _box_power_sums_nb(num.astype(np.float64), den.astype(np.float64), nmax, out)


def _log_sum_loop(values):
    # Neumaier compensated summation
    total = 0.0
    comp = 0.0
    for i in range(values.shape[0]):
        x = math.log(values[i])
        t = total + x
        if abs(total) >= abs(x):
            comp += (total - t) + x
        else:
            comp += (x - t) + total
        total = t
    return total + comp


_log_sum_nb = maybe_njit(_log_sum_loop)


def log_sum(values: np.ndarray, impl: str | None = None) -> float:
    """Compensated sum of log(values) for a positive integer array."""
    impl = resolve_impl(impl)
    if impl == "numpy":
        return math.fsum(np.log(values.astype(np.float64)))
    return float(_log_sum_nb(values.astype(np.float64)))
