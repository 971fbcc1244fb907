"""Geometric means of Stern blocks.

S(n) = 2^-n sum_{k=2^n}^{2^(n+1)} log s(k) grows like n alpha + beta.  The
increments satisfy S(n+1) - S(n) = log 2 - sum_j T_j(n) / (j 2^j), with
T_j(n) the trapezoid sum of Box(t)^j on the level-n grid; replacing T_j(n)
by m_j gives alpha, and the trapezoid error bound |T_j(n) - m_j| <= 2^-(n+1)
controls the rest.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from . import kernels
from .engine import EngineConfig, fixed_point_moments, unpack_moments
from .stern import iter_stern_block, stern_block

__all__ = [
    "AlphaValue",
    "BetaEstimate",
    "STREAM_LEVEL",
    "alpha_const",
    "alpha_tail_bound",
    "beta_estimate",
    "block_log_mean",
    "block_log_means",
    "increment_corrections",
    "trapezoid_increment",
]

# blocks at or above this level are streamed in chunks
STREAM_LEVEL = 24
DEFAULT_CHUNK = 1 << 20


def block_log_mean(n: int, chunk: int = DEFAULT_CHUNK, impl: str | None = None, stream: bool | None = None) -> float:
    """S(n) = 2^-n sum_{k=2^n}^{2^(n+1)} log s(k).

    Per-chunk sums are compensated and combined with :func:`math.fsum`, so the
    result does not depend on the chunk size beyond the last bit or two.
    """
    if n < 0:
        raise ValueError("level must be nonnegative")
    if stream is None:
        stream = n >= STREAM_LEVEL
    if stream:
        parts = [kernels.log_sum(block, impl=impl) for block in iter_stern_block(n, chunk, impl=impl)]
        total = math.fsum(parts)
    else:
        total = kernels.log_sum(stern_block(n, impl=impl), impl=impl)
    return math.ldexp(total, -n)


def block_log_means(n_max: int, impl: str | None = None) -> list[float]:
    """[S(0), ..., S(n_max)]."""
    return [block_log_mean(n, impl=impl) for n in range(n_max + 1)]


def trapezoid_increment(n: int, jmax: int = 64, impl: str | None = None) -> float:
    """log 2 - sum_{j<=jmax} T_j(n) / (j 2^j), which equals S(n+1) - S(n).

    T_j(n) = 2^-n (sum_{r=1}^{2^n} Box(r/2^n)^j - 1/2); the omitted j > jmax
    contribute less than 2^-jmax.
    """
    if n < 0:
        raise ValueError("level must be nonnegative")
    half = 1 << n
    s = kernels.stern_range(0, 2 * half + 1, impl=impl)
    nums = s[1 : half + 1]
    dens = s[half + 1 : 2 * half + 1]
    sums = kernels.box_power_sums(nums, dens, jmax, impl=impl)
    terms = [math.ldexp(sums[j] - 0.5, -n) / (j * 2.0**j) for j in range(1, jmax + 1)]
    return math.log(2) - math.fsum(terms)


def alpha_tail_bound(N: int, m_N):
    """sum_{j>N} m_j / (j 2^j) <= m_N / ((N+1) 2^N), since m_j <= m_N."""
    return m_N / ((N + 1) * mp.mpf(2) ** N)


@dataclass(frozen=True)
class AlphaValue:
    value: object
    tail_bound: object
    moment_error: object


def alpha_const(m, detailed: bool = False):
    """log 2 - sum_{j>=1} m_j / (j 2^j) from m_1..m_N."""
    values, dps, _, err = unpack_moments(m)
    N = len(values) - 1
    with mp.workdps(dps):
        series = mp.fsum(x / (j * mp.mpf(2) ** j) for j, x in enumerate(values[1:], start=1))
        value = mp.log(2) - series
        if not detailed:
            return value
        # the moment error enters with weights summing to at most log 2
        return AlphaValue(value, alpha_tail_bound(N, values[N]), err * mp.log(2))


def increment_corrections(S: list, alpha) -> list:
    """delta_n = S(n+1) - S(n) - alpha for consecutive levels."""
    a = float(alpha)
    return [S[n + 1] - S[n] - a for n in range(len(S) - 1)]


@dataclass(frozen=True)
class BetaEstimate:
    """beta from S(n) - n alpha.

    ``value`` adds a geometric extrapolation of the remaining increments to
    S(n_max) - n_max alpha.  ``error`` is a heuristic bar (the extrapolated
    correction plus the drift between the last two extrapolations).
    ``bound`` is rigorous: the trapezoid bound 2^-n_max log 2 on the omitted
    increments, n_max times the error of alpha, and the distance from
    ``value`` back to S(n_max) - n_max alpha.
    """

    value: float
    error: float
    bound: float
    n_max: int
    alpha: float
    S: list
    increments: list

    def as_dict(self) -> dict:
        return {
            "beta": repr(self.value),
            "error": repr(self.error),
            "bound": repr(self.bound),
            "n_max": self.n_max,
            "alpha": repr(self.alpha),
            "S": [repr(x) for x in self.S],
            "increments": [repr(x) for x in self.increments],
        }


def _extrapolate(b: list, d: list, k: int) -> float:
    # b[k] plus the geometric continuation of d[k-1] with ratio d[k-1]/d[k-2]
    r = d[k - 1] / d[k - 2]
    if not 0 < r < 1:
        return b[k]
    return b[k] + d[k - 1] * r / (1 - r)


def beta_estimate(n_max: int = 22, alpha=None, impl: str | None = None) -> BetaEstimate:
    """Estimate beta with S(n) = n alpha + beta + o(1).

    Without ``alpha`` a 30-digit run of order 200 supplies it; its
    uniform per-entry error bound dominates the rigorous bar.
    """
    if n_max < 4:
        raise ValueError("n_max must be at least 4")
    if alpha is None:
        mv = fixed_point_moments(EngineConfig(200, 30))
        a = alpha_const(mv, detailed=True)
        alpha, alpha_err = a.value, a.tail_bound + a.moment_error
    else:
        alpha_err = mp.mpf(0)
    S = block_log_means(n_max, impl=impl)
    af = float(alpha)
    d = increment_corrections(S, alpha)
    b = [S[n] - n * af for n in range(n_max + 1)]
    value = _extrapolate(b, d, n_max)
    previous = _extrapolate(b, d, n_max - 1)
    error = abs(value - b[n_max]) + abs(value - previous)
    bound = (
        math.ldexp(math.log(2), -n_max)
        + n_max * float(alpha_err)
        + n_max * 4 * np.finfo(float).eps
        + abs(value - b[n_max])
    )
    return BetaEstimate(value, error, bound, n_max, af, S, [x + af for x in d])
