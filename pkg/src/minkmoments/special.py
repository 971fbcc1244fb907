"""Special values and exact coefficient sequences.

Real-valued quantities are mpmath numbers computed inside a
:class:`PrecisionContext`.  Every infinite series stops once a geometric
bound on its remainder drops below the context tolerance; a small term alone
is never taken as evidence of convergence.
"""
from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

import mpmath as mp

__all__ = [
    "EULER_GAMMA",
    "PrecisionContext",
    "binomial",
    "binomial_stream",
    "exp_integral_neg_log2",
    "gamma_entire",
    "gamma_int",
    "gamma_int_partial",
    "gamma_int_sequence",
    "gamma_poly",
    "gamma_poly_direct",
    "gamma_poly_table",
    "polylog_half",
    "series_coeff_c",
    "series_coeff_c_stirling",
    "series_coeff_table",
    "stirling_first",
]

# Euler-Mascheroni constant; checked in the test suite against an
# Euler-Maclaurin evaluation of H_n - log n
EULER_GAMMA = (
    "0.57721566490153286060651209008240243104215933593992359880576723488486772677766467"
    "09369470632917467495146314472498070824809605040144865428362241739976449235362535"
    "003337429373377376739427925952582470949160087"
)


@dataclass(frozen=True)
class PrecisionContext:
    """Decimal working precision plus guard digits."""

    digits: int = 30
    guard: int = 10

    def __post_init__(self):
        if self.digits < 15:
            raise ValueError("digits must be at least 15")
        if self.guard < 10:
            raise ValueError("guard must be at least 10")

    @property
    def dps(self) -> int:
        return self.digits + self.guard

    @property
    def tol(self):
        """Remainder threshold 10^-(digits+guard) as an mpf at the working precision."""
        with self.work():
            return mp.mpf(10) ** (-self.dps)

    @contextmanager
    def work(self, extra: int = 0):
        with mp.workdps(self.dps + extra):
            yield

    def with_digits(self, digits: int) -> "PrecisionContext":
        return PrecisionContext(digits, self.guard)


def binomial(n, k: int):
    """Generalized binomial coefficient n(n-1)...(n-k+1)/k!.

    Exact (an int) for integer n of any sign; otherwise an mpmath number at
    the ambient precision.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if isinstance(n, int):
        if n >= 0:
            return math.comb(n, k)
        return (-1) ** k * math.comb(-n + k - 1, k)
    if isinstance(n, Fraction):
        out = Fraction(1)
        for j in range(k):
            out = out * (n - j) / (j + 1)
        return out
    out = mp.mpf(1)
    for j in range(k):
        out = out * (n - j) / (j + 1)
    return out


def binomial_stream(n, start: int = 0) -> Iterator:
    """C(n, start), C(n, start+1), ... updated by the factor (n-k)/(k+1)."""
    c = binomial(n, start)
    k = start
    exact = isinstance(n, int)
    while True:
        yield c
        if exact:
            # integer division is exact: C(n,k+1) = C(n,k)(n-k)/(k+1)
            c = c * (n - k) // (k + 1)
        else:
            c = c * (n - k) / (k + 1)
        k += 1


def _geometric_series(term, ratio_bound, tol, start=1, max_terms=10**7):
    """Sum term(k) for k >= start, stopping when term(k+1)/(1-r) < tol.

    ``ratio_bound(k)`` must bound term(j+1)/term(j) for every j >= k and be < 1.
    """
    total = 0
    k = start
    while k < start + max_terms:
        t = term(k)
        total += t
        nxt = abs(term(k + 1))
        r = ratio_bound(k + 1)
        if r < 1 and nxt / (1 - r) < tol:
            return total
        k += 1
    raise RuntimeError("series did not certify its remainder")  # pragma: no cover


def polylog_half(n: int, ctx: PrecisionContext | None = None):
    """Li_n(1/2) = sum_k 1/(2^k k^n)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    ctx = ctx or PrecisionContext()
    with ctx.work():
        half = mp.mpf(1) / 2
        # successive terms shrink by at least 1/2 for n >= 0
        return +_geometric_series(
            lambda k: half**k / mp.mpf(k) ** n, lambda k: half, ctx.tol
        )


def gamma_poly_direct(n, ctx: PrecisionContext | None = None):
    """sum_{k>=1} 1/(2^k (k+1)^n): the same number as gamma_poly, with no
    cancellation for large n."""
    ctx = ctx or PrecisionContext()
    with ctx.work():
        half = mp.mpf(1) / 2
        return +_geometric_series(
            lambda k: half**k / mp.mpf(k + 1) ** n, lambda k: half, ctx.tol
        )


def gamma_poly(n: int, ctx: PrecisionContext | None = None):
    """2 Li_n(1/2) - 1.  Loses about 0.3 n digits to cancellation; use
    :func:`gamma_poly_direct` or :func:`gamma_poly_table` for large n."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    ctx = ctx or PrecisionContext()
    with ctx.work():
        return 2 * polylog_half(n, ctx) - 1


def gamma_poly_table(nmax: int, ctx: PrecisionContext | None = None) -> list:
    """[gamma_poly(0), ..., gamma_poly(nmax)] by the direct series.

    Each entry is accurate relative to its own size (about 2^-(n+1)), which is
    what weighted sums against decaying moments need.
    """
    ctx = ctx or PrecisionContext()
    with ctx.work(extra=5):
        tol = mp.mpf(10) ** (-ctx.dps - 5)
        half = mp.mpf(1) / 2
        out = []
        for n in range(nmax + 1):
            # relative tolerance: scale by the leading term 2^-(n+1)
            out.append(
                _geometric_series(
                    lambda k, n=n: half**k / mp.mpf(k + 1) ** n,
                    lambda k: half,
                    tol * half ** (n + 1),
                )
            )
    with ctx.work():
        return [+x for x in out]


@lru_cache(maxsize=None)
def _gamma_int_list(nmax: int) -> tuple[int, ...]:
    g = [1]
    for n in range(1, nmax + 1):
        g.append(1 + sum(math.comb(n, j) * g[j] for j in range(n)))
    return tuple(g)


def gamma_int_sequence(nmax: int) -> tuple[int, ...]:
    """(gamma_int(0), ..., gamma_int(nmax))."""
    if nmax < 0:
        raise ValueError("nmax must be nonnegative")
    # grow the cache in steps so repeated calls stay cheap
    size = max(32, 1 << (nmax.bit_length()))
    return _gamma_int_list(size)[: nmax + 1]


def gamma_int(n: int) -> int:
    """Integer sequence 1, 2, 6, 26, 150, ...: g_0 = 1, g_n = 1 + sum_{j<n} C(n,j) g_j.

    Equals sum_{h>=1} h^n / 2^h.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    return gamma_int_sequence(n)[n]


def gamma_int_partial(n: int, H: int) -> tuple[Fraction, Fraction]:
    """(sum_{h<=H} h^n/2^h, bound on the remainder), both exact.

    For h > H successive terms shrink by at most r = (1 + 1/(H+1))^n / 2, so
    when r < 1 the remainder is at most term(H+1) / (1 - r).
    """
    partial = sum(Fraction(h**n, 1 << h) for h in range(1, H + 1))
    r = Fraction(H + 2, H + 1) ** n / 2
    if r >= 1:
        raise ValueError(f"H={H} too small for a geometric bound at n={n}")
    nxt = Fraction((H + 1) ** n, 1 << (H + 1))
    return partial, nxt / (1 - r)


@lru_cache(maxsize=None)
def _series_table(size: int) -> tuple[tuple[Fraction, ...], ...]:
    rows = [tuple(Fraction(int(k == 0)) for k in range(size + 1))]
    for n in range(size):
        prev = rows[-1]
        row = [Fraction(0)] * (size + 1)
        for k in range(n + 1, size + 1):
            row[k] = -sum(prev[k - j] / j for j in range(1, k - n + 1))
        rows.append(tuple(row))
    return tuple(rows)


def series_coeff_table(kmax: int) -> tuple[tuple[Fraction, ...], ...]:
    """c[n][k] for 0 <= n, k <= kmax, where sum_k c[n][k] x^k = log(1-x)^n."""
    if kmax < 0:
        raise ValueError("kmax must be nonnegative")
    size = max(16, 1 << kmax.bit_length())
    table = _series_table(size)
    return tuple(row[: kmax + 1] for row in table[: kmax + 1])


def series_coeff_c(n: int, k: int) -> Fraction:
    """Coefficient of x^k in log(1-x)^n (zero when k < n)."""
    if n < 0 or k < 0:
        raise ValueError("indices must be nonnegative")
    if k < n:
        return Fraction(0)
    return series_coeff_table(k)[n][k]


@lru_cache(maxsize=None)
def _stirling_rows(size: int) -> tuple[tuple[int, ...], ...]:
    # signed s(k, n): s(k+1, n) = s(k, n-1) - k s(k, n)
    rows = [(1,) + (0,) * size]
    for k in range(size):
        prev = rows[-1]
        rows.append(tuple((prev[n - 1] if n else 0) - k * prev[n] for n in range(size + 1)))
    return tuple(rows)


def stirling_first(k: int, n: int) -> int:
    """Signed Stirling number of the first kind s(k, n)."""
    if k < 0 or n < 0:
        raise ValueError("indices must be nonnegative")
    if n > k:
        return 0
    size = max(16, 1 << k.bit_length())
    return _stirling_rows(size)[k][n]


def series_coeff_c_stirling(n: int, k: int) -> Fraction:
    """(-1)^k n!/k! s(k, n): the same coefficient by a closed form."""
    if k < n:
        return Fraction(0)
    return Fraction((-1) ** k * math.factorial(n) * stirling_first(k, n), math.factorial(k))


def gamma_entire(z, ctx: PrecisionContext | None = None):
    """sum_{n>=1} 2^-n (1+n)^-z for real or complex z.

    With s = max(0, -Re z), successive terms shrink by at most
    (1 + 1/(n+2))^s / 2 from index n on, which certifies the remainder.
    """
    ctx = ctx or PrecisionContext()
    with ctx.work(extra=5):
        z = mp.mpmathify(z)
        sigma = max(mp.mpf(0), -mp.re(z))
        half = mp.mpf(1) / 2
        tol = mp.mpf(10) ** (-ctx.dps)
        if isinstance(z, mp.mpc):
            term = lambda k: half**k * mp.power(k + 1, -z)
        else:
            term = lambda k: half**k * mp.power(mp.mpf(k + 1), -z)
        # scale the tolerance by the largest term so a huge sum keeps its relative accuracy
        peak = max(abs(term(k)) for k in range(1, int(2 * sigma) + 3))
        val = _geometric_series(
            term, lambda k: (1 + mp.mpf(1) / (k + 1)) ** sigma / 2, tol * max(peak, 1)
        )
    with ctx.work():
        return +val


def exp_integral_neg_log2(ctx: PrecisionContext | None = None):
    """Ei(-log 2) = gamma_E + log(log 2) + sum_k (-log 2)^k / (k k!).

    The series alternates with decreasing terms, so the first omitted term
    bounds the remainder.
    """
    ctx = ctx or PrecisionContext()
    if ctx.dps > len(EULER_GAMMA) - 5:
        raise ValueError(f"stored Euler constant supports at most {len(EULER_GAMMA) - 5} digits")
    with ctx.work(extra=5):
        x = -mp.log(2)
        tol = mp.mpf(10) ** (-ctx.dps - 5)
        total = mp.mpf(0)
        term = mp.mpf(1)
        k = 0
        while True:
            k += 1
            term = term * x / k
            total += term / k
            if abs(term * x / (k + 1)) / (k + 1) < tol:
                break
        val = mp.mpf(EULER_GAMMA) + mp.log(-x) + total
    with ctx.work():
        return +val
