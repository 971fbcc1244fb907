"""Stern's diatomic sequence, Conway's box function and Minkowski's ?.

Everything here is exact: integers, :class:`fractions.Fraction` and dyadic
rationals kept at an explicit level.  The one floating-point path is the
high-level Riemann-sum oracle, whose rounding is bounded and folded into the
returned enclosure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Iterator, Sequence

import numpy as np

from . import kernels
from .errors import ResourceLimitError

__all__ = [
    "DEFAULT_MEMORY_BUDGET",
    "DyadicRational",
    "ExactRational",
    "MomentBracket",
    "box_dyadic",
    "box_refine",
    "continued_fraction",
    "convergent",
    "exact_rational",
    "iter_stern_block",
    "moment_oracle",
    "moment_oracle_table",
    "question_mark",
    "question_mark_from_cf",
    "stern",
    "stern_block",
]

# bytes an int64 Stern block may occupy before callers must stream it
DEFAULT_MEMORY_BUDGET = 1 << 30

# exact oracle sums become slow past this level; above it the certified
# float path is used unless exact=True is forced
EXACT_ORACLE_MAX_LEVEL = 10

ExactRational = Fraction


def exact_rational(p, q=1) -> Fraction:
    """A reduced fraction in [0, 1]."""
    x = Fraction(p, q)
    if not 0 <= x <= 1:
        raise ValueError(f"{x} is outside [0, 1]")
    return x


@lru_cache(maxsize=1 << 16)
def _stern_cached(n: int) -> int:
    return _stern_descent(n)


def _stern_descent(n: int) -> int:
    # walk the bits from the top: (s(k), s(k+1)) -> (s(2k), s(2k+1)) or (s(2k+1), s(2k+2))
    a, b = 0, 1
    for bit in bin(n)[2:]:
        if bit == "1":
            a, b = a + b, b
        else:
            a, b = a, a + b
    return a


def stern(n: int) -> int:
    """s(n) for any nonnegative integer n."""
    n = int(n)
    if n < 0:
        raise ValueError("Stern index must be nonnegative")
    if n.bit_length() > 64:
        return _stern_descent(n)
    return _stern_cached(n)


def _check_budget(count: int, budget: int | None) -> None:
    budget = DEFAULT_MEMORY_BUDGET if budget is None else budget
    need = 8 * count
    if need > budget:
        raise ResourceLimitError(
            f"block of {count} entries needs {need} bytes, budget is {budget}; "
            "use iter_stern_block to stream it"
        )


def stern_block(level: int, budget: int | None = None, impl: str | None = None) -> np.ndarray:
    """s(2**level), ..., s(2**(level+1)) as an int64 array (2**level + 1 values)."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    count = (1 << level) + 1
    _check_budget(count, budget)
    return kernels.stern_range(1 << level, count, impl=impl)


def iter_stern_block(level: int, chunk: int = 1 << 20, impl: str | None = None) -> Iterator[np.ndarray]:
    """Stream the same values as :func:`stern_block` in chunks of at most ``chunk``."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    if chunk < 2:
        raise ValueError("chunk must be at least 2")
    start = 1 << level
    stop = (1 << (level + 1)) + 1
    for lo in range(start, stop, chunk):
        yield kernels.stern_range(lo, min(chunk, stop - lo), impl=impl)


@dataclass(frozen=True)
class DyadicRational:
    """m / 2**level with the level kept as given (no reduction)."""

    m: int
    level: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be nonnegative")
        if not 0 <= self.m <= (1 << self.level):
            raise ValueError(f"numerator {self.m} outside [0, 2**{self.level}]")

    @property
    def value(self) -> Fraction:
        return Fraction(self.m, 1 << self.level)

    def canonical(self) -> "DyadicRational":
        """Same number at the smallest level."""
        m, level = self.m, self.level
        if m == 0:
            return DyadicRational(0, 0)
        shift = min((m & -m).bit_length() - 1, level)
        return DyadicRational(m >> shift, level - shift)

    def same_value(self, other: "DyadicRational") -> bool:
        return self.canonical() == other.canonical()

    def at_level(self, level: int) -> "DyadicRational":
        c = self.canonical()
        if level < c.level:
            raise ValueError(f"{self} is not representable at level {level}")
        return DyadicRational(c.m << (level - c.level), level)

    def __str__(self):
        return f"{self.m}/2^{self.level}"


def box_dyadic(x: DyadicRational) -> Fraction:
    """Box(m/2^n) = s(m) / s(2^n + m)."""
    return Fraction(stern(x.m), stern((1 << x.level) + x.m))


def continued_fraction(x, canonical: bool = True) -> tuple[int, ...]:
    """Partial quotients a_1..a_k of x = [0; a_1, ..., a_k] for x in [0, 1].

    The canonical form ends in a quotient >= 2, except for x = 1 = [0; 1].
    With ``canonical=False`` the alternate expansion ending in 1 is returned
    (undefined for x = 0 and x = 1, which raise ValueError).
    """
    x = exact_rational(x)
    if x == 0:
        quotients: list[int] = []
    elif x == 1:
        quotients = [1]
    else:
        quotients = []
        p, q = x.numerator, x.denominator
        while p:
            a, r = divmod(q, p)
            quotients.append(a)
            q, p = p, r
    if canonical:
        return tuple(quotients)
    if x in (0, 1):
        raise ValueError("0 and 1 have no alternate expansion")
    return tuple(quotients[:-1]) + (quotients[-1] - 1, 1)


def convergent(quotients: Sequence[int]) -> Fraction:
    """Value of [0; a_1, ..., a_k]."""
    value = Fraction(0)
    for a in reversed(quotients):
        if a <= 0:
            raise ValueError("partial quotients must be positive")
        value = 1 / (a + value)
    return value


def question_mark_from_cf(quotients: Sequence[int]) -> DyadicRational:
    """?(x) from partial quotients: -2 * sum_k (-1)^k 2^-(a_1+...+a_k)."""
    if not quotients:
        return DyadicRational(0, 0)
    total = sum(quotients)
    level = total - 1
    # scale every term by 2**level to stay in integers
    m = 0
    partial = 0
    for k, a in enumerate(quotients, start=1):
        partial += a
        term = 1 << (level + 1 - partial)
        m += term if k % 2 else -term
    return DyadicRational(m, level)


def question_mark(x) -> DyadicRational:
    """Minkowski's ?(x) for rational x in [0, 1], as an exact dyadic."""
    return question_mark_from_cf(continued_fraction(x))


def box_refine(q: DyadicRational, r: int, l: int) -> Fraction:
    """Box(q + r / 2^(h+l)) for q at level h, by mediants of the images of
    the grid cell [q, q + 2^-h].

    For q = 1/2^h this is s(2^l + r) / ((h+1) s(2^l + r) - s(r)).
    """
    h = q.level
    if l < 0:
        raise ValueError("sub-level must be nonnegative")
    if not 0 <= r <= (1 << l):
        raise ValueError(f"offset {r} outside [0, 2**{l}]")
    if q.m == 1 and h >= 1:
        t = stern((1 << l) + r)
        return Fraction(t, (h + 1) * t - stern(r))
    if q.m >= (1 << h):
        raise ValueError("q must leave room for a cell to its right")
    left = box_dyadic(q)
    right = box_dyadic(DyadicRational(q.m + 1, h))
    u = stern((1 << l) - r)
    v = stern(r)
    return Fraction(
        left.numerator * u + right.numerator * v,
        left.denominator * u + right.denominator * v,
    )


@dataclass(frozen=True)
class MomentBracket:
    """Rigorous enclosure lower <= m_n <= upper from level-l Riemann sums.

    ``exact`` brackets have width exactly 2^-l; certified float brackets are
    widened by a bound on the rounding error and are slightly wider.
    """

    n: int
    level: int
    lower: Fraction
    upper: Fraction
    exact: bool

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    def contains(self, value, slack=0) -> bool:
        """Whether value lies in [lower - slack, upper + slack]; value may be any
        real type comparable with Fraction after conversion via Fraction(str)."""
        v = value if isinstance(value, (int, Fraction)) else Fraction(str(value))
        s = slack if isinstance(slack, (int, Fraction)) else Fraction(str(slack))
        return self.lower - s <= v <= self.upper + s


def _oracle_pairs(level: int, impl: str | None):
    # Box(r/2^l) = s(r) / s(2^l + r) for 1 <= r < 2^l
    half = 1 << level
    _check_budget(2 * half + 1, None)
    s = kernels.stern_range(0, 2 * half + 1, impl=impl)
    return s[1:half], s[half + 1 : 2 * half]


def _exact_tables(nmax: int, level: int) -> list[MomentBracket]:
    half = 1 << level
    nums = [stern(r) for r in range(1, half)]
    dens = [stern(half + r) for r in range(1, half)]
    lcm = reduce(math.lcm, dens, 1)
    scaled = [a * (lcm // b) for a, b in zip(nums, dens)]
    powers = [1] * len(scaled)
    out = []
    scale = Fraction(1, half)
    for n in range(nmax + 1):
        total = Fraction(sum(powers), lcm**n)
        out.append(MomentBracket(n, level, scale * total, scale * (total + 1), True))
        if n < nmax:
            powers = [p * a for p, a in zip(powers, scaled)]
    return out


def _float_tables(nmax: int, level: int, impl: str | None) -> list[MomentBracket]:
    nums, dens = _oracle_pairs(level, impl)
    sums = kernels.box_power_sums(nums, dens, nmax, impl=impl)
    count = nums.shape[0]
    unit = Fraction(1, 1 << 53)
    scale = Fraction(1, 1 << level)
    out = []
    for n in range(nmax + 1):
        # every summand carries at most 2n roundings, the running sum at most count
        rel = (2 * n + count) * unit * Fraction(101, 100)
        total = Fraction(float(sums[n]))
        lower = scale * total * (1 - rel)
        upper = scale * (total * (1 + rel) + 1)
        out.append(MomentBracket(n, level, lower, upper, False))
    return out


def moment_oracle_table(
    nmax: int, level: int, exact: bool | None = None, impl: str | None = None
) -> list[MomentBracket]:
    """Brackets for m_0..m_nmax from left/right Riemann sums at one level.

    Box is increasing, so the left sum bounds m_n from below and the right sum
    from above; the two differ by exactly 2^-level.  At n = 0 the integrand is
    1 away from t = 0, giving [1 - 2^-level, 1].
    """
    if nmax < 0:
        raise ValueError("nmax must be nonnegative")
    if level < 1:
        raise ValueError("level must be at least 1")
    if exact is None:
        exact = level <= EXACT_ORACLE_MAX_LEVEL
    if exact:
        return _exact_tables(nmax, level)
    return _float_tables(nmax, level, impl)


def moment_oracle(n: int, level: int, exact: bool | None = None, impl: str | None = None) -> MomentBracket:
    """Bracket for the single moment m_n; see :func:`moment_oracle_table`."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return moment_oracle_table(n, level, exact=exact, impl=impl)[n]
