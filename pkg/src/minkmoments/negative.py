"""Negative moments m_{-n} = int x^-n ... through exact unipotent matrices.

m_{-n} = sum_k C(n,k) g_{n-k} m_k with g the integer sequence of
:func:`~minkmoments.special.gamma_int`, and the inverse relation has
coefficients 2 (-1)^(n+k) C(n,k).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath as mp

from .asymptotics import binomial_tail, lambda_const
from .engine import unpack_moments
from .errors import CancellationWarning
from .special import gamma_int

__all__ = [
    "IdentityCheck",
    "IdentityReport",
    "TriangularMatrixPair",
    "asymptotic_negative",
    "identity_suite",
    "m_negative",
    "m_positive_from_negative",
    "matrix_pair",
    "negative_recurrence_residual",
]

# above this order the inverse map subtracts factorially large terms
CANCELLATION_ORDER = 25


def _matmul(X, Y):
    d = len(X)
    return [[sum(X[i][k] * Y[k][j] for k in range(j, i + 1)) for j in range(d)] for i in range(d)]


@dataclass(frozen=True)
class TriangularMatrixPair:
    """A[i][j] = C(i,j) g_{i-j} and B[i][j] = 2 (-1)^(i+j) C(i,j) (1 on the diagonal)."""

    size: int
    A: tuple
    B: tuple

    def product_is_identity(self) -> bool:
        d = self.size
        eye = [[int(i == j) for j in range(d)] for i in range(d)]
        return _matmul(self.A, self.B) == eye and _matmul(self.B, self.A) == eye


def matrix_pair(d: int, check: bool = True) -> TriangularMatrixPair:
    """Exact d x d pair; with ``check`` the mutual inverse property is verified."""
    if d < 1:
        raise ValueError("d must be at least 1")
    A = tuple(
        tuple(math.comb(i, j) * gamma_int(i - j) if j <= i else 0 for j in range(d)) for i in range(d)
    )
    B = tuple(
        tuple((1 if i == j else 2 * (-1) ** (i + j) * math.comb(i, j)) if j <= i else 0 for j in range(d))
        for i in range(d)
    )
    pair = TriangularMatrixPair(d, A, B)
    if check and not pair.product_is_identity():
        raise ArithmeticError(f"A B != I at size {d}")  # pragma: no cover
    return pair


def m_negative(n: int, m) -> object:
    """m_{-n} = sum_{k<=n} C(n,k) g_{n-k} m_k (exact coefficients; exact
    result for int/Fraction moments)."""
    return _negative_with_error(n, m)[0]


def _negative_with_error(n: int, m):
    values, dps, _, err = unpack_moments(m)
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > len(values) - 1:
        raise ValueError(f"m_{{-{n}}} needs moments up to {n}")
    coeffs = [math.comb(n, k) * gamma_int(n - k) for k in range(n + 1)]
    if all(isinstance(x, (int, Fraction)) for x in values[: n + 1]):
        return sum(c * values[k] for k, c in enumerate(coeffs)), err
    with mp.workdps(dps):
        value = mp.fsum(c * values[k] for k, c in enumerate(coeffs))
        return value, sum(coeffs) * err


def m_positive_from_negative(n: int, negatives) -> object:
    """m_n = m_{-n} + 2 sum_{k<n} (-1)^(n+k) C(n,k) m_{-k} from negatives[k] = m_{-k}."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if len(negatives) <= n:
        raise ValueError(f"need m_0..m_{{-{n}}}")
    if n > CANCELLATION_ORDER:
        warnings.warn(
            f"order {n}: alternating sum of factorially large terms loses digits",
            CancellationWarning,
            stacklevel=2,
        )
    total = negatives[n]
    for k in range(n):
        total += 2 * (-1) ** (n + k) * math.comb(n, k) * negatives[k]
    return total


def negative_recurrence_residual(n: int, m):
    """m_{-n} - m_n - sum_{k<n} C(n,k) (m_{-k} + m_k); zero for exact moments."""
    values, dps, _, _ = unpack_moments(m)
    with mp.workdps(dps):
        neg = [m_negative(k, m) for k in range(n + 1)]
        return neg[n] - values[n] - mp.fsum(math.comb(n, k) * (neg[k] + values[k]) for k in range(n))


def asymptotic_negative(n: int, lam, dps: int | None = None) -> object:
    """lambda n! / (log 2)^(n+1)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    with mp.workdps(dps or mp.mp.dps):
        return lam * mp.factorial(n) / mp.log(2) ** (n + 1)


@dataclass(frozen=True)
class IdentityCheck:
    """lhs = rhs_partial + tail up to ``residual``.

    ``tail`` estimates the part of the infinite side beyond the stored
    moments; ``error_bound`` adds the propagated moment error and the model
    slack on the tail.
    """

    name: str
    lhs: object
    rhs_partial: object
    tail: object
    error_bound: object

    @property
    def residual(self):
        return self.lhs - self.rhs_partial - self.tail

    @property
    def passed(self) -> bool:
        return abs(self.residual) <= self.error_bound

    def as_dict(self, digits: int = 30) -> dict:
        s = lambda x: mp.nstr(x, digits)
        return {
            "name": self.name,
            "lhs": s(self.lhs),
            "rhs_partial": s(self.rhs_partial),
            "tail": s(self.tail),
            "residual": s(self.residual),
            "error_bound": s(self.error_bound),
            "passed": self.passed,
        }


@dataclass(frozen=True)
class IdentityReport:
    checks: list = field(default_factory=list)
    N: int = 0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> IdentityCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self, digits: int = 30) -> dict:
        return {"N": self.N, "passed": self.passed, "checks": [c.as_dict(digits) for c in self.checks]}


def identity_suite(m, orders=(1, 2, 3, 4), lam=None, model_slack="0.1") -> IdentityReport:
    """Check sum_k C(n,k) g_{n-k} m_k = sum_j C(n+j-1, j) m_j for each order,
    plus sum_j m_j = 5/2 and sum_j j m_j = m_2 + 11/2.

    The infinite sums are cut at N and completed by the model tail.
    """
    values, dps, _, err = unpack_moments(m)
    N = len(values) - 1
    with mp.workdps(dps):
        lam = lambda_const(m) if lam is None else lam
        slack = mp.mpf(model_slack)
        tails = {n: binomial_tail(n, N, lam) for n in set(orders) | {1, 2}}
        checks = []
        for n in orders:
            lhs, lhs_err = _negative_with_error(n, m)
            coeffs = [math.comb(n + j - 1, j) for j in range(N + 1)]
            rhs = mp.fsum(c * x for c, x in zip(coeffs, values))
            bound = lhs_err + sum(coeffs) * err + slack * tails[n]
            checks.append(IdentityCheck(f"order_{n}", lhs, rhs, tails[n], bound))
        total = mp.fsum(values)
        checks.append(
            IdentityCheck("sum_m", mp.mpf(5) / 2, total, tails[1], (N + 1) * err + slack * tails[1])
        )
        weighted = mp.fsum(j * x for j, x in enumerate(values))
        # sum_{j>N} j m_j = sum_{j>N} (j+1) m_j - sum_{j>N} m_j
        tail_j = tails[2] - tails[1]
        checks.append(
            IdentityCheck(
                "sum_j_m",
                values[2] + mp.mpf(11) / 2,
                weighted,
                tail_j,
                (N * (N + 1) // 2 + 1) * err + slack * tails[2],
            )
        )
        return IdentityReport(checks, N)
