"""The entire function z -> m_z, its Taylor expansion at 0, and the residuals
of two conjectured series for log 2.

m_z is evaluated by sum_k C(z+k-1, k) gamma(k+z) m_k, whose terms shrink like
2^-k, so the remainder after a finite k is certified by a geometric bound.
The second route, sum_j C(z, j) (-1)^j m_j, converges only like the moments
themselves and is kept as an independent cross-check whose tail is estimated
with the asymptotic model.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
import mpmath as mp

from .asymptotics import binomial_tail, lambda_const, model_tail
from .engine import unpack_moments
from .errors import PrecisionError
from .special import PrecisionContext, gamma_entire, gamma_int

__all__ = [
    "ConjectureResiduals",
    "EntireMomentEvaluator",
    "EntireValue",
    "TaylorAtZero",
    "TruncationWarning",
    "conjecture_residuals",
    "moment_binomial_series",
    "moment_entire",
    "taylor_at_zero",
]

# complex arguments are supported in this strip
MAX_IMAG = 20

# relative slack granted to the asymptotic model when a tail estimate is
# turned into a bound; the model is far better than this for n >= 200
MODEL_SLACK = mp.mpf("0.1")

# relative accuracy asked of model tails; far below the model's own uncertainty
TAIL_REL = 1e-10


class TruncationWarning(UserWarning):
    """A series tail beyond the available moments exceeds the requested tolerance."""


@dataclass(frozen=True)
class EntireValue:
    """m_z with the size of what was left out.

    ``tail_bound`` covers the omitted k-range (certified for the gamma route,
    a model estimate for the binomial route); ``moment_error`` propagates the
    per-entry error of the moment vector.
    """

    z: object
    value: object
    tail_bound: object
    moment_error: object
    terms: int
    route: str
    certified: bool


def _negative_integer(z):
    if isinstance(z, mp.mpc) and z.imag != 0:
        return None
    x = mp.re(z)
    if x < 0 and x == mp.floor(x):
        return int(-x)
    return None


def _nonnegative_integer(z):
    if isinstance(z, mp.mpc) and z.imag != 0:
        return None
    x = mp.re(z)
    if x >= 0 and x == mp.floor(x):
        return int(x)
    return None


class EntireMomentEvaluator:
    """z -> m_z over a fixed moment vector."""

    def __init__(self, m, digits: int | None = None):
        self.values, self.dps, mdigits, self.moment_err = unpack_moments(m)
        self.digits = digits if digits is not None else mdigits
        self.ctx = PrecisionContext(max(15, self.digits), max(10, self.dps - self.digits))
        self._source = m

    @property
    def N(self) -> int:
        return len(self.values) - 1

    def __call__(self, z):
        return self.evaluate(z).value

    def _coerce(self, z):
        z = mp.mpmathify(z)
        if isinstance(z, mp.mpc):
            if abs(z.imag) > MAX_IMAG:
                raise ValueError(f"|Im z| must be at most {MAX_IMAG}")
            if z.imag == 0:
                z = z.real
        return z

    def gamma_route(self, z) -> EntireValue:
        """sum_k C(z+k-1, k) gamma(k+z) m_k with a certified remainder.

        With sigma = Re z, |gamma(k+z)| <= gamma(k+sigma) <= 2^-(k+sigma) once
        k + sigma >= 0, and m_k decreases, so the terms past K are dominated by
        a geometric series of ratio max(1, (K+1+|z|)/(K+2)) / 2.
        """
        with mp.workdps(self.dps):
            z = self._coerce(z)
            m = self.values
            tol = mp.mpf(10) ** -(self.digits + 2)
            neg = _negative_integer(z)
            if neg is not None and neg > self.N:
                raise PrecisionError(f"m_{{-{neg}}} needs moments up to {neg}, have {self.N}")
            sigma = mp.re(z)
            az = abs(z)
            total = mp.mpf(0)
            err = mp.mpf(0)
            coeff = mp.mpf(1)
            for k in range(self.N + 1):
                if neg is not None:
                    if k > neg:
                        return EntireValue(z, +total, mp.mpf(0), err * self.moment_err, k, "gamma", True)
                    g = 2 * gamma_int(neg - k) - 1
                else:
                    g = gamma_entire(k + z, self.ctx)
                term = coeff * g
                total += term * m[k]
                err += abs(term)
                coeff = coeff * (z + k) / (k + 1)
                if k + 1 + sigma >= 0 and k + 1 > az:
                    r = max(mp.mpf(1), (k + 1 + az) / (k + 2)) / 2
                    if r < 1:
                        bound = abs(coeff) * mp.mpf(2) ** -(k + 1 + sigma) * m[k] / (1 - r)
                        if bound < tol * max(abs(total), tol):
                            return EntireValue(z, +total, bound, err * self.moment_err, k + 1, "gamma", True)
            raise PrecisionError(f"m_z at z={mp.nstr(z, 8)} needs more than {self.N + 1} moments")

    def binomial_route(self, z, lam=None) -> EntireValue:
        """sum_j C(z, j) (-1)^j m_j = sum_j C(j-z-1, j) m_j over the stored
        moments plus a model estimate of the rest."""
        with mp.workdps(self.dps):
            z = self._coerce(z)
            if isinstance(z, mp.mpc):
                raise ValueError("the binomial route is only used for real z")
            m = self.values
            N = self.N
            # coeffs[j] = C(z, j) (-1)^j
            coeffs = [mp.mpf(1)]
            for j in range(N):
                coeffs.append(coeffs[-1] * (j - z) / (j + 1))
            total = mp.fsum(c * x for c, x in zip(coeffs, m))
            err = mp.fsum(abs(c) for c in coeffs) * self.moment_err
            pos = _nonnegative_integer(z)
            if pos is not None and pos <= N:
                tail = mp.mpf(0)
            else:
                lam = lambda_const(self._source) if lam is None else lam
                neg = _negative_integer(z)
                if neg is not None:
                    tail = binomial_tail(neg, N, lam)
                else:
                    tail = model_tail(_BinomialWeights(z, N, coeffs[N]), N, lam, rel=TAIL_REL)
            return EntireValue(z, +(total + tail), abs(tail) * MODEL_SLACK, err, N + 1, "binomial", False)

    def evaluate(self, z, lam=None) -> EntireValue:
        """Stored entry at integers 0..N; elsewhere the gamma route, with the
        binomial route as fallback for real z when the first cannot certify
        the requested precision with the stored moments."""
        with mp.workdps(self.dps):
            n = _nonnegative_integer(self._coerce(z))
            if n is not None and n <= self.N:
                return EntireValue(z, self.values[n], mp.mpf(0), self.moment_err, 0, "stored", True)
        try:
            return self.gamma_route(z)
        except PrecisionError:
            z = self._coerce(z)
            if isinstance(z, mp.mpc):
                raise
            alt = self.binomial_route(z, lam)
            if alt.tail_bound > mp.mpf(10) ** -(self.digits // 2):
                raise PrecisionError(
                    f"neither route certifies m_z at z={mp.nstr(z, 8)} with {self.N + 1} moments"
                ) from None
            return alt


class _BinomialWeights:
    """j -> C(j-z-1, j) for j > N, continued from its value at j = N."""

    def __init__(self, z, N, at_N):
        self.z = z
        self.j = N
        self.c = at_N

    def __call__(self, j):
        while self.j < j:
            self.c = self.c * (self.j - self.z) / (self.j + 1)
            self.j += 1
        return self.c


def moment_entire(m, z, digits: int | None = None):
    """m_z for real or complex z (|Im z| <= 20)."""
    return EntireMomentEvaluator(m, digits).evaluate(z).value


def moment_binomial_series(m, z, lam=None) -> EntireValue:
    """m_z by the binomial series, with the model tail included."""
    return EntireMomentEvaluator(m).binomial_route(z, lam)


@dataclass(frozen=True)
class TaylorAtZero:
    """m_x = sum_n d_n x^n near 0.

    ``tails[n]`` is the model estimate of the part of d_n carried by moments
    past N; it is already included in ``coefficients[n]``.
    """

    coefficients: list
    tails: list
    moment_errors: list
    dps: int

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def __getitem__(self, n):
        return self.coefficients[n]

    def evaluate(self, x):
        with mp.workdps(self.dps):
            x = mp.mpmathify(x)
            return mp.polyval(self.coefficients[::-1], x)

    def remainder_estimate(self, x):
        """|d_J| |x|^(J+1) / (1 - |x| rho) with rho = max |d_n/d_(n-1)| over the last
        half of the coefficients; a heuristic for the omitted orders."""
        with mp.workdps(self.dps):
            x = abs(mp.mpmathify(x))
            d = self.coefficients
            J = self.order
            ratios = [abs(d[n] / d[n - 1]) for n in range(max(1, J // 2), J + 1) if d[n - 1] != 0]
            rho = max(ratios) if ratios else mp.mpf(1)
            q = x * rho
            if q >= 1:
                return mp.inf
            return abs(d[J]) * rho * x ** (J + 1) / (1 - q)


class _StirlingColumns:
    """|s(k, n)| / k! for n <= J, exact for k <= N and continued in mpf beyond."""

    def __init__(self, J: int, N: int):
        self.J = J
        # exact integers |s(k, n)|, k = 0..N
        col = [1] + [0] * J
        self.exact = [list(col)]
        for k in range(N):
            col = [k * col[0]] + [col[n - 1] + k * col[n] for n in range(1, J + 1)]
            self.exact.append(list(col))
        self.N = N
        self._float: dict[int, list] = {}
        self._k = None

    def coefficient(self, n: int, k: int):
        """|s(k, n)| / k! as an mpf at the ambient precision."""
        return mp.mpf(self.exact[k][n]) / mp.factorial(k)

    def weights_after(self, n: int):
        """Callable j -> |s(j, n)| / j! valid for j > N."""
        cols = self._float

        def weight(j):
            if not cols:
                cols[self.N] = [self.coefficient(i, self.N) for i in range(self.J + 1)]
                self._k = self.N
            while self._k < j:
                k = self._k
                prev = cols[k]
                cols[k + 1] = [k * prev[0] / (k + 1)] + [
                    (prev[i - 1] + k * prev[i]) / (k + 1) for i in range(1, self.J + 1)
                ]
                self._k = k + 1
            return cols[j][n]

        return weight


def taylor_at_zero(m, J: int = 8, lam=None, tol=None) -> TaylorAtZero:
    """d_0..d_J with d_n = (1/n!) sum_k c_{n,k} m_k = (-1)^n sum_k |s(k,n)|/k! m_k.

    The sum over k is carried out with exact Stirling numbers up to N, and the
    k > N part is estimated from the moment model and added.  A
    :class:`TruncationWarning` is issued for each n whose estimated tail is
    not below ``tol`` (default 1e-12).
    """
    if not 0 <= J <= 12:
        raise ValueError("J must lie in 0..12")
    values, dps, _, moment_err = unpack_moments(m)
    N = len(values) - 1
    with mp.workdps(dps):
        tol = mp.mpf("1e-12") if tol is None else mp.mpf(tol)
        lam = lambda_const(m) if lam is None else lam
        cols = _StirlingColumns(J, N)
        coeffs, tails, errs = [], [], []
        for n in range(J + 1):
            w = [cols.coefficient(n, k) for k in range(N + 1)]
            head = mp.fsum(a * b for a, b in zip(w, values))
            tail = model_tail(cols.weights_after(n), N, lam, rel=TAIL_REL) if n > 0 else mp.mpf(0)
            if tail > tol:
                warnings.warn(
                    f"d_{n}: estimated tail {mp.nstr(tail, 3)} beyond k={N} exceeds {mp.nstr(tol, 3)}",
                    TruncationWarning,
                    stacklevel=2,
                )
            sign = -1 if n % 2 else 1
            coeffs.append(sign * (head + tail))
            tails.append(sign * tail)
            errs.append(mp.fsum(w) * moment_err)
        return TaylorAtZero(coeffs, tails, errs, dps)


@dataclass(frozen=True)
class ConjectureResiduals:
    """r = log 2 - (truncated series) for the two conjectured expansions.

    If a conjecture holds, its residual equals the omitted tail, so
    ``r - tail`` (``corrected``) should be small and ``|r|`` should not exceed
    ``bound``, which adds the model slack and the moment error to the tail.
    """

    r_a: object
    r_b: object
    tail_a: object
    tail_b: object
    bound_a: object
    bound_b: object
    difference_series: object
    N: int

    @property
    def corrected_a(self):
        return self.r_a - self.tail_a

    @property
    def corrected_b(self):
        return self.r_b - self.tail_b

    @property
    def a_within_bound(self) -> bool:
        return abs(self.r_a) <= self.bound_a

    @property
    def b_within_bound(self) -> bool:
        return abs(self.r_b) <= self.bound_b


def _weight_a(j):
    return (1 + mp.mpf(2) ** (1 - j)) / (2 * j)


def _weight_b(j):
    return (mp.mpf(2) ** -j - (-1) ** j) / j


def conjecture_residuals(m, lam=None) -> ConjectureResiduals:
    """Residuals of log 2 = sum_n m_n (1 + 2^(1-n)) / (2n) and
    log 2 = sum_n m_n (2^-n - (-1)^n) / n, truncated at the stored N.

    Residuals are reported, never asserted.
    """
    values, dps, _, moment_err = unpack_moments(m)
    N = len(values) - 1
    with mp.workdps(dps):
        l2 = mp.log(2)
        wa = [_weight_a(j) for j in range(1, N + 1)]
        wb = [_weight_b(j) for j in range(1, N + 1)]
        sa = mp.fsum(w * x for w, x in zip(wa, values[1:]))
        sb = mp.fsum(w * x for w, x in zip(wb, values[1:]))
        diff = mp.fsum((b - a) * x for a, b, x in zip(wa, wb, values[1:]))
        if N >= 1:
            lam = lambda_const(m) if lam is None else lam
            tail_a = model_tail(_weight_a, N, lam, rel=TAIL_REL)
            tail_b = model_tail(_weight_b, N, lam, rel=TAIL_REL)
        else:
            # no moments beyond m_0 to anchor a model; the whole series is tail
            tail_a, tail_b = l2, l2
        bound_a = abs(tail_a) * (1 + MODEL_SLACK) + mp.fsum(abs(w) for w in wa) * moment_err
        bound_b = abs(tail_b) * (1 + MODEL_SLACK) + mp.fsum(abs(w) for w in wb) * moment_err
        return ConjectureResiduals(l2 - sa, l2 - sb, tail_a, tail_b, bound_a, bound_b, diff, N)
