"""Asymptotics of m_n and related constants.

m_n behaves like lambda * S(n) for several closely related sums S, where
lambda = sum (log 2)^n/n! m_n:

    S_x(n)  = sum_{h>=1} 2^-(h+x) (1 - 1/(h+x))^n          (x in [0, 1))
    S_int(n) = int_1^inf 2^-t (1 - 1/t)^n dt

The error of each form oscillates in sqrt(n) with an amplitude kappa(n) that
is measured by how far S_0 and S_1/4 stray from S_int.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import mpmath as mp

from .engine import _LAMBDA_ROUGH, MomentVector, PhiVector, phi_vector, truncation_estimate
from .errors import PrecisionError, RankDeficiencyError
from .special import EULER_GAMMA, PrecisionContext, exp_integral_neg_log2

__all__ = [
    "AsymptoticModel",
    "ErrorDiagnostics",
    "ErrorRow",
    "FitResult",
    "LAMBDA_ROUTES",
    "S_integral",
    "binomial_tail",
    "model_tail",
    "S_integral_table",
    "S_shifted",
    "S_shifted_table",
    "closed_form_moment",
    "error_series",
    "fit_improved_model",
    "kappa",
    "kappa_comparator",
    "lambda_const",
    "lambda_routes",
    "lambda_tail_bound",
    "laplace_ratio",
    "phi_asymptotic",
    "rho_const",
]

LAMBDA_ROUTES = ("standard", "alternating", "even", "odd")

# S_int(1) needs Ei(-log 2), which is limited by the stored Euler constant
_MAX_SINT_DPS = len(EULER_GAMMA) - 10


def _dps(m=None, dps=None) -> int:
    if dps is not None:
        return dps
    if isinstance(m, MomentVector):
        return m.dps
    return mp.mp.dps


def lambda_tail_bound(N: int, route: str = "standard"):
    """Bound on the omitted terms n > N of a lambda series (uses 0 < m_n <= 1)."""
    l2 = mp.log(2)
    # first omitted term, times a geometric factor for the rest
    first = l2 ** (N + 1) / mp.factorial(N + 1)
    bound = first / (1 - l2 / (N + 2))
    return {"standard": 1, "alternating": 2, "even": mp.mpf(4) / 3, "odd": 4}[route] * bound


def lambda_const(m: Sequence, route: str = "standard", dps: int | None = None):
    """lambda from the moments by one of four equivalent series.

    standard:    sum (log 2)^n/n! m_n
    alternating: 2 sum (-log 2)^n/n! m_n
    even:        4/3 sum (log 2)^(2n)/(2n)! m_2n
    odd:         4 sum (log 2)^(2n+1)/(2n+1)! m_(2n+1)
    """
    if route not in LAMBDA_ROUTES:
        raise ValueError(f"route must be one of {LAMBDA_ROUTES}")
    with mp.workdps(_dps(m, dps)):
        l2 = mp.log(2)
        w = mp.mpf(1)
        terms = []
        for n, x in enumerate(m):
            if route == "standard":
                terms.append(w * x)
            elif route == "alternating":
                terms.append((-1) ** n * w * x)
            elif route == "even" and n % 2 == 0:
                terms.append(w * x)
            elif route == "odd" and n % 2 == 1:
                terms.append(w * x)
            w = w * l2 / (n + 1)
        total = mp.fsum(terms)
        factor = {"standard": 1, "alternating": 2, "even": mp.mpf(4) / 3, "odd": 4}[route]
        return factor * total


def lambda_routes(m: Sequence, dps: int | None = None) -> dict:
    return {r: lambda_const(m, r, dps) for r in LAMBDA_ROUTES}


def rho_const(phi: PhiVector | MomentVector, dps: int | None = None):
    """rho = sum_k (log 2)^2k / (2^2k (2k)!) phi_2k; equals lambda/sqrt 2."""
    if isinstance(phi, MomentVector):
        dps = dps or phi.dps
        with mp.workdps(phi.dps):
            phi = phi_vector(phi.values)
    with mp.workdps(_dps(None, dps)):
        x = mp.log(2) / 2
        w = mp.mpf(1)
        terms = []
        for k, p in enumerate(phi.values):
            terms.append(w * p)
            w = w * x * x / ((2 * k + 1) * (2 * k + 2))
        return mp.fsum(terms)


@lru_cache(maxsize=8192)
def _S_shifted_cached(x: str, n: int, dps: int):
    with mp.workdps(dps + 5):
        xv = mp.mpf(x)
        tol = mp.mpf(10) ** -(dps + 5)
        total = mp.mpf(0)
        h = 1
        while True:
            t = h + xv
            term = mp.mpf(0) if t <= 1 else mp.exp(n * mp.log1p(-1 / t) - t * mp.ln2)
            total += term
            # ratio of consecutive terms from h on: (1 + 1/((t-1)(t+1)))^n / 2, decreasing in h
            if t > 1:
                r = mp.exp(n * mp.log1p(1 / ((t - 1) * (t + 1)))) / 2
                if r < 1 and total > 0:
                    nxt = term * r
                    if nxt / (1 - r) < tol * total:
                        break
            h += 1
        return total


def S_shifted(x, n: int, dps: int | None = None):
    """S_x(n) = sum_{h>=1} 2^-(h+x) (1 - 1/(h+x))^n with a certified remainder.

    Relative accuracy is 10^-dps.  For x = 0 the h = 1 term vanishes.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    dps = _dps(None, dps)
    with mp.workdps(dps + 5):
        xv = mp.mpf(x)
        if not 0 <= xv < 1:
            raise ValueError("shift must lie in [0, 1)")
        key = mp.nstr(xv, dps + 5)
    val = _S_shifted_cached(key, n, dps)
    with mp.workdps(dps):
        return +val


def S_shifted_table(x, n_lo: int, n_hi: int, dps: int | None = None) -> list:
    """[S_x(n_lo), ..., S_x(n_hi)], each to relative accuracy 10^-dps.

    Terms are updated across n by one multiplication each.  S_x decreases in
    n and every term is at most 2^-h, so cutting the h-sum at H with
    2^-H < 10^-(dps+5) S_x(n_hi) certifies the whole table.
    """
    if not 0 <= n_lo <= n_hi:
        raise ValueError("need 0 <= n_lo <= n_hi")
    dps = _dps(None, dps)
    last = S_shifted(x, n_hi, dps)
    with mp.workdps(dps + 5):
        xv = mp.mpf(x)
        if not 0 <= xv < 1:
            raise ValueError("shift must lie in [0, 1)")
        H = int(mp.ceil(-mp.log(last, 2) + (dps + 5) * mp.log(10, 2))) + 2
        out = [mp.mpf(0)] * (n_hi - n_lo + 1)
        for h in range(1, H + 1):
            t = h + xv
            if t <= 1:
                continue
            f = 1 - 1 / t
            term = mp.exp(n_lo * mp.log(f) - t * mp.ln2)
            for i in range(len(out)):
                out[i] += term
                term *= f
    with mp.workdps(dps):
        return [+v for v in out]


def _sint_guard(n: int) -> int:
    # the recursion amplifies relative error like exp(4 sqrt(n log 2))
    return math.ceil(4 * math.sqrt(n * math.log(2)) / math.log(10)) + 10


@lru_cache(maxsize=16)
def _sint_table(nmax: int, dps: int) -> tuple:
    work = dps + _sint_guard(nmax)
    if work > _MAX_SINT_DPS:
        raise PrecisionError(
            f"S_int up to n={nmax} at {dps} digits needs {work} working digits, "
            f"more than the {_MAX_SINT_DPS} the stored constants support"
        )
    ctx = PrecisionContext(max(15, work - 10), 10)
    with mp.workdps(work):
        l2 = mp.log(2)
        s = [1 / (2 * l2)]
        if nmax >= 1:
            s.append(1 / (2 * l2) + exp_integral_neg_log2(ctx))
        for n in range(2, nmax + 1):
            s.append((2 + l2 / (n - 1)) * s[-1] - s[-2])
    with mp.workdps(dps):
        return tuple(+x for x in s)


def S_integral_table(nmax: int, dps: int | None = None) -> tuple:
    """(S_int(0), ..., S_int(nmax)) via S_int(n) = (2 + log2/(n-1)) S_int(n-1) - S_int(n-2)."""
    if nmax < 0:
        raise ValueError("nmax must be nonnegative")
    dps = _dps(None, dps)
    # share one table per precision; grow in blocks
    size = max(64, 1 << (nmax.bit_length()))
    return _sint_table(size, dps)[: nmax + 1]


def S_integral(n: int, dps: int | None = None):
    """S_int(n) = int_1^inf 2^-t (1 - 1/t)^n dt."""
    return S_integral_table(n, dps)[n]


def kappa(n: int, dps: int | None = None):
    """Amplitude sqrt((S_0 - S_int)^2 + (S_1/4 - S_int)^2) of the oscillation of S_x around S_int."""
    if n < 2:
        raise ValueError("kappa needs n >= 2")
    dps = _dps(None, dps)
    with mp.workdps(dps):
        si = S_integral(n, dps)
        return mp.sqrt((S_shifted(0, n, dps) - si) ** 2 + (S_shifted("0.25", n, dps) - si) ** 2)


def kappa_comparator(n: int):
    """sqrt(n)/(log n log log n) exp(-9/2 sqrt(n log 2)); a rough size guide for kappa."""
    n = mp.mpf(n)
    return mp.sqrt(n) / (mp.log(n) * mp.log(mp.log(n))) * mp.exp(-mp.mpf(9) / 2 * mp.sqrt(n * mp.log(2)))


@dataclass(frozen=True)
class ErrorRow:
    n: int
    m: object
    S0: object
    Shalf: object
    Squarter: object
    Sint: object
    kappa: object
    E0: object
    Ehalf: object
    Eint: object

    @property
    def sqrt_n(self):
        return mp.sqrt(self.n)


@dataclass
class ErrorDiagnostics:
    lam: object
    rows: list = field(default_factory=list)

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]

    def rms(self, name: str):
        col = self.column(name)
        return mp.sqrt(mp.fsum(x * x for x in col) / len(col))

    def sign_changes(self, name: str) -> int:
        col = self.column(name)
        return sum(1 for a, b in zip(col, col[1:]) if a * b < 0)


def _check_range(m: Sequence, n_range) -> range:
    lo, hi = n_range
    if lo < 2 or hi < lo:
        raise ValueError("range must satisfy 2 <= lo <= hi")
    if hi > len(m) - 1:
        raise ValueError(f"range end {hi} exceeds the available order {len(m) - 1}")
    return range(lo, hi + 1)


def error_series(m: Sequence, n_range=(100, 400), lam=None, dps: int | None = None) -> ErrorDiagnostics:
    """Normalized errors E_*(n) = (m_n - lambda S_*(n)) / kappa(n) for * = 0, 1/2, int."""
    dps = _dps(m, dps)
    ns = _check_range(m, n_range)
    with mp.workdps(dps):
        lam = lambda_const(m, dps=dps) if lam is None else lam
        sint = S_integral_table(ns[-1], dps)
        s0s = S_shifted_table(0, ns[0], ns[-1], dps)
        shs = S_shifted_table("0.5", ns[0], ns[-1], dps)
        sqs = S_shifted_table("0.25", ns[0], ns[-1], dps)
        out = ErrorDiagnostics(lam)
        for i, n in enumerate(ns):
            s0, sh, sq, si = s0s[i], shs[i], sqs[i], sint[n]
            k = mp.sqrt((s0 - si) ** 2 + (sq - si) ** 2)
            mn = mp.mpf(m[n])
            out.rows.append(
                ErrorRow(
                    n, mn, s0, sh, sq, si, k,
                    (mn - lam * s0) / k,
                    (mn - lam * sh) / k,
                    (mn - lam * si) / k,
                )
            )
        return out


@dataclass(frozen=True)
class FitResult:
    a: object
    b: object
    residual_norm: object
    rms_before: object
    rms_after: object
    n_range: tuple


def fit_improved_model(m: Sequence, n_range=(100, 400), lam=None, dps: int | None = None) -> FitResult:
    """Ordinary least squares for m_n - lambda S_int(n) ~ a (S_0 - S_int) + b (S_1/4 - S_int).

    The fit is unweighted over ``n_range``; columns are rescaled to unit
    norm before solving.
    """
    dps = _dps(m, dps)
    ns = _check_range(m, n_range)
    with mp.workdps(dps):
        lam = lambda_const(m, dps=dps) if lam is None else lam
        sint = S_integral_table(ns[-1], dps)
        s0s = S_shifted_table(0, ns[0], ns[-1], dps)
        sqs = S_shifted_table("0.25", ns[0], ns[-1], dps)
        c1 = [s0s[i] - sint[n] for i, n in enumerate(ns)]
        c2 = [sqs[i] - sint[n] for i, n in enumerate(ns)]
        y = [mp.mpf(m[n]) - lam * sint[n] for n in ns]
        n1 = mp.sqrt(mp.fsum(x * x for x in c1))
        n2 = mp.sqrt(mp.fsum(x * x for x in c2))
        if n1 == 0 or n2 == 0:
            raise RankDeficiencyError("a basis column vanishes on the fit range")
        u1 = [x / n1 for x in c1]
        u2 = [x / n2 for x in c2]
        g12 = mp.fsum(p * q for p, q in zip(u1, u2))
        if 1 - abs(g12) < mp.mpf(10) ** (-dps // 2):
            raise RankDeficiencyError("basis columns are numerically collinear")
        A = mp.matrix([[p, q] for p, q in zip(u1, u2)])
        sol, res = mp.qr_solve(A, mp.matrix(y))
        a = sol[0] / n1
        b = sol[1] / n2
        resid = [yy - a * p - b * q for yy, p, q in zip(y, c1, c2)]
        rms = lambda v: mp.sqrt(mp.fsum(x * x for x in v) / len(v))
        return FitResult(a, b, res, rms(y), rms(resid), (ns[0], ns[-1]))


def closed_form_moment(n: int, lam=None):
    """lambda n^(1/4) (log 2)^(-3/4) sqrt(pi/2) exp(-2 sqrt(n log 2))."""
    return truncation_estimate(n, lam)


def phi_asymptotic(n: int, lam, dps: int | None = None) -> tuple:
    """(2 lambda sum_{h>=3} 2^-h (1 - 2/h)^n,
        lambda (2n)^(1/4) sqrt(pi) (log 2)^(-3/4) exp(-2 sqrt(2 n log 2))).

    Both are asymptotic forms of phi_n; at n = 0 the sum gives lambda/2, not 1.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    dps = _dps(None, dps)
    with mp.workdps(dps):
        tol = mp.mpf(10) ** -(dps + 5)
        total = mp.mpf(0)
        h = 3
        while True:
            term = mp.exp(n * mp.log1p(mp.mpf(-2) / h) - h * mp.ln2)
            total += term
            # term(j+1)/term(j) = (1 + 2/((j-2)(j+1)))^n / 2, decreasing in j
            r = mp.exp(n * mp.log1p(mp.mpf(2) / ((h - 2) * (h + 1)))) / 2
            if r < 1 and total > 0 and term * r / (1 - r) < tol * total:
                break
            h += 1
        sum_form = 2 * lam * total
        l2 = mp.log(2)
        closed = lam * (2 * mp.mpf(n)) ** 0.25 * mp.sqrt(mp.pi) * l2 ** -0.75 * mp.exp(-2 * mp.sqrt(2 * n * l2))
        return sum_form, closed


def laplace_ratio(n: int, dps: int = 30):
    """S_0(n) / (n^(1/4) (log 2)^(-3/4) sqrt(pi/2) exp(-2 sqrt(n log 2))); tends to 1."""
    if n < 10:
        raise ValueError("the Laplace form needs n >= 10")
    with mp.workdps(dps):
        l2 = mp.log(2)
        ref = mp.mpf(n) ** 0.25 * l2 ** -0.75 * mp.sqrt(mp.pi / 2) * mp.exp(-2 * mp.sqrt(n * l2))
        return S_shifted(0, n, dps) / ref


@dataclass
class AsymptoticModel:
    """lambda, rho and the fitted (a, b), with the S-family as predictors.

    ``kind`` selects the predictor used by :meth:`predict` and by
    :meth:`extension_terms` (the bootstrap hook): ``"S0"``, ``"Shalf"``,
    ``"Sint"`` or ``"improved"``.
    """

    lam: object
    rho: object = None
    a: object = None
    b: object = None
    kind: str = "Sint"
    dps: int = 50

    def __post_init__(self):
        if self.kind not in ("S0", "Shalf", "Sint", "improved"):
            raise ValueError("unknown model kind")
        if self.kind == "improved" and (self.a is None or self.b is None):
            raise ValueError("the improved model needs fitted a and b")

    @classmethod
    def from_moments(
        cls,
        m: MomentVector | Sequence,
        kind: str = "Sint",
        fit_range=(100, 400),
        fit: bool = True,
        dps: int | None = None,
    ) -> "AsymptoticModel":
        dps = _dps(m, dps)
        with mp.workdps(dps):
            values = list(m)
            lam = lambda_const(values, dps=dps)
            rho = rho_const(phi_vector(values), dps=dps)
            a = b = None
            if fit and fit_range is not None and len(values) - 1 >= fit_range[1]:
                res = fit_improved_model(values, fit_range, lam=lam, dps=dps)
                a, b = res.a, res.b
            return cls(lam=lam, rho=rho, a=a, b=b, kind=kind, dps=dps)

    @classmethod
    def for_bootstrap(cls, kind: str = "Sint", dps: int = 50) -> "AsymptoticModel":
        """Shape-only model for the bootstrap backend, which refits lambda
        before every sweep; the stored lambda is just a starting value."""
        if kind == "improved":
            raise ValueError("the improved model needs fitted a and b; use from_moments")
        return cls(lam=mp.mpf(_LAMBDA_ROUGH), kind=kind, dps=dps)

    def S(self, n: int) -> dict:
        with mp.workdps(self.dps):
            return {
                "S0": S_shifted(0, n, self.dps),
                "Shalf": S_shifted("0.5", n, self.dps),
                "Squarter": S_shifted("0.25", n, self.dps),
                "Sint": S_integral(n, self.dps),
            }

    def _shape_offset(self, n: int, lam=None):
        lam = self.lam if lam is None else lam
        if self.kind == "S0":
            return S_shifted(0, n, self.dps), mp.mpf(0)
        if self.kind == "Shalf":
            return S_shifted("0.5", n, self.dps), mp.mpf(0)
        si = S_integral(n, self.dps)
        if self.kind == "Sint":
            return si, mp.mpf(0)
        off = self.a * (S_shifted(0, n, self.dps) - si) + self.b * (S_shifted("0.25", n, self.dps) - si)
        return si, off

    def predict(self, n: int):
        with mp.workdps(self.dps):
            shape, off = self._shape_offset(n)
            return self.lam * shape + off

    def extension_terms(self, N: int, M: int, dps: int):
        """Shapes and offsets for n = N+1..M, so that m_n ~ lambda shape + offset."""
        dps = max(dps, self.dps)
        with mp.workdps(dps):
            si = S_integral_table(M, dps)[N + 1 :]
            if self.kind == "Sint":
                return list(si), [mp.mpf(0)] * (M - N)
            if self.kind == "Shalf":
                return S_shifted_table("0.5", N + 1, M, dps), [mp.mpf(0)] * (M - N)
            s0 = S_shifted_table(0, N + 1, M, dps)
            if self.kind == "S0":
                return s0, [mp.mpf(0)] * (M - N)
            sq = S_shifted_table("0.25", N + 1, M, dps)
            offsets = [self.a * (p - r) + self.b * (q - r) for p, q, r in zip(s0, sq, si)]
            return list(si), offsets


# tails of moment series, estimated with m_j ~ lambda S_0(j)
#   = lambda sum_{h>=2} 2^-h (1 - 1/h)^j, summed per h


def _h_cutoff(N: int) -> int:
    # the model mass at index ~N sits near h ~ sqrt(N/log 2)
    return max(8, int(math.sqrt(max(N, 1) / math.log(2)))) + 8


def model_tail(weight, N: int, lam, dps: int = 25, rel: float = 1e-13):
    """Estimate sum_{j>N} weight(j) m_j from the model m_j ~ lambda S_0(j).

    ``weight`` maps j to a real number.  For each h the inner series
    sum_{j>N} weight(j) q^(j-N-1), q = 1 - 1/h, is summed in float64 until
    its remainder (about h times the last term once terms decrease) is below
    ``rel`` of what it can still affect; the factor q^(N+1) is applied in
    mpmath so nothing underflows.  h stops once the per-h contributions fall
    below ``rel`` of the total.  ``rel`` cannot usefully go below ~1e-14.
    """
    with mp.workdps(dps):
        cache: dict[int, float] = {}

        def w(j):
            if j not in cache:
                cache[j] = float(weight(j))
            return cache[j]

        rel = max(float(rel), 1e-15)
        total = mp.mpf(0)
        hcut = _h_cutoff(N)
        h = 2
        while True:
            q = 1 - mp.mpf(1) / h
            lead = q ** (N + 1) / mp.mpf(2) ** h
            # the inner sum may be cut once it is negligible against total / lead
            against = float(abs(total) / lead) if total else 0.0
            qf = float(q)
            qj = 1.0
            inner = 0.0
            j = N + 1
            prev = None
            while True:
                term = w(j) * qj
                inner += term
                a = abs(term)
                # once terms decrease the rest is about h times the last one;
                # the budget is split over the ~hcut values of h that matter
                if prev is not None and a <= prev and a * h * hcut < rel * (abs(inner) + against):
                    break
                prev = a
                qj *= qf
                j += 1
            contrib = lead * inner
            total += contrib
            # contributions past the peak shrink by about 1/2 per step
            if h > hcut and 2 * abs(contrib) < rel * abs(total):
                break
            h += 1
        return lam * total


def binomial_tail(n: int, N: int, lam, dps: int = 30):
    """Estimate sum_{j>N} C(n+j-1, j) m_j in closed form per h:
    sum_{j>N} C(n+j-1,j) q^j = h^n I_q(N+1, n), with I the regularized
    incomplete beta function and q = 1 - 1/h."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return mp.mpf(0)
    with mp.workdps(dps):
        total = mp.mpf(0)
        hcut = _h_cutoff(N)
        h = 2
        while True:
            q = 1 - mp.mpf(1) / h
            contrib = mp.mpf(h) ** n * mp.betainc(N + 1, n, 0, q, regularized=True) / mp.mpf(2) ** h
            total += contrib
            if h > hcut and contrib < mp.mpf(10) ** -(dps - 5) * total:
                break
            h += 1
        return lam * total
