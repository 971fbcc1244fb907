"""Fixed-point computation of the moments m_0..m_N.

The moments are the unique fixed point (with m_0 = 1) of the operator
T(v)_n = 2^-n sum_k C(n,2k) phi_2k(v), where phi_n(v) = sum_k C(n+k-1,k)
v_{n+k}/2^{n+k}.  Truncating v at index N turns this into a finite
contraction that halves the distance to its fixed point on every sweep.

Two evaluation paths share the same summation order:

* generic functions (:func:`compute_phi`, :func:`apply_T`,
  :func:`alkauskas_step`) work on lists of Fractions or mpmath numbers and
  are used for single evaluations and exact checks;
* the iteration itself runs on gmpy2 integers scaled by 2^P (fixed point),
  which is several times faster than mpmath while keeping every coefficient
  in [0, 1] so rounding never accumulates beyond a few units of 2^-P.
"""
from __future__ import annotations

import json
import math
import operator
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import mpmath as mp
from gmpy2 import mpz

from .errors import CancellationWarning, CheckpointError, NonConvergenceError
from .special import PrecisionContext, gamma_poly_table, polylog_half

__all__ = [
    "BACKENDS",
    "EngineConfig",
    "JHResult",
    "MomentVector",
    "PhiVector",
    "ZeroExtension",
    "alkauskas_step",
    "apply_T",
    "bootstrap_with_asymptotics",
    "compute_moments",
    "compute_phi",
    "fixed_point_moments",
    "jh_crosscheck",
    "load_checkpoint",
    "phi_vector",
    "resume_from_checkpoint",
    "save_checkpoint",
    "truncation_estimate",
    "working_dps",
]

BACKENDS = ("simple", "alkauskas", "bootstrap")

CHECKPOINT_FORMAT = "minkmoments-checkpoint"
CHECKPOINT_VERSION = 1

# rough value used only for a-priori truncation estimates
_LAMBDA_ROUGH = 1.4281598455456029


def working_dps(digits: int, N: int) -> int:
    """Decimal digits carried internally: requested + 10 + ceil(N/20)."""
    return digits + 10 + -(-N // 20)


@dataclass(frozen=True)
class EngineConfig:
    """Parameters of a moment computation.

    ``max_iter`` defaults to ceil(2 sqrt(N/log 2)) + 10 + ceil(digits log2 10):
    the first two terms cover the sweeps needed to reach the truncation floor,
    the last one the sweeps needed for the step to fall below 10^-digits from
    a zero start.
    """

    N: int
    digits: int = 30
    M: int | None = None
    backend: str = "simple"
    max_iter: int | None = None
    alternating: bool = False
    checking_order: int | None = None

    def __post_init__(self):
        if self.N < 0:
            raise ValueError("order N must be nonnegative")
        if self.digits < 15:
            raise ValueError("digits must be at least 15")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if self.backend == "bootstrap":
            if self.M is None or self.M <= self.N:
                raise ValueError("bootstrap needs an extension order M > N")
        elif self.M is not None:
            raise ValueError("extension order M only applies to the bootstrap backend")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.alternating and self.backend != "alkauskas":
            raise ValueError("the alternating map is an alkauskas variant")
        if self.checking_order is not None:
            if self.backend != "bootstrap":
                raise ValueError("checking_order only applies to the bootstrap backend")
            if not self.N < self.checking_order <= self.M:
                raise ValueError("checking order must satisfy N < N' <= M")

    @property
    def dps(self) -> int:
        return working_dps(self.digits, self.M if self.M else self.N)

    @property
    def bits(self) -> int:
        return math.ceil(self.dps * math.log2(10))

    @property
    def iteration_cap(self) -> int:
        if self.max_iter is not None:
            return self.max_iter
        return (
            math.ceil(2 * math.sqrt(self.N / math.log(2)))
            + 10
            + math.ceil(self.digits * math.log2(10))
        )

    @property
    def check_order(self) -> int:
        if self.checking_order is not None:
            return self.checking_order
        return (self.N + self.M) // 2

    def as_dict(self) -> dict:
        return {
            "N": self.N,
            "digits": self.digits,
            "M": self.M,
            "backend": self.backend,
            "max_iter": self.iteration_cap,
            "alternating": self.alternating,
            "threshold": f"1e-{self.digits}",
        }


@dataclass
class MomentVector:
    """Approximations of m_0..m_N plus how they were obtained."""

    values: list
    digits: int
    dps: int
    backend: str
    iterations: int
    step: object
    converged: bool
    M: int | None = None
    extension: list | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return len(self.values) - 1

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __iter__(self):
        return iter(self.values)

    def extended(self) -> list:
        """Values m_0..m_N followed by the model values m_{N+1}..m_M, if any."""
        return list(self.values) + list(self.extension or [])

    @property
    def error_estimate(self):
        """A-priori absolute error of each entry: the truncation estimate of
        m_{N+1}, or the checking-run bound for bootstrap runs."""
        if "error_bound" in self.diagnostics:
            return self.diagnostics["error_bound"]
        with mp.workdps(self.dps):
            return truncation_estimate(self.N + 1)

    def require_converged(self) -> "MomentVector":
        if not self.converged:
            raise NonConvergenceError(
                f"step {mp.nstr(self.step, 5)} still above 1e-{self.digits} "
                f"after {self.iterations} sweeps",
                result=self,
            )
        return self

    def context(self):
        return mp.workdps(self.dps)


@dataclass
class PhiVector:
    """phi_0, phi_2, ..., phi_{2 floor(N/2)}."""

    values: list

    def __getitem__(self, n: int):
        if n % 2:
            raise IndexError("only even phi indices are stored")
        return self.values[n // 2]

    def __len__(self):
        return len(self.values)

    @property
    def max_index(self) -> int:
        return 2 * (len(self.values) - 1)


def unpack_moments(m):
    """(values, dps, digits, per-entry error) for a MomentVector or a plain sequence.

    Plain sequences are taken at the ambient precision with zero error.
    """
    if isinstance(m, MomentVector):
        return list(m.values), m.dps, m.digits, m.error_estimate
    return list(m), mp.mp.dps, mp.mp.dps - 10, mp.mpf(0)


def truncation_estimate(n: int, lam=None):
    """lambda n^(1/4) (log 2)^(-3/4) sqrt(pi/2) exp(-2 sqrt(n log 2)), which
    approximates m_n; at n = N+1 it is the order of the truncation error."""
    lam = mp.mpf(_LAMBDA_ROUGH) if lam is None else lam
    if n <= 0:
        return mp.mpf(1)
    l2 = mp.log(2)
    return lam * mp.mpf(n) ** 0.25 * l2 ** -0.75 * mp.sqrt(mp.pi / 2) * mp.exp(-2 * mp.sqrt(n * l2))


# generic (exact or mpmath) evaluation


def _unit(values):
    exact = all(isinstance(x, (int, Fraction)) for x in values)
    return (lambda p, q=1: Fraction(p, q)) if exact else (lambda p, q=1: mp.mpf(p) / q)


def compute_phi(m: Sequence, n: int, extension: Sequence | None = None, tail_constant=None):
    """phi_n = sum_{k>=0} C(n+k-1,k) m_{n+k} / 2^{n+k}, truncated at the end of
    ``m`` (followed by ``extension``, if given).

    With ``tail_constant`` c every missing entry is taken to be c, summed in
    closed form via sum_k C(n+k-1,k)/2^{n+k} = 1.
    """
    if n % 2 or n < 0:
        raise ValueError("phi is only needed at even indices")
    v = list(m) + list(extension or [])
    if n >= len(v):
        raise ValueError("index beyond the available moments")
    num = _unit(v)
    b = num(1, 1 << n)
    total = num(0)
    weight = num(0)
    for k in range(len(v) - n):
        total += b * v[n + k]
        weight += b
        b = b * (n + k) / (2 * (k + 1))
    if tail_constant is not None:
        total += tail_constant * (1 - weight)
    return total


def phi_vector(m: Sequence, extension: Sequence | None = None, tail_constant=None) -> PhiVector:
    N = len(m) - 1
    return PhiVector(
        [compute_phi(m, n, extension, tail_constant) for n in range(0, N + 1, 2)]
    )


def _moments_from_phi(phi: Sequence, N: int, num) -> list:
    # m_n = 2^-n sum_k C(n,2k) phi_2k, with b updated as in the phi pass
    out = [phi[0]]
    for n in range(1, N + 1):
        b = num(1, 1 << n)
        total = num(0)
        for k in range(n // 2 + 1):
            total += b * phi[k]
            b = b * (n - 2 * k - 1) * (n - 2 * k) / ((2 * k + 1) * (2 * k + 2))
        out.append(total)
    return out


def apply_T(v: Sequence, extension: Sequence | None = None, tail_constant=None) -> list:
    """One application of T to the truncated vector v_0..v_N."""
    v = list(v)
    phi = phi_vector(v, extension, tail_constant).values
    return _moments_from_phi(phi, len(v) - 1, _unit(v + list(extension or [])))


def alkauskas_step(v: Sequence, coefficients: Sequence, alternating: bool = False) -> list:
    """m_n = sum_k C(k+n-1,n-1) g_{k+n} v_k with g = ``coefficients``.

    Pass gamma_n = 2 Li_n(1/2) - 1 for the positive map, or Li_n(1/2) with
    ``alternating=True`` for the variant with factors (-1)^k.
    ``coefficients`` must extend to index 2N.
    """
    v = list(v)
    N = len(v) - 1
    if len(coefficients) < 2 * N + 1:
        raise ValueError("coefficient table too short")
    out = [coefficients[0] * v[0]]
    for n in range(1, N + 1):
        c = 1
        total = 0
        for k in range(N + 1):
            term = c * coefficients[k + n] * v[k]
            total += -term if alternating and k % 2 else term
            c = c * (k + n) // (k + 1)
        out.append(total)
    return out


# fixed-point integer kernels


def _to_fixed(x, bits: int) -> mpz:
    return mpz(int(mp.floor(mp.ldexp(x, bits))))


def _from_fixed(x: mpz, bits: int):
    return mp.ldexp(mp.mpf(int(x)), -bits)


@lru_cache(maxsize=4)
def _simple_tables(N: int, K: int, bits: int):
    """Scaled coefficient rows for the phi pass (sums to index K) and the m pass."""
    phi_rows = []
    for n in range(0, N + 1, 2):
        if n == 0:
            phi_rows.append((mpz(1) << bits,))
            continue
        row = []
        c = 1
        for k in range(K - n + 1):
            row.append(mpz(c << bits) >> (n + k))
            c = c * (n + k) // (k + 1)
        phi_rows.append(tuple(row))
    m_rows = [None]
    for n in range(1, N + 1):
        row = []
        c = 1
        for k in range(n // 2 + 1):
            row.append(mpz(c << bits) >> n)
            c = c * (n - 2 * k - 1) * (n - 2 * k) // ((2 * k + 1) * (2 * k + 2))
        m_rows.append(tuple(row))
    return tuple(phi_rows), tuple(m_rows)


def _simple_sweep(m: list, tables, N: int, bits: int) -> list:
    phi_rows, m_rows = tables
    mul = operator.mul
    phi = [sum(map(mul, row, m[2 * i :])) >> bits for i, row in enumerate(phi_rows)]
    return [m[0]] + [sum(map(mul, m_rows[n], phi)) >> bits for n in range(1, N + 1)]


@lru_cache(maxsize=4)
def _alkauskas_tables(N: int, bits: int, dps: int, alternating: bool):
    ctx = PrecisionContext(max(15, dps - 10), 10)
    with mp.workdps(dps + 10):
        if alternating:
            g = [polylog_half(j, ctx) for j in range(2 * N + 1)]
        else:
            g = gamma_poly_table(2 * N, ctx)
        rows = [None]
        for n in range(1, N + 1):
            row = []
            c = 1
            for k in range(N + 1):
                x = _to_fixed(c * g[k + n], bits)
                row.append(-x if alternating and k % 2 else x)
                c = c * (k + n) // (k + 1)
            rows.append(tuple(row))
    return tuple(rows)


def _alkauskas_sweep(m: list, rows, N: int, bits: int) -> list:
    mul = operator.mul
    return [m[0]] + [sum(map(mul, rows[n], m)) >> bits for n in range(1, N + 1)]


def _iterate(sweep: Callable, start: list, cap: int, threshold: mpz, before: Callable | None = None):
    m = start
    history = []
    step = None
    for it in range(1, cap + 1):
        if before is not None:
            before(m)
        new = sweep(m)
        step = max((abs(a - b) for a, b in zip(new, m)), default=mpz(0))
        history.append(step)
        m = new + m[len(new) :]
        if step < threshold:
            return m, it, step, history, True
    return m, cap, step, history, False


def _start_vector(cfg: EngineConfig, start, bits: int) -> list:
    one = mpz(1) << bits
    m = [one] + [mpz(0)] * cfg.N
    if start is not None:
        with mp.workdps(cfg.dps):
            for i, x in enumerate(list(start)[1 : cfg.N + 1], start=1):
                m[i] = _to_fixed(mp.mpf(x), bits)
    return m


def _package(cfg, m, it, step, history, converged, bits, **extra) -> MomentVector:
    with mp.workdps(cfg.dps):
        values = [mp.mpf(1)] + [_from_fixed(x, bits) for x in m[1 : cfg.N + 1]]
        diagnostics = {
            "steps": [_from_fixed(s, bits) for s in history],
            "threshold": mp.mpf(10) ** -cfg.digits,
            "config": cfg.as_dict(),
        }
        diagnostics.update(extra.pop("diagnostics", {}))
        return MomentVector(
            values=values,
            digits=cfg.digits,
            dps=cfg.dps,
            backend=cfg.backend + ("-alternating" if cfg.alternating else ""),
            iterations=it,
            step=_from_fixed(step if step is not None else mpz(0), bits),
            converged=converged,
            diagnostics=diagnostics,
            **extra,
        )


def _threshold(cfg: EngineConfig, bits: int) -> mpz:
    with mp.workdps(cfg.dps):
        return mpz(int(mp.ceil(mp.ldexp(mp.mpf(10) ** -cfg.digits, bits))))


def fixed_point_moments(cfg: EngineConfig, start: Sequence | None = None) -> MomentVector:
    """Iterate the truncated operator (simple or alkauskas backend) from
    (1, 0, ..., 0) or from a warm start.

    Stops when the sup-norm step drops below 10^-digits.  If the iteration cap
    is reached first, the best iterate is returned with ``converged=False``
    (see :meth:`MomentVector.require_converged`).
    """
    if cfg.backend == "bootstrap":
        raise ValueError("use bootstrap_with_asymptotics for the bootstrap backend")
    bits = cfg.bits
    m = _start_vector(cfg, start, bits)
    t0 = time.perf_counter()
    if cfg.backend == "simple":
        tables = _simple_tables(cfg.N, cfg.N, bits)
        sweep = lambda v: _simple_sweep(v, tables, cfg.N, bits)
    else:
        rows = _alkauskas_tables(cfg.N, bits, cfg.dps, cfg.alternating)
        sweep = lambda v: _alkauskas_sweep(v, rows, cfg.N, bits)
    m, it, step, history, ok = _iterate(sweep, m, cfg.iteration_cap, _threshold(cfg, bits))
    return _package(
        cfg, m, it, step, history, ok, bits,
        diagnostics={"seconds": time.perf_counter() - t0},
    )


class ZeroExtension:
    """Degenerate model: every moment beyond N is taken to be 0."""

    def extension_terms(self, N: int, M: int, dps: int):
        with mp.workdps(dps):
            zeros = [mp.mpf(0)] * (M - N)
            return zeros, zeros


def bootstrap_with_asymptotics(cfg: EngineConfig, model, start: Sequence | None = None) -> MomentVector:
    """Iterate with the moments beyond N replaced by an asymptotic model.

    Before each sweep lambda~ = sum_{n<=M} (log 2)^n/n! m~_n is recomputed and
    m~_n := lambda~ shape(n) + offset(n) for N < n <= M, where
    ``model.extension_terms(N, M, dps)`` supplies the two lists.  The phi
    sums then run to M - n.

    After convergence a checking run applies one plain sweep at order N'
    (``cfg.check_order``) to the vector completed by the model; the largest
    change over indices 1..N' is reported as ``epsilon`` and
    max(epsilon, estimate of m_{N'+1}) as the error bound.
    """
    if cfg.backend != "bootstrap":
        raise ValueError("configuration is not a bootstrap run")
    N, M, bits = cfg.N, cfg.M, cfg.bits
    t0 = time.perf_counter()
    shape, offset = model.extension_terms(N, M, cfg.dps)
    if len(shape) != M - N or len(offset) != M - N:
        raise ValueError("model returned the wrong number of extension terms")
    with mp.workdps(cfg.dps):
        l2 = mp.log(2)
        weights, w = [], mp.mpf(1)
        for n in range(M + 1):
            weights.append(_to_fixed(w, bits))
            w = w * l2 / (n + 1)
        shape_i = [_to_fixed(x, bits) for x in shape]
        offset_i = [_to_fixed(x, bits) for x in offset]
    mul = operator.mul

    def extend(m):
        lam = sum(map(mul, weights, m)) >> bits
        for j in range(M - N):
            m[N + 1 + j] = ((lam * shape_i[j]) >> bits) + offset_i[j]

    m = _start_vector(cfg, start, bits) + [mpz(0)] * (M - N)
    tables = _simple_tables(N, M, bits)
    sweep = lambda v: _simple_sweep(v, tables, N, bits)
    m, it, step, history, ok = _iterate(
        sweep, m, cfg.iteration_cap, _threshold(cfg, bits), before=extend
    )
    extend(m)
    lam = sum(map(mul, weights, m)) >> bits

    # checking run: one plain sweep at order N' on the model-completed vector
    Nc = cfg.check_order
    check = _simple_sweep(m[: Nc + 1], _simple_tables(Nc, Nc, bits), Nc, bits)
    eps = max(abs(a - b) for a, b in zip(check[1:], m[1 : Nc + 1]))
    with mp.workdps(cfg.dps):
        lam_f = _from_fixed(lam, bits)
        eps_f = _from_fixed(eps, bits)
        tail_f = truncation_estimate(Nc + 1, lam_f)
        diagnostics = {
            "lambda": lam_f,
            "epsilon": eps_f,
            "checking_order": Nc,
            "error_bound": max(eps_f, tail_f),
            "seconds": time.perf_counter() - t0,
        }
        extension = [_from_fixed(x, bits) for x in m[N + 1 :]]
    return _package(
        cfg, m, it, step, history, ok, bits,
        M=M, extension=extension, diagnostics=diagnostics,
    )


def compute_moments(cfg: EngineConfig, model=None, start: Sequence | None = None) -> MomentVector:
    """Dispatch on ``cfg.backend``."""
    if cfg.backend == "bootstrap":
        if model is None:
            raise ValueError("the bootstrap backend needs an asymptotic model")
        return bootstrap_with_asymptotics(cfg, model, start)
    return fixed_point_moments(cfg, start)


# cross-check from the decomposition of [0,1] into [1-2^(1-h), 1-2^-h]


@dataclass(frozen=True)
class JHResult:
    value: object
    first_term: object
    tail_bound: object
    h_max: int
    max_cancellation_digits: float


def _j1_from_phi(phi: PhiVector, n: int, dps: int):
    # J_1(n) = (1/2) int ((1+y)/(3+y))^n over the symmetric law of y = 2 Box - 1;
    # odd moments of y vanish and the even ones are phi.  The Taylor series of
    # the integrand in y has radius 3, so the resummed series converges like 3^-i.
    K = phi.max_index
    extra = int(0.31 * n) + 10
    with mp.workdps(dps + extra):
        third = mp.mpf(1) / 3
        inv = [mp.mpf(0)] * (K + 1)
        c = third**n
        for j in range(K + 1):
            inv[j] = c
            c = -c * (n + j) / (j + 1) * third
        binom = [math.comb(n, i) for i in range(min(n, K) + 1)]
        total = mp.mpf(0)
        last = mp.mpf(0)
        for i in range(0, K + 1, 2):
            a = mp.fsum(binom[t] * inv[i - t] for t in range(min(i, n) + 1))
            last = a * phi[i]
            total += last
        return total / 2, abs(last)


def _alternating_inner(m: Sequence, k: int, h: int, sign: int, tol):
    # sum_j C(k-1+j, j) (sign/h)^j m_{k+j} with an early stop once the terms,
    # bounded by C(k-1+j,j) h^-j, shrink geometrically below tol
    if k == 0:
        return m[0], mp.mpf(1)
    N = len(m) - 1
    c = mp.mpf(1)
    total = mp.mpf(0)
    biggest = mp.mpf(0)
    hinv = mp.mpf(1) / h
    for j in range(N - k + 1):
        term = c * m[k + j]
        total += term if sign > 0 or j % 2 == 0 else -term
        biggest = max(biggest, abs(term))
        ratio = mp.mpf(k + j) / (j + 1) * hinv
        c = c * ratio
        if ratio < mp.mpf(0.9) and c / (1 - ratio) < tol:
            break
    return total, biggest


def jh_crosscheck(
    m: MomentVector | Sequence,
    n: int,
    h_max: int | None = None,
    formula: str = "a",
    guard: int = 10,
) -> JHResult:
    """Rebuild m_n from the pieces J_h(n) = int over [1-2^(1-h), 1-2^-h] of Box^n.

    ``formula="a"`` uses the alternating inner sums in 1/h for h >= 2, with
    J_1 evaluated by resumming around the midpoint of the symmetric law of
    Box (its defining alternating series diverges once truncated).
    ``formula="b"`` uses the positive inner sums in 1/(h+1) for all h >= 1.
    Both omit h > h_max; each omitted J_h is at most 2^-h, so the tail is at
    most 2^-h_max.
    """
    values = list(m)
    N = len(values) - 1
    dps = m.dps if isinstance(m, MomentVector) else mp.mp.dps
    if 2 * n > N:
        raise ValueError("need n <= N/2 so the inner sums stay inside the data")
    if formula not in ("a", "b"):
        raise ValueError("formula must be 'a' or 'b'")
    digits = m.digits if isinstance(m, MomentVector) else dps
    if h_max is None:
        h_max = math.ceil((digits + 2) * math.log2(10))
    extra = int(0.31 * n) + 10
    worst = 0.0
    with mp.workdps(dps + extra):
        vals = [mp.mpf(x) for x in values]
        tol = mp.mpf(10) ** -(dps + 5)
        binom = [math.comb(n, k) for k in range(n + 1)]
        total = mp.mpf(0)
        if formula == "a":
            first, _ = _j1_from_phi(phi_vector(vals), n, dps)
            total += first
            h_range = range(2, h_max + 1)
        else:
            first = None
            h_range = range(1, h_max + 1)
        for h in h_range:
            if formula == "a":
                pre = (mp.mpf(h - 1) / h) ** n / mp.mpf(2) ** h
                x = mp.mpf(1) / (h * (h - 1))
                div, sign = h, -1
            else:
                pre = (mp.mpf(h) / (h + 1)) ** n / mp.mpf(2) ** h
                x = mp.mpf(-1) / (h * (h + 1))
                div, sign = h + 1, 1
            acc = mp.mpf(0)
            xk = mp.mpf(1)
            for k in range(n + 1):
                inner, biggest = _alternating_inner(vals, k, div, sign, tol)
                if inner != 0 and biggest > 0:
                    worst = max(worst, float(mp.log10(biggest / abs(inner))))
                acc += binom[k] * xk * inner
                xk *= x
            total += pre * acc
        tail = mp.mpf(2) ** -h_max
    if worst > guard + extra:
        warnings.warn(
            f"inner alternating sums lost about {worst:.0f} digits to cancellation",
            CancellationWarning,
            stacklevel=2,
        )
    with mp.workdps(dps):
        return JHResult(+total, None if first is None else +first, tail, h_max, worst)


# checkpoints


def _dec(x, dps: int) -> str:
    return mp.nstr(x, dps, strip_zeros=False, min_fixed=-mp.inf, max_fixed=mp.inf)


def save_checkpoint(mv: MomentVector, path) -> None:
    """Write ``mv`` as JSON with decimal-string values."""
    with mp.workdps(mv.dps):
        doc = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "config": mv.diagnostics.get("config", {}),
            "digits": mv.digits,
            "dps": mv.dps,
            "N": mv.N,
            "M": mv.M,
            "backend": mv.backend,
            "iterations": mv.iterations,
            "step": mp.nstr(mv.step, 10),
            "converged": mv.converged,
            "moments": [[i, _dec(x, mv.dps)] for i, x in enumerate(mv.values)],
            "extension": None if mv.extension is None else [_dec(x, mv.dps) for x in mv.extension],
        }
        for key in ("lambda", "epsilon", "error_bound"):
            if key in mv.diagnostics:
                doc[key] = mp.nstr(mv.diagnostics[key], 20)
        if "checking_order" in mv.diagnostics:
            doc["checking_order"] = mv.diagnostics["checking_order"]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_checkpoint(path) -> MomentVector:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} is not a moment checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {doc.get('version')}")
    try:
        dps = int(doc["dps"])
        rows = doc["moments"]
        if [int(i) for i, _ in rows] != list(range(len(rows))):
            raise CheckpointError("moment indices must run 0..N without gaps")
        with mp.workdps(dps):
            values = [mp.mpf(s) for _, s in rows]
            ext = doc.get("extension")
            diagnostics = {"config": doc.get("config", {})}
            for key in ("lambda", "epsilon", "error_bound"):
                if key in doc:
                    diagnostics[key] = mp.mpf(doc[key])
            if "checking_order" in doc:
                diagnostics["checking_order"] = int(doc["checking_order"])
            return MomentVector(
                values=values,
                digits=int(doc["digits"]),
                dps=dps,
                backend=str(doc["backend"]),
                iterations=int(doc["iterations"]),
                step=mp.mpf(doc["step"]),
                converged=bool(doc["converged"]),
                M=doc.get("M"),
                extension=None if ext is None else [mp.mpf(s) for s in ext],
                diagnostics=diagnostics,
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint {path}: {exc}") from exc


def resume_from_checkpoint(cfg: EngineConfig, path, model=None) -> MomentVector:
    """Reuse a checkpoint when it already satisfies ``cfg``; otherwise iterate
    again from its values as a warm start (e.g. for more digits or larger N)."""
    mv = load_checkpoint(path)
    base = mv.backend.split("-")[0]
    if (
        mv.N == cfg.N
        and mv.digits >= cfg.digits
        and base == cfg.backend
        and mv.M == cfg.M
        and mv.converged
    ):
        return mv
    return compute_moments(cfg, model=model, start=mv.values)
