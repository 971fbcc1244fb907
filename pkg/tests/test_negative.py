import math
import warnings
from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minkmoments.asymptotics import lambda_const
from minkmoments.errors import CancellationWarning
from minkmoments.negative import (
    CANCELLATION_ORDER,
    asymptotic_negative,
    identity_suite,
    m_negative,
    m_positive_from_negative,
    matrix_pair,
    negative_recurrence_residual,
)
from minkmoments.special import gamma_int


class TestMatrices:
    def test_displayed_rows(self):
        pair = matrix_pair(5)
        assert pair.A[3][:4] == (26, 18, 6, 1)
        assert pair.A[4] == (150, 104, 36, 8, 1)
        assert pair.B[1][:2] == (-2, 1)

    def test_inverse_pair_size_30(self):
        pair = matrix_pair(30)
        assert pair.product_is_identity()
        for i in range(30):
            assert pair.A[i][i] == pair.B[i][i] == 1
            assert all(pair.A[i][j] == 0 == pair.B[i][j] for j in range(i + 1, 30))
            for j in range(i + 1):
                assert pair.A[i][j] == math.comb(i, j) * gamma_int(i - j)

    def test_size_checked(self):
        with pytest.raises(ValueError):
            matrix_pair(0)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(1, 30))
    def test_every_size_inverts(self, d):
        assert matrix_pair(d, check=False).product_is_identity()


class TestNegativeMoments:
    def test_small_orders(self, plain400):
        with plain400.context():
            assert m_negative(0, plain400) == 1
            assert abs(m_negative(1, plain400) - mp.mpf(5) / 2) < mp.mpf(10) ** -39
            assert abs(m_negative(2, plain400) - (8 + plain400[2])) < mp.mpf(10) ** -39

    def test_exact_inputs(self):
        m = [Fraction(1), Fraction(1, 2), Fraction(3, 10)]
        assert m_negative(2, m) == 6 + 4 * Fraction(1, 2) + Fraction(3, 10)

    def test_order_check(self, small64):
        with pytest.raises(ValueError):
            m_negative(65, small64)
        with pytest.raises(ValueError):
            m_negative(-1, small64)

    def test_inverse_map(self, plain400):
        assert m_positive_from_negative(0, [1]) == 1
        assert m_positive_from_negative(1, [Fraction(1), Fraction(5, 2)]) == Fraction(1, 2)
        with plain400.context():
            neg = [m_negative(k, plain400) for k in range(4)]
            assert abs(m_positive_from_negative(3, neg) - plain400[3]) < 1000 * plain400.error_estimate

    def test_inverse_map_exact_round_trip(self):
        m = [Fraction(1, k + 1) for k in range(20)]
        neg = [m_negative(k, m) for k in range(20)]
        assert all(m_positive_from_negative(k, neg) == m[k] for k in range(20))

    def test_cancellation_warning(self):
        neg = [Fraction(1)] * (CANCELLATION_ORDER + 2)
        with pytest.warns(CancellationWarning):
            m_positive_from_negative(CANCELLATION_ORDER + 1, neg)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            m_positive_from_negative(CANCELLATION_ORDER, neg)

    def test_recurrence(self, plain400):
        with plain400.context():
            for n in range(11):
                assert abs(negative_recurrence_residual(n, plain400)) < mp.mpf(10) ** -40


class TestAsymptotics:
    def test_ratio(self, plain400):
        with plain400.context():
            lam = lambda_const(plain400)
            ratio = lambda n: m_negative(n, plain400) / asymptotic_negative(n, lam)
            assert 0.8 < ratio(10) < 1.2
            assert abs(ratio(20) - 1) < abs(ratio(10) - 1)
            assert abs(ratio(1) - mp.mpf("0.84")) < 0.01
            assert abs(asymptotic_negative(1, lam) - mp.mpf("2.97")) < 0.01

    def test_exponent(self, plain400):
        # with (log 2)^(n-1) in place of (log 2)^(n+1) the ratio would sit near (log 2)^2
        with plain400.context():
            lam = lambda_const(plain400)
            assert abs(m_negative(15, plain400) / asymptotic_negative(15, lam) - 1) < 1e-6

    def test_negative_order(self):
        with pytest.raises(ValueError):
            asymptotic_negative(-1, 1)


class TestIdentitySuite:
    def test_order_400(self, plain400):
        report = identity_suite(plain400)
        assert report.passed and report.N == 400
        assert abs(report["order_1"].residual) < 1e-10
        assert abs(report["sum_m"].residual) < 1e-10
        assert abs(report["sum_j_m"].residual) < 1e-9
        assert abs(report["order_2"].residual) <= report["order_2"].error_bound
        d = report.as_dict()
        assert [c["name"] for c in d["checks"]] == ["order_1", "order_2", "order_3", "order_4", "sum_m", "sum_j_m"]
        with pytest.raises(KeyError):
            report["order_9"]

    def test_crude_moments_fail(self):
        # a vector that violates the identities is reported as failing
        with mp.workdps(30):
            bad = [mp.mpf(1)] + [mp.mpf(2) ** -k for k in range(1, 60)]
            assert not identity_suite(bad, lam=mp.mpf("1.43")).passed
