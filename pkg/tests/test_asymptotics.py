import math

import mpmath as mp
import pytest

from minkmoments.asymptotics import (
    AsymptoticModel,
    S_integral,
    S_integral_table,
    S_shifted,
    S_shifted_table,
    binomial_tail,
    closed_form_moment,
    error_series,
    fit_improved_model,
    kappa,
    kappa_comparator,
    lambda_const,
    lambda_routes,
    lambda_tail_bound,
    laplace_ratio,
    model_tail,
    phi_asymptotic,
    rho_const,
)
from minkmoments.engine import compute_phi, phi_vector
from minkmoments.errors import PrecisionError, RankDeficiencyError

LAMBDA = "1.42815984554560290424313465212729430726822547802532544939052972"


def brute_S(x, n, dps=40):
    with mp.workdps(dps + 10):
        x = mp.mpf(x)
        return mp.fsum(
            mp.mpf(2) ** -(h + x) * (1 - 1 / (h + x)) ** n for h in range(1, 4000) if h + x > 1
        )


def quad_S_int(n, dps=30):
    with mp.workdps(dps + 10):
        f = lambda t: mp.mpf(2) ** -t * (1 - 1 / t) ** n
        # the integrand peaks near t ~ sqrt(n / log 2)
        peak = max(2, math.sqrt(n / math.log(2)))
        return mp.quad(f, [1, peak / 2, peak, 2 * peak, 4 * peak, mp.inf])


class TestLambda:
    def test_value(self, plain400):
        with plain400.context():
            lam = lambda_const(plain400)
            assert abs(lam - mp.mpf(LAMBDA)) < mp.mpf(10) ** -26

    def test_routes_agree(self, plain400):
        with plain400.context():
            routes = lambda_routes(plain400)
            assert set(routes) == {"standard", "alternating", "even", "odd"}
            base = routes["standard"]
            for v in routes.values():
                assert abs(v - base) < mp.mpf(10) ** -(40 - 6)

    def test_tail_bound(self):
        with mp.workdps(30):
            assert lambda_tail_bound(40) < mp.mpf(10) ** -50
            assert lambda_tail_bound(10, "alternating") == 2 * lambda_tail_bound(10)

    def test_unknown_route(self):
        with pytest.raises(ValueError):
            lambda_const([1, 0.5], route="sideways")


class TestRho:
    def test_against_lambda(self, plain400):
        with plain400.context():
            rho = rho_const(plain400)
            assert abs(rho * mp.sqrt(2) - mp.mpf(LAMBDA)) < 1e-8
            assert 1.0 < rho < 1.1

    def test_leading_term(self, plain400):
        with plain400.context():
            phi = phi_vector(plain400.values)
            phi.values = phi.values[:1]
            assert abs(rho_const(phi) - 1) < 1e-30


class TestShifted:
    def test_trivial(self):
        with mp.workdps(30):
            assert abs(S_shifted(0, 0, 30) - mp.mpf(1) / 2) < mp.mpf(10) ** -29

    @pytest.mark.parametrize("x,n", [(0, 1), (0, 17), ("0.5", 3), ("0.25", 100), ("0.875", 50)])
    def test_against_direct_sum(self, x, n):
        with mp.workdps(40):
            assert abs(S_shifted(x, n, 40) / brute_S(x, n) - 1) < mp.mpf(10) ** -38

    def test_table_matches_points(self):
        with mp.workdps(30):
            table = S_shifted_table("0.5", 90, 110, 30)
            for i, n in enumerate(range(90, 111)):
                assert abs(table[i] / S_shifted("0.5", n, 30) - 1) < mp.mpf(10) ** -28

    def test_arguments(self):
        with pytest.raises(ValueError):
            S_shifted(1, 5)
        with pytest.raises(ValueError):
            S_shifted(0, -1)
        with pytest.raises(ValueError):
            S_shifted_table(0, 5, 4)

    def test_theorem_ratio_at_300(self, reference):
        with reference.context():
            lam = lambda_const(reference)
            assert abs(lam * S_shifted(0, 300) / reference[300] - 1) < 1e-3

    def test_oscillates_around_integral(self):
        with mp.workdps(30):
            n = 400
            si = S_integral(n, 30)
            signs = [mp.sign(S_shifted(mp.mpf(k) / 8, n, 30) - si) for k in range(8)]
            assert any(a != b for a, b in zip(signs, signs[1:] + signs[:1]))


class TestIntegral:
    def test_low_order(self):
        with mp.workdps(30):
            l2 = mp.log(2)
            assert abs(S_integral(0, 30) - 1 / (2 * l2)) < mp.mpf(10) ** -29
            assert abs(S_integral(1, 30) - (1 / (2 * l2) + mp.ei(-l2))) < mp.mpf(10) ** -29

    @pytest.mark.parametrize("n", [1, 2, 10, 50, 200])
    def test_against_quadrature(self, n):
        with mp.workdps(30):
            assert abs(S_integral(n, 30) - quad_S_int(n)) < 1e-15 * max(1, S_integral(n, 30))

    def test_table_prefix(self):
        t = S_integral_table(20, 30)
        assert len(t) == 21
        with mp.workdps(30):
            assert abs(t[20] - S_integral(20, 30)) == 0

    def test_precision_limit(self):
        with pytest.raises(PrecisionError):
            # 170 requested digits plus the recursion guard exceed the stored constant
            S_integral(400, 170)


class TestKappa:
    @pytest.mark.parametrize("n", [100, 200, 400])
    def test_positive(self, n):
        assert kappa(n, 30) > 0

    def test_below_power_of_moment(self, reference):
        with reference.context():
            for n in range(100, 401, 25):
                assert kappa(n, 30) < 10 * reference[n] ** mp.mpf(2.25)

    def test_decays_faster_than_moments(self, reference):
        with reference.context():
            assert kappa(400, 30) / kappa(100, 30) < reference[400] / reference[100]

    def test_comparator_positive(self):
        assert kappa_comparator(200) > 0

    def test_needs_n_2(self):
        with pytest.raises(ValueError):
            kappa(1)


class TestErrorSeries:
    def test_figure_properties(self, reference):
        diag = error_series(reference, (100, 400))
        assert len(diag.rows) == 301
        assert diag.rms("Eint") < diag.rms("Ehalf") < diag.rms("E0")
        for name in ("E0", "Ehalf", "Eint"):
            assert max(abs(x) for x in diag.column(name)) <= 10
            assert diag.sign_changes(name) >= 3
        assert all(k > 0 for k in diag.column("kappa"))
        assert diag.rows[0].sqrt_n == 10

    def test_range_checks(self, small64):
        with pytest.raises(ValueError):
            error_series(small64, (10, 100))
        with pytest.raises(ValueError):
            error_series(small64, (1, 10))


class TestFit:
    def test_constants(self, reference):
        fit = fit_improved_model(reference, (100, 400))
        assert abs(fit.a - mp.mpf("-0.521901056340432536774725873446")) < 0.05
        assert abs(fit.b - mp.mpf("-0.1488")) < 0.05
        assert fit.rms_after < fit.rms_before / 5
        assert fit.n_range == (100, 400)

    def test_rank_deficiency(self):
        with mp.workdps(30):
            # a one-point range leaves the two columns parallel
            m = [mp.mpf(1)] * 101
            with pytest.raises(RankDeficiencyError):
                fit_improved_model(m, (100, 100), lam=mp.mpf(1), dps=30)


class TestPhiAsymptotic:
    def test_against_engine(self, reference):
        with reference.context():
            lam = lambda_const(reference)
            # phi_300 draws on moments up to ~700, inside the model extension
            phi300 = compute_phi(reference.values, 300, extension=reference.extension)
            sum_form, closed = phi_asymptotic(300, lam)
            assert abs(sum_form / phi300 - 1) < 1e-2
            assert abs(sum_form / closed - 1) < 0.05

    def test_zero_is_outside_the_regime(self):
        with mp.workdps(30):
            lam = mp.mpf(LAMBDA)
            sum_form, _ = phi_asymptotic(0, lam)
            assert abs(sum_form - lam / 2) < mp.mpf(10) ** -25


class TestLaplace:
    def test_convergence(self):
        r4 = laplace_ratio(10**4)
        r6 = laplace_ratio(10**6)
        assert abs(r4 - 1) < 0.02
        assert abs(r6 - 1) < abs(r4 - 1)

    def test_closed_form_at_300(self, reference):
        with reference.context():
            lam = lambda_const(reference)
            assert abs(closed_form_moment(300, lam) / reference[300] - 1) < 0.02

    def test_small_n_rejected(self):
        with pytest.raises(ValueError):
            laplace_ratio(5)


class TestTails:
    @pytest.mark.parametrize("n", [1, 2, 4])
    def test_binomial_closed_form_vs_summed(self, n):
        with mp.workdps(30):
            lam = mp.mpf(LAMBDA)
            closed = binomial_tail(n, 300, lam)
            for rel in (1e-9, 1e-13):
                summed = model_tail(lambda j: mp.binomial(n + j - 1, j), 300, lam, rel=rel)
                assert abs(closed / summed - 1) < 10 * rel

    def test_against_reference_moments(self, reference):
        # moments 401..500 of the reference run against the model estimate of that block
        with reference.context():
            lam = lambda_const(reference)
            block = mp.fsum(reference.values[401:501])
            model = model_tail(lambda j: 1, 400, lam) - model_tail(lambda j: 1, 500, lam)
            assert abs(model / block - 1) < 0.03


class TestModel:
    def test_from_moments(self, reference):
        model = AsymptoticModel.from_moments(reference, kind="improved")
        with mp.workdps(model.dps):
            assert abs(model.rho * mp.sqrt(2) - model.lam) < mp.mpf(10) ** -(60 - 4)
            assert abs(model.predict(350) / reference[350] - 1) < 1e-6
            S = model.S(200)
            assert set(S) == {"S0", "Shalf", "Squarter", "Sint"}

    def test_kinds(self):
        with pytest.raises(ValueError):
            AsymptoticModel(lam=1, kind="S9")
        with pytest.raises(ValueError):
            AsymptoticModel(lam=1, kind="improved")
        with pytest.raises(ValueError):
            AsymptoticModel.for_bootstrap("improved")

    @pytest.mark.parametrize("kind", ["S0", "Shalf", "Sint"])
    def test_extension_terms(self, kind):
        model = AsymptoticModel.for_bootstrap(kind, 30)
        shape, offset = model.extension_terms(100, 110, 30)
        assert len(shape) == len(offset) == 10
        assert all(o == 0 for o in offset)
        assert all(a > b > 0 for a, b in zip(shape, shape[1:]))
