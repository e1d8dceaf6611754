import numpy as np
import pytest
from numpy.testing import assert_allclose

from scorelab.errors import DegeneracyError, DomainError, SpecificationError
from scorelab.estimation.gradients import score_gradients
from scorelab.gmrf import (
    ChainConditionals,
    ChainData,
    TridiagonalModel,
    WishartData,
    chain_density,
    chain_family,
    chain_statistics,
    exact_neg_loglik,
    hyvarinen_closed_form,
    hyvarinen_numeric_estimate,
    hyvarinen_objective,
    maximum_likelihood_estimate,
    pseudo_likelihood_estimate,
    pseudo_loglik,
    simulate_chain,
    tridiag_logdet,
    wishart_hyvarinen_estimate,
    wishart_objective,
)
from scorelab.gmrf.wishart import tridiagonal
from scorelab.numerics import SeedSpec, minimize
from scorelab.scores import RuleSpec, pseudo_score
from scorelab.scores.evaluate import hyvarinen_values

HAND = ChainData([1.0, -1.0, 2.0])


class TestModel:
    def test_precision_and_omega(self):
        model = TridiagonalModel(2.0, 0.5, 3)
        assert_allclose(model.precision(), [[2.0, 0.5, 0.0], [0.5, 2.0, 0.5], [0.0, 0.5, 2.0]])
        assert model.in_omega
        assert not TridiagonalModel(1.0, 0.5, 3).in_omega
        assert_allclose(model.lam, -0.25)

    def test_rejects_bad_parameters(self):
        with pytest.raises(SpecificationError):
            TridiagonalModel(1.0, 0.0, 0)
        with pytest.raises(SpecificationError):
            TridiagonalModel(np.nan, 0.0, 2)

    def test_logdet_examples(self):
        assert_allclose(tridiag_logdet(TridiagonalModel(2.0, 0.0, 1)), np.log(2.0))
        assert_allclose(np.exp(tridiag_logdet(TridiagonalModel(2.0, 0.5, 3))), 7.0, rtol=1e-9)

    def test_logdet_matches_dense(self):
        rng = np.random.default_rng(20240607)
        worst = 0.0
        for _ in range(100):
            n = int(rng.integers(1, 51))
            alpha = 0.5 + 3.0 * rng.random()
            beta = (rng.random() - 0.5) * 0.99 * alpha
            model = TridiagonalModel(alpha, beta, n)
            sign, dense = np.linalg.slogdet(model.precision())
            assert sign > 0
            worst = max(worst, abs(tridiag_logdet(model) - dense) / max(1.0, abs(dense)))
        assert worst < 1e-8

    def test_logdet_outside_omega(self):
        with pytest.raises(DomainError):
            tridiag_logdet(TridiagonalModel(1.0, 1.0, 4))


class TestStatistics:
    def test_hand_example(self):
        stats = chain_statistics(HAND)
        assert_allclose(HAND.z, [[-1.0, 3.0, -1.0]])
        assert_allclose(stats.as_tuple(), (-6.0, 11.0, 6.0, 30.0 / 11.0), rtol=1e-12)
        assert not stats.degenerate

    def test_zeros_are_degenerate(self):
        stats = chain_statistics(ChainData(np.zeros(4)))
        assert stats.as_tuple() == (0.0, 0.0, 0.0, 0.0)
        assert stats.degenerate

    def test_stacked_copies_double(self):
        single = chain_statistics(HAND).as_tuple()
        double = chain_statistics(ChainData(np.vstack([HAND.y, HAND.y]))).as_tuple()
        assert_allclose(double, 2.0 * np.array(single), rtol=1e-12)

    def test_data_checks(self):
        with pytest.raises(SpecificationError):
            ChainData([1.0, np.inf])
        with pytest.raises(SpecificationError):
            ChainData(np.zeros((2, 2, 2)))


class TestHyvarinen:
    def test_objective_examples(self):
        assert hyvarinen_objective(TridiagonalModel(2.0, 0.0, 1), ChainData([1.0])) == 0.0
        assert hyvarinen_objective(TridiagonalModel(0.0, 0.0, 3), HAND) == 0.0

    def test_objective_is_summed_hyvarinen_score(self):
        data = simulate_chain(TridiagonalModel(2.0, 0.6, 6), 4, SeedSpec(5))
        model = TridiagonalModel(1.3, -0.4, 6)
        direct = float(np.sum(hyvarinen_values(chain_density(model), data.y)))
        assert_allclose(hyvarinen_objective(model, data), direct, rtol=1e-12)

    def test_objective_is_quadratic(self):
        data = simulate_chain(TridiagonalModel(2.0, 0.6, 6), 4, SeedSpec(9))

        def basis(a, b):
            return np.array([1.0, a, b, a * a, a * b, b * b])

        fitted = [(0.5, -1.0), (3.0, -1.0), (0.5, 1.0), (3.0, 1.0), (1.75, 0.0), (1.0, 0.4)]
        A = np.array([basis(a, b) for a, b in fitted])
        values = [hyvarinen_objective(TridiagonalModel(a, b, 6), data) for a, b in fitted]
        coef = np.linalg.solve(A, values)
        scale = max(1.0, float(np.max(np.abs(values))))
        rng = np.random.default_rng(10)
        for a, b in zip(rng.uniform(0.5, 3.0, 100), rng.uniform(-1.0, 1.0, 100)):
            want = hyvarinen_objective(TridiagonalModel(a, b, 6), data)
            assert_allclose(basis(a, b) @ coef, want, rtol=0.0, atol=1e-10 * scale)

    def test_closed_form_hand_example(self):
        fit = hyvarinen_closed_form(HAND)
        assert_allclose(fit.lambda_hat, -6.0 / 11.0, rtol=1e-12)
        assert_allclose(fit.alpha_hat, 1.1, rtol=1e-12)
        assert_allclose(fit.beta_hat, 0.6, rtol=1e-12)
        assert not fit.in_omega

    def test_constrained_refit(self):
        fit = hyvarinen_closed_form(HAND, constrain=True)
        assert fit.constrained and fit.in_omega
        assert_allclose(abs(fit.beta_hat), fit.alpha_hat / 2.0 - 1e-6, rtol=1e-12)
        free = hyvarinen_objective(fit.model(3), HAND)
        for a in (fit.alpha_hat * 0.9, fit.alpha_hat * 1.1):
            assert hyvarinen_objective(TridiagonalModel(a, a / 2.0 - 1e-6, 3), HAND) > free

    def test_single_site_is_degenerate(self):
        fit = hyvarinen_closed_form(ChainData([2.0]))
        assert fit.degenerate and fit.lambda_hat is None
        assert_allclose(fit.alpha_hat, 0.25)
        assert fit.beta_hat == 0.0

    @pytest.mark.parametrize("y", [[0.0, 0.0, 0.0], [1.0, 1.0]])
    def test_degenerate_statistics(self, y):
        with pytest.raises(DegeneracyError):
            hyvarinen_closed_form(ChainData(y))

    def test_numeric_matches_closed_form(self):
        data = simulate_chain(TridiagonalModel(1.0, 0.3, 200), 1, SeedSpec(11))
        closed = hyvarinen_closed_form(data)
        numeric = hyvarinen_numeric_estimate(data)
        pseudo = pseudo_likelihood_estimate(data)
        for other in (numeric, pseudo):
            assert abs(other.lambda_hat - closed.lambda_hat) <= 1e-6
            assert abs(other.alpha_hat - closed.alpha_hat) <= 1e-6

    def test_recovers_truth(self):
        data = simulate_chain(TridiagonalModel(4.0, 1.0, 400), 40, SeedSpec(2024))
        fit = hyvarinen_closed_form(data)
        assert fit.in_omega
        assert_allclose([fit.alpha_hat, fit.beta_hat], [4.0, 1.0], rtol=0.1)

    def test_closed_form_gradient_matches_differences(self):
        family = chain_family(5)
        data = simulate_chain(TridiagonalModel(2.0, 0.5, 5), 3, SeedSpec(8)).y
        theta = np.array([1.5, 0.2])
        rule = RuleSpec.hyvarinen()
        exact = score_gradients(rule, family, data, theta)
        numeric = score_gradients(rule, family, data, theta, closed_form=False)
        assert_allclose(exact, numeric, rtol=1e-6, atol=1e-8)


class TestPseudoAndExact:
    def test_examples(self):
        assert pseudo_loglik(TridiagonalModel(1.0, 0.0, 1), ChainData([0.0])) == 0.0
        assert exact_neg_loglik(TridiagonalModel(1.0, 0.0, 1), ChainData([0.0])) == 0.0

    def test_pseudo_loglik_is_negated_pseudo_score(self):
        model = TridiagonalModel(2.0, -0.7, 4)
        y = np.array([0.3, -1.1, 0.8, 2.0])
        score = pseudo_score(y, ChainConditionals(model), RuleSpec.log())
        expected = -pseudo_loglik(model, ChainData(y)) + 0.5 * 4 * np.log(2.0 * np.pi)
        assert_allclose(score, expected, rtol=1e-9)

    def test_exact_likelihood_against_dense(self):
        model = TridiagonalModel(2.0, 0.5, 3)
        data = ChainData([[0.5, -0.2, 1.0], [1.5, 0.3, -0.4]])
        phi = model.precision()
        dense = -0.5 * data.nu * np.linalg.slogdet(phi)[1] + 0.5 * np.einsum("ij,jk,ik->", data.y, phi, data.y)
        assert_allclose(exact_neg_loglik(model, data), dense, rtol=1e-10)

    def test_mle_is_stationary(self):
        data = simulate_chain(TridiagonalModel(2.0, 0.5, 50), 4, SeedSpec(17))
        fit = maximum_likelihood_estimate(data)
        assert fit.in_omega
        f = lambda t: exact_neg_loglik(TridiagonalModel(t[0], t[1], 50), data)
        h = 1e-5
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            t = np.array([fit.alpha_hat, fit.beta_hat])
            assert abs((f(t + e) - f(t - e)) / (2 * h)) < 1e-3


class TestSimulation:
    def test_same_seed_same_output(self):
        model = TridiagonalModel(2.0, 0.5, 5)
        a = simulate_chain(model, 3, SeedSpec(1), stream=4)
        b = simulate_chain(model, 3, SeedSpec(1), stream=4)
        assert np.array_equal(a.y, b.y)
        assert not np.array_equal(a.y, simulate_chain(model, 3, SeedSpec(1), stream=5).y)

    def test_covariance(self):
        model = TridiagonalModel(2.0, 0.5, 3)
        data = simulate_chain(model, 100_000, SeedSpec(99))
        cov = data.y.T @ data.y / data.nu
        assert_allclose(cov, np.linalg.inv(model.precision()), rtol=0.03, atol=5e-3)

    def test_outside_omega_refused(self):
        with pytest.raises(DomainError):
            simulate_chain(TridiagonalModel(1.0, 0.6, 3), 1, SeedSpec(0))


class TestWishart:
    def test_identity_example(self):
        data = WishartData(2.0 * np.eye(2), 5)
        full = wishart_hyvarinen_estimate(data)
        assert_allclose(full.phi_hat, np.eye(2), rtol=1e-12)
        assert full.in_omega
        restricted = wishart_hyvarinen_estimate(data, restrict_tridiagonal=True)
        assert_allclose(restricted.alpha_hat, 1.0, rtol=1e-12)
        assert restricted.beta_hat == 0.0
        assert restricted.in_omega

    def test_unrestricted_minimizer(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((12, 4))
        data = WishartData(A.T @ A, 12)
        phi = wishart_hyvarinen_estimate(data).phi_hat
        assert_allclose(phi, 7.0 * np.linalg.inv(A.T @ A), rtol=1e-8)
        assert wishart_objective(phi, data) < 1e-20
        assert wishart_objective(phi + 1e-3 * np.eye(4), data) > 0.0

    def test_restricted_matches_minimizer(self):
        y = simulate_chain(TridiagonalModel(2.0, 0.5, 4), 20, SeedSpec(31))
        data = WishartData.from_chain(y)
        closed = wishart_hyvarinen_estimate(data, restrict_tridiagonal=True)
        fit = minimize(lambda t: wishart_objective(tridiagonal(t[0], t[1], 4), data), [1.0, 0.0], tolerance=1e-14)
        assert_allclose(fit.argmin, [closed.alpha_hat, closed.beta_hat], atol=1e-6)

    def test_from_chain(self):
        y = ChainData([[1.0, 2.0], [0.0, -1.0], [3.0, 1.0]])
        data = WishartData.from_chain(y)
        assert data.nu == 3
        assert_allclose(data.S, [[10.0, 5.0], [5.0, 6.0]])

    def test_vector_order_does_not_matter(self):
        y = simulate_chain(TridiagonalModel(2.0, 0.5, 5), 30, SeedSpec(17))
        base = WishartData.from_chain(y)
        full = wishart_hyvarinen_estimate(base)
        restricted = wishart_hyvarinen_estimate(base, restrict_tridiagonal=True)
        rng = np.random.default_rng(4)
        for _ in range(5):
            shuffled = WishartData.from_chain(ChainData(y.y[rng.permutation(y.nu)]))
            assert np.array_equal(shuffled.S, base.S)
            assert np.array_equal(wishart_hyvarinen_estimate(shuffled).phi_hat, full.phi_hat)
            again = wishart_hyvarinen_estimate(shuffled, restrict_tridiagonal=True)
            assert (again.alpha_hat, again.beta_hat) == (restricted.alpha_hat, restricted.beta_hat)

    def test_needs_enough_degrees_of_freedom(self):
        with pytest.raises(DomainError):
            wishart_hyvarinen_estimate(WishartData(np.eye(2), 3))
        with pytest.raises(DomainError):
            wishart_hyvarinen_estimate(WishartData(np.eye(3), 2))
