import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from scorelab.cli import studies
from scorelab.errors import CapabilityError, DomainError, SpecificationError
from scorelab.estimation import (
    bernoulli_family,
    brobustness_check,
    check_unbiased_estimating_equation,
    data_start,
    degenerate_family,
    family_by_name,
    influence_function,
    location_family,
    minimum_score_estimate,
    model_information,
    normal_family,
    sandwich_from_if,
    score_gradient,
    score_gradients,
)
from scorelab.estimation.estimator import godambe_parts
from scorelab.numerics import SeedSpec
from scorelab.scores import RuleSpec, convex_function
from scorelab.workers.replicate_worker import ReplicatePool

NORMAL = location_family("normal")
LOG = RuleSpec.log()
TSALLIS2 = RuleSpec.tsallis(2.0)


class TestFamilies:
    def test_registry(self):
        assert family_by_name("normal-location").name == "normal-location"
        assert family_by_name("Cauchy").kind == "location"
        assert family_by_name("normal2").dimension == 2
        with pytest.raises(SpecificationError, match="Known"):
            family_by_name("poisson")

    def test_domain_checks(self):
        with pytest.raises(DomainError):
            bernoulli_family().check_domain([1.5])
        with pytest.raises(DomainError):
            normal_family().check_domain([0.0, -1.0])
        with pytest.raises(SpecificationError):
            NORMAL.check_domain([0.0, 1.0])

    def test_no_sampler(self):
        fam = family_by_name("normal")
        bare = type(fam)(name="bare", dimension=1, density_at=fam.density_at, bounds=((None, None),))
        with pytest.raises(CapabilityError):
            bare.sample([0.0], np.random.default_rng(0), 3)

    @pytest.mark.parametrize("name", ["normal", "logistic", "cauchy", "gumbel"])
    def test_location_gradient_matches_differences(self, name):
        fam = location_family(name)
        xs = np.array([-2.0, -0.3, 0.4, 1.7])
        for rule in (LOG, TSALLIS2, RuleSpec.bregman("brier")):
            exact = score_gradients(rule, fam, xs, [0.2])
            numeric = score_gradients(rule, fam, xs, [0.2], closed_form=False)
            assert_allclose(exact, numeric, rtol=1e-5, atol=1e-7)


class TestScoreGradient:
    def test_log_normal(self):
        assert_allclose(score_gradient(LOG, NORMAL, 2.0, [0.0]), [-2.0])

    def test_tsallis_tail_vanishes(self):
        assert abs(score_gradient(TSALLIS2, NORMAL, 50.0, [0.0])[0]) < 1e-12

    def test_bernoulli(self):
        fam = bernoulli_family()
        assert_allclose(score_gradient(LOG, fam, 1, [0.25]), [-4.0])
        assert_allclose(score_gradient(RuleSpec.brier(), fam, 0, [0.25]), [0.5])

    def test_infinite_score_rows(self):
        g = score_gradients(LOG, bernoulli_family(), [1, 0], [1.0])
        assert np.isinf(g[1, 0])


class TestEstimate:
    def test_log_normal_is_sample_mean(self):
        data = np.array([0.5, 1.0, 2.0, 2.5])
        fit = minimum_score_estimate(LOG, NORMAL, data, start=[0.0])
        assert fit.converged
        assert_allclose(fit.theta_hat, [1.5], atol=1e-8)
        assert_allclose(fit.J, [[0.625]], rtol=1e-6)
        assert_allclose(fit.K, [[1.0]], rtol=1e-6)
        assert_allclose(fit.sandwich_cov, [[0.625 / 4]], rtol=1e-6)
        assert_allclose(fit.standard_errors(), [np.sqrt(0.625 / 4)], rtol=1e-6)
        assert abs(score_gradients(LOG, NORMAL, data, fit.theta_hat).sum()) < 1e-7

    def test_tsallis_symmetric_data(self):
        fit = minimum_score_estimate(TSALLIS2, NORMAL, [-1.0, 1.0], start=[0.3])
        assert abs(fit.theta_hat[0]) <= 1e-6

    @pytest.mark.parametrize("rule", [RuleSpec.brier(), RuleSpec.log()])
    def test_bernoulli_frequency(self, rule):
        data = [1, 1, 1, 0, 0, 0, 0, 0, 0, 0]
        fit = minimum_score_estimate(rule, bernoulli_family(), data, start=[0.5])
        assert_allclose(fit.theta_hat, [0.3], atol=1e-7)

    def test_degenerate_family_has_no_asymptotics(self):
        fit = minimum_score_estimate(LOG, degenerate_family(), [0, 0, 0], start=[0.5])
        assert fit.converged
        assert not fit.has_asymptotics
        assert fit.standard_errors() is None
        assert fit.to_dict()["sandwich_cov"] is None

    def test_empty_data(self):
        with pytest.raises(SpecificationError):
            minimum_score_estimate(LOG, NORMAL, [], start=[0.0])

    def test_normal_two_parameters(self):
        data = np.array([-1.0, 0.0, 0.5, 2.5])
        fit = minimum_score_estimate(LOG, normal_family(), data, start=[0.0, 1.0])
        assert_allclose(fit.theta_hat, [data.mean(), data.var()], rtol=1e-5)

    def test_data_start(self):
        assert data_start(NORMAL, [3.0, 1.0, 2.0]).tolist() == [2.0]
        assert_allclose(data_start(normal_family(), [1.0, 3.0]), [2.0, 1.0])
        assert data_start(bernoulli_family(), [1, 1, 1]).tolist() == [0.99]

    def test_sandwich_study_starts_from_each_sample(self, monkeypatch):
        starts = {}

        def recording(rule, family, x, start, **kwargs):
            starts[float(np.median(x))] = np.asarray(start, dtype=float).tolist()
            return minimum_score_estimate(rule, family, x, start, **kwargs)

        monkeypatch.setattr(studies, "minimum_score_estimate", recording)
        seed = SeedSpec(3)
        with ReplicatePool(jobs=1) as pool:
            results, diagnostics = studies.sandwich_study(LOG, NORMAL, [0.5], 100, 8, seed, pool)
        assert diagnostics["failed"] == 0
        assert len(starts) == 8
        assert all(start == [median] for median, start in starts.items())
        for i, estimate in enumerate(results["estimates"]):
            x = NORMAL.sample([0.5], seed.stream(i).generator(), 100)
            assert_allclose(estimate, [x.mean()], atol=1e-6)

    @pytest.mark.slow
    def test_tsallis_error_shrinks_with_n(self):
        medians = []
        for n in (50, 200, 800):
            errors = []
            for i in range(100):
                x = 0.7 + SeedSpec(515, i).generator().standard_normal(n)
                fit = minimum_score_estimate(TSALLIS2, NORMAL, x, start=[float(np.median(x))])
                errors.append(abs(fit.theta_hat[0] - 0.7))
            medians.append(float(np.median(errors)))
        assert medians[0] > medians[1] > medians[2]


class TestInformation:
    def test_log_normal_fisher(self):
        J, K = model_information(LOG, NORMAL, [0.0])
        assert_allclose(J, [[1.0]], rtol=1e-6)
        assert_allclose(K, [[1.0]], rtol=1e-6)

    def test_godambe_of_information_equality(self):
        G, G_inv = godambe_parts(np.array([[2.0]]), np.array([[2.0]]))
        assert_allclose(G, [[2.0]])
        assert_allclose(G_inv, [[0.5]])


class TestUnbiasedEquation:
    @pytest.mark.parametrize(
        "rule, family, theta",
        [
            (LOG, NORMAL, [0.0]),
            (TSALLIS2, NORMAL, [1.0]),
            (RuleSpec.brier(), bernoulli_family(), [0.3]),
        ],
    )
    def test_mean_within_standard_errors(self, rule, family, theta):
        mean, se = check_unbiased_estimating_equation(rule, family, theta, 20_000, SeedSpec(11))
        assert np.all(np.abs(mean) <= 4.0 * se)

    def test_degenerate_is_exactly_zero(self):
        mean, se = check_unbiased_estimating_equation(LOG, degenerate_family(), [0.0], 100, SeedSpec(1))
        assert mean[0] == 0.0 and se[0] == 0.0

    @pytest.mark.slow
    @pytest.mark.parametrize("theta", [-2.0, -0.5, 0.0, 0.7, 3.0])
    def test_suite(self, theta):
        for rule in (LOG, TSALLIS2):
            mean, se = check_unbiased_estimating_equation(rule, NORMAL, [theta], 100_000, SeedSpec(100))
            assert np.all(np.abs(mean) <= 4.0 * se)
        q = 0.1 + 0.8 * (theta + 2.0) / 5.0
        mean, se = check_unbiased_estimating_equation(RuleSpec.brier(), bernoulli_family(), [q], 100_000, SeedSpec(100))
        assert np.all(np.abs(mean) <= 4.0 * se)


class TestInfluence:
    def test_log_normal(self):
        assert_allclose(influence_function(LOG, NORMAL, 3.0, [1.0]), [2.0], rtol=1e-6)

    def test_zero_at_root(self):
        assert influence_function(TSALLIS2, NORMAL, 1.0, [1.0])[0] == 0.0

    def test_tsallis_tails_vanish(self):
        assert abs(influence_function(TSALLIS2, NORMAL, 61.0, [1.0])[0]) < 1e-12

    def test_linear_in_inverse_k(self):
        _, K = model_information(TSALLIS2, NORMAL, [0.2])
        s = score_gradient(TSALLIS2, NORMAL, 1.3, [0.2])
        base = influence_function(TSALLIS2, NORMAL, 1.3, [0.2], K=K)
        assert_allclose(base, -np.linalg.solve(K, s), rtol=1e-12)
        for c in (0.5, 2.0, 10.0):
            assert_allclose(influence_function(TSALLIS2, NORMAL, 1.3, [0.2], K=c * K), base / c, rtol=1e-12)

    def test_sandwich_log_normal(self):
        cov = sandwich_from_if(LOG, NORMAL, [0.0], 20_000, SeedSpec(4))
        assert abs(cov[0, 0] - 1.0) <= 4.0 * np.sqrt(2.0 / 20_000)

    def test_sandwich_degenerate(self):
        assert np.array_equal(sandwich_from_if(LOG, degenerate_family(), [0.0], 50, SeedSpec(4)), np.zeros((1, 1)))


class TestBRobustness:
    @pytest.mark.parametrize(
        "psi, density, bounded",
        [
            ("tlogt", "normal", False),
            ("power:2", "normal", True),
            ("power:2", "logistic", True),
            ("brier", "normal", True),
            ("brier", "logistic", True),
            ("brier", "cauchy", True),
            ("brier", "gumbel", True),
        ],
    )
    def test_classification(self, psi, density, bounded):
        report = brobustness_check(convex_function(psi), density)
        assert report.classified_bounded is bounded
        assert report.symbolic_bounded is bounded

    def test_normal_brier_supremum(self):
        report = brobustness_check(convex_function("brier"), "normal")
        assert_allclose(report.sup_abs_score_gradient, stats.norm.pdf(1.0), rtol=1e-12)
        assert abs(report.grid_max_location) == 1.0

    def test_unbounded_reports_infinity(self):
        report = brobustness_check(convex_function("tlogt"), "normal")
        assert report.sup_abs_score_gradient == np.inf
        assert report.round_maxima == sorted(report.round_maxima)
        assert report.halfwidths == [8.0, 16.0, 32.0, 64.0, 128.0]

    def test_argument_checks(self):
        with pytest.raises(SpecificationError):
            brobustness_check(convex_function("brier"), "normal", growth_rounds=1)
        with pytest.raises(SpecificationError):
            brobustness_check(convex_function("brier"), "student")
