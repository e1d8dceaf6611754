import numpy as np
import pytest
from numpy.testing import assert_allclose

from scorelab.errors import DomainError, NotPositiveDefiniteError, SpecificationError
from scorelab.numerics import (
    Grid1D,
    SeedSpec,
    as_matrix,
    cholesky_upper,
    finite_diff_gradient,
    finite_diff_jacobian,
    finite_diff_laplacian,
    integrate,
    minimize,
    simpson_weights,
    solve_spd,
    spd_inverse,
    tensor_nodes,
)


class TestGrid:
    def test_rejects_bad_bounds(self):
        with pytest.raises(SpecificationError):
            Grid1D(1.0, 1.0, 11)
        with pytest.raises(SpecificationError):
            Grid1D(0.0, np.inf, 11)
        with pytest.raises(SpecificationError):
            Grid1D(0.0, 1.0, 1)

    def test_doubled_keeps_spacing(self):
        g = Grid1D(-1.0, 3.0, 41)
        d = g.doubled()
        assert d.lower == -3.0 and d.upper == 5.0
        assert_allclose(d.step, g.step)

    def test_integrate_polynomial(self):
        assert_allclose(integrate(lambda x: x ** 2, Grid1D(0.0, 1.0, 101)), 1.0 / 3.0, rtol=1e-12)

    def test_integrate_is_linear(self):
        g = Grid1D(0.0, 2.0, 201)
        f = lambda x: np.cos(x)
        h = lambda x: np.exp(-x * x)
        rng = np.random.default_rng(2)
        for a, b in rng.uniform(-5.0, 5.0, (10, 2)):
            combined = integrate(lambda x: a * f(x) + b * h(x), g)
            assert_allclose(combined, a * integrate(f, g) + b * integrate(h, g), rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("points", [101, 100])
    def test_weights_match_integrate(self, points):
        g = Grid1D(-2.0, 1.5, points)
        f = lambda x: np.exp(-x * x) * np.cos(x)
        assert_allclose(simpson_weights(g) @ f(g.nodes()), integrate(f, g), rtol=1e-12)

    def test_non_finite_integrand(self):
        with pytest.raises(DomainError):
            integrate(lambda x: 1.0 / x, Grid1D(0.0, 1.0, 11))

    def test_tensor_product(self):
        nodes, w = tensor_nodes([Grid1D(0.0, 1.0, 21), Grid1D(0.0, 1.0, 21)])
        assert nodes.shape == (441, 2)
        assert_allclose(w @ (nodes[:, 0] * nodes[:, 1]), 0.25, rtol=1e-12)


class TestDifferences:
    def test_gradient(self):
        assert_allclose(finite_diff_gradient(lambda x: np.sum(x ** 2), [1.0, 2.0]), [2.0, 4.0], rtol=1e-8)

    def test_jacobian(self):
        g = lambda x: np.array([x[0] * x[1], x[0] ** 2])
        assert_allclose(finite_diff_jacobian(g, [2.0, 3.0]), [[3.0, 2.0], [4.0, 0.0]], atol=1e-7)

    def test_laplacian(self):
        f = lambda x: x[0] ** 2 + 3.0 * x[1] ** 2
        assert_allclose(finite_diff_laplacian(f, [1.0, 2.0]), 8.0, rtol=1e-5)

    def test_stencil_leaving_domain(self):
        with pytest.raises(DomainError):
            finite_diff_gradient(lambda x: np.log(x[0]), [0.0])

    def test_bad_step(self):
        with pytest.raises(SpecificationError):
            finite_diff_gradient(lambda x: x[0], [1.0], h=-1.0)


class TestLinalg:
    def test_cholesky_upper(self):
        A = np.array([[4.0, 2.0, 0.4], [2.0, 3.0, 0.5], [0.4, 0.5, 2.0]])
        U = cholesky_upper(A)
        assert_allclose(np.tril(U, -1), 0.0)
        assert_allclose(U.T @ U, A, rtol=1e-12)

    def test_reports_failing_pivot(self):
        with pytest.raises(NotPositiveDefiniteError) as info:
            cholesky_upper([[1.0, 2.0], [2.0, 1.0]])
        assert info.value.pivot == 1

    def test_rejects_asymmetric(self):
        with pytest.raises(SpecificationError):
            cholesky_upper([[2.0, 1.0], [0.0, 2.0]])

    def test_inverse_and_solve(self):
        A = np.array([[2.0, 0.5], [0.5, 1.0]])
        assert_allclose(spd_inverse(A) @ A, np.eye(2), atol=1e-12)
        assert_allclose(A @ solve_spd(A, [1.0, -1.0]), [1.0, -1.0], atol=1e-12)

    def test_row_major_matrix(self):
        assert as_matrix(2, 3, [1, 2, 3, 4, 5, 6]).tolist() == [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]
        with pytest.raises(SpecificationError, match="entries"):
            as_matrix(2, 2, [1.0, 2.0, 3.0])


class TestMinimize:
    def test_quadratic(self):
        res = minimize(lambda x: (x[0] - 1.0) ** 2 + (x[1] + 2.0) ** 2, [0.0, 0.0])
        assert res.converged
        assert_allclose(res.argmin, [1.0, -2.0], atol=1e-5)

    def test_bounded_minimum_on_face(self):
        res = minimize(lambda x: (x[0] - 3.0) ** 2, [0.0], bounds=[(None, 1.0)])
        assert_allclose(res.argmin, [1.0], atol=1e-6)

    def test_rosenbrock(self):
        res = minimize(lambda x: 100.0 * (x[1] - x[0] ** 2) ** 2 + (1.0 - x[0]) ** 2, [-1.2, 1.0])
        assert_allclose(res.argmin, [1.0, 1.0], atol=1e-4)

    def test_constant_objective_stays_at_start(self):
        res = minimize(lambda x: 3.0, [0.5, -2.0])
        assert res.converged
        assert res.argmin.tolist() == [0.5, -2.0]

    def test_non_finite_start(self):
        with pytest.raises(DomainError):
            minimize(lambda x: np.log(x[0]), [-1.0])


class TestSeedSpec:
    def test_same_seed_same_draws(self):
        a = SeedSpec(42, 3).generator().standard_normal(5)
        b = SeedSpec(42).stream(3).generator().standard_normal(5)
        assert_allclose(a, b, rtol=0, atol=0)

    def test_streams_differ(self):
        a = SeedSpec(42, 0).generator().standard_normal(5)
        b = SeedSpec(42, 1).generator().standard_normal(5)
        assert not np.allclose(a, b)

    def test_subkeys_differ(self):
        s = SeedSpec(7)
        assert not np.allclose(s.generator(0).random(3), s.generator(1).random(3))

    def test_rejects_negative(self):
        with pytest.raises(SpecificationError):
            SeedSpec(-1)
        with pytest.raises(SpecificationError):
            SeedSpec(1, -2)

    def test_from_env(self, monkeypatch):
        monkeypatch.setenv("SCORELAB_SEED", "99")
        assert SeedSpec.from_env(2) == SeedSpec(99, 2)
        monkeypatch.setenv("SCORELAB_SEED", "abc")
        with pytest.raises(SpecificationError):
            SeedSpec.from_env()
        monkeypatch.delenv("SCORELAB_SEED")
        assert SeedSpec.from_env() is None
