import numpy as np
import pytest

from shapelab import geometry as geo
from shapelab.integrands import (IntegrandSpec, VectorIntegrandSpec,
                                 normal_scaled_integrand,
                                 random_polynomial_integrand)

PTS = np.array([[0.4, -0.3], [1.2, 0.8]])


class TestIntegrandSpec:
    @pytest.mark.parametrize("expr", [
        "x1**2*x2 + t*x1 + 0.5*t**2",
        "sin(x1)*cos(x2)*exp(0.2*t)",
        "1",
    ])
    def test_spot_check_under_tolerance(self, expr):
        spec = IntegrandSpec.from_expression(expr)
        assert spec.spot_check(np.random.default_rng(0)) < 1e-6

    def test_values_and_derivatives(self):
        spec = IntegrandSpec.from_expression("x1**2 - x2**2 + t*x1*x2")
        np.testing.assert_allclose(spec.value(PTS, 0.0),
                                   PTS[:, 0] ** 2 - PTS[:, 1] ** 2)
        np.testing.assert_allclose(spec.dt(PTS, 0.0), PTS[:, 0] * PTS[:, 1])
        np.testing.assert_allclose(spec.dtt(PTS, 0.0), 0.0)
        np.testing.assert_allclose(spec.gradient(PTS, 0.0),
                                   np.stack([2 * PTS[:, 0], -2 * PTS[:, 1]], axis=-1))
        np.testing.assert_allclose(spec.hessian(PTS, 0.0)[0],
                                   np.array([[2.0, 0.0], [0.0, -2.0]]))
        np.testing.assert_allclose(spec.dt_gradient(PTS, 0.0),
                                   PTS[:, ::-1])

    def test_constant_broadcasts(self):
        spec = IntegrandSpec.constant(2.5)
        assert spec.value(PTS, 1.0).shape == (2,)
        assert spec.gradient(PTS, 0.0).shape == (2, 2)
        np.testing.assert_allclose(spec.gradient(PTS, 0.0), 0.0)

    def test_zero_flag(self):
        assert IntegrandSpec.constant(0.0).zero
        assert IntegrandSpec.from_expression("0*x1").zero
        assert not IntegrandSpec.constant(1.0).zero

    def test_random_polynomial_reproducible(self):
        a = random_polynomial_integrand(np.random.default_rng(4))
        b = random_polynomial_integrand(np.random.default_rng(4))
        np.testing.assert_allclose(a.value(PTS, 0.3), b.value(PTS, 0.3))


class TestVectorIntegrandSpec:
    def test_divergence_consistency(self):
        spec = VectorIntegrandSpec.from_expressions("x1**2*x2 + t", "x1 - x2**3")
        h = 1e-6
        div_fd = sum(
            (spec.value(PTS + np.eye(2)[k] * h, 0.0)[:, k]
             - spec.value(PTS - np.eye(2)[k] * h, 0.0)[:, k]) / (2 * h)
            for k in range(2))
        np.testing.assert_allclose(spec.divergence(PTS, 0.0), div_fd, atol=1e-8)

    def test_divergence_gradient(self):
        spec = VectorIntegrandSpec.from_expressions("x1**3", "x2**2*x1")
        np.testing.assert_allclose(
            spec.divergence_gradient(PTS, 0.0),
            np.stack([6 * PTS[:, 0] + 2 * PTS[:, 1], 2 * PTS[:, 0]], axis=-1))

    def test_normal_scaled_field_on_boundary(self):
        grid = geo.build_grid(geo.circle(1.0), 64)
        collar = geo.collar_extend(grid, np.ones(grid.size))
        c = IntegrandSpec.from_expression("x1 + 2")
        a = normal_scaled_integrand(c, collar)
        vals = a.value(grid.nodes, 0.0)
        np.testing.assert_allclose(vals, (grid.nodes[:, 0] + 2)[:, None] * grid.normal,
                                   atol=1e-12)
        # div(nu c) = kappa c + dc/dnu on the boundary
        expected = grid.curvature * (grid.nodes[:, 0] + 2) + grid.normal[:, 0]
        np.testing.assert_allclose(a.divergence(grid.nodes, 0.0), expected, atol=1e-10)
