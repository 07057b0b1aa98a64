import numpy as np
import pytest

from shapelab import geometry as geo
from shapelab import perturbation as pert
from shapelab._fd import derivative_ladder

PTS = np.array([[0.3, -0.2], [0.7, 0.5], [-0.4, 0.1]])


class TestFlowMap:
    def test_zero_field_is_identity(self):
        fam = pert.FlowFamily(pert.zero_field())
        np.testing.assert_allclose(fam.map(PTS, 0.2), PTS)
        np.testing.assert_allclose(fam.map_jacobian(PTS, 0.2),
                                   np.broadcast_to(np.eye(2), (3, 2, 2)))

    def test_dilation_flow_exponential(self):
        fam = pert.FlowFamily(pert.dilation(), step=5e-3)
        np.testing.assert_allclose(fam.map(PTS, 0.1), np.exp(0.1) * PTS, atol=1e-10)
        np.testing.assert_allclose(fam.map_jacobian(PTS, 0.1),
                                   np.exp(0.1) * np.broadcast_to(np.eye(2), (3, 2, 2)),
                                   atol=1e-10)

    def test_rotation_flow_preserves_volume(self):
        fam = pert.FlowFamily(pert.rotation(), step=5e-3)
        jac = fam.map_jacobian(PTS, 0.2)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        np.testing.assert_allclose(det, 1.0, atol=1e-12)

    def test_t_max_enforced(self):
        fam = pert.FlowFamily(pert.dilation(), t_max=0.25)
        with pytest.raises(pert.PerturbationError):
            fam.map(PTS, 0.3)

    def test_step_count_overflow(self):
        fam = pert.FlowFamily(pert.dilation(), step=1e-9, max_steps=100)
        with pytest.raises(pert.PerturbationError, match="overflow"):
            fam.map(PTS, 0.1)

    def test_acceleration_matches_kinematic_second_derivative(self):
        v = pert.PolynomialField({(0, 2, 0): 0.7, (0, 0, 1): -0.4,
                                  (1, 1, 1): 0.5, (1, 0, 0): 0.2})
        fam = pert.FlowFamily(v, step=1e-3)
        x0 = PTS[:1]
        h = 1e-2
        second = (-fam.map(x0, 2 * h) + 16 * fam.map(x0, h) - 30 * x0
                  + 16 * fam.map(x0, -h) - fam.map(x0, -2 * h)) / (12 * h * h)
        np.testing.assert_allclose(fam.acceleration(x0), second, atol=1e-9)


class TestDeterminantDerivatives:
    def test_dilation_taylor_closed_form(self):
        fam = pert.TaylorFamily(pert.dilation())
        d1, d2 = pert.det_derivatives(fam, PTS)
        np.testing.assert_allclose(d1, 2.0)
        np.testing.assert_allclose(d2, 2.0)

    def test_rotation_second_derivative_exactly_zero(self):
        fam = pert.FlowFamily(pert.rotation())
        d1, d2 = pert.det_derivatives(fam, PTS)
        assert np.all(d1 == 0.0) and np.all(d2 == 0.0)

    def test_zero_velocity_leaves_divergence_of_acceleration(self):
        r_field = pert.PolynomialField({(0, 1, 0): 0.3, (1, 0, 1): -0.8})
        fam = pert.TaylorFamily(pert.zero_field(), r_field)
        d1, d2 = pert.det_derivatives(fam, PTS)
        np.testing.assert_allclose(d1, 0.0)
        np.testing.assert_allclose(d2, -0.5)

    def test_polynomial_flow_matches_fd(self):
        rng = np.random.default_rng(3)
        fam = pert.FlowFamily(pert.random_polynomial_field(rng, 2, 0.3), step=2e-3)
        x0 = np.array([[0.2, 0.1]])

        def det(t):
            j = fam.map_jacobian(x0, t)[0]
            return j[0, 0] * j[1, 1] - j[0, 1] * j[1, 0]

        a1, a2 = pert.det_derivatives(fam, x0)
        assert abs(a1[0] - derivative_ladder(det, 1, (0.02, 0.01)).value) < 1e-9
        assert abs(a2[0] - derivative_ladder(det, 2, (0.02, 0.01)).value) < 1e-9


class TestInverseJacobianDerivatives:
    def test_dilation_taylor_closed_form(self):
        fam = pert.TaylorFamily(pert.dilation())
        j1, j2 = pert.inverse_jacobian_derivatives(fam, PTS[:1])
        np.testing.assert_allclose(j1[0], -np.eye(2))
        np.testing.assert_allclose(j2[0], 2 * np.eye(2))

    def test_zero_velocity(self):
        r_field = pert.PolynomialField({(0, 0, 1): 1.0, (1, 1, 0): 0.5})
        fam = pert.TaylorFamily(pert.zero_field(), r_field)
        j1, j2 = pert.inverse_jacobian_derivatives(fam, PTS[:1])
        np.testing.assert_allclose(j1[0], 0.0)
        np.testing.assert_allclose(j2[0], -r_field.jacobian(PTS[:1])[0])

    def test_random_taylor_matches_fd(self):
        rng = np.random.default_rng(11)
        fam = pert.TaylorFamily(pert.random_polynomial_field(rng, 2, 0.4),
                                pert.random_polynomial_field(rng, 2, 0.4))
        x0 = np.array([[0.25, -0.35]])
        a1, a2 = pert.inverse_jacobian_derivatives(fam, x0)
        for i in range(2):
            for j in range(2):
                def entry(t):
                    return np.linalg.inv(fam.map_jacobian(x0, t)[0])[i, j]
                f1 = derivative_ladder(entry, 1, (0.02, 0.01)).value
                f2 = derivative_ladder(entry, 2, (0.02, 0.01)).value
                assert abs(a1[0, i, j] - f1) < 1e-8
                assert abs(a2[0, i, j] - f2) < 1e-8


class TestMinorExpansion:
    def test_zero_matrices_give_zero_remainder(self):
        rep = pert.minor_expansion_check(np.zeros((3, 3)), np.zeros((3, 3)), 1, 1)
        assert rep.slope == np.inf and rep.passed
        assert max(rep.remainders) == 0.0

    @pytest.mark.parametrize("d,i,j", [(3, 1, 1), (3, 0, 2), (4, 2, 0), (2, 0, 1)])
    def test_random_matrices_cubic_remainder(self, d, i, j):
        rng = np.random.default_rng(d * 10 + i + j)
        ds = rng.integers(-3, 4, size=(d, d)).astype(float)
        dr = rng.integers(-3, 4, size=(d, d)).astype(float)
        rep = pert.minor_expansion_check(ds, dr, i, j)
        assert rep.passed, f"slope {rep.slope}"

    def test_off_diagonal_linear_coefficient(self):
        # the t-coefficient of the (i,j) minor is (+/-) dS^j/dx_i
        rng = np.random.default_rng(8)
        d, i, j = 3, 0, 2
        ds = rng.integers(-3, 4, size=(d, d)).astype(float)
        t = 1e-7
        full = np.eye(d) + t * ds
        sub = np.delete(np.delete(full, i, axis=0), j, axis=1)
        linear = np.linalg.det(sub) / t
        assert abs(linear - (-1.0) ** (j - i + 1) * ds[j, i]) < 1e-5

    def test_shape_mismatch_rejected(self):
        with pytest.raises(pert.PerturbationError):
            pert.minor_expansion_check(np.zeros((3, 3)), np.zeros((2, 2)), 0, 0)


class TestBoundaryData:
    def setup_method(self):
        self.grid = geo.build_grid(geo.circle(1.0), 64)

    def test_dilation_is_purely_normal(self):
        data = pert.boundary_data(pert.TaylorFamily(pert.dilation()), self.grid)
        np.testing.assert_allclose(data.normal_velocity, 1.0, atol=1e-14)
        np.testing.assert_allclose(data.tangential_velocity, 0.0, atol=1e-14)

    def test_rotation_is_purely_tangential(self):
        data = pert.boundary_data(pert.FlowFamily(pert.rotation()), self.grid)
        np.testing.assert_allclose(data.normal_velocity, 0.0, atol=1e-14)
        np.testing.assert_allclose(np.hypot(*data.tangential_velocity.T), 1.0,
                                   atol=1e-14)

    def test_translation_normal_speed(self):
        data = pert.boundary_data(pert.TaylorFamily(pert.translation(1, 0)), self.grid)
        np.testing.assert_allclose(data.normal_velocity, np.cos(self.grid.thetas),
                                   atol=1e-14)

    def test_flow_normal_acceleration_is_advective(self):
        fam = pert.FlowFamily(pert.PolynomialField({(0, 2, 0): 1.0, (1, 1, 1): 1.0}))
        data = pert.boundary_data(fam, self.grid)
        np.testing.assert_allclose(
            data.normal_acceleration,
            pert.advective_normal_component(data, self.grid), atol=1e-14)


class TestNormalFamily:
    def setup_method(self):
        self.grid = geo.build_grid(geo.circle(1.0), 64)
        self.rho = 0.4 + 0.1 * np.cos(2 * self.grid.thetas)
        self.family = pert.NormalFamily(self.grid, self.rho)

    def test_boundary_velocity_is_rho_nu(self):
        data = pert.boundary_data(self.family, self.grid)
        np.testing.assert_allclose(data.normal_velocity, self.rho, atol=1e-12)
        np.testing.assert_allclose(data.tangential_velocity, 0.0, atol=1e-12)
        np.testing.assert_allclose(data.acceleration, 0.0)

    def test_map_moves_nodes_normally(self):
        t = 0.05
        moved = self.family.map(self.grid.nodes, t)
        expected = self.grid.nodes + t * self.rho[:, None] * self.grid.normal
        np.testing.assert_allclose(moved, expected, atol=1e-12)

    def test_velocity_jacobian_matches_fd(self):
        pts = 1.05 * self.grid.nodes[:6]
        analytic = self.family.velocity_jacobian(pts)
        h = 1e-6
        for k in range(2):
            dp = np.zeros(2)
            dp[k] = h
            fd = (self.family.velocity(pts + dp) - self.family.velocity(pts - dp)) / (2 * h)
            np.testing.assert_allclose(analytic[:, :, k], fd, atol=1e-6)

    def test_far_points_do_not_move(self):
        far = np.array([[0.1, 0.0], [0.0, -0.2]])
        np.testing.assert_allclose(self.family.map(far, 0.1), far)


class TestFieldLibrary:
    def test_make_field_names(self):
        for name in ("dilation", "rotation", "translation", "shear"):
            assert pert.make_field(name) is not None
        field = pert.make_field("polynomial", terms={"0,2,0": 1.0, "1,1,1": -0.5})
        np.testing.assert_allclose(field(np.array([[2.0, 3.0]])),
                                   [[4.0, -3.0]])

    def test_degree_cap(self):
        with pytest.raises(pert.PerturbationError):
            pert.PolynomialField({(0, 4, 0): 1.0})

    def test_second_derivative_matches_fd(self):
        rng = np.random.default_rng(2)
        field = pert.random_polynomial_field(rng, degree=3)
        pts = rng.uniform(-1, 1, size=(4, 2))
        analytic = field.second_derivative(pts)
        h = 1e-5
        for j in range(2):
            dp = np.zeros(2)
            dp[j] = h
            fd = (field.jacobian(pts + dp) - field.jacobian(pts - dp)) / (2 * h)
            np.testing.assert_allclose(analytic[:, :, :, j], fd, atol=1e-8)
