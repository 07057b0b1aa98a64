"""First and second derivative formulas for integrals over moving domains.

Each operation evaluates a boundary/volume formula at t=0 from data on the
undeformed domain, then cross-checks it against a finite-difference oracle
that differentiates the pulled-back integral: volume integrals transform
with det DT_t on fixed interior nodes, boundary integrals are recomputed on
pushed nodes with stretched weights.  Reports carry both values, errors
normalized by 1 + |formula|, and the observed FD order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ._fd import FDResult, derivative_ladder
from .geometry import Domain, _rotate_quarter, tangential_grad
from .integrands import IntegrandSpec, VectorIntegrandSpec
from .perturbation import (PerturbationError, PerturbationFamily,
                           advective_normal_component, boundary_data)


@dataclass
class VariationReport:
    """Formula value versus oracle(s) for one derivative evaluation."""

    quantity: str
    formula_value: float
    oracles: dict = field(default_factory=dict)
    abs_err: float = 0.0
    rel_err: float = 0.0
    fd: FDResult | None = None
    runtime: float = 0.0
    warnings: tuple = ()

    @classmethod
    def build(cls, quantity, formula_value, fd=None, analytic=None,
              runtime=0.0, warnings=()):
        oracles = {}
        if fd is not None:
            oracles["fd_richardson"] = fd.value
            oracles["fd_estimates"] = list(fd.estimates)
            warnings = tuple(warnings) + fd.warnings
        if analytic is not None:
            oracles["analytic"] = analytic
        # highest-trust oracle first: closed form beats finite differences
        reference = analytic if analytic is not None else (
            fd.value if fd is not None else formula_value)
        abs_err = abs(formula_value - reference)
        rel_err = abs_err / (1.0 + abs(formula_value))
        return cls(quantity, float(formula_value), oracles, float(abs_err),
                   float(rel_err), fd, runtime, tuple(warnings))


# ---------------------------------------------------------------------------
# Pullback / pushforward integrals (the oracle side)
# ---------------------------------------------------------------------------

def pullback_volume_integral(domain: Domain, family: PerturbationFamily,
                             c: IntegrandSpec, t: float,
                             interior=None) -> float:
    """integral of c(., t) over T_t(Omega), pulled back to fixed interior nodes."""
    interior = interior if interior is not None else domain.interior()
    img = family.map(interior.nodes, t)
    jac = family.map_jacobian(interior.nodes, t)
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    if np.any(det <= 0.0):
        raise PerturbationError(f"deformation folds the domain at t={t}")
    return float(np.dot(interior.weights, c.value(img, t) * det))


def _pushed_frames(domain: Domain, family: PerturbationFamily, t: float):
    for grid in domain.grids:
        img = family.map(grid.nodes, t)
        jac = family.map_jacobian(grid.nodes, t)
        dx = np.einsum("nij,nj->ni", jac, grid.curve.velocity(grid.thetas))
        speed = np.hypot(dx[:, 0], dx[:, 1])
        weights = (2.0 * np.pi / grid.size) * speed
        tangent = dx / speed[:, None]
        yield img, weights, tangent, _rotate_quarter(tangent)


def pushed_area_integral(domain: Domain, family: PerturbationFamily,
                         c: IntegrandSpec, t: float) -> float:
    """integral of c(., t) over the deformed boundary with stretched weights."""
    total = 0.0
    for img, weights, _, _ in _pushed_frames(domain, family, t):
        total += float(np.dot(weights, c.value(img, t)))
    return total


def pushed_flux_integral(domain: Domain, family: PerturbationFamily,
                         a: VectorIntegrandSpec, t: float) -> float:
    """integral of nu . a(., t) over the deformed boundary."""
    total = 0.0
    for img, weights, _, normal in _pushed_frames(domain, family, t):
        total += float(np.dot(weights, np.einsum("ni,ni->n", a.value(img, t), normal)))
    return total


def fd_reference(kind: str, domain: Domain, family: PerturbationFamily,
                 integrand, order: int = 1, ladder=None,
                 interior=None) -> FDResult:
    """FD derivative of the pulled-back integral of the given kind at t=0."""
    if kind == "volume":
        interior = interior if interior is not None else domain.interior()

        def g(t):
            return pullback_volume_integral(domain, family, integrand, t, interior)
    elif kind == "area":
        def g(t):
            return pushed_area_integral(domain, family, integrand, t)
    elif kind == "flux":
        def g(t):
            return pushed_flux_integral(domain, family, integrand, t)
    else:
        raise ValueError(f"unknown integral kind {kind!r}")
    return derivative_ladder(g, order=order, ladder=ladder)


def _zero_report(quantity: str) -> VariationReport:
    return VariationReport.build(quantity, 0.0, analytic=0.0)


# ---------------------------------------------------------------------------
# Volume formulas
# ---------------------------------------------------------------------------

def first_volume(domain: Domain, family: PerturbationFamily, c: IntegrandSpec,
                 ladder=None, analytic=None, interior=None,
                 skip_fd: bool = False) -> VariationReport:
    """d/dt of the volume integral at t=0: interior c_t plus boundary c0*(S.nu)."""
    if c.zero:
        return _zero_report("first_volume")
    start = time.perf_counter()
    interior = interior if interior is not None else domain.interior()
    value = float(np.dot(interior.weights, c.dt(interior.nodes, 0.0)))
    for grid in domain.grids:
        data = boundary_data(family, grid)
        value += grid.integrate(c.value(grid.nodes, 0.0) * data.normal_velocity)
    fd = None if skip_fd else fd_reference("volume", domain, family, c,
                                           order=1, ladder=ladder, interior=interior)
    return VariationReport.build("first_volume", value, fd=fd, analytic=analytic,
                                 runtime=time.perf_counter() - start)


def second_volume(domain: Domain, family: PerturbationFamily, c: IntegrandSpec,
                  ladder=None, analytic=None, interior=None,
                  skip_fd: bool = False) -> VariationReport:
    """d^2/dt^2 of the volume integral at t=0.

    Interior c_tt plus <2 c_t + div(c0 S), S.nu> plus
    <c0, R.nu - [(S.grad)S].nu> on the boundary.
    """
    if c.zero:
        return _zero_report("second_volume")
    start = time.perf_counter()
    interior = interior if interior is not None else domain.interior()
    value = float(np.dot(interior.weights, c.dtt(interior.nodes, 0.0)))
    for grid in domain.grids:
        data = boundary_data(family, grid)
        c0 = c.value(grid.nodes, 0.0)
        cdot = c.dt(grid.nodes, 0.0)
        grad = c.gradient(grid.nodes, 0.0)
        div_s = np.trace(data.velocity_jacobian, axis1=1, axis2=2)
        div_c0s = np.einsum("ni,ni->n", grad, data.velocity) + c0 * div_s
        value += grid.integrate((2.0 * cdot + div_c0s) * data.normal_velocity)
        adv = advective_normal_component(data, grid)
        value += grid.integrate(c0 * (data.normal_acceleration - adv))
    fd = None if skip_fd else fd_reference("volume", domain, family, c,
                                           order=2, ladder=ladder, interior=interior)
    return VariationReport.build("second_volume", value, fd=fd, analytic=analytic,
                                 runtime=time.perf_counter() - start)


# ---------------------------------------------------------------------------
# Area formulas
# ---------------------------------------------------------------------------

def first_area(domain: Domain, family: PerturbationFamily, c: IntegrandSpec,
               ladder=None, analytic=None, skip_fd: bool = False) -> VariationReport:
    """d/dt of the boundary integral: c_t plus (kappa c0 + dc0/dnu)(S.nu)."""
    if c.zero:
        return _zero_report("first_area")
    start = time.perf_counter()
    value = 0.0
    for grid in domain.grids:
        data = boundary_data(family, grid)
        c0 = c.value(grid.nodes, 0.0)
        dn_c = np.einsum("ni,ni->n", c.gradient(grid.nodes, 0.0), grid.normal)
        value += grid.integrate(c.dt(grid.nodes, 0.0))
        value += grid.integrate((grid.curvature * c0 + dn_c) * data.normal_velocity)
    fd = None if skip_fd else fd_reference("area", domain, family, c,
                                           order=1, ladder=ladder)
    return VariationReport.build("first_area", value, fd=fd, analytic=analytic,
                                 runtime=time.perf_counter() - start)


def _scaled_field_divergence(grid, data, c: IntegrandSpec) -> np.ndarray:
    """Nodal div[(kappa c0 + dc0/dnu) S] using tubular-coordinate gradients.

    The curvature factor extends off the boundary as the offset-curve
    curvature (gradient (dkappa/ds) tau - kappa^2 nu) and the normal field
    as the collar normal (so D nu = kappa tau tau), which closes the
    derivative of the bracket without sampling off-boundary points.
    """
    c0 = c.value(grid.nodes, 0.0)
    grad_c = c.gradient(grid.nodes, 0.0)
    hess_c = c.hessian(grid.nodes, 0.0)
    kappa = grid.curvature
    dkappa_ds = tangential_grad(grid, kappa)
    s_dot_tau = np.einsum("ni,ni->n", data.velocity, grid.tangent)
    div_s = np.trace(data.velocity_jacobian, axis1=1, axis2=2)
    dn_c = np.einsum("ni,ni->n", grad_c, grid.normal)
    dt_c = np.einsum("ni,ni->n", grad_c, grid.tangent)
    bracket = kappa * c0 + dn_c
    grad_dot_s = (c0 * (dkappa_ds * s_dot_tau - kappa ** 2 * data.normal_velocity)
                  + kappa * np.einsum("ni,ni->n", grad_c, data.velocity)
                  + kappa * dt_c * s_dot_tau
                  + np.einsum("ni,nij,nj->n", data.velocity, hess_c, grid.normal))
    return grad_dot_s + bracket * div_s


def second_area(domain: Domain, family: PerturbationFamily, c: IntegrandSpec,
                ladder=None, analytic=None, skip_fd: bool = False) -> VariationReport:
    """d^2/dt^2 of the boundary integral at t=0.

    Assembled from the flux rule applied to the moving unit-normal field
    scaled by c: the normal-rate terms contribute -<c0, |d rho/ds|^2> and
    -2<(d^2 rho/ds^2) c0 + (d rho/ds)(d c0/ds), rho>, the transported
    bracket is div[(kappa c0 + dc0/dnu)S] in tubular coordinates, and the
    curvature pairing closes with rho_tt - [(S.grad)S].nu.  The pairing of
    d^2 c0/ds^2 with rho^2 is kept in integrated-by-parts form
    -<dc0/ds, d(rho^2)/ds> so only first derivatives of user data appear.
    """
    if c.zero:
        return _zero_report("second_area")
    start = time.perf_counter()
    value = 0.0
    for grid in domain.grids:
        data = boundary_data(family, grid)
        rho = data.normal_velocity
        c0 = c.value(grid.nodes, 0.0)
        cdot = c.dt(grid.nodes, 0.0)
        dn_c = np.einsum("ni,ni->n", c.gradient(grid.nodes, 0.0), grid.normal)
        dn_cdot = np.einsum("ni,ni->n", c.dt_gradient(grid.nodes, 0.0), grid.normal)
        drho_ds = tangential_grad(grid, rho)
        d2rho_ds2 = tangential_grad(grid, drho_ds)
        value += grid.integrate(c.dtt(grid.nodes, 0.0))
        value -= grid.integrate(c0 * drho_ds ** 2)
        transported = (-2.0 * d2rho_ds2 * c0
                       + 2.0 * grid.curvature * cdot + 2.0 * dn_cdot
                       + _scaled_field_divergence(grid, data, c))
        value += grid.integrate(transported * rho)
        # integrated-by-parts form of +<d^2 c0/ds^2, rho^2>
        dc0_ds = tangential_grad(grid, c0)
        value -= grid.integrate(dc0_ds * tangential_grad(grid, rho ** 2))
        adv = advective_normal_component(data, grid)
        bracket = grid.curvature * c0 + dn_c
        value += grid.integrate(bracket * (data.normal_acceleration - adv))
    fd = None if skip_fd else fd_reference("area", domain, family, c,
                                           order=2, ladder=ladder)
    return VariationReport.build("second_area", value, fd=fd, analytic=analytic,
                                 runtime=time.perf_counter() - start)


# ---------------------------------------------------------------------------
# Boundary-flux formulas for vector fields
# ---------------------------------------------------------------------------

def boundary_flux_first(domain: Domain, family: PerturbationFamily,
                        a: VectorIntegrandSpec, ladder=None, analytic=None,
                        skip_fd: bool = False) -> VariationReport:
    """d/dt of the flux integral: nu . a_t plus (div a)(S.nu)."""
    start = time.perf_counter()
    value = 0.0
    for grid in domain.grids:
        data = boundary_data(family, grid)
        at = a.dt(grid.nodes, 0.0)
        div = a.divergence(grid.nodes, 0.0)
        value += grid.integrate(np.einsum("ni,ni->n", at, grid.normal))
        value += grid.integrate(div * data.normal_velocity)
    fd = None if skip_fd else fd_reference("flux", domain, family, a,
                                           order=1, ladder=ladder)
    return VariationReport.build("boundary_flux_first", value, fd=fd,
                                 analytic=analytic,
                                 runtime=time.perf_counter() - start)


def boundary_flux_second(domain: Domain, family: PerturbationFamily,
                         a: VectorIntegrandSpec, ladder=None, analytic=None,
                         skip_fd: bool = False) -> VariationReport:
    """d^2/dt^2 of the flux integral at t=0.

    nu . a_tt plus <2 div a_t + grad(div a).S + (div a)(div S), S.nu>
    plus <div a, R.nu - [(S.grad)S].nu>.
    """
    if a.dtt is None or a.divergence_gradient is None:
        raise ValueError("second flux derivative needs a_tt and grad(div a)")
    start = time.perf_counter()
    value = 0.0
    for grid in domain.grids:
        data = boundary_data(family, grid)
        value += grid.integrate(np.einsum("ni,ni->n", a.dtt(grid.nodes, 0.0),
                                          grid.normal))
        div = a.divergence(grid.nodes, 0.0)
        div_t = a.divergence_dt(grid.nodes, 0.0)
        grad_div = a.divergence_gradient(grid.nodes, 0.0)
        div_s = np.trace(data.velocity_jacobian, axis1=1, axis2=2)
        transported = (2.0 * div_t
                       + np.einsum("ni,ni->n", grad_div, data.velocity)
                       + div * div_s)
        value += grid.integrate(transported * data.normal_velocity)
        adv = advective_normal_component(data, grid)
        value += grid.integrate(div * (data.normal_acceleration - adv))
    fd = None if skip_fd else fd_reference("flux", domain, family, a,
                                           order=2, ladder=ladder)
    return VariationReport.build("boundary_flux_second", value, fd=fd,
                                 analytic=analytic,
                                 runtime=time.perf_counter() - start)


# ---------------------------------------------------------------------------
# Normal-vector rate
# ---------------------------------------------------------------------------

def nu_dot(domain: Domain, family: PerturbationFamily):
    """Nodal d nu/dt at t=0 per component: -(d(S.nu)/ds) tau."""
    out = []
    for grid in domain.grids:
        rho = boundary_data(family, grid).normal_velocity
        out.append(-tangential_grad(grid, rho)[:, None] * grid.tangent)
    return out


def nu_dot_fd(domain: Domain, family: PerturbationFamily, h: float = 1e-4):
    """FD-in-t of the deformed boundary's normal field at the fixed nodes.

    nu_dot is the rate of the moving normal field seen at a fixed spatial
    point, so each base node is projected onto the deformed curve (Newton on
    the nearest-point condition using pushed positions and tangents) and the
    normal there is differenced in t.
    """
    out = []
    for grid in domain.grids:
        def normal_at(grid, t):
            theta = grid.thetas.copy()
            for _ in range(30):
                base = grid.curve.point(theta)
                vel = grid.curve.velocity(theta)
                y = family.map(base, t)
                dy = np.einsum("nij,nj->ni", family.map_jacobian(base, t), vel)
                f = np.einsum("ni,ni->n", grid.nodes - y, dy)
                eps = 1e-6
                base2 = grid.curve.point(theta + eps)
                y2 = family.map(base2, t)
                dy2 = np.einsum("nij,nj->ni",
                                family.map_jacobian(base2, t),
                                grid.curve.velocity(theta + eps))
                f2 = np.einsum("ni,ni->n", grid.nodes - y2, dy2)
                step = f / ((f2 - f) / eps)
                theta -= step
                if np.max(np.abs(step)) < 1e-13:
                    break
            base = grid.curve.point(theta)
            dy = np.einsum("nij,nj->ni", family.map_jacobian(base, t),
                           grid.curve.velocity(theta))
            return _rotate_quarter(dy / np.hypot(dy[:, 0], dy[:, 1])[:, None])

        out.append((normal_at(grid, h) - normal_at(grid, -h)) / (2.0 * h))
    return out
