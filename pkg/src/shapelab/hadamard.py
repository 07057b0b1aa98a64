"""First and second domain variations of the mixed Green's function.

Three independent routes are implemented for each variation: the boundary
variational formula (trace pairings), an auxiliary harmonic BVP solved with
the same collocation machinery, and finite differences of full re-solves on
the deformed domain.  The second variation's boundary coefficients chi and
sigma are assembled in three algebraic forms whose nodewise agreement is
itself a shipped check.

Conventions for the coefficient forms (2-D, collar-extended normal with
d(nu)/dn = 0, so (grad nu) restricted to the boundary is kappa tau tau):
the raw form consumes the family's acceleration field directly, the
transport form trades it for normal/tangential derivatives of the normal
speed, and the curvature form expresses everything through the second
fundamental form.  The transport form as commonly displayed omits one
tangential-transport term; the corrected rendering is used and the literal
one is kept as a reported diagnostic (``chi_display_residual``).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ._fd import FDResult, derivative_ladder
from .geometry import (Domain, MixedBoundary, fourier_derivative,
                       second_fundamental_form, tangential_grad)
from .greens import GreensConfig, GreensEval, GreensSolver, HarmonicField
from .perturbation import PerturbationFamily, boundary_data

DELTA_N_LADDER = (1e-2, 5e-3, 2.5e-3)
DELTA2_N_LADDER = (5e-2, 2.5e-2, 1.25e-2)


# ---------------------------------------------------------------------------
# chi / sigma coefficients
# ---------------------------------------------------------------------------

@dataclass
class HadamardCoefficients:
    """Nodal second-variation boundary coefficients in three assemblies."""

    chi_raw: list          # acceleration-field route
    chi_transport: list    # normal-speed derivative route (corrected display)
    chi_curvature: list    # second-fundamental-form route
    sigma_raw: list
    sigma_transport: list
    sigma_curvature: list
    chi_display_residual: list  # literal transport display minus raw form
    max_discrepancy: float

    @property
    def chi(self) -> list:
        return self.chi_raw

    @property
    def sigma(self) -> list:
        return self.sigma_raw


def chi_sigma(domain: Domain, family: PerturbationFamily) -> HadamardCoefficients:
    """Assemble chi and sigma nodally on every component, three ways each.

    The three assemblies use genuinely different inputs: the raw form needs
    the family's acceleration and velocity-Jacobian fields, the transport
    form needs the full derivative of the normal speed along S, and the
    curvature form needs only tangential data plus the second fundamental
    form.  Analytic data must make them agree to near rounding; the
    discrepancy is reported, not reconciled.
    """
    chi_r, chi_t, chi_c = [], [], []
    sig_r, sig_t, sig_c = [], [], []
    residual = []
    worst = 0.0
    for grid in domain.grids:
        data = boundary_data(family, grid)
        kappa = grid.curvature
        rho = data.normal_velocity
        rho2 = data.normal_acceleration
        s_tan = np.einsum("ni,ni->n", data.velocity, grid.tangent)
        ds_mat = data.velocity_jacobian
        dn_rho = np.einsum("ni,nij,nj->n", grid.normal, ds_mat, grid.normal)
        ds_rho = tangential_grad(grid, rho)
        # full derivative of the normal speed along S (analytic route)
        full_grad = np.einsum("ni,nij,nj->n", grid.normal, ds_mat,
                              data.velocity) + kappa * s_tan ** 2
        adv_nu = np.einsum("ni,ni->n",
                           np.einsum("nij,nj->ni", ds_mat, data.velocity),
                           grid.normal)
        grad_nu_ss = kappa * s_tan ** 2

        raw_core = rho2 - adv_nu
        chi_raw = raw_core - rho ** 2 * kappa - full_grad + 2.0 * rho * dn_rho
        sigma_raw = rho * dn_rho - s_tan * ds_rho + raw_core

        chi_lit = rho2 + rho * dn_rho + grad_nu_ss - rho ** 2 * kappa - full_grad
        chi_tr = chi_lit - s_tan * ds_rho
        sigma_tr = rho2 - 2.0 * s_tan * ds_rho + grad_nu_ss

        b_form = np.array([second_fundamental_form(grid, st, st, j)
                           for j, st in enumerate(data.tangential_velocity)])
        sigma_cv = rho2 - 2.0 * s_tan * ds_rho + b_form
        chi_cv = sigma_cv - rho ** 2 * kappa

        chi_r.append(chi_raw)
        chi_t.append(chi_tr)
        chi_c.append(chi_cv)
        sig_r.append(sigma_raw)
        sig_t.append(sigma_tr)
        sig_c.append(sigma_cv)
        residual.append(chi_lit - chi_raw)
        for a, b in ((chi_raw, chi_tr), (chi_raw, chi_cv), (chi_tr, chi_cv),
                     (sigma_raw, sigma_tr), (sigma_raw, sigma_cv),
                     (sigma_tr, sigma_cv)):
            worst = max(worst, float(np.max(np.abs(a - b))))
    return HadamardCoefficients(chi_r, chi_t, chi_c, sig_r, sig_t, sig_c,
                                residual, worst)


# ---------------------------------------------------------------------------
# First variation
# ---------------------------------------------------------------------------

def probe_warning(solver: GreensSolver, point: np.ndarray,
                  min_spacing: float = 3.0) -> str | None:
    """Accuracy warning for probes closer to the boundary than a few node gaps."""
    point = np.asarray(point, dtype=float)
    for comp in solver.components:
        gaps = np.linalg.norm(comp.nodes - point[None, :], axis=1)
        spacing = float(np.mean(comp.weights))
        if gaps.min() < min_spacing * spacing:
            return (f"probe {point} is within {min_spacing} node spacings of "
                    "the boundary; trace quadrature degrades")
    return None


def delta_n_formula(solver: GreensSolver, family: PerturbationFamily,
                    ev_x: GreensEval, ev_y: GreensEval) -> float:
    """First variation by boundary pairing of traces against the normal speed.

    <rho dN/dnu(.,x), dN/dnu(.,y)> on Dirichlet pieces minus
    <rho dN/ds(.,x), dN/ds(.,y)> on Neumann pieces; symmetric in x, y.
    """
    total = 0.0
    for i, (grid, comp) in enumerate(zip(solver.domain.grids, solver.components)):
        rho = boundary_data(family, grid).normal_velocity
        if comp.dirichlet:
            total += float(np.dot(comp.weights,
                                  rho * ev_x.normal_trace(i) * ev_y.normal_trace(i)))
        else:
            total -= float(np.dot(comp.weights,
                                  rho * ev_x.tangential_trace(i) * ev_y.tangential_trace(i)))
    return total


def delta_n_bvp(solver: GreensSolver, family: PerturbationFamily,
                ev_y: GreensEval):
    """First variation as the harmonic field solving the variation BVP.

    Dirichlet data -rho dN/dnu(.,y); Neumann data d/ds(rho dN/ds(.,y)),
    assembled nodally and interpolated to the collocation nodes.
    """
    nodal = []
    for i, (grid, comp) in enumerate(zip(solver.domain.grids, solver.components)):
        rho = boundary_data(family, grid).normal_velocity
        if comp.dirichlet:
            nodal.append(-rho * ev_y.normal_trace(i))
        else:
            product = rho * ev_y.tangential_trace(i)
            nodal.append(fourier_derivative(product) / grid.speed)
    field, diag = solver.harmonic_bvp(nodal)
    return field, diag


def delta_n_fd(domain: Domain, mixed: MixedBoundary, family: PerturbationFamily,
               x: np.ndarray, y: np.ndarray, ladder=DELTA_N_LADDER,
               config: GreensConfig | None = None) -> FDResult:
    """First variation by re-solving on the deformed domain along a t-ladder."""
    x = np.atleast_2d(np.asarray(x, dtype=float))

    def value(t):
        solver = GreensSolver(domain, mixed, config, family=family, t=t)
        return solver.solve(np.asarray(y, dtype=float)).value(x)[0]

    return derivative_ladder(value, order=1, ladder=ladder)


# ---------------------------------------------------------------------------
# Second variation
# ---------------------------------------------------------------------------

def second_bvp_data(solver: GreensSolver, family: PerturbationFamily,
                    ev_y: GreensEval, udot_y: HarmonicField,
                    coeffs: HadamardCoefficients | None = None):
    """Nodal boundary data (g on Dirichlet, h on Neumann) for the second BVP.

    g = -chi dN/dnu(.,y) - 2 rho d(udot)/dnu;
    h = d/ds(chi dN/ds(.,y) + 2 rho d(udot)/ds).
    Both follow from twice differentiating the boundary conditions along the
    deformation (chain rule on the moving boundary); each piece is pinned by
    kernel-level oracles in the tests.
    """
    coeffs = coeffs if coeffs is not None else chi_sigma(solver.domain, family)
    nodal = []
    for i, (grid, comp) in enumerate(zip(solver.domain.grids, solver.components)):
        rho = boundary_data(family, grid).normal_velocity
        grad_udot = udot_y.gradient(grid.nodes)
        if comp.dirichlet:
            dn_udot = np.einsum("ni,ni->n", grad_udot, grid.normal)
            nodal.append(-coeffs.chi[i] * ev_y.normal_trace(i)
                         - 2.0 * rho * dn_udot)
        else:
            ds_udot = np.einsum("ni,ni->n", grad_udot, grid.tangent)
            product = (coeffs.chi[i] * ev_y.tangential_trace(i)
                       + 2.0 * rho * ds_udot)
            nodal.append(fourier_derivative(product) / grid.speed)
    return nodal


def delta2_n_bvp(solver: GreensSolver, family: PerturbationFamily,
                 ev_y: GreensEval, udot_y: HarmonicField,
                 coeffs: HadamardCoefficients | None = None):
    """Second variation as the harmonic field with the second-order data."""
    nodal = second_bvp_data(solver, family, ev_y, udot_y, coeffs)
    return solver.harmonic_bvp(nodal)


def delta2_n_formula(solver: GreensSolver, family: PerturbationFamily,
                     ev_x: GreensEval, ev_y: GreensEval,
                     udot_x: HarmonicField, udot_y: HarmonicField,
                     coeffs: HadamardCoefficients | None = None,
                     interior=None) -> float:
    """Second variation by the variational formula.

    -2 (grad deltaN(.,x), grad deltaN(.,y))_Omega
    + <chi dN/dnu(.,x), dN/dnu(.,y)> on Dirichlet pieces
    - <chi dN/ds(.,x), dN/ds(.,y)> on Neumann pieces
    - 2 <rho, d deltaN(.,x)/ds dN/ds(.,y) + d deltaN(.,y)/ds dN/ds(.,x)>
      on Neumann pieces.
    Symmetric in the poles term by term; with no Neumann piece it collapses
    to the two-term Dirichlet form.  The interior gradients come from the
    first-variation charge fields.
    """
    coeffs = coeffs if coeffs is not None else chi_sigma(solver.domain, family)
    interior = interior if interior is not None else solver.domain.interior()
    gx = udot_x.gradient(interior.nodes)
    gy = udot_y.gradient(interior.nodes)
    total = -2.0 * float(np.dot(interior.weights, np.einsum("ni,ni->n", gx, gy)))
    for i, (grid, comp) in enumerate(zip(solver.domain.grids, solver.components)):
        if comp.dirichlet:
            total += float(np.dot(comp.weights, coeffs.chi[i]
                                  * ev_x.normal_trace(i) * ev_y.normal_trace(i)))
        else:
            qx = ev_x.tangential_trace(i)
            qy = ev_y.tangential_trace(i)
            wx = np.einsum("ni,ni->n", udot_x.gradient(grid.nodes), grid.tangent)
            wy = np.einsum("ni,ni->n", udot_y.gradient(grid.nodes), grid.tangent)
            rho = boundary_data(family, grid).normal_velocity
            total -= float(np.dot(comp.weights, coeffs.chi[i] * qx * qy))
            total -= 2.0 * float(np.dot(comp.weights, rho * (wx * qy + wy * qx)))
    return total


def delta2_n_fd(domain: Domain, mixed: MixedBoundary, family: PerturbationFamily,
                x: np.ndarray, y: np.ndarray, ladder=DELTA2_N_LADDER,
                config: GreensConfig | None = None) -> FDResult:
    """Second variation by 5-point differencing of full re-solves."""
    x = np.atleast_2d(np.asarray(x, dtype=float))

    def value(t):
        solver = GreensSolver(domain, mixed, config, family=family, t=t)
        return solver.solve(np.asarray(y, dtype=float)).value(x)[0]

    return derivative_ladder(value, order=2, ladder=ladder)


# ---------------------------------------------------------------------------
# Gradient-pairing identity
# ---------------------------------------------------------------------------

def gradient_pairing_residual(solver: GreensSolver, family: PerturbationFamily,
                              ev_x: GreensEval, ev_y: GreensEval,
                              udot_x: HarmonicField, udot_y: HarmonicField,
                              interior=None):
    """Interior gradient pairing of the two first variations vs its boundary form.

    (grad deltaN(.,x), grad deltaN(.,y))_Omega
    = -<rho dN/dnu(.,y), d deltaN/dnu(.,x)> on Dirichlet pieces
      -<dN/ds(.,x), rho d deltaN/ds(.,y)> on Neumann pieces
    (the Neumann pairing already integrated by parts).
    """
    interior = interior if interior is not None else solver.domain.interior()
    gx = udot_x.gradient(interior.nodes)
    gy = udot_y.gradient(interior.nodes)
    lhs = float(np.dot(interior.weights, np.einsum("ni,ni->n", gx, gy)))
    rhs = 0.0
    for i, (grid, comp) in enumerate(zip(solver.domain.grids, solver.components)):
        rho = boundary_data(family, grid).normal_velocity
        if comp.dirichlet:
            dn_udot_x = np.einsum("ni,ni->n", udot_x.gradient(grid.nodes), grid.normal)
            rhs -= float(np.dot(comp.weights, rho * ev_y.normal_trace(i) * dn_udot_x))
        else:
            ds_udot_y = np.einsum("ni,ni->n", udot_y.gradient(grid.nodes), grid.tangent)
            rhs -= float(np.dot(comp.weights,
                                ev_x.tangential_trace(i) * rho * ds_udot_y))
    return lhs, rhs, abs(lhs - rhs)


# ---------------------------------------------------------------------------
# Scaling oracle on the dilated disk
# ---------------------------------------------------------------------------

def disk_dilation_delta_n(x, y, order: int = 1) -> float:
    """d^order/dt^order of the disk Green's function under dilation, exactly.

    Under T_t = (1+t) id the Dirichlet Green's function of the unit disk
    satisfies N_t(x, y) = N(x/(1+t), y/(1+t)); the derivative of that scaling
    identity is differenced on the analytic formula with tight steps.
    """
    from .greens import disk_greens
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)

    def g(t):
        return disk_greens(x / (1.0 + t), y / (1.0 + t))

    ladder = (1e-3, 5e-4) if order == 1 else (2e-2, 1e-2, 5e-3)
    return derivative_ladder(g, order=order, ladder=ladder).value


@dataclass
class RouteTriangle:
    """Pairwise comparison of the formula, BVP, and FD routes for one probe pair."""

    quantity: str
    formula: float
    bvp: float
    fd: float
    pairwise: dict
    runtime: float

    @property
    def max_pairwise(self) -> float:
        return max(self.pairwise.values())


def _rel(a: float, b: float) -> float:
    return abs(a - b) / (1.0 + max(abs(a), abs(b)))


def delta_n_routes(domain: Domain, mixed: MixedBoundary, family: PerturbationFamily,
                   x, y, config: GreensConfig | None = None,
                   ladder=DELTA_N_LADDER) -> RouteTriangle:
    """Run all three first-variation routes for one probe pair."""
    start = time.perf_counter()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    solver = GreensSolver(domain, mixed, config)
    for p in (x, y):
        message = probe_warning(solver, p)
        if message:
            import warnings
            warnings.warn(message, stacklevel=2)
    ev_x = solver.solve(x)
    ev_y = solver.solve(y)
    formula = delta_n_formula(solver, family, ev_x, ev_y)
    udot_y, _ = delta_n_bvp(solver, family, ev_y)
    bvp = float(udot_y.value(x[None, :])[0])
    fd = delta_n_fd(domain, mixed, family, x, y, ladder=ladder, config=config).value
    pairwise = {"formula_vs_bvp": _rel(formula, bvp),
                "formula_vs_fd": _rel(formula, fd),
                "bvp_vs_fd": _rel(bvp, fd)}
    return RouteTriangle("delta_n", formula, bvp, fd, pairwise,
                         time.perf_counter() - start)


def delta2_n_routes(domain: Domain, mixed: MixedBoundary, family: PerturbationFamily,
                    x, y, config: GreensConfig | None = None,
                    ladder=DELTA2_N_LADDER, interior=None) -> RouteTriangle:
    """Run all three second-variation routes for one probe pair."""
    start = time.perf_counter()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    solver = GreensSolver(domain, mixed, config)
    ev_x = solver.solve(x)
    ev_y = solver.solve(y)
    coeffs = chi_sigma(domain, family)
    udot_x, _ = delta_n_bvp(solver, family, ev_x)
    udot_y, _ = delta_n_bvp(solver, family, ev_y)
    formula = delta2_n_formula(solver, family, ev_x, ev_y, udot_x, udot_y,
                               coeffs, interior=interior)
    uddot, _ = delta2_n_bvp(solver, family, ev_y, udot_y, coeffs)
    bvp = float(uddot.value(x[None, :])[0])
    fd = delta2_n_fd(domain, mixed, family, x, y, ladder=ladder, config=config).value
    pairwise = {"formula_vs_bvp": _rel(formula, bvp),
                "formula_vs_fd": _rel(formula, fd),
                "bvp_vs_fd": _rel(bvp, fd)}
    return RouteTriangle("delta2_n", formula, bvp, fd, pairwise,
                         time.perf_counter() - start)
