"""Mixed Dirichlet/Neumann Laplace Green's function on smooth plane domains.

The harmonic corrector is represented by the method of fundamental
solutions: a sum of log-kernels with sources on dilated copies of each
boundary component (outside the domain for the outer curve, inside each
hole).  Coefficients are fit by least squares on oversampled collocation
nodes with column-pivoted QR and relative truncation, the standard
stabilization for these exponentially ill-conditioned systems.  One
factorization is shared by every right-hand side (poles and variation
data alike).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .geometry import (TWO_PI, Domain, MixedBoundary, _rotate_quarter,
                       fourier_interpolate)

INV_2PI = 1.0 / (2.0 * np.pi)


class GreensError(ValueError):
    """Invalid pole, boundary assignment, or topology."""


class GreensAccuracyError(RuntimeError):
    """Check-node residual exceeded the configured hard threshold."""


@dataclass(frozen=True)
class GreensConfig:
    n_charges: int = 128
    oversampling: float = 2.0
    charge_offset_outer: float = 1.6
    charge_offset_inner: float = 0.6
    check_nodes: int = 64
    truncation: float = 1e-13
    fail_threshold: float = 1e-4


# ---------------------------------------------------------------------------
# Log kernel
# ---------------------------------------------------------------------------

def fundamental_solution(points: np.ndarray, sources: np.ndarray) -> np.ndarray:
    """Gamma(p - s) = -log|p - s| / (2 pi), shape (N, K)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    sources = np.atleast_2d(np.asarray(sources, dtype=float))
    diff = points[:, None, :] - sources[None, :, :]
    r2 = np.einsum("nki,nki->nk", diff, diff)
    if np.any(r2 == 0.0):
        raise GreensError("evaluation point coincides with a source")
    return -0.5 * INV_2PI * np.log(r2)


def fundamental_gradient(points: np.ndarray, sources: np.ndarray) -> np.ndarray:
    """grad_p Gamma(p - s), shape (N, K, 2)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    sources = np.atleast_2d(np.asarray(sources, dtype=float))
    diff = points[:, None, :] - sources[None, :, :]
    r2 = np.einsum("nki,nki->nk", diff, diff)
    if np.any(r2 == 0.0):
        raise GreensError("evaluation point coincides with a source")
    return -INV_2PI * diff / r2[..., None]


def fundamental_hessian(points: np.ndarray, sources: np.ndarray) -> np.ndarray:
    """Second p-derivatives of Gamma(p - s), shape (N, K, 2, 2)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    sources = np.atleast_2d(np.asarray(sources, dtype=float))
    diff = points[:, None, :] - sources[None, :, :]
    r2 = np.einsum("nki,nki->nk", diff, diff)
    eye = np.eye(2)
    outer = np.einsum("nki,nkj->nkij", diff, diff)
    return INV_2PI * (2.0 * outer / r2[..., None, None] ** 2
                      - eye[None, None, :, :] / r2[..., None, None])


# ---------------------------------------------------------------------------
# Discretization (base or pushed through a deformation)
# ---------------------------------------------------------------------------

@dataclass
class ComponentDiscretization:
    """All per-component point sets the collocation solver needs."""

    dirichlet: bool
    nodes: np.ndarray       # grid nodes (M, 2)
    tangent: np.ndarray
    normal: np.ndarray
    weights: np.ndarray
    speed: np.ndarray
    thetas: np.ndarray
    colloc_nodes: np.ndarray
    colloc_normal: np.ndarray
    colloc_thetas: np.ndarray
    check_nodes: np.ndarray
    check_normal: np.ndarray
    charges: np.ndarray


def _polygon_centroid(nodes: np.ndarray) -> np.ndarray:
    rolled = np.roll(nodes, -1, axis=0)
    cross = nodes[:, 0] * rolled[:, 1] - nodes[:, 1] * rolled[:, 0]
    area = 0.5 * np.sum(cross)
    return np.sum((nodes + rolled) * cross[:, None], axis=0) / (6.0 * area)


def _winding_number(nodes: np.ndarray, point: np.ndarray) -> float:
    diff = nodes - point[None, :]
    ang = np.arctan2(diff[:, 1], diff[:, 0])
    dang = np.diff(np.concatenate([ang, ang[:1]]))
    dang = (dang + np.pi) % TWO_PI - np.pi
    return float(np.sum(dang) / TWO_PI)


def _frame_from_pushed(family, t, curve, thetas):
    base = curve.point(thetas)
    vel = curve.velocity(thetas)
    nodes = family.map(base, t)
    jac = family.map_jacobian(base, t)
    dx = np.einsum("nij,nj->ni", jac, vel)
    speed = np.hypot(dx[:, 0], dx[:, 1])
    if np.any(speed < 1e-10):
        raise GreensError("pushed boundary degenerates: |dT_t x'| ~ 0")
    tangent = dx / speed[:, None]
    return nodes, tangent, _rotate_quarter(tangent), speed


def discretize(domain: Domain, mixed: MixedBoundary,
               config: GreensConfig) -> list[ComponentDiscretization]:
    return discretize_pushed(domain, mixed, None, 0.0, config)


def discretize_pushed(domain: Domain, mixed: MixedBoundary, family, t: float,
                      config: GreensConfig) -> list[ComponentDiscretization]:
    """Discretize the (optionally deformed) boundary for collocation.

    With ``family=None`` or t=0 this is the base boundary.  Otherwise every
    point set is pushed through T_t, with frames from the deformation
    Jacobian; the charge rings are dilations of the pushed curves about
    their own centroids.
    """
    if len(mixed.kinds) != domain.n_components:
        raise GreensError("boundary assignment does not match component count")
    comps = []
    n_col = int(round(config.oversampling * config.n_charges))
    identity = family is None or t == 0.0
    for i, (curve, grid) in enumerate(zip(domain.curve.components, domain.grids)):
        th_col = TWO_PI * np.arange(n_col) / n_col
        th_chk = TWO_PI * (np.arange(config.check_nodes) + 0.5) / config.check_nodes
        th_chg = TWO_PI * (np.arange(config.n_charges) + 0.25) / config.n_charges
        factor = config.charge_offset_outer if i == 0 else config.charge_offset_inner
        if identity:
            nodes, tangent, normal, speed = (grid.nodes, grid.tangent,
                                             grid.normal, grid.speed)
            weights = grid.weights
            col_n, col_t, col_nu, _ = _frame_from_identity(curve, th_col)
            chk_n, _, chk_nu, _ = _frame_from_identity(curve, th_chk)
            centroid = curve.centroid()
            charges = curve.scaled_about(centroid, factor).point(th_chg)
        else:
            nodes, tangent, normal, speed = _frame_from_pushed(family, t, curve, grid.thetas)
            weights = (TWO_PI / grid.size) * speed
            col_n, col_t, col_nu, _ = _frame_from_pushed(family, t, curve, th_col)
            chk_n, _, chk_nu, _ = _frame_from_pushed(family, t, curve, th_chk)
            ring = family.map(curve.point(th_chg), t)
            centroid = _polygon_centroid(col_n)
            charges = centroid[None, :] + factor * (ring - centroid[None, :])
        comps.append(ComponentDiscretization(
            dirichlet=mixed.is_dirichlet(i), nodes=nodes, tangent=tangent,
            normal=normal, weights=weights, speed=speed, thetas=grid.thetas,
            colloc_nodes=col_n, colloc_normal=col_nu, colloc_thetas=th_col,
            check_nodes=chk_n, check_normal=chk_nu, charges=charges))
    return comps


def _frame_from_identity(curve, thetas):
    nodes = curve.point(thetas)
    dx = curve.velocity(thetas)
    speed = np.hypot(dx[:, 0], dx[:, 1])
    tangent = dx / speed[:, None]
    return nodes, tangent, _rotate_quarter(tangent), speed


# ---------------------------------------------------------------------------
# Harmonic fields and the shared-factorization solver
# ---------------------------------------------------------------------------

@dataclass
class HarmonicField:
    """Sum of log-kernels over exterior charges: smooth and harmonic inside."""

    charges: np.ndarray
    coefficients: np.ndarray

    def value(self, points: np.ndarray) -> np.ndarray:
        return fundamental_solution(points, self.charges) @ self.coefficients

    def gradient(self, points: np.ndarray) -> np.ndarray:
        return np.einsum("nki,k->ni",
                         fundamental_gradient(points, self.charges),
                         self.coefficients)

    def hessian(self, points: np.ndarray) -> np.ndarray:
        return np.einsum("nkij,k->nij",
                         fundamental_hessian(points, self.charges),
                         self.coefficients)


@dataclass
class SolveDiagnostics:
    residual: float
    per_component: tuple
    condition_estimate: float
    rank: int
    n_unknowns: int


class MixedSolver:
    """Shared collocation factorization for one (possibly deformed) boundary.

    Dirichlet rows match values, Neumann rows match normal derivatives; the
    pivoted-QR least-squares solve (LAPACK gelsy) truncates at the configured
    relative threshold.  All right-hand sides reuse the factorization data.
    """

    def __init__(self, components: list[ComponentDiscretization],
                 config: GreensConfig | None = None):
        self.config = config or GreensConfig()
        self.components = components
        if not any(c.dirichlet for c in components):
            raise GreensError("pure-Neumann boundary rejected: the unit point "
                              "source needs a Dirichlet component to absorb flux")
        self.charges = np.vstack([c.charges for c in components])
        rows = []
        for comp in components:
            if comp.dirichlet:
                rows.append(fundamental_solution(comp.colloc_nodes, self.charges))
            else:
                grad = fundamental_gradient(comp.colloc_nodes, self.charges)
                rows.append(np.einsum("nki,ni->nk", grad, comp.colloc_normal))
        self.matrix = np.vstack(rows)
        sv = scipy.linalg.svdvals(self.matrix)
        self.condition_estimate = float(sv[0] / max(sv[-1], 1e-300))
        self._sv_max = sv[0]

    def solve(self, rhs_per_component: list[np.ndarray],
              check_data=None) -> tuple[HarmonicField, SolveDiagnostics]:
        rhs = np.concatenate(rhs_per_component)
        coeff, _, rank, _ = scipy.linalg.lstsq(
            self.matrix, rhs, cond=self.config.truncation, lapack_driver="gelsy")
        fld = HarmonicField(self.charges, coeff)
        residuals = []
        if check_data is not None:
            for comp, data in zip(self.components, check_data):
                if comp.dirichlet:
                    pred = fld.value(comp.check_nodes)
                else:
                    pred = np.einsum("ni,ni->n", fld.gradient(comp.check_nodes),
                                     comp.check_normal)
                residuals.append(float(np.max(np.abs(pred - data))))
        total = max(residuals) if residuals else float("nan")
        diag = SolveDiagnostics(total, tuple(residuals), self.condition_estimate,
                                int(rank), self.matrix.shape[1])
        if residuals and total > self.config.fail_threshold:
            raise GreensAccuracyError(
                f"check-node residual {total:.3e} exceeds "
                f"{self.config.fail_threshold:.1e} "
                f"(condition estimate {self.condition_estimate:.2e})")
        return fld, diag

    # -- boundary data helpers ---------------------------------------------
    def interpolated_data(self, nodal_per_component: list[np.ndarray]):
        """Fourier-interpolate grid-nodal data to collocation and check nodes."""
        col, chk = [], []
        for comp, nodal in zip(self.components, nodal_per_component):
            col.append(fourier_interpolate(nodal, comp.colloc_thetas))
            th_chk = TWO_PI * (np.arange(comp.check_nodes.shape[0]) + 0.5) \
                / comp.check_nodes.shape[0]
            chk.append(fourier_interpolate(nodal, th_chk))
        return col, chk

    def solve_nodal(self, nodal_per_component: list[np.ndarray]):
        col, chk = self.interpolated_data(nodal_per_component)
        return self.solve(col, check_data=chk)


# ---------------------------------------------------------------------------
# Green's function evaluations
# ---------------------------------------------------------------------------

@dataclass
class GreensEval:
    """N(., y) = Gamma(. - y) + corrector, with nodal boundary traces."""

    pole: np.ndarray
    corrector: HarmonicField
    components: list[ComponentDiscretization]
    diagnostics: SolveDiagnostics

    def value(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (fundamental_solution(pts, self.pole[None, :])[:, 0]
                + self.corrector.value(pts))

    def gradient(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (fundamental_gradient(pts, self.pole[None, :])[:, 0, :]
                + self.corrector.gradient(pts))

    def hessian(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (fundamental_hessian(pts, self.pole[None, :])[:, 0, :, :]
                + self.corrector.hessian(pts))

    def corrector_value(self, points: np.ndarray) -> np.ndarray:
        return self.corrector.value(points)

    # nodal traces on component i
    def normal_trace(self, i: int) -> np.ndarray:
        comp = self.components[i]
        return np.einsum("ni,ni->n", self.gradient(comp.nodes), comp.normal)

    def tangential_trace(self, i: int) -> np.ndarray:
        comp = self.components[i]
        return np.einsum("ni,ni->n", self.gradient(comp.nodes), comp.tangent)

    def boundary_values(self, i: int) -> np.ndarray:
        return self.value(self.components[i].nodes)


def greens_traces(ev: GreensEval):
    """Nodal (dN/dnu on Dirichlet pieces, dN/ds on Neumann pieces) per component."""
    out = []
    for i, comp in enumerate(ev.components):
        out.append(ev.normal_trace(i) if comp.dirichlet else ev.tangential_trace(i))
    return out


def contains(components: list[ComponentDiscretization], point: np.ndarray) -> bool:
    w = sum(_winding_number(c.nodes, np.asarray(point, float)) for c in components)
    return abs(w - 1.0) < 0.5


class GreensSolver:
    """Green's-function factory for one domain and boundary assignment."""

    def __init__(self, domain: Domain, mixed: MixedBoundary,
                 config: GreensConfig | None = None, family=None, t: float = 0.0):
        self.domain = domain
        self.mixed = mixed
        self.config = config or GreensConfig()
        self.components = discretize_pushed(domain, mixed, family, t, self.config)
        self.solver = MixedSolver(self.components, self.config)

    def corrector_data(self, y: np.ndarray):
        col, chk = [], []
        for comp in self.components:
            if comp.dirichlet:
                col.append(-fundamental_solution(comp.colloc_nodes, y[None, :])[:, 0])
                chk.append(-fundamental_solution(comp.check_nodes, y[None, :])[:, 0])
            else:
                gc = fundamental_gradient(comp.colloc_nodes, y[None, :])[:, 0, :]
                gk = fundamental_gradient(comp.check_nodes, y[None, :])[:, 0, :]
                col.append(-np.einsum("ni,ni->n", gc, comp.colloc_normal))
                chk.append(-np.einsum("ni,ni->n", gk, comp.check_normal))
        return col, chk

    def solve(self, y) -> GreensEval:
        y = np.asarray(y, dtype=float)
        if not contains(self.components, y):
            raise GreensError(f"pole {y} is not interior to the domain")
        col, chk = self.corrector_data(y)
        fld, diag = self.solver.solve(col, check_data=chk)
        return GreensEval(y, fld, self.components, diag)

    def harmonic_bvp(self, nodal_data: list[np.ndarray]):
        """Solve the mixed BVP with grid-nodal Dirichlet/Neumann data."""
        fld, diag = self.solver.solve_nodal(nodal_data)
        return fld, diag


def solve_corrector(domain: Domain, mixed: MixedBoundary, y,
                    config: GreensConfig | None = None) -> GreensEval:
    return GreensSolver(domain, mixed, config).solve(y)


def perturbed_greens(domain: Domain, mixed: MixedBoundary, family, t: float, y,
                     config: GreensConfig | None = None) -> GreensEval:
    """Green's function of the deformed domain T_t(Omega); used by FD oracles."""
    return GreensSolver(domain, mixed, config, family=family, t=t).solve(y)


# ---------------------------------------------------------------------------
# Analytic disk oracle and representation check
# ---------------------------------------------------------------------------

def disk_greens(x: np.ndarray, y: np.ndarray, radius: float = 1.0) -> float:
    """Dirichlet Green's function of a centered disk (image-charge form)."""
    x = np.asarray(x, float) / radius
    y = np.asarray(y, float) / radius
    ay = np.hypot(y[0], y[1])
    if ay == 0.0:
        return float(-INV_2PI * np.log(np.hypot(*x)))
    y_star = y / ay ** 2
    return float(-INV_2PI * (np.log(np.linalg.norm(x - y))
                             - np.log(ay * np.linalg.norm(x - y_star))))


def disk_poisson_kernel(theta: np.ndarray, y: np.ndarray) -> np.ndarray:
    """-dN/dnu on the unit circle: the classical Poisson kernel."""
    b = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    d2 = np.sum((b - np.asarray(y, float)[None, :]) ** 2, axis=-1)
    return INV_2PI * (1.0 - float(np.dot(y, y))) / d2


@dataclass
class RepresentationReport:
    probes: np.ndarray
    reconstructed: np.ndarray
    exact: np.ndarray
    max_error: float


def _log_moment_boundary(components, y: np.ndarray) -> float:
    """Exact ``integral of Gamma(x - y) over the domain`` as a boundary integral.

    V(x) = (-log r/(4 pi) + 1/(8 pi)) (x - y) has divergence Gamma(x - y),
    so the volume moment equals the flux of V through the boundary, which is
    smooth for interior y and integrates spectrally.
    """
    total = 0.0
    for comp in components:
        diff = comp.nodes - y[None, :]
        r = np.hypot(diff[:, 0], diff[:, 1])
        v = (-np.log(r) * INV_2PI / 2.0 + INV_2PI / 4.0)[:, None] * diff
        total += float(np.dot(comp.weights, np.einsum("ni,ni->n", v, comp.normal)))
    return total


def representation_check(domain: Domain, mixed: MixedBoundary, z_spec, probes,
                         config: GreensConfig | None = None,
                         n_radial: int = 64, n_angular: int = 256) -> RepresentationReport:
    """Reconstruct a manufactured solution from its Green's-function representation.

    Given z with -Laplacian z = f, Dirichlet values on gamma^0, and flux on
    gamma^1, the solver's N must recover z(y) = (N(.,y), f)
    - <z, dN/dnu>_{gamma0} + <N(.,y), dz/dnu>_{gamma1} at every probe.

    The volume pairing is evaluated with singularity subtraction: the
    corrector part is smooth, the log kernel against f(y) reduces exactly to
    a boundary integral, and the remaining integrand vanishes at the pole.
    """
    solver = GreensSolver(domain, mixed, config)
    interior = domain.interior(n_radial, n_angular)
    hess = z_spec.hessian(interior.nodes, 0.0)
    f = -(hess[:, 0, 0] + hess[:, 1, 1])
    exact, recon = [], []
    for y in np.atleast_2d(np.asarray(probes, dtype=float)):
        ev = solver.solve(y)
        fy = float(-np.trace(z_spec.hessian(y[None, :], 0.0)[0]))
        gamma = fundamental_solution(interior.nodes, y[None, :])[:, 0]
        total = float(np.dot(interior.weights,
                             ev.corrector_value(interior.nodes) * f
                             + gamma * (f - fy)))
        total += fy * _log_moment_boundary(solver.components, y)
        for i, comp in enumerate(solver.components):
            if comp.dirichlet:
                phi = z_spec.value(comp.nodes, 0.0)
                total -= float(np.dot(comp.weights, phi * ev.normal_trace(i)))
            else:
                psi = np.einsum("ni,ni->n", z_spec.gradient(comp.nodes, 0.0),
                                comp.normal)
                total += float(np.dot(comp.weights, ev.value(comp.nodes) * psi))
        recon.append(total)
        exact.append(float(z_spec.value(y[None, :], 0.0)[0]))
    recon = np.asarray(recon)
    exact = np.asarray(exact)
    return RepresentationReport(np.atleast_2d(probes), recon, exact,
                                float(np.max(np.abs(recon - exact))))
