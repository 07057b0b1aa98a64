"""Smooth planar boundary geometry on spectral grids.

Curves are closed trigonometric-polynomial maps theta in [0, 2pi) -> R^2,
so all derivatives are analytic and equispaced trapezoid quadrature is
spectrally accurate.  The module provides boundary grids with frames and
curvature, tangential differentiation, constant-along-normal collar
extensions, and a blended radial quadrature for the enclosed region.

Conventions: the outer component runs counterclockwise and holes run
clockwise, so the unit normal nu = rot(tau) always points out of the
domain on the outer curve and into each hole.  Signed curvature is
positive on the boundary of a convex region, which makes div(nu) = kappa
for the tubular extension of the normal field.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * np.pi


class GeometryError(ValueError):
    """Raised for degenerate curves, collars, or unsupported topology."""


# ---------------------------------------------------------------------------
# Fourier differentiation / interpolation on equispaced periodic samples
# ---------------------------------------------------------------------------

def fourier_derivative(values: np.ndarray, order: int = 1) -> np.ndarray:
    """Differentiate equispaced periodic samples with respect to theta.

    Exact (to rounding) for trigonometric polynomials of degree < M/2.
    The Nyquist mode is zeroed for odd derivative orders, as usual for
    real even-length data.
    """
    values = np.asarray(values, dtype=float)
    m = values.shape[-1]
    coeff = np.fft.rfft(values)
    k = np.arange(coeff.shape[-1])
    coeff = coeff * (1j * k) ** order
    if order % 2 == 1 and m % 2 == 0:
        coeff[..., -1] = 0.0
    return np.fft.irfft(coeff, n=m)


def fourier_interpolate(values: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of periodic samples.

    ``values`` are samples at theta_j = 2*pi*j/M.  Spectrally accurate for
    analytic periodic data; exact for band-limited data of degree < M/2.
    """
    values = np.asarray(values, dtype=float)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    m = values.shape[-1]
    coeff = np.fft.rfft(values) / m
    k = np.arange(1, coeff.shape[-1] - (1 if m % 2 == 0 else 0))
    kt = np.outer(theta, k)
    out = np.full(theta.shape, coeff[0].real)
    out += 2.0 * (np.cos(kt) @ coeff[1:len(k) + 1].real
                  - np.sin(kt) @ coeff[1:len(k) + 1].imag)
    if m % 2 == 0:
        out += coeff[-1].real * np.cos((m // 2) * theta)
    return out


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------

def _rotate_quarter(vec: np.ndarray) -> np.ndarray:
    """Map (a, b) -> (b, -a); sends the tangent of a ccw curve to the outward normal."""
    return np.stack([vec[..., 1], -vec[..., 0]], axis=-1)


def _cross2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@dataclass(frozen=True)
class FourierCurve:
    """Closed curve x(theta) = c0 + sum_k a_k cos(k theta) + b_k sin(k theta).

    ``cos_coeffs``/``sin_coeffs`` have shape (K+1, 2); row k holds the
    degree-k coefficient pair (the k=0 sine row is ignored).
    """

    cos_coeffs: np.ndarray
    sin_coeffs: np.ndarray

    def __post_init__(self):
        cos_c = np.atleast_2d(np.asarray(self.cos_coeffs, dtype=float))
        sin_c = np.atleast_2d(np.asarray(self.sin_coeffs, dtype=float))
        if cos_c.shape != sin_c.shape or cos_c.shape[1] != 2:
            raise GeometryError("coefficient arrays must both have shape (K+1, 2)")
        object.__setattr__(self, "cos_coeffs", cos_c)
        object.__setattr__(self, "sin_coeffs", sin_c)

    def _eval(self, theta: np.ndarray, order: int) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        k = np.arange(self.cos_coeffs.shape[0])
        kt = np.multiply.outer(theta, k)
        # d^n/dtheta^n of cos(k t), sin(k t)
        phase = 0.5 * np.pi * order
        cos_part = np.cos(kt + phase) * k ** order
        sin_part = np.sin(kt + phase) * k ** order
        return cos_part @ self.cos_coeffs + sin_part @ self.sin_coeffs

    def point(self, theta):
        return self._eval(theta, 0)

    def velocity(self, theta):
        return self._eval(theta, 1)

    def acceleration(self, theta):
        return self._eval(theta, 2)

    def reversed(self) -> "FourierCurve":
        """Same trace with opposite orientation (theta -> -theta)."""
        return FourierCurve(self.cos_coeffs, -self.sin_coeffs)

    def scaled_about(self, center: np.ndarray, factor: float) -> "FourierCurve":
        """Dilate the curve about ``center`` by ``factor`` (used for charge rings)."""
        cos_c = self.cos_coeffs * factor
        sin_c = self.sin_coeffs * factor
        cos_c[0] = center + factor * (self.cos_coeffs[0] - center)
        return FourierCurve(cos_c, sin_c)

    def signed_area(self, samples: int = 512) -> float:
        theta = TWO_PI * np.arange(samples) / samples
        x = self.point(theta)
        dx = self.velocity(theta)
        return 0.5 * np.sum(_cross2(x, dx)) * TWO_PI / samples

    def centroid(self, samples: int = 512) -> np.ndarray:
        """Area centroid of the enclosed region (orientation independent)."""
        theta = TWO_PI * np.arange(samples) / samples
        x = self.point(theta)
        dx = self.velocity(theta)
        area = 0.5 * np.sum(_cross2(x, dx)) * TWO_PI / samples
        mx = np.sum(_cross2(x, dx)[:, None] * x, axis=0) * TWO_PI / samples / 3.0
        return mx / area


def circle(radius: float = 1.0, center=(0.0, 0.0)) -> FourierCurve:
    cos_c = np.array([[center[0], center[1]], [radius, 0.0]])
    sin_c = np.array([[0.0, 0.0], [0.0, radius]])
    return FourierCurve(cos_c, sin_c)


def ellipse(a: float, b: float, center=(0.0, 0.0)) -> FourierCurve:
    cos_c = np.array([[center[0], center[1]], [a, 0.0]])
    sin_c = np.array([[0.0, 0.0], [0.0, b]])
    return FourierCurve(cos_c, sin_c)


def star(r0: float = 1.0, eps: float = 0.2, k: int = 3) -> FourierCurve:
    """r(theta) = r0 (1 + eps cos(k theta)), a smooth star-shaped curve.

    The radial modulation folds into a finite trigonometric polynomial via
    product-to-sum identities, so derivatives remain exact.
    """
    if k < 1:
        raise GeometryError("star frequency k must be >= 1")
    n = k + 1
    cos_c = np.zeros((n + 1, 2))
    sin_c = np.zeros((n + 1, 2))
    cos_c[1, 0] = r0
    sin_c[1, 1] = r0
    # r0*eps*cos(k t)*(cos t, sin t)
    cos_c[k + 1, 0] += 0.5 * r0 * eps
    cos_c[abs(k - 1), 0] += 0.5 * r0 * eps
    sin_c[k + 1, 1] += 0.5 * r0 * eps
    if k - 1 >= 1:
        sin_c[k - 1, 1] -= 0.5 * r0 * eps
    return FourierCurve(cos_c, sin_c)


def fourier_curve(cos_coeffs, sin_coeffs) -> FourierCurve:
    """Custom curve from explicit Fourier coefficient tables."""
    return FourierCurve(np.asarray(cos_coeffs, float), np.asarray(sin_coeffs, float))


@dataclass(frozen=True)
class BoundaryCurve:
    """Oriented multi-component boundary: one outer curve plus optional holes."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise GeometryError("boundary needs at least one component")
        outer = comps[0].signed_area()
        if outer <= 0:
            raise GeometryError("outer component must be counterclockwise")
        for i, comp in enumerate(comps[1:], start=1):
            if comp.signed_area() >= 0:
                raise GeometryError(f"hole component {i} must be clockwise")
        object.__setattr__(self, "components", comps)

    @property
    def n_components(self) -> int:
        return len(self.components)

    def area(self) -> float:
        return sum(c.signed_area() for c in self.components)


def disk(radius: float = 1.0, center=(0.0, 0.0)) -> BoundaryCurve:
    return BoundaryCurve((circle(radius, center),))


def elliptical_domain(a: float, b: float, center=(0.0, 0.0)) -> BoundaryCurve:
    return BoundaryCurve((ellipse(a, b, center),))


def star_domain(r0: float = 1.0, eps: float = 0.2, k: int = 3) -> BoundaryCurve:
    return BoundaryCurve((star(r0, eps, k),))


def annulus(r_inner: float, r_outer: float, center=(0.0, 0.0)) -> BoundaryCurve:
    if not 0 < r_inner < r_outer:
        raise GeometryError("annulus needs 0 < r_inner < r_outer")
    return BoundaryCurve((circle(r_outer, center), circle(r_inner, center).reversed()))


# ---------------------------------------------------------------------------
# Boundary grids
# ---------------------------------------------------------------------------

MIN_SPEED = 1e-10


@dataclass(frozen=True)
class BoundaryGrid:
    """Equispaced-in-theta nodes of one component with frame and curvature.

    weights are trapezoid-in-theta times |x'(theta)|, so sum(weights) is the
    arclength to spectral accuracy.
    """

    curve: FourierCurve
    thetas: np.ndarray
    nodes: np.ndarray        # (M, 2)
    speed: np.ndarray        # |x'(theta_j)|
    weights: np.ndarray
    tangent: np.ndarray      # (M, 2), unit
    normal: np.ndarray       # (M, 2), unit, rot(tangent)
    curvature: np.ndarray    # signed

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    def arclength(self) -> float:
        return float(np.sum(self.weights))

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))

    def turning_number(self) -> float:
        return float(np.dot(self.weights, self.curvature) / TWO_PI)


def build_grid(curve: FourierCurve, m: int) -> BoundaryGrid:
    """Sample one curve component at M equispaced parameters.

    M must be a power of two with M >= 16.  Rejects parameterizations whose
    speed |x'| collapses anywhere on the grid.
    """
    if m < 16 or (m & (m - 1)) != 0:
        raise GeometryError("node count must be a power of two >= 16")
    thetas = TWO_PI * np.arange(m) / m
    nodes = curve.point(thetas)
    dx = curve.velocity(thetas)
    ddx = curve.acceleration(thetas)
    speed = np.hypot(dx[:, 0], dx[:, 1])
    bad = np.where(speed < MIN_SPEED)[0]
    if bad.size:
        raise GeometryError(f"degenerate parameterization: |x'| ~ 0 at node {bad[0]}")
    tangent = dx / speed[:, None]
    normal = _rotate_quarter(tangent)
    curvature = _cross2(dx, ddx) / speed ** 3
    weights = (TWO_PI / m) * speed
    return BoundaryGrid(curve, thetas, nodes, speed, weights, tangent, normal, curvature)


def tangential_grad(grid: BoundaryGrid, values: np.ndarray) -> np.ndarray:
    """Arclength derivative df/ds of nodal values on one component."""
    return fourier_derivative(values) / grid.speed


def tangential_laplacian(grid: BoundaryGrid, values: np.ndarray) -> np.ndarray:
    """Second arclength derivative d^2 f/ds^2 (tangential Laplacian in the plane)."""
    return tangential_grad(grid, tangential_grad(grid, values))


def second_fundamental_form(grid: BoundaryGrid, xi, eta, j: int) -> float:
    """Curvature-weighted tangential bilinear form kappa (xi.tau)(eta.tau) at node j.

    The normal direction is in the kernel; on the unit circle the value on a
    pair of unit tangents is +1.
    """
    tau = grid.tangent[j]
    return float(grid.curvature[j] * np.dot(xi, tau) * np.dot(eta, tau))


# ---------------------------------------------------------------------------
# Collar extension (tubular coordinates)
# ---------------------------------------------------------------------------

@dataclass
class CollarExtension:
    """Constant-along-normal extension of nodal boundary data.

    Points p = x(theta) + n*nu(theta) with |n| <= half_width are mapped back
    to theta by Newton's method on the nearest-point condition; the extended
    scalar reproduces the trigonometric interpolant of the nodal values.
    The normal/curvature fields follow the closed tubular formulas, e.g.
    div(nu~) = kappa / (1 + n*kappa).
    """

    grid: BoundaryGrid
    values: np.ndarray
    half_width: float

    def __post_init__(self):
        kmax = float(np.max(np.abs(self.grid.curvature)))
        if self.half_width * kmax >= 0.5:
            raise GeometryError(
                f"collar half-width {self.half_width} too wide for max curvature {kmax}")

    # -- projection -------------------------------------------------------
    def project(self, points: np.ndarray):
        """Nearest-point parameters and signed normal offsets for query points."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        curve = self.grid.curve
        d2 = ((points[:, None, :] - self.grid.nodes[None, :, :]) ** 2).sum(axis=2)
        theta = self.grid.thetas[np.argmin(d2, axis=1)].copy()
        for _ in range(40):
            x = curve.point(theta)
            dx = curve.velocity(theta)
            ddx = curve.acceleration(theta)
            diff = points - x
            f = np.einsum("ij,ij->i", diff, dx)
            fp = np.einsum("ij,ij->i", diff, ddx) - np.einsum("ij,ij->i", dx, dx)
            step = f / fp
            theta -= step
            if np.max(np.abs(step)) < 1e-14:
                break
        x = curve.point(theta)
        dx = curve.velocity(theta)
        speed = np.hypot(dx[:, 0], dx[:, 1])
        nu = _rotate_quarter(dx / speed[:, None])
        offset = np.einsum("ij,ij->i", points - x, nu)
        if np.any(np.abs(offset) > self.half_width * (1 + 1e-9)):
            raise GeometryError("query point outside the collar")
        return theta, offset

    def frame(self, points: np.ndarray):
        """(theta*, offset, tangent, normal, curvature) at the projected feet."""
        theta, offset = self.project(points)
        dx = self.grid.curve.velocity(theta)
        ddx = self.grid.curve.acceleration(theta)
        speed = np.hypot(dx[:, 0], dx[:, 1])
        tau = dx / speed[:, None]
        nu = _rotate_quarter(tau)
        kappa = _cross2(dx, ddx) / speed ** 3
        return theta, offset, tau, nu, kappa

    # -- evaluators -------------------------------------------------------
    def evaluate(self, points: np.ndarray) -> np.ndarray:
        theta, _ = self.project(points)
        return fourier_interpolate(self.values, theta)

    def normal_derivative(self, points: np.ndarray) -> np.ndarray:
        """d/dn of the extension: identically zero by construction."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        self.project(points)
        return np.zeros(points.shape[0])

    def extended_normal(self, points: np.ndarray) -> np.ndarray:
        _, _, _, nu, _ = self.frame(points)
        return nu

    def normal_divergence(self, points: np.ndarray) -> np.ndarray:
        """div of the extended unit normal: kappa/(1 + n*kappa) in tubular coordinates."""
        _, offset, _, _, kappa = self.frame(points)
        return kappa / (1.0 + offset * kappa)

    def extended_curvature(self, points: np.ndarray) -> np.ndarray:
        """Curvature of the offset curve through each point, kappa/(1 + n*kappa)."""
        return self.normal_divergence(points)

    def gradient(self, points: np.ndarray) -> np.ndarray:
        """Full spatial gradient of the extension: (df/ds) tau / (1 + n*kappa)."""
        theta, offset, tau, _, kappa = self.frame(points)
        dtheta = fourier_interpolate(fourier_derivative(self.values), theta)
        dx = self.grid.curve.velocity(theta)
        speed = np.hypot(dx[:, 0], dx[:, 1])
        dds = dtheta / speed / (1.0 + offset * kappa)
        return dds[:, None] * tau

    def scaled_field_divergence(self, points: np.ndarray, field: np.ndarray,
                                field_divergence: np.ndarray) -> np.ndarray:
        """div(f~ V) for an ambient field V given by values and divergence."""
        grad = self.gradient(points)
        return (np.einsum("ni,ni->n", grad, np.atleast_2d(field))
                + self.evaluate(points) * field_divergence)


def collar_extend(grid: BoundaryGrid, values: np.ndarray,
                  half_width: float | None = None) -> CollarExtension:
    """Build the constant-along-normal collar extension of nodal data."""
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.size,):
        raise GeometryError("nodal data must match the grid size")
    if half_width is None:
        kmax = max(float(np.max(np.abs(grid.curvature))), 1e-12)
        half_width = 0.4 / kmax
    return CollarExtension(grid, values, half_width)


# ---------------------------------------------------------------------------
# Interior quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InteriorQuadrature:
    """Nodes/weights over the enclosed region with a polynomial exactness report."""

    nodes: np.ndarray    # (K, 2)
    weights: np.ndarray  # (K,)
    exactness: dict = field(default_factory=dict, compare=False)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))

    @property
    def size(self) -> int:
        return self.nodes.shape[0]


def _blended_rule(curve: BoundaryCurve, n_radial: int, n_angular: int):
    from numpy.polynomial.legendre import leggauss
    gl_x, gl_w = leggauss(n_radial)
    rho = 0.5 * (gl_x + 1.0)
    rho_w = 0.5 * gl_w
    theta = TWO_PI * np.arange(n_angular) / n_angular
    theta_w = TWO_PI / n_angular

    outer = curve.components[0]
    xo = outer.point(theta)
    dxo = outer.velocity(theta)
    if curve.n_components == 1:
        center = outer.centroid()
        inner_pts = np.broadcast_to(center, xo.shape)
        inner_vel = np.zeros_like(dxo)
    else:
        inner = curve.components[1].reversed()  # counterclockwise copy for blending
        inner_pts = inner.point(theta)
        inner_vel = inner.velocity(theta)

    # q(rho, theta) = (1-rho)*inner + rho*outer
    pts = (1 - rho)[:, None, None] * inner_pts[None] + rho[:, None, None] * xo[None]
    d_rho = xo - inner_pts
    d_theta = (1 - rho)[:, None, None] * inner_vel[None] + rho[:, None, None] * dxo[None]
    jac = d_rho[None, :, 0] * d_theta[:, :, 1] - d_rho[None, :, 1] * d_theta[:, :, 0]
    if np.min(jac) <= 0:
        raise GeometryError("blended map is not injective; region is not star-like enough")
    w = rho_w[:, None] * theta_w * jac
    return pts.reshape(-1, 2), w.reshape(-1)


def interior_quadrature(curve: BoundaryCurve, n_radial: int = 48,
                        n_angular: int = 192) -> InteriorQuadrature:
    """Quadrature over the region enclosed by ``curve``.

    Supports a single star-like component or one outer curve with one hole
    (radial blending between the two).  More holes are rejected.
    """
    if curve.n_components > 2:
        raise GeometryError("interior quadrature supports at most one hole")
    nodes, weights = _blended_rule(curve, n_radial, n_angular)
    fine_nodes, fine_weights = _blended_rule(curve, 2 * n_radial, 2 * n_angular)

    report = {"area_vs_curve": abs(float(np.sum(weights)) - curve.area())}
    for label, px, py in (("x", 1, 0), ("y", 0, 1), ("x2", 2, 0), ("xy", 1, 1),
                          ("y2", 0, 2), ("x3", 3, 0), ("x2y", 2, 1)):
        coarse = np.dot(weights, nodes[:, 0] ** px * nodes[:, 1] ** py)
        fine = np.dot(fine_weights, fine_nodes[:, 0] ** px * fine_nodes[:, 1] ** py)
        report[label] = abs(coarse - fine)
    return InteriorQuadrature(nodes, weights, report)


# ---------------------------------------------------------------------------
# Mixed boundary assignment and domain bundle
# ---------------------------------------------------------------------------

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


@dataclass(frozen=True)
class MixedBoundary:
    """Whole-component assignment of each boundary piece to Dirichlet or Neumann."""

    kinds: tuple

    def __post_init__(self):
        kinds = tuple(self.kinds)
        if not kinds:
            raise GeometryError("empty boundary assignment")
        for k in kinds:
            if k not in (DIRICHLET, NEUMANN):
                raise GeometryError(f"unknown boundary kind {k!r}")
        if DIRICHLET not in kinds:
            raise GeometryError(
                "at least one Dirichlet component is required: a point source forces "
                "total boundary flux -1, which an all-Neumann boundary cannot absorb")
        object.__setattr__(self, "kinds", kinds)

    def is_dirichlet(self, i: int) -> bool:
        return self.kinds[i] == DIRICHLET


def all_dirichlet(n_components: int) -> MixedBoundary:
    return MixedBoundary((DIRICHLET,) * n_components)


class Domain:
    """A boundary curve with grids on every component and cached interior rules."""

    def __init__(self, curve: BoundaryCurve, m: int = 128):
        self.curve = curve
        self.m = m
        self.grids = tuple(build_grid(c, m) for c in curve.components)
        self._interior_cache: dict = {}

    @property
    def n_components(self) -> int:
        return self.curve.n_components

    def interior(self, n_radial: int = 48, n_angular: int = 192) -> InteriorQuadrature:
        key = (n_radial, n_angular)
        if key not in self._interior_cache:
            self._interior_cache[key] = interior_quadrature(self.curve, n_radial, n_angular)
        return self._interior_cache[key]

    def boundary_integral(self, nodal_per_component) -> float:
        return sum(g.integrate(v) for g, v in zip(self.grids, nodal_per_component))

    def refine(self, factor: int = 2) -> "Domain":
        return Domain(self.curve, self.m * factor)


@lru_cache(maxsize=None)
def _named_curve_cache():
    return {}


def make_curve(name: str, **params) -> BoundaryCurve:
    """Curve library lookup used by config files."""
    if name == "circle":
        return disk(params.get("r", 1.0), tuple(params.get("center", (0.0, 0.0))))
    if name == "ellipse":
        return elliptical_domain(params["a"], params["b"],
                                 tuple(params.get("center", (0.0, 0.0))))
    if name == "star":
        return star_domain(params.get("r0", 1.0), params.get("eps", 0.2),
                           int(params.get("k", 3)))
    if name == "annulus":
        return annulus(params["r_in"], params["r_out"],
                       tuple(params.get("center", (0.0, 0.0))))
    if name == "fourier":
        comps = []
        for comp in params["components"]:
            comps.append(fourier_curve(comp["cos"], comp["sin"]))
        return BoundaryCurve(tuple(comps))
    raise GeometryError(f"unknown curve {name!r}")
