"""Built-in verification case registry.

Every case evaluates one formula against declared oracles and reports a
single scalar ``err`` judged against a fixed tolerance (``mode="le"``) or a
convergence slope judged against a floor (``mode="ge"``).  Randomized cases
derive their generator deterministically from the global seed and the case
id, so reports are reproducible regardless of worker count or ordering.
"""

from __future__ import annotations

import time
import zlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import geometry as geo
from . import greens as gr
from . import hadamard as hd
from . import liouville as lv
from . import perturbation as pert
from ._fd import derivative_ladder
from .integrands import (IntegrandSpec, VectorIntegrandSpec,
                         normal_scaled_integrand, random_polynomial_integrand)
from .report import ReportRow

TWO_PI = 2.0 * np.pi


@dataclass
class CaseSettings:
    seed: int = 0
    m: int = 128
    n_charges: int = 128
    overrides: dict = field(default_factory=dict)

    def rng(self, case_id: str) -> np.random.Generator:
        return np.random.default_rng(int(self.seed) * 2654435761 % 2 ** 31
                                     + zlib.crc32(case_id.encode()))

    def greens_config(self) -> gr.GreensConfig:
        return gr.GreensConfig(n_charges=self.n_charges)


@dataclass(frozen=True)
class Case:
    case_id: str
    suite: str
    formula: str
    tolerance: float
    runner: Callable
    mode: str = "le"
    description: str = ""

    def run(self, settings: CaseSettings) -> ReportRow:
        start = time.perf_counter()
        try:
            result = self.runner(settings, self)
        except Exception as exc:  # recorded, surfaced by the CLI exit code
            return ReportRow(self.case_id, self.suite, self.formula,
                             float("nan"), {}, float("nan"), self.tolerance,
                             self.mode, False, None, {},
                             time.perf_counter() - start,
                             error=f"{type(exc).__name__}: {exc}")
        value, oracles, err = result[0], result[1], result[2]
        observed = result[3] if len(result) > 3 else None
        details = result[4] if len(result) > 4 else {}
        passed = err <= self.tolerance if self.mode == "le" else err >= self.tolerance
        return ReportRow(self.case_id, self.suite, self.formula, float(value),
                         oracles, float(err), self.tolerance, self.mode,
                         bool(passed), observed, details,
                         time.perf_counter() - start)


def _report_from_variation(rep: lv.VariationReport):
    observed = rep.fd.observed_order if rep.fd is not None else None
    details = {}
    if rep.fd is not None:
        details = {"ladder": list(rep.fd.ladder), "estimates": list(rep.fd.estimates)}
    return rep.formula_value, rep.oracles, rep.rel_err, observed, details


# ---------------------------------------------------------------------------
# jacobian suite
# ---------------------------------------------------------------------------

def _jacobian_dilation_det(st, case):
    fam = pert.TaylorFamily(pert.dilation())
    pts = np.array([[0.3, -0.2], [0.7, 0.5], [-0.4, 0.1]])
    d1, d2 = pert.det_derivatives(fam, pts)
    err = max(np.max(np.abs(d1 - 2.0)), np.max(np.abs(d2 - 2.0)))
    return 2.0, {"analytic": 2.0}, err


def _jacobian_rotation_det(st, case):
    fam = pert.FlowFamily(pert.rotation())
    pts = np.array([[0.3, -0.2], [0.7, 0.5]])
    d1, d2 = pert.det_derivatives(fam, pts)
    err = max(np.max(np.abs(d1)), np.max(np.abs(d2)))
    return 0.0, {"analytic": 0.0}, err


def _fd_det(fam, x0, h=0.02):
    def det(t):
        j = fam.map_jacobian(x0, t)[0]
        return j[0, 0] * j[1, 1] - j[0, 1] * j[1, 0]

    d1 = derivative_ladder(det, order=1, ladder=(h, h / 2)).value
    d2 = derivative_ladder(det, order=2, ladder=(h, h / 2)).value
    return d1, d2


def _jacobian_poly_det_fd(st, case):
    rng = st.rng(case.case_id)
    worst = 0.0
    for _ in range(3):
        fam = pert.FlowFamily(pert.random_polynomial_field(rng, degree=2), step=2e-3)
        x0 = rng.uniform(-0.5, 0.5, size=(1, 2))
        a1, a2 = pert.det_derivatives(fam, x0)
        f1, f2 = _fd_det(fam, x0)
        worst = max(worst, abs(a1[0] - f1), abs(a2[0] - f2))
    return a1[0], {"fd_first": f1, "fd_second": f2}, worst


def _jacobian_dilation_inverse(st, case):
    fam = pert.TaylorFamily(pert.dilation())
    pts = np.array([[0.3, -0.2]])
    j1, j2 = pert.inverse_jacobian_derivatives(fam, pts)
    err = max(np.max(np.abs(j1[0] + np.eye(2))), np.max(np.abs(j2[0] - 2 * np.eye(2))))
    return -1.0, {"analytic": -1.0}, err


def _jacobian_poly_inverse_fd(st, case):
    rng = st.rng(case.case_id)
    worst = 0.0
    for _ in range(3):
        fam = pert.FlowFamily(pert.random_polynomial_field(rng, degree=2), step=2e-3)
        x0 = rng.uniform(-0.5, 0.5, size=(1, 2))
        a1, a2 = pert.inverse_jacobian_derivatives(fam, x0)
        for i in range(2):
            for j in range(2):
                def entry(t):
                    return np.linalg.inv(fam.map_jacobian(x0, t)[0])[i, j]
                f1 = derivative_ladder(entry, order=1, ladder=(0.02, 0.01)).value
                f2 = derivative_ladder(entry, order=2, ladder=(0.02, 0.01)).value
                worst = max(worst, abs(a1[0, i, j] - f1), abs(a2[0, i, j] - f2))
    return 0.0, {"fd": 0.0}, worst


def _jacobian_minor(st, case):
    rng = st.rng(case.case_id)
    min_slope = np.inf
    for _ in range(20):
        d = int(rng.integers(2, 5))
        ds = rng.integers(-3, 4, size=(d, d)).astype(float)
        dr = rng.integers(-3, 4, size=(d, d)).astype(float)
        i = int(rng.integers(0, d))
        j = int(rng.integers(0, d))
        rep = pert.minor_expansion_check(ds, dr, i, j)
        min_slope = min(min_slope, rep.slope)
    return min_slope, {"threshold": 2.5}, min_slope


def _jacobian_flow_acceleration(st, case):
    dom = geo.Domain(geo.elliptical_domain(2.0, 1.0), m=64)
    fam = pert.FlowFamily(pert.PolynomialField({(0, 2, 0): 1.0, (1, 1, 1): 1.0}),
                          step=1e-3)
    grid = dom.grids[0]
    analytic = pert.advective_normal_component(pert.boundary_data(fam, grid), grid)

    def velocity_along(t):
        return fam.field(fam.map(grid.nodes, t))

    # vector-valued central difference with Richardson, done manually
    h = 1e-2
    est = []
    for step in (h, h / 2):
        d = (-velocity_along(2 * step) + 8 * velocity_along(step)
             - 8 * velocity_along(-step) + velocity_along(-2 * step)) / (12 * step)
        est.append(d)
    rich = est[1] + (est[1] - est[0]) / (2 ** 4 - 1)
    rho2_kinematic = np.einsum("ni,ni->n", rich, grid.normal)
    err = float(np.max(np.abs(rho2_kinematic - analytic)))
    return float(np.max(np.abs(analytic))), {"kinematic_fd": float(np.max(np.abs(rho2_kinematic)))}, err


# ---------------------------------------------------------------------------
# liouville suite
# ---------------------------------------------------------------------------

def _domain(st, kind: str) -> geo.Domain:
    if kind == "disk":
        return geo.Domain(geo.disk(1.0), m=st.m)
    if kind == "ellipse":
        return geo.Domain(geo.elliptical_domain(2.0, 1.0), m=st.m)
    if kind == "star":
        return geo.Domain(geo.star_domain(1.0, 0.2, 3), m=st.m)
    if kind == "annulus":
        return geo.Domain(geo.annulus(0.5, 1.0), m=st.m)
    raise ValueError(kind)


def _liouville_case(op, domain, family, integrand, analytic=None):
    def runner(st, case):
        rep = op(_domain(st, domain), family(), integrand(),
                 analytic=analytic() if analytic is not None else None)
        return _report_from_variation(rep)

    return runner


def _liouville_random(order: int, index: int):
    domains = ["disk", "ellipse", "star"]
    kinds = ["volume", "area", "flux"]

    def runner(st, case):
        rng = st.rng(case.case_id)
        dom = _domain(st, domains[index % 3])
        if index % 2 == 0:
            family = pert.FlowFamily(pert.random_polynomial_field(rng, degree=2,
                                                                  scale=0.25))
        else:
            family = pert.TaylorFamily(pert.random_polynomial_field(rng, degree=2, scale=0.3),
                                       pert.random_polynomial_field(rng, degree=2, scale=0.3))
        kind = kinds[index % 3]
        if kind == "flux":
            e1 = "x1**2*0.4 + x2*0.3 + 0.2*t*x1"
            e2 = "x1*x2*0.5 - 0.1*x1 + 0.3*t"
            a = VectorIntegrandSpec.from_expressions(e1, e2)
            op = lv.boundary_flux_first if order == 1 else lv.boundary_flux_second
            rep = op(dom, family, a)
        else:
            c = random_polynomial_integrand(rng, degree=2, time_degree=2)
            ops = {("volume", 1): lv.first_volume, ("volume", 2): lv.second_volume,
                   ("area", 1): lv.first_area, ("area", 2): lv.second_area}
            rep = ops[(kind, order)](dom, family, c)
        return _report_from_variation(rep)

    return runner


def _liouville_consistency(st, case):
    dom = _domain(st, "disk")
    c = IntegrandSpec.from_expression("1 + 0.3*x1 + 0.2*x2**2")
    fam = pert.TaylorFamily(pert.PolynomialField({(0, 1, 0): 0.5, (0, 0, 1): -0.2,
                                                  (1, 0, 0): 0.3, (1, 1, 1): 0.4}))
    collar = geo.collar_extend(dom.grids[0], np.ones(dom.grids[0].size))
    a = normal_scaled_integrand(c, collar)
    r1 = lv.first_area(dom, fam, c, skip_fd=True)
    r2 = lv.boundary_flux_first(dom, fam, a, skip_fd=True)
    err = abs(r1.formula_value - r2.formula_value)
    return r1.formula_value, {"flux_route": r2.formula_value}, err


def _liouville_nu_dot(st, case):
    dom = _domain(st, "disk")
    fam = pert.TaylorFamily(pert.translation(1.0, 0.0))
    grid = dom.grids[0]
    nd = lv.nu_dot(dom, fam)[0]
    exact = np.sin(grid.thetas)[:, None] * grid.tangent
    err = float(np.max(np.abs(nd - exact)))
    fd = lv.nu_dot_fd(dom, fam)[0]
    fd_err = float(np.max(np.abs(nd - fd)))
    ortho = float(np.max(np.abs(np.einsum("ni,ni->n", nd, grid.normal))))
    return float(np.max(np.abs(nd))), {"fd_max_gap": fd_err, "normal_component": ortho}, max(err, ortho)


# ---------------------------------------------------------------------------
# greens suite
# ---------------------------------------------------------------------------

def _greens_disk_analytic(st, case):
    dom = _domain(st, "disk")
    solver = gr.GreensSolver(dom, geo.all_dirichlet(1), st.greens_config())
    y = np.array([0.3, 0.0])
    ev = solver.solve(y)
    rng = st.rng(case.case_id)
    worst, count = 0.0, 0
    while count < 20:
        r = 0.85 * np.sqrt(rng.uniform())
        a = rng.uniform(0, TWO_PI)
        x = np.array([r * np.cos(a), r * np.sin(a)])
        if np.linalg.norm(x - y) < 0.1:
            continue
        worst = max(worst, abs(ev.value(x)[0] - gr.disk_greens(x, y)))
        count += 1
    return float(ev.value(np.array([[0.0, 0.5]]))[0]), {"analytic_probes": 20}, worst


def _greens_poisson_kernel(st, case):
    dom = _domain(st, "disk")
    solver = gr.GreensSolver(dom, geo.all_dirichlet(1), st.greens_config())
    y = np.array([0.3, 0.0])
    ev = solver.solve(y)
    kernel = gr.disk_poisson_kernel(dom.grids[0].thetas, y)
    err = float(np.max(np.abs(-ev.normal_trace(0) - kernel) / kernel))
    return float(kernel.max()), {"classical_kernel": float(kernel.max())}, err


def _interior_probe(rng, kind: str) -> np.ndarray:
    """Random probe at least 0.15 from every boundary component."""
    r = rng.uniform(0.66, 0.84) if kind == "annulus" else 0.85 * np.sqrt(rng.uniform())
    a = rng.uniform(0.0, TWO_PI)
    return np.array([r * np.cos(a), r * np.sin(a)])


def _greens_symmetry(st, case):
    worst = 0.0
    for kind, mixedb in (("disk", geo.all_dirichlet(1)),
                         ("annulus", geo.MixedBoundary(("dirichlet", "neumann")))):
        dom = _domain(st, kind)
        solver = gr.GreensSolver(dom, mixedb, st.greens_config())
        rng = st.rng(case.case_id + kind)
        pairs = 0
        while pairs < 10:
            x = _interior_probe(rng, kind)
            y = _interior_probe(rng, kind)
            if np.linalg.norm(x - y) < 0.2:
                continue
            evx = solver.solve(x)
            evy = solver.solve(y)
            worst = max(worst, abs(evx.value(y)[0] - evy.value(x)[0]))
            pairs += 1
    return 0.0, {"pairs": 20}, worst


def _greens_annulus_flux(st, case):
    dom = _domain(st, "annulus")
    solver = gr.GreensSolver(dom, geo.MixedBoundary(("dirichlet", "neumann")),
                             st.greens_config())
    ev = solver.solve(np.array([0.0, 0.72]))
    flux = float(np.dot(solver.components[0].weights, ev.normal_trace(0)))
    return flux, {"analytic": -1.0}, abs(flux + 1.0)


def _greens_representation(st, case):
    worst = 0.0
    disk = _domain(st, "disk")
    probes = np.array([[0.3, 0.2], [-0.4, 0.1]])
    for expr in ("1", "x1**2 - x2**2", "(x1**2 + x2**2)/4"):
        rep = gr.representation_check(disk, geo.all_dirichlet(1),
                                      IntegrandSpec.from_expression(expr), probes,
                                      st.greens_config())
        worst = max(worst, rep.max_error)
    ann = _domain(st, "annulus")
    rep = gr.representation_check(ann, geo.MixedBoundary(("dirichlet", "neumann")),
                                  IntegrandSpec.constant(1.0),
                                  np.array([[0.0, 0.7], [0.6, 0.3]]),
                                  st.greens_config())
    worst = max(worst, rep.max_error)
    return 1.0, {"manufactured": 4}, worst


def _greens_harmonicity(st, case):
    dom = _domain(st, "disk")
    solver = gr.GreensSolver(dom, geo.all_dirichlet(1), st.greens_config())
    ev = solver.solve(np.array([0.3, 0.0]))
    rng = st.rng(case.case_id)
    worst = 0.0
    for _ in range(5):
        center = rng.uniform(-0.4, 0.4, size=2)
        radius = rng.uniform(0.1, 0.3)
        th = TWO_PI * np.arange(256) / 256
        circle = center + radius * np.stack([np.cos(th), np.sin(th)], axis=-1)
        mean = float(ev.corrector_value(circle).mean())
        worst = max(worst, abs(mean - ev.corrector_value(center[None, :])[0]))
    return 0.0, {"circles": 5}, worst


def _greens_charge_convergence(st, case):
    dom = _domain(st, "annulus")
    mixedb = geo.MixedBoundary(("dirichlet", "neumann"))
    y = np.array([0.0, 0.72])
    res = {}
    for n in (32, 64):
        cfg = gr.GreensConfig(n_charges=n, fail_threshold=1.0)
        ev = gr.GreensSolver(dom, mixedb, cfg).solve(y)
        res[n] = ev.diagnostics.residual
    ratio = res[64] / max(res[32], 1e-300)
    err = 0.0 if (ratio <= 0.1 or res[64] <= 1e-9) else ratio
    return res[64], {"residual_32": res[32], "residual_64": res[64]}, err


def _greens_perturbed_scaling(st, case):
    dom = _domain(st, "disk")
    mixedb = geo.all_dirichlet(1)
    fam = pert.TaylorFamily(pert.dilation())
    t = 0.05
    y = np.array([0.0, 0.4])
    ev = gr.perturbed_greens(dom, mixedb, fam, t, y, st.greens_config())
    rng = st.rng(case.case_id)
    worst = 0.0
    for _ in range(10):
        x = rng.uniform(-0.6, 0.6, size=2)
        if min(np.linalg.norm(x - y), np.linalg.norm(x)) < 0.15:
            continue
        exact = gr.disk_greens(x / (1 + t), y / (1 + t))
        worst = max(worst, abs(ev.value(x)[0] - exact))
    return t, {"scaling_identity": 0.0}, worst


# ---------------------------------------------------------------------------
# hadamard suite
# ---------------------------------------------------------------------------

def _chi_sigma_three_form(st, case):
    dom = geo.Domain(geo.elliptical_domain(2.0, 1.0), m=max(st.m, 256))
    fam = pert.FlowFamily(pert.PolynomialField({(0, 2, 0): 1.0, (1, 1, 1): 1.0}))
    co = hd.chi_sigma(dom, fam)
    return 0.0, {"forms": 3}, co.max_discrepancy


def _chi_sigma_dilation(st, case):
    dom = _domain(st, "disk")
    co = hd.chi_sigma(dom, pert.TaylorFamily(pert.dilation()))
    err = max(float(np.max(np.abs(co.chi[0] + 1.0))),
              float(np.max(np.abs(co.sigma[0]))), co.max_discrepancy)
    return -1.0, {"analytic_chi": -1.0, "analytic_sigma": 0.0}, err


def _chi_sigma_normal(st, case):
    dom = _domain(st, "disk")
    rho_bar = 0.3
    fam = pert.NormalFamily(dom.grids[0], rho_bar * np.ones(dom.grids[0].size))
    co = hd.chi_sigma(dom, fam)
    err = max(float(np.max(np.abs(co.chi[0] + rho_bar ** 2))),
              float(np.max(np.abs(co.sigma[0]))))
    return -rho_bar ** 2, {"analytic_chi": -rho_bar ** 2, "analytic_sigma": 0.0}, err


def _probe_pair(kind: str):
    # >= 0.15 from every boundary for every ladder t (deformations move the
    # boundary by at most 0.1 in the shipped cases), and >= 0.2 apart
    if kind == "disk":
        return np.array([0.3, 0.0]), np.array([0.0, 0.4])
    return np.array([0.0, 0.75]), np.array([-0.74, -0.1])


def _delta_n_dilation(st, case):
    dom = _domain(st, "disk")
    x, y = _probe_pair("disk")
    solver = gr.GreensSolver(dom, geo.all_dirichlet(1), st.greens_config())
    val = hd.delta_n_formula(solver, pert.TaylorFamily(pert.dilation()),
                             solver.solve(x), solver.solve(y))
    oracle = hd.disk_dilation_delta_n(x, y, order=1)
    return val, {"scaling_oracle": oracle}, abs(val - oracle) / (1 + abs(oracle))


def _delta_n_rotation(st, case):
    dom = _domain(st, "disk")
    x, y = _probe_pair("disk")
    solver = gr.GreensSolver(dom, geo.all_dirichlet(1), st.greens_config())
    val = hd.delta_n_formula(solver, pert.FlowFamily(pert.rotation()),
                             solver.solve(x), solver.solve(y))
    return val, {"symmetry": 0.0}, abs(val)


def _delta_n_triangle(kind: str):
    def runner(st, case):
        dom = _domain(st, kind)
        mixedb = geo.all_dirichlet(1) if kind == "disk" \
            else geo.MixedBoundary(("dirichlet", "neumann"))
        fam = pert.TaylorFamily(pert.dilation()) if kind == "disk" \
            else pert.TaylorFamily(pert.translation(1.0, 0.0))
        x, y = _probe_pair(kind)
        tri = hd.delta_n_routes(dom, mixedb, fam, x, y, st.greens_config())
        return tri.formula, {"bvp": tri.bvp, "fd": tri.fd}, tri.max_pairwise

    return runner


def _delta2_n_triangle(kind: str):
    def runner(st, case):
        dom = _domain(st, kind)
        mixedb = geo.all_dirichlet(1) if kind == "disk" \
            else geo.MixedBoundary(("dirichlet", "neumann"))
        fam = pert.TaylorFamily(pert.dilation()) if kind == "disk" \
            else pert.TaylorFamily(pert.translation(1.0, 0.0))
        x, y = _probe_pair(kind)
        tri = hd.delta2_n_routes(dom, mixedb, fam, x, y, st.greens_config())
        oracles = {"bvp": tri.bvp, "fd": tri.fd}
        err = tri.max_pairwise
        if kind == "disk":
            oracle = hd.disk_dilation_delta_n(x, y, order=2)
            oracles["scaling_oracle"] = oracle
            err = max(err, abs(tri.formula - oracle) / (1 + abs(oracle)))
        return tri.formula, oracles, err

    return runner


def _delta2_rotation(st, case):
    dom = _domain(st, "disk")
    x, y = _probe_pair("disk")
    tri = hd.delta2_n_routes(dom, geo.all_dirichlet(1),
                             pert.FlowFamily(pert.rotation()), x, y,
                             st.greens_config())
    return tri.formula, {"symmetry": 0.0}, max(abs(tri.formula), abs(tri.bvp), abs(tri.fd))


def _gradient_pairing(kind: str):
    def runner(st, case):
        dom = _domain(st, kind)
        mixedb = geo.all_dirichlet(1) if kind == "disk" \
            else geo.MixedBoundary(("dirichlet", "neumann"))
        fam = pert.TaylorFamily(pert.dilation()) if kind == "disk" \
            else pert.TaylorFamily(pert.translation(1.0, 0.0))
        x, y = _probe_pair(kind)
        solver = gr.GreensSolver(dom, mixedb, st.greens_config())
        ev_x, ev_y = solver.solve(x), solver.solve(y)
        udot_x, _ = hd.delta_n_bvp(solver, fam, ev_x)
        udot_y, _ = hd.delta_n_bvp(solver, fam, ev_y)
        lhs, rhs, res = hd.gradient_pairing_residual(solver, fam, ev_x, ev_y,
                                                     udot_x, udot_y)
        return lhs, {"boundary_route": rhs}, res

    return runner


def _pole_symmetry(st, case):
    dom = _domain(st, "annulus")
    mixedb = geo.MixedBoundary(("dirichlet", "neumann"))
    fam = pert.TaylorFamily(pert.translation(1.0, 0.0))
    x, y = _probe_pair("annulus")
    solver = gr.GreensSolver(dom, mixedb, st.greens_config())
    ev_x, ev_y = solver.solve(x), solver.solve(y)
    d1 = hd.delta_n_formula(solver, fam, ev_x, ev_y)
    d1s = hd.delta_n_formula(solver, fam, ev_y, ev_x)
    udot_x, _ = hd.delta_n_bvp(solver, fam, ev_x)
    udot_y, _ = hd.delta_n_bvp(solver, fam, ev_y)
    co = hd.chi_sigma(dom, fam)
    d2 = hd.delta2_n_formula(solver, fam, ev_x, ev_y, udot_x, udot_y, co)
    d2s = hd.delta2_n_formula(solver, fam, ev_y, ev_x, udot_y, udot_x, co)
    return d2, {"swapped": d2s}, max(abs(d1 - d1s), abs(d2 - d2s))


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

def build_registry() -> list[Case]:
    dil = lambda: pert.TaylorFamily(pert.dilation())
    rot = lambda: pert.FlowFamily(pert.rotation())
    trans = lambda: pert.TaylorFamily(pert.translation(1.0, 0.0))
    one = IntegrandSpec.constant
    cases = [
        Case("jacobian-dilation-det", "jacobian",
             "volume-element derivative formulas", 1e-12, _jacobian_dilation_det,
             description="det DT_t derivatives of the dilation family against the closed form (2, 2)."),
        Case("jacobian-rotation-det-zero", "jacobian",
             "volume-element derivative formulas", 1e-10, _jacobian_rotation_det,
             description="Volume-preserving rotation flow: both det derivatives vanish; pins the trace sign."),
        Case("jacobian-poly-det-fd", "jacobian",
             "volume-element derivative formulas", 1e-7, _jacobian_poly_det_fd,
             description="Random polynomial flows: det derivatives vs 5-point differences of the integrated Jacobian."),
        Case("jacobian-dilation-inverse", "jacobian",
             "inverse-Jacobian derivative formulas", 1e-12, _jacobian_dilation_inverse,
             description="(DT_t)^-1 derivatives of the dilation family against (-I, 2I)."),
        Case("jacobian-poly-inverse-fd", "jacobian",
             "inverse-Jacobian derivative formulas", 1e-7, _jacobian_poly_inverse_fd,
             description="Random polynomial flows: inverse-Jacobian derivatives vs componentwise finite differences."),
        Case("jacobian-minor-expansion", "jacobian",
             "minor-determinant quadratic expansion", 2.5, _jacobian_minor, mode="ge",
             description="Quadratic model of Jacobian minors on random 2..4-dimensional data; remainder slope >= 2.5."),
        Case("jacobian-flow-acceleration-identity", "jacobian",
             "flow acceleration identity", 1e-8, _jacobian_flow_acceleration,
             description="Kinematic second derivative of the flow map equals the advective acceleration normally."),
        Case("liouville-disk-dilation-first-volume", "liouville",
             "first volume derivative formula", 1e-8,
             _liouville_case(lv.first_volume, "disk", dil, lambda: one(1.0),
                             analytic=lambda: TWO_PI),
             description="Dilated disk area rate: formula value 2*pi against the closed form."),
        Case("liouville-disk-dilation-first-area", "liouville",
             "first area derivative formula", 1e-8,
             _liouville_case(lv.first_area, "disk", dil, lambda: one(1.0),
                             analytic=lambda: TWO_PI),
             description="Dilated circle perimeter rate: 2*pi against the closed form."),
        Case("liouville-disk-translation-moment", "liouville",
             "first volume derivative formula", 1e-10,
             _liouville_case(lv.first_volume, "disk", trans,
                             lambda: IntegrandSpec.from_expression("x1"),
                             analytic=lambda: np.pi),
             description="First moment of a translating disk: derivative pi."),
        Case("liouville-rotation-first-volume-zero", "liouville",
             "first volume derivative formula", 1e-10,
             _liouville_case(lv.first_volume, "disk", rot, lambda: one(1.0),
                             analytic=lambda: 0.0),
             description="Rotation flow preserves area: derivative vanishes."),
        Case("liouville-disk-dilation-second-volume", "liouville",
             "second volume derivative formula", 1e-6,
             _liouville_case(lv.second_volume, "disk", dil, lambda: one(1.0),
                             analytic=lambda: TWO_PI),
             description="Second derivative of the dilated disk area: 2*pi."),
        Case("liouville-disk-dilation-second-area", "liouville",
             "second area derivative formula", 1e-6,
             _liouville_case(lv.second_area, "disk", dil, lambda: one(1.0),
                             analytic=lambda: 0.0),
             description="Dilated perimeter is linear in t: second derivative vanishes."),
        Case("liouville-flux-first-dilation", "liouville",
             "first flux derivative formula", 1e-10,
             _liouville_case(lv.boundary_flux_first, "disk", dil,
                             lambda: VectorIntegrandSpec.from_expressions("x1", "x2"),
                             analytic=lambda: 4 * np.pi),
             description="Flux of the position field through the dilated circle: rate 4*pi."),
        Case("liouville-flux-second-dilation", "liouville",
             "second flux derivative formula", 1e-8,
             _liouville_case(lv.boundary_flux_second, "disk", dil,
                             lambda: VectorIntegrandSpec.from_expressions("x1", "x2"),
                             analytic=lambda: 4 * np.pi),
             description="Second derivative of the same flux: 4*pi."),
        Case("liouville-area-flux-consistency", "liouville",
             "area formula as a normal-field flux", 1e-9, _liouville_consistency,
             description="First area derivative equals the flux derivative of the collar normal scaled by the integrand."),
        Case("liouville-nu-dot-translation", "liouville",
             "normal-vector rate formula", 1e-10, _liouville_nu_dot,
             description="Moving-normal rate under translation: sin(theta) tau, orthogonal to nu."),
        Case("liouville-star-translation-second-area", "liouville",
             "second area derivative formula", 1e-3, _liouville_case(
                 lv.second_area, "star", trans, lambda: one(1.0), analytic=lambda: 0.0),
             description="Translation preserves the star perimeter; second derivative vanishes (FD cross-check)."),
    ]
    for k in range(6):
        cases.append(Case(f"liouville-random-first-{k}", "liouville",
                          "first derivative formulas vs Richardson differences",
                          1e-4, _liouville_random(1, k),
                          description="Seeded random (domain, family, integrand): first derivative vs extrapolated differences."))
    for k in range(4):
        cases.append(Case(f"liouville-random-second-{k}", "liouville",
                          "second derivative formulas vs 5-point differences",
                          1e-2, _liouville_random(2, k),
                          description="Seeded random (domain, family, integrand): second derivative vs 5-point differences."))
    cases += [
        Case("greens-disk-analytic", "greens",
             "mixed Green's function solver", 1e-8, _greens_disk_analytic,
             description="Unit-disk Dirichlet solve against the image-charge formula at 20 probes."),
        Case("greens-disk-poisson-kernel", "greens",
             "boundary flux trace", 1e-7, _greens_poisson_kernel,
             description="Negative normal trace equals the classical Poisson kernel on the circle."),
        Case("greens-symmetry", "greens",
             "Green's function symmetry", 1e-7, _greens_symmetry,
             description="N(x,y) = N(y,x) at random interior pairs on disk and mixed annulus."),
        Case("greens-annulus-flux", "greens",
             "unit point-source flux balance", 1e-6, _greens_annulus_flux,
             description="Mixed annulus: total Dirichlet-side flux of the Green's function is -1."),
        Case("greens-representation", "greens",
             "solution representation identity", 1e-5, _greens_representation,
             description="Manufactured Poisson solutions reconstructed from volume and boundary pairings."),
        Case("greens-harmonicity", "greens",
             "corrector harmonicity", 1e-8, _greens_harmonicity,
             description="Mean-value property of the corrector over random interior circles."),
        Case("greens-charge-convergence", "greens",
             "collocation convergence", 0.1, _greens_charge_convergence,
             description="Doubling charge count shrinks check-node residual 10x (or below the conditioning floor)."),
        Case("greens-perturbed-scaling", "greens",
             "deformed-domain solver", 1e-7, _greens_perturbed_scaling,
             description="Dilated-disk re-solve matches the log-kernel scaling identity."),
        Case("hadamard-chi-sigma-three-form", "hadamard",
             "second-variation boundary coefficients", 1e-10, _chi_sigma_three_form,
             description="chi/sigma assembled three ways (acceleration, transport, curvature forms) agree nodewise."),
        Case("hadamard-chi-sigma-dilation-anchor", "hadamard",
             "second-variation boundary coefficients", 1e-10, _chi_sigma_dilation,
             description="Dilation of the unit disk: chi = -1 and sigma = 0 in every form."),
        Case("hadamard-chi-sigma-normal", "hadamard",
             "second-variation boundary coefficients", 1e-10, _chi_sigma_normal,
             description="Constant-speed normal perturbation: chi = -(rho)^2 curvature, sigma = 0."),
        Case("hadamard-delta-n-disk-dilation", "hadamard",
             "first variational formula of the Green's function", 1e-4,
             _delta_n_dilation,
             description="First variation under dilation against the analytic scaling derivative."),
        Case("hadamard-delta-n-rotation-zero", "hadamard",
             "first variational formula of the Green's function", 1e-8,
             _delta_n_rotation,
             description="Rotation flow on the disk: first variation vanishes."),
        Case("hadamard-delta-n-triangle-disk", "hadamard",
             "first-variation route agreement", 1e-3, _delta_n_triangle("disk"),
             description="Pairing formula vs variation BVP vs re-solve differences on the disk."),
        Case("hadamard-delta-n-triangle-annulus", "hadamard",
             "first-variation route agreement", 1e-3, _delta_n_triangle("annulus"),
             description="Same three routes on the mixed annulus under translation."),
        Case("hadamard-delta2-n-triangle-disk", "hadamard",
             "second-variation route agreement", 1e-2, _delta2_n_triangle("disk"),
             description="Second variation: formula vs second-order BVP vs 5-point differences, plus the scaling oracle."),
        Case("hadamard-delta2-n-triangle-annulus", "hadamard",
             "second-variation route agreement", 1e-2, _delta2_n_triangle("annulus"),
             description="Same three routes on the mixed annulus under translation."),
        Case("hadamard-delta2-rotation-zero", "hadamard",
             "second-variation route agreement", 1e-6, _delta2_rotation,
             description="Rotation flow on the disk: second variation vanishes in all routes."),
        Case("hadamard-gradient-pairing-disk", "hadamard",
             "first-variation gradient pairing identity", 1e-4,
             _gradient_pairing("disk"),
             description="Interior gradient pairing of two first variations equals its boundary reduction."),
        Case("hadamard-gradient-pairing-annulus", "hadamard",
             "first-variation gradient pairing identity", 1e-3,
             _gradient_pairing("annulus"),
             description="Same identity on the mixed annulus."),
        Case("hadamard-pole-symmetry", "hadamard",
             "variation symmetry in the poles", 1e-10, _pole_symmetry,
             description="First and second variations are symmetric under exchanging the two poles."),
    ]
    return cases


def registry_by_id() -> dict:
    return {c.case_id: c for c in build_registry()}


def suites() -> list[str]:
    return ["jacobian", "liouville", "greens", "hadamard"]
