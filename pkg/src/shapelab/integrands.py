"""Space-time test integrands with declared analytic derivatives.

Scalar integrands c(x, t) carry evaluators for c, c_t, c_tt, grad c, and
hess c; vector fields a(x, t) additionally declare divergence data.  The
sympy constructors build all derivatives symbolically, which is the usual
manufactured-solution workflow; every evaluator is vectorized over point
arrays of shape (N, 2).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy as sp

X1, X2, T = sp.symbols("x1 x2 t")


def _vectorized(expr, shape_tail=()):
    """Lambdify ``expr`` of (x1, x2, t) into f(points, t) with broadcasting.

    ``expr`` is a scalar for shape_tail=(), otherwise a sympy Matrix whose
    entries fill the trailing shape; scalar components are lambdified
    separately so constant entries broadcast cleanly.
    """
    if shape_tail:
        flat = [sp.lambdify((X1, X2, T), e, modules="numpy") for e in expr]
    else:
        flat = [sp.lambdify((X1, X2, T), expr, modules="numpy")]

    def call(points: np.ndarray, t: float = 0.0) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n = points.shape[0]
        cols = [np.broadcast_to(np.asarray(fn(points[:, 0], points[:, 1], t),
                                           dtype=float), (n,))
                for fn in flat]
        if not shape_tail:
            return np.ascontiguousarray(cols[0])
        out = np.stack(cols, axis=-1).reshape((n,) + shape_tail)
        return np.ascontiguousarray(out)

    return call


@dataclass(frozen=True)
class IntegrandSpec:
    """Scalar integrand with its declared space/time derivatives."""

    value: Callable      # (pts, t) -> (N,)
    dt: Callable | None = None
    dtt: Callable | None = None
    gradient: Callable | None = None   # (pts, t) -> (N, 2)
    hessian: Callable | None = None    # (pts, t) -> (N, 2, 2)
    dt_gradient: Callable | None = None  # (pts, t) -> (N, 2), grad of c_t
    label: str = ""
    zero: bool = False

    @classmethod
    def from_expression(cls, expr, label: str | None = None) -> "IntegrandSpec":
        expr = sp.sympify(expr)
        grad = [sp.diff(expr, X1), sp.diff(expr, X2)]
        hess = [[sp.diff(g, v) for v in (X1, X2)] for g in grad]
        return cls(
            value=_vectorized(expr),
            dt=_vectorized(sp.diff(expr, T)),
            dtt=_vectorized(sp.diff(expr, T, 2)),
            gradient=_vectorized(sp.Matrix(grad), (2,)),
            hessian=_vectorized(sp.Matrix(hess), (2, 2)),
            dt_gradient=_vectorized(sp.Matrix([sp.diff(g, T) for g in grad]), (2,)),
            label=label if label is not None else str(expr),
            zero=expr.is_zero is True,
        )

    @classmethod
    def constant(cls, value: float = 1.0) -> "IntegrandSpec":
        return cls.from_expression(sp.Float(value), label=f"const {value}")

    def spot_check(self, rng: np.random.Generator, n_points: int = 10,
                   box=(-1.0, 1.0), t_range: float = 0.1) -> float:
        """Max relative error of declared derivatives against finite differences."""
        pts = rng.uniform(box[0], box[1], size=(n_points, 2))
        ts = rng.uniform(-t_range, t_range, size=n_points)
        h = 1e-5
        h2 = 1e-4  # wider step for the second difference (cancellation)
        worst = 0.0
        for p, t in zip(pts, ts):
            p = p[None, :]
            base = self.value(p, t)[0]
            scale = 1.0 + abs(base)
            if self.dt is not None:
                fd = (self.value(p, t + h)[0] - self.value(p, t - h)[0]) / (2 * h)
                worst = max(worst, abs(fd - self.dt(p, t)[0]) / scale)
            if self.gradient is not None:
                for k in range(2):
                    dp = np.zeros((1, 2))
                    dp[0, k] = h
                    fd = (self.value(p + dp, t)[0] - self.value(p - dp, t)[0]) / (2 * h)
                    worst = max(worst, abs(fd - self.gradient(p, t)[0, k]) / scale)
            if self.dtt is not None:
                fd = (self.value(p, t + h2)[0] - 2 * base
                      + self.value(p, t - h2)[0]) / h2 ** 2
                worst = max(worst, abs(fd - self.dtt(p, t)[0]) / scale)
        return worst


@dataclass(frozen=True)
class VectorIntegrandSpec:
    """Vector field a(x, t) with time derivatives and divergence data."""

    value: Callable                 # (pts, t) -> (N, 2)
    dt: Callable | None = None
    dtt: Callable | None = None
    divergence: Callable | None = None        # (N,)
    divergence_dt: Callable | None = None     # (N,)
    divergence_gradient: Callable | None = None  # (N, 2)
    label: str = ""

    @classmethod
    def from_expressions(cls, expr1, expr2, label: str | None = None) -> "VectorIntegrandSpec":
        e1, e2 = sp.sympify(expr1), sp.sympify(expr2)
        vec = sp.Matrix([e1, e2])
        div = sp.diff(e1, X1) + sp.diff(e2, X2)
        return cls(
            value=_vectorized(vec, (2,)),
            dt=_vectorized(sp.diff(vec, T), (2,)),
            dtt=_vectorized(sp.diff(vec, T, 2), (2,)),
            divergence=_vectorized(div),
            divergence_dt=_vectorized(sp.diff(div, T)),
            divergence_gradient=_vectorized(sp.Matrix([sp.diff(div, X1), sp.diff(div, X2)]), (2,)),
            label=label if label is not None else f"({e1}, {e2})",
        )


def normal_scaled_integrand(c: IntegrandSpec, collar) -> VectorIntegrandSpec:
    """The field a = nu~ c built from a collar extension of the unit normal.

    Valid only inside the collar, which is all the boundary-flux formulas and
    their pushed-node oracles need.  Second-order divergence data is not
    provided (the extension's curvature gradient is not tracked).
    """

    def value(pts, t=0.0):
        return collar.extended_normal(pts) * c.value(pts, t)[:, None]

    def dt(pts, t=0.0):
        return collar.extended_normal(pts) * c.dt(pts, t)[:, None]

    def divergence(pts, t=0.0):
        nu = collar.extended_normal(pts)
        grad = c.gradient(pts, t)
        return collar.normal_divergence(pts) * c.value(pts, t) \
            + np.einsum("ni,ni->n", nu, grad)

    return VectorIntegrandSpec(value=value, dt=dt, dtt=None,
                               divergence=divergence, divergence_dt=None,
                               divergence_gradient=None,
                               label=f"normal*({c.label})")


def random_polynomial_integrand(rng: np.random.Generator, degree: int = 2,
                                time_degree: int = 1, scale: float = 0.5) -> IntegrandSpec:
    """Random space-time polynomial used by the seeded property cases."""
    expr = sp.Integer(0)
    for px in range(degree + 1):
        for py in range(degree + 1 - px):
            for pt in range(time_degree + 1):
                expr += sp.Float(scale * rng.uniform(-1, 1)) * X1 ** px * X2 ** py * T ** pt
    return IntegrandSpec.from_expression(expr, label=f"random poly deg {degree}")
