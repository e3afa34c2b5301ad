"""Independent brute-force verifiers.

Everything here works on the coordinate expression of the Lagrangian
L(x, u, udot) with plain numeric partial derivatives and parameter-space
stencils, deliberately bypassing the covariant momenta machinery so the
two routes can be compared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import variational as var
from .errors import NonTimelike, OutOfChart, QuadratureFailure
from .fdtools import deriv_along, partial_gradient
from .sampling import frame_scales

# Stencil steps for the nested xi-derivatives: the inner step differentiates
# p1 (error ~1e-10 from the L-partials), the outer differentiates p.
H_INNER = 4e-3
H_OUTER = 1.6e-2
RICHARDSON_TOL = 1e-3


class CoordinateCurve:
    """A curve xi -> x(xi) with ordinary derivatives through 4th order."""

    def __init__(self, deriv_fn, window=(-0.4, 0.4)):
        self._deriv = deriv_fn
        self.window = tuple(window)

    def d(self, xi, order):
        return np.asarray(self._deriv(xi, order), dtype=float)

    def x(self, xi):
        return self.d(xi, 0)

    @classmethod
    def from_polynomial(cls, coeffs, window=(-0.4, 0.4)):
        """coeffs[k] is the vector coefficient of xi^k (ascending)."""
        coeffs = np.asarray(coeffs, dtype=float)

        def deriv(xi, order):
            c = coeffs
            for _ in range(order):
                if c.shape[0] > 1:
                    c = npoly.polyder(c, axis=0)
                else:
                    c = np.zeros((1, coeffs.shape[1]))
            return np.array([npoly.polyval(xi, c[:, n]) for n in range(c.shape[1])])

        return cls(deriv, window=window)

    @classmethod
    def from_helix(cls, helix, window=(0.0, 10.0)):
        return cls(lambda s, order: helix.derivative(s, order), window=window)

    def perturbed(self, bump, eps):
        """This curve plus eps times a bump curve."""
        return CoordinateCurve(
            lambda xi, order: self.d(xi, order) + eps * bump.d(xi, order),
            window=self.window)

    def jet(self, chart, xi, orders=4):
        """Covariant jet of the curve at xi."""
        ds = [self.d(xi, k) for k in range(orders + 1)]
        return var.jet_coordinate_to_covariant(
            chart, ds[0], ds[1], ds[2],
            ds[3] if orders >= 3 else None,
            ds[4] if orders >= 4 else None, param=xi)


def window_bump(window, direction, margin=0.0):
    """Polynomial bump ((xi-a)(b-xi))^3, vanishing with two derivatives at the ends."""
    a, b = window[0] + margin, window[1] - margin
    lin = npoly.polymul([-a, 1.0], [b, -1.0])       # (xi-a)(b-xi)
    w = npoly.polypow(lin, 3)
    w = w / ((b - a) / 2.0) ** 6                    # peak value 1 at midpoint
    coeffs = np.outer(w, np.asarray(direction, dtype=float))
    return CoordinateCurve.from_polynomial(coeffs, window=(a, b))


@dataclass(frozen=True)
class CoordinateMomenta:
    """Ostrohrads'kyj momenta in coordinate form: p1 = dL/dudot, p = dL/du - dp1/dxi."""

    p1: np.ndarray
    p: np.ndarray


def _curve_args(curve, xi):
    return curve.d(xi, 0), curve.d(xi, 1), curve.d(xi, 2)


def coordinate_momenta(chart, curve, xi, Lc, h_inner=H_INNER):
    def p1_at(t):
        x, u, ud = _curve_args(curve, t)
        return partial_gradient(lambda v: Lc(x, u, v), ud)

    x, u, ud = _curve_args(curve, xi)
    dLdu = partial_gradient(lambda v: Lc(x, v, ud), u)
    dp1 = deriv_along(p1_at, xi, h_inner)
    return CoordinateMomenta(p1=p1_at(xi), p=dLdu - dp1)


def coordinate_euler_poisson(chart, curve, xi, Lc,
                             h_inner=H_INNER, h_outer=H_OUTER,
                             check=RICHARDSON_TOL):
    """Brute-force Euler-Poisson covector E_n = dL/dx^n - dp_n/dxi.

    All L-partials are 5-point central differences of the coordinate
    expression of L; the two nested xi-derivatives use 5-point stencils,
    with a Richardson half-step verification on the outer one.
    """

    def p_at(t):
        return coordinate_momenta(chart, curve, t, Lc, h_inner=h_inner).p

    x, u, ud = _curve_args(curve, xi)
    dLdx = partial_gradient(lambda v: Lc(v, u, ud), x)
    dp = deriv_along(p_at, xi, h_outer, check=check)
    return dLdx - dp


def partials_recalculation_check(chart, x, u, udot, L):
    """Residuals of the coordinate<->covariant recalculation of L-partials.

    first:  dL/du^n  = dLt/du^n + 2 (dLt/du'^q) Gamma^q_mn u^m
    second: dL/dx^n  = dLt/dx^n + (dLt/du'^q) (dGamma^q_ml/dx^n) u^l u^m

    where Lt is L expressed through (x, u, u'); all partials numeric.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    udot = np.asarray(udot, dtype=float)
    pt = chart.point(x)
    Lc = var.as_coordinate_function(chart, L)

    def Lt(xx, uu, u1):
        ptl = chart.point(xx)
        gamma = ptl.inner(uu, uu)
        if gamma <= 0.0:
            raise NonTimelike(f"gamma = {gamma} <= 0")
        return L.value(gamma, ptl.inner(uu, u1), ptl.inner(u1, u1))

    u1 = udot if pt.flat else udot + np.einsum("nlm,l,m->n", pt.gamma, u, u)

    dL_du = partial_gradient(lambda v: Lc(x, v, udot), u)
    dLt_du = partial_gradient(lambda v: Lt(x, v, u1), u)
    dLt_du1 = partial_gradient(lambda v: Lt(x, u, v), u1)
    corr1 = (np.zeros_like(u) if pt.flat
             else 2.0 * np.einsum("q,qmn,m->n", dLt_du1, pt.gamma, u))
    res1 = float(np.max(np.abs(dL_du - dLt_du - corr1)))

    dL_dx = partial_gradient(lambda v: Lc(v, u, udot), x)
    dLt_dx = partial_gradient(lambda v: Lt(v, u, u1), x)
    corr2 = (np.zeros_like(u) if pt.flat
             else np.einsum("q,qmln,l,m->n", dLt_du1, pt.dgamma, u, u))
    res2 = float(np.max(np.abs(dL_dx - dLt_dx - corr2)))
    return res1, res2


# ----------------------------------------------------------------------
# discrete action variation
# ----------------------------------------------------------------------

def action_integral(chart, curve, Lc, n_nodes=401):
    """Simpson quadrature of the action over the curve window."""
    a, b = curve.window
    if n_nodes % 2 == 0:
        n_nodes += 1
    xs = np.linspace(a, b, n_nodes)
    vals = np.empty(n_nodes)
    for i, t in enumerate(xs):
        x, u, ud = _curve_args(curve, t)
        vals[i] = Lc(x, u, ud)
    h = (b - a) / (n_nodes - 1)
    w = np.ones(n_nodes)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    S = h / 3.0 * float(w @ vals)
    if not np.isfinite(S):
        raise QuadratureFailure("non-finite action integral")
    return S


def action_variation(chart, curve, L, bump, eps=1e-5, n_nodes=401):
    """Central-difference directional derivative of the action along a bump."""
    Lc = var.as_coordinate_function(chart, L)
    Sp = action_integral(chart, curve.perturbed(bump, eps), Lc, n_nodes)
    Sm = action_integral(chart, curve.perturbed(bump, -eps), Lc, n_nodes)
    return (Sp - Sm) / (2.0 * eps)


def euler_poisson_pairing(chart, curve, L, bump, n_nodes=401):
    """<E, bump> pairing: Simpson quadrature of E_n(xi) bump^n(xi).

    E comes from the covariant assembler on the converted jet, which is
    the route the action derivative is checked against.
    """
    a, b = curve.window
    if n_nodes % 2 == 0:
        n_nodes += 1
    xs = np.linspace(a, b, n_nodes)
    vals = np.empty(n_nodes)
    for i, t in enumerate(xs):
        jet = curve.jet(chart, t)
        E = var.euler_poisson_covariant(chart, jet, L).E
        vals[i] = float(E @ bump.d(t, 0))
    h = (b - a) / (n_nodes - 1)
    w = np.ones(n_nodes)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return h / 3.0 * float(w @ vals)


# ----------------------------------------------------------------------
# random admissible test curves
# ----------------------------------------------------------------------

_BASE_POINTS = {
    "minkowski": np.zeros(4),
    "schwarzschild": np.array([0.0, 10.0, np.pi / 2, 0.0]),
    "desitter": np.array([0.0, 3.0, np.pi / 2, 0.0]),
}


def random_test_curve(chart, rng, degree=6, window=(-0.4, 0.4),
                      max_tries=200, gamma_floor=0.1):
    """Degree-6 polynomial coordinate curve around a timelike base line.

    Perturbation coefficients are uniform in [-0.1, 0.1] per orthonormal
    frame direction; candidates are rejected unless gamma > gamma_floor
    and the point stays chart-interior across the whole window.
    """
    x0 = _BASE_POINTS.get(chart.name)
    if x0 is None:
        x0 = chart.sample_point(rng)
    pt0 = chart.point(x0)
    sc = frame_scales(pt0)
    for _ in range(max_tries):
        u0 = np.zeros(chart.dim)
        u0[0] = rng.uniform(1.05, 1.25)
        u0[1:] = rng.uniform(-0.1, 0.1, chart.dim - 1)
        u0 = u0 * sc
        coeffs = np.zeros((degree + 1, chart.dim))
        coeffs[0] = x0 + rng.uniform(-0.05, 0.05, chart.dim) * sc
        coeffs[1] = u0
        for k in range(2, degree + 1):
            coeffs[k] = rng.uniform(-0.1, 0.1, chart.dim) * sc
        curve = CoordinateCurve.from_polynomial(coeffs, window=window)
        if _admissible(chart, curve, gamma_floor):
            return curve
    raise RuntimeError("could not draw an admissible test curve")


def _admissible(chart, curve, gamma_floor, n_check=21):
    a, b = curve.window
    pad = 0.1 * (b - a)
    for t in np.linspace(a - pad, b + pad, n_check):
        try:
            pt = chart.point(curve.d(t, 0))
        except OutOfChart:
            return False
        if pt.inner(curve.d(t, 1), curve.d(t, 1)) <= gamma_floor:
            return False
    return True
