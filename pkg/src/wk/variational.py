"""Second-order Lagrangian layer.

Differential invariants of a worldline jet, Lagrangians over
(gamma, beta, alpha), covariant Ostrohrads'kyj momenta, and the covariant
fourth-order Euler-Poisson expression

    E_n = -pi'_n - pi1_l R_nkm^l u^m u^k

for any Lagrangian depending on the jet only through the invariants
gamma = <u,u>, beta = <u,u'>, alpha = <u',u'>.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import NonTimelike
from .fdtools import partial_gradient

EPS_GAUGE = 1e-6


@dataclass(frozen=True)
class CovariantJet:
    """Point x with the covariant velocity chain (u, u', u'', optionally u''').

    u1, u2, u3 hold contravariant components of the covariant derivatives
    of u along the curve; param is the evolution parameter (xi, or arc
    length s when gauge == "natural").
    """

    x: np.ndarray
    u: np.ndarray
    u1: np.ndarray
    u2: np.ndarray = None
    u3: np.ndarray = None
    param: float = 0.0
    gauge: str = "free"

    def with_u3(self, u3):
        return replace(self, u3=np.asarray(u3, dtype=float))


@dataclass(frozen=True)
class Invariants:
    gamma: float
    beta: float
    alpha: float


@dataclass(frozen=True)
class Momenta:
    """Covariant momenta (covector components)."""

    pi: np.ndarray
    pi1: np.ndarray
    pi1_prime: np.ndarray


@dataclass(frozen=True)
class EulerPoissonValue:
    E: np.ndarray


class InvariantLagrangian:
    """A Lagrangian given as a function of the invariants (gamma, beta, alpha).

    Partial derivatives through third order are generated symbolically at
    construction; everything downstream (momenta, Euler-Poisson assembly,
    the u''' solver) consumes only these partials plus the chain rule

        gamma' = 2 beta,  beta' = alpha + <u,u''>,  alpha' = 2 <u',u''>.
    """

    def __init__(self, name, expr_builder, params):
        import sympy as sp

        self.name = name
        self.params = dict(params)
        g, b, a = sp.symbols("gamma beta alpha", positive=None, real=True)
        expr = expr_builder(g, b, a, sp)
        syms = (g, b, a)
        grad = [sp.diff(expr, s) for s in syms]
        hess = [[sp.diff(gi, s) for s in syms] for gi in grad]
        third = [[[sp.diff(hij, s) for s in syms] for hij in hi] for hi in hess]
        self._value = sp.lambdify(syms, expr, "math")
        self._grad = sp.lambdify(syms, grad, "math")
        self._hess = sp.lambdify(syms, hess, "math")
        self._third = sp.lambdify(syms, third, "math")

    @classmethod
    def kawaguchi(cls, A=1.0):
        """L = (alpha*gamma - beta^2)/gamma^(5/2) + A*gamma^(1/2)."""
        A = float(A)

        def build(g, b, a, sp):
            return (a * g - b ** 2) / g ** sp.Rational(5, 2) + A * sp.sqrt(g)

        return cls("kawaguchi", build, {"A": A})

    @classmethod
    def test2(cls, c=0.1):
        """Second sample invariant Lagrangian, homogeneous of degree 1.

        L2 = gamma^(1/2) + c*(alpha*gamma - beta^2)^2 / gamma^(11/2);
        depends on all three invariants and is used to exercise statements
        that must hold for any invariant Lagrangian.
        """
        c = float(c)

        def build(g, b, a, sp):
            return sp.sqrt(g) + c * (a * g - b ** 2) ** 2 / g ** sp.Rational(11, 2)

        return cls("test2", build, {"c": c})

    @classmethod
    def from_config(cls, cfg):
        kind = cfg.get("lagrangian")
        if kind == "kawaguchi":
            return cls.kawaguchi(A=cfg.get("A", 1.0))
        if kind == "test2":
            return cls.test2(c=cfg.get("c", 0.1))
        raise ValueError(f"unknown lagrangian {kind!r}")

    def value(self, gamma, beta, alpha):
        return float(self._value(gamma, beta, alpha))

    def grad(self, gamma, beta, alpha):
        return np.array(self._grad(gamma, beta, alpha), dtype=float)

    def hess(self, gamma, beta, alpha):
        return np.array(self._hess(gamma, beta, alpha), dtype=float)

    def third(self, gamma, beta, alpha):
        return np.array(self._third(gamma, beta, alpha), dtype=float)

    def __repr__(self):
        return f"InvariantLagrangian({self.name!r}, {self.params})"


# ----------------------------------------------------------------------
# invariants and curvature
# ----------------------------------------------------------------------

def invariants_at(chart, jet, pt=None):
    """The three differential invariants of a jet; NonTimelike if gamma <= 0."""
    pt = pt or chart.point(jet.x)
    gamma = pt.inner(jet.u, jet.u)
    if gamma <= 0.0:
        raise NonTimelike(f"gamma = {gamma} <= 0")
    beta = pt.inner(jet.u, jet.u1)
    alpha = pt.inner(jet.u1, jet.u1)
    return Invariants(gamma, beta, alpha)


def frenet_curvature(chart, jet, pt=None):
    """Squared first Frenet curvature as the invariant (alpha*gamma - beta^2)/gamma^3.

    This is the combination through which k^2 enters the Lagrangian; in
    Lorentzian signature it may be negative (spacelike acceleration).
    """
    inv = invariants_at(chart, jet, pt=pt)
    return (inv.alpha * inv.gamma - inv.beta ** 2) / inv.gamma ** 3


def _jet_scalars(pt, jet):
    """Invariants plus the higher inner products entering the chain rule."""
    inv = invariants_at(None, jet, pt=pt)
    s1 = pt.inner(jet.u, jet.u2)
    s2 = pt.inner(jet.u1, jet.u2)
    return inv, s1, s2


def _first_chain(inv, s1, s2):
    """(gamma', beta', alpha') in terms of jet scalars."""
    return np.array([2.0 * inv.beta, inv.alpha + s1, 2.0 * s2])


# ----------------------------------------------------------------------
# momenta
# ----------------------------------------------------------------------

def momenta_general(chart, jet, L, pt=None):
    """Covariant momenta of an invariant Lagrangian from its partials.

    pi1        = L_beta u + 2 L_alpha u'              (lowered)
    pi1'       = differential prolongation of pi1     (needs u'')
    pi         = 2 L_gamma u + L_beta u' - pi1'
    """
    pt = pt or chart.point(jet.x)
    inv, s1, s2 = _jet_scalars(pt, jet)
    Lg, Lb, La = L.grad(inv.gamma, inv.beta, inv.alpha)
    hess = L.hess(inv.gamma, inv.beta, inv.alpha)
    Yp = _first_chain(inv, s1, s2)
    dLb = hess[1] @ Yp
    dLa = hess[2] @ Yp

    u_l = pt.lower(jet.u)
    u1_l = pt.lower(jet.u1)
    u2_l = pt.lower(jet.u2)
    pi1 = Lb * u_l + 2.0 * La * u1_l
    pi1_prime = dLb * u_l + (Lb + 2.0 * dLa) * u1_l + 2.0 * La * u2_l
    pi = 2.0 * Lg * u_l + Lb * u1_l - pi1_prime
    return Momenta(pi, pi1, pi1_prime)


def momenta_kawaguchi(chart, jet, A=1.0, pt=None):
    """Closed-form momenta for L = (k^2+A)|u|.

    pi1 = (2/|u|^3) u' - (2<u,u'>/|u|^5) u
    pi  = (2<u,u''>/|u|^5 - <u',u'>/|u|^5 - 5<u,u'>^2/|u|^7 + A/|u|) u
          + (6<u,u'>/|u|^5) u' - (2/|u|^3) u''
    """
    pt = pt or chart.point(jet.x)
    inv, s1, s2 = _jet_scalars(pt, jet)
    g, b, a = inv.gamma, inv.beta, inv.alpha
    nu = np.sqrt(g)
    u_l = pt.lower(jet.u)
    u1_l = pt.lower(jet.u1)
    u2_l = pt.lower(jet.u2)

    pi1 = (2.0 / nu ** 3) * u1_l - (2.0 * b / nu ** 5) * u_l
    pi = ((2.0 * s1 / nu ** 5 - a / nu ** 5 - 5.0 * b ** 2 / nu ** 7 + A / nu) * u_l
          + (6.0 * b / nu ** 5) * u1_l - (2.0 / nu ** 3) * u2_l)
    # prolongation of pi1 with the kawaguchi partials written out
    dLb = -2.0 * (a + s1) / nu ** 5 + 10.0 * b ** 2 / nu ** 7
    dLa = -3.0 * b / nu ** 5
    Lb = -2.0 * b / nu ** 5
    La = 1.0 / nu ** 3
    pi1_prime = dLb * u_l + (Lb + 2.0 * dLa) * u1_l + 2.0 * La * u2_l
    return Momenta(pi, pi1, pi1_prime)


def _pi_derivative_coeffs(L, inv, s1, s2, s3, sig1, sig2):
    """Scalar coefficients of pi = a u + b u' + c u'' and of its derivative.

    Returns (a, b, c, a', b'); c' equals b.  sig1 = <u,u'''>,
    sig2 = <u',u'''> close the chain rule at second order.
    """
    grad = L.grad(inv.gamma, inv.beta, inv.alpha)
    hess = L.hess(inv.gamma, inv.beta, inv.alpha)
    third = L.third(inv.gamma, inv.beta, inv.alpha)
    Yp = _first_chain(inv, s1, s2)
    Ypp = np.array([2.0 * (inv.alpha + s1), 3.0 * s2 + sig1, 2.0 * s3 + 2.0 * sig2])
    dL = hess @ Yp                       # (dL_gamma, dL_beta, dL_alpha)
    ddL = hess @ Ypp + np.einsum("xyz,y,z->x", third, Yp, Yp)
    a = 2.0 * grad[0] - dL[1]
    b = -2.0 * dL[2]
    c = -2.0 * grad[2]
    ap = 2.0 * dL[0] - ddL[1]
    bp = -2.0 * ddL[2]
    return a, b, c, ap, bp


def euler_poisson_covariant(chart, jet, L, pt=None):
    """The covariant Euler-Poisson covector E_n = -pi'_n - pi1_l R_nkm^l u^m u^k.

    jet must carry u3: pi contains u'', so its covariant derivative
    involves u'''.
    """
    if jet.u3 is None:
        raise ValueError("euler_poisson_covariant requires a jet with u3")
    pt = pt or chart.point(jet.x)
    inv, s1, s2 = _jet_scalars(pt, jet)
    s3 = pt.inner(jet.u2, jet.u2)
    sig1 = pt.inner(jet.u, jet.u3)
    sig2 = pt.inner(jet.u1, jet.u3)
    a, b, c, ap, bp = _pi_derivative_coeffs(L, inv, s1, s2, s3, sig1, sig2)

    u_l = pt.lower(jet.u)
    u1_l = pt.lower(jet.u1)
    u2_l = pt.lower(jet.u2)
    u3_l = pt.lower(jet.u3)
    # pi' by covariant Leibniz; the u'' coefficient is b + c' = 2b.
    pi_prime = ap * u_l + (a + bp) * u1_l + 2.0 * b * u2_l + c * u3_l

    E = -pi_prime
    if not pt.flat:
        grad = L.grad(inv.gamma, inv.beta, inv.alpha)
        pi1 = grad[1] * u_l + 2.0 * grad[2] * u1_l
        E = E - np.einsum("nkml,l,k,m->n", pt.riemann, pi1, jet.u, jet.u)
    return EulerPoissonValue(E)


# ----------------------------------------------------------------------
# jet conversion between ordinary and covariant derivative chains
# ----------------------------------------------------------------------

def _conn_terms(pt):
    gamma = pt.gamma

    def G(a, b):
        return np.einsum("nlm,l,m->n", gamma, a, b)

    def dG(v, a, b):
        return np.einsum("nlmk,k,l,m->n", pt.dgamma, v, a, b)

    def ddG(v, w, a, b):
        return np.einsum("nlmkp,k,p,l,m->n", pt.d2gamma, v, w, a, b)

    return G, dG, ddG


def jet_coordinate_to_covariant(chart, x, u, udot, uddot=None, udddot=None,
                                param=0.0, pt=None):
    """Convert ordinary derivatives (u, udot, uddot, udddot) to a covariant jet."""
    pt = pt or chart.point(x)
    u = np.asarray(u, dtype=float)
    udot = np.asarray(udot, dtype=float)
    if pt.flat:
        return CovariantJet(pt.x, u, udot,
                            None if uddot is None else np.asarray(uddot, float),
                            None if udddot is None else np.asarray(udddot, float),
                            param=param)
    G, dG, ddG = _conn_terms(pt)
    u1 = udot + G(u, u)
    u2 = u3 = None
    if uddot is not None:
        uddot = np.asarray(uddot, dtype=float)
        du1 = uddot + dG(u, u, u) + 2.0 * G(udot, u)
        u2 = du1 + G(u1, u)
        if udddot is not None:
            udddot = np.asarray(udddot, dtype=float)
            du2 = (udddot
                   + ddG(u, u, u, u) + dG(udot, u, u) + 2.0 * dG(u, udot, u)
                   + 2.0 * (dG(u, udot, u) + G(uddot, u) + G(udot, udot))
                   + dG(u, u1, u) + G(du1, u) + G(u1, udot))
            u3 = du2 + G(u2, u)
    return CovariantJet(pt.x, u, u1, u2, u3, param=param)


def jet_covariant_to_coordinate(chart, jet, pt=None):
    """Inverse of jet_coordinate_to_covariant; returns (x, u, udot, uddot, udddot)."""
    pt = pt or chart.point(jet.x)
    if pt.flat:
        return jet.x, jet.u, jet.u1, jet.u2, jet.u3
    G, dG, ddG = _conn_terms(pt)
    u = jet.u
    udot = jet.u1 - G(u, u)
    uddot = udddot = None
    if jet.u2 is not None:
        du1 = jet.u2 - G(jet.u1, u)
        uddot = du1 - dG(u, u, u) - 2.0 * G(udot, u)
        if jet.u3 is not None:
            du2 = jet.u3 - G(jet.u2, u)
            udddot = (du2
                      - ddG(u, u, u, u) - dG(udot, u, u) - 2.0 * dG(u, udot, u)
                      - 2.0 * (dG(u, udot, u) + G(uddot, u) + G(udot, udot))
                      - dG(u, jet.u1, u) - G(du1, u) - G(jet.u1, udot))
    return jet.x, u, udot, uddot, udddot


# ----------------------------------------------------------------------
# gauge handling
# ----------------------------------------------------------------------

def make_natural(chart, jet, pt=None):
    """Project a jet onto the natural gauge.

    Normalizes u to gamma = 1, removes the u-component of u', and (when
    u'' is present) enforces the prolonged condition <u,u''> = -alpha.
    """
    pt = pt or chart.point(jet.x)
    gamma = pt.inner(jet.u, jet.u)
    if gamma <= 0.0:
        raise NonTimelike(f"gamma = {gamma} <= 0")
    u = jet.u / np.sqrt(gamma)
    u1 = jet.u1 - pt.inner(u, jet.u1) * u
    u2 = jet.u2
    if u2 is not None:
        alpha = pt.inner(u1, u1)
        u2 = u2 + (-alpha - pt.inner(u, u2)) * u
    return CovariantJet(jet.x, u, u1, u2, jet.u3, param=jet.param, gauge="natural")


def gauge_drift(chart, jet, pt=None):
    """(|gamma - 1|, |beta|) of a jet."""
    pt = pt or chart.point(jet.x)
    return (abs(pt.inner(jet.u, jet.u) - 1.0),
            abs(pt.inner(jet.u, jet.u1)))


def reparametrize_derivs(u, udot, uddot, udddot, phi_derivs):
    """Ordinary derivative chain of x(phi(xi)) from that of x(s) at s = phi(xi).

    phi_derivs = (phi', phi'', phi''', phi'''') at xi.
    """
    p1, p2, p3, p4 = phi_derivs
    v1 = p1 * u
    v2 = p2 * u + p1 ** 2 * udot
    v3 = p3 * u + 3.0 * p2 * p1 * udot + p1 ** 3 * uddot
    v4 = (p4 * u + (4.0 * p3 * p1 + 3.0 * p2 ** 2) * udot
          + 6.0 * p2 * p1 ** 2 * uddot + p1 ** 4 * udddot)
    return v1, v2, v3, v4


# ----------------------------------------------------------------------
# coordinate-space view of the Lagrangian, and the Zermelo conditions
# ----------------------------------------------------------------------

def as_coordinate_function(chart, L):
    """L as a function of (x, u, udot): invariants built from g(x) and Gamma(x)."""

    def Lc(x, u, udot):
        pt = chart.point(x)
        if pt.flat:
            u1 = np.asarray(udot, dtype=float)
        else:
            u1 = udot + np.einsum("nlm,l,m->n", pt.gamma, u, u)
        gamma = pt.inner(u, u)
        if gamma <= 0.0:
            raise NonTimelike(f"gamma = {gamma} <= 0")
        return L.value(gamma, pt.inner(u, u1), pt.inner(u1, u1))

    return Lc


def zermelo_check(chart, x, u, udot, Lc, h_rel=1e-4):
    """Residuals of the second-order Zermelo homogeneity conditions.

    res1 = u^n dL/du^n + 2 udot^n dL/dudot^n - L
    res2 = u^n dL/dudot^n

    Both vanish iff the action integral is parametrization-independent.
    Partials are taken numerically on the coordinate-expressed L.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    udot = np.asarray(udot, dtype=float)
    dL_du = partial_gradient(lambda v: Lc(x, v, udot), u, h_rel)
    dL_dudot = partial_gradient(lambda v: Lc(x, u, v), udot, h_rel)
    res1 = float(u @ dL_du + 2.0 * udot @ dL_dudot - Lc(x, u, udot))
    res2 = float(u @ dL_dudot)
    return res1, res2
