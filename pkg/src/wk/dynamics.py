"""Gauge-fixed integration of the fourth-order extremal worldline equation.

The full fourth-order system is degenerate along u (reparametrization
invariance), so the flow is integrated in the arc-length gauge: the state
is (x, u, u', u'') and u''' comes from solving the natural-parameter form
of the extremal equation linearly at every stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import variational as var
from .errors import GaugeViolated, StepUnderflow, WkError
from .variational import CovariantJet, EPS_GAUGE


@dataclass(frozen=True)
class IntegratorConfig:
    step: float = 1e-3
    horizon: float = 10.0
    method: str = "rk4"            # "rk4" | "rk45"
    gauge_projection: bool = True
    drift_abort: float = 1e-3
    atol: float = 1e-10
    rtol: float = 1e-8
    record_stride: int = 1

    def __post_init__(self):
        if self.step <= 0 or self.horizon <= 0:
            raise ValueError("step and horizon must be positive")
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class DixonState:
    """Momentum covector P = pi and spin 2-form S = u wedge pi1 (lowered)."""

    P: np.ndarray
    S: np.ndarray


@dataclass(frozen=True)
class TrajectorySample:
    s: float
    jet: CovariantJet
    invariants: var.Invariants
    momenta: var.Momenta
    dixon: DixonState
    diagnostics: dict


@dataclass
class Trajectory:
    samples: list = field(default_factory=list)
    truncated: bool = False

    def column(self, fn):
        return np.array([fn(smp) for smp in self.samples])

    @property
    def s(self):
        return self.column(lambda smp: smp.s)


# ----------------------------------------------------------------------
# the u''' solver
# ----------------------------------------------------------------------

def solve_u3(chart, jet, L, pt=None, eps_abort=1e-3):
    """u''' of the natural-gauge extremal flow for the Lagrangian L."""
    if L.name == "kawaguchi":
        return solve_u3_kawaguchi(chart, jet, L.params["A"], pt=pt,
                                  eps_abort=eps_abort)
    return solve_u3_general(chart, jet, L, pt=pt, eps_abort=eps_abort)


def _gauge_guard(chart, jet, pt, eps_abort):
    dg, db = var.gauge_drift(chart, jet, pt=pt)
    if max(dg, db) > eps_abort:
        raise GaugeViolated(
            f"natural-gauge drift (|gamma-1|={dg:.3e}, |beta|={db:.3e}) "
            f"exceeds {eps_abort:.1e}")


def solve_u3_kawaguchi(chart, jet, A, pt=None, eps_abort=1e-3):
    """Closed-form arc-length solve for L = (k^2+A)|u|:

    u'''^n = 1/2 [ (A - 3 alpha) u'^n - 6 <u'',u'> u^n
                   + g^nj pi1_l R_jkm^l u^m u^k ]
    """
    pt = pt or chart.point(jet.x)
    _gauge_guard(chart, jet, pt, eps_abort)
    inv = var.invariants_at(chart, jet, pt=pt)
    s2 = pt.inner(jet.u1, jet.u2)
    u3 = 0.5 * ((A - 3.0 * inv.alpha) * jet.u1 - 6.0 * s2 * jet.u)
    if not pt.flat:
        pi1 = 2.0 * pt.lower(jet.u1)   # natural-gauge pi1 for the kawaguchi L
        K = np.einsum("nkml,l,k,m->n", pt.riemann, pi1, jet.u, jet.u)
        u3 = u3 + 0.5 * pt.raise_(K)
    return u3


def solve_u3_general(chart, jet, L, pt=None, eps_abort=1e-3):
    """Arc-length u''' for any invariant Lagrangian, by a linear solve.

    Writing pi = a u + b u' + c u'', the extremal equation pi' = -K fixes
    c u''' up to the scalars sig1 = <u,u'''> and sig2 = <u',u'''> that enter
    through second chain-rule derivatives of the L-partials.  sig1 is set
    by the natural-gauge prolongation (<u,u'''> = -3<u',u''>) and sig2 by
    contracting the equation with u'.
    """
    pt = pt or chart.point(jet.x)
    _gauge_guard(chart, jet, pt, eps_abort)
    inv = var.invariants_at(chart, jet, pt=pt)
    s1 = pt.inner(jet.u, jet.u2)
    s2 = pt.inner(jet.u1, jet.u2)
    s3 = pt.inner(jet.u2, jet.u2)

    grad = L.grad(inv.gamma, inv.beta, inv.alpha)
    hess = L.hess(inv.gamma, inv.beta, inv.alpha)
    third = L.third(inv.gamma, inv.beta, inv.alpha)
    Yp = var._first_chain(inv, s1, s2)
    Ypp0 = np.array([2.0 * (inv.alpha + s1), 3.0 * s2, 2.0 * s3])
    dL = hess @ Yp
    ddL0 = hess @ Ypp0 + np.einsum("xyz,y,z->x", third, Yp, Yp)

    a = 2.0 * grad[0] - dL[1]
    b = -2.0 * dL[2]
    c = -2.0 * grad[2]
    if abs(c) < 1e-14:
        raise WkError("principal coefficient -2 L_alpha vanishes; "
                      "the fourth-order equation is degenerate at this jet")
    ap0 = 2.0 * dL[0] - ddL0[1]
    bp0 = -2.0 * ddL0[2]

    u_l = pt.lower(jet.u)
    u1_l = pt.lower(jet.u1)
    rhs0 = -ap0 * jet.u - (a + bp0) * jet.u1 - 2.0 * b * jet.u2
    if not pt.flat:
        pi1 = grad[1] * u_l + 2.0 * grad[2] * u1_l
        K = np.einsum("nkml,l,k,m->n", pt.riemann, pi1, jet.u, jet.u)
        rhs0 = rhs0 - pt.raise_(K)

    sig1 = -3.0 * s2
    V1 = hess[1, 1] * jet.u + 2.0 * hess[2, 1] * jet.u1
    V2 = 2.0 * hess[1, 2] * jet.u + 4.0 * hess[2, 2] * jet.u1
    base = rhs0 + sig1 * V1
    denom = c - (2.0 * hess[1, 2] * inv.beta + 4.0 * hess[2, 2] * inv.alpha)
    if abs(denom) < 1e-12 * max(1.0, abs(c)):
        raise WkError("degenerate <u', .> contraction while solving for u'''")
    sig2 = float(u1_l @ base) / denom
    return (base + sig2 * V2) / c


# ----------------------------------------------------------------------
# Dixon state and residuals
# ----------------------------------------------------------------------

def dixon_state(chart, jet, L, pt=None, momenta=None):
    """P = pi, S_nm = u_n pi1_m - u_m pi1_n for the given Lagrangian."""
    pt = pt or chart.point(jet.x)
    m = momenta or var.momenta_general(chart, jet, L, pt=pt)
    u_l = pt.lower(jet.u)
    S = np.outer(u_l, m.pi1) - np.outer(m.pi1, u_l)
    return DixonState(P=m.pi, S=S)


def dixon_spin_identity_residual(chart, jet, L, pt=None):
    """Max-abs residual of S'_nm - (P_n u_m - P_m u_n).

    Follows algebraically from the momenta reconstruction identity, so it
    holds at round-off on any jet with (u, u', u''), extremal or not.
    """
    pt = pt or chart.point(jet.x)
    m = var.momenta_general(chart, jet, L, pt=pt)
    u_l = pt.lower(jet.u)
    u1_l = pt.lower(jet.u1)
    S_prime = (np.outer(u1_l, m.pi1) - np.outer(m.pi1, u1_l)
               + np.outer(u_l, m.pi1_prime) - np.outer(m.pi1_prime, u_l))
    rhs = np.outer(m.pi, u_l) - np.outer(u_l, m.pi)
    return float(np.max(np.abs(S_prime - rhs)))


def dixon_momentum_residual(chart, trajectory, L=None):
    """Normalized residual of P'_n + (1/2) R_nm^kl u^m S_kl along a trajectory.

    P' is taken by 4th-order central differences of the recorded momenta,
    corrected to a covariant derivative with the covector pattern; needs a
    uniformly sampled trajectory with at least 5 samples.
    """
    samples = trajectory.samples
    if len(samples) < 5:
        raise ValueError("need at least 5 uniform samples for the 5-point stencil")
    s = np.array([smp.s for smp in samples])
    ds = s[1] - s[0]
    if np.max(np.abs(np.diff(s) - ds)) > 1e-9 * max(abs(ds), 1.0):
        raise ValueError("trajectory samples are not uniform in s")
    P = np.array([smp.momenta.pi for smp in samples])
    worst = 0.0
    for i in range(2, len(samples) - 2):
        dP = (-P[i + 2] + 8.0 * P[i + 1] - 8.0 * P[i - 1] + P[i - 2]) / (12.0 * ds)
        smp = samples[i]
        pt = chart.point(smp.jet.x)
        if pt.flat:
            P_prime = dP
            term = np.zeros_like(dP)
        else:
            P_prime = dP - np.einsum("mln,m,l->n", pt.gamma, P[i], smp.jet.u)
            R_low = np.einsum("kmnl,lp->kmnp", pt.riemann, pt.g)
            R_mix = np.einsum("nmab,ak,bl->nmkl", R_low, pt.ginv, pt.ginv)
            term = 0.5 * np.einsum("nmkl,m,kl->n", R_mix, smp.jet.u, smp.dixon.S)
        res = float(np.max(np.abs(P_prime + term)))
        norm = max(float(np.max(np.abs(P_prime))), 1.0)
        worst = max(worst, res / norm)
    return worst


# ----------------------------------------------------------------------
# closed-form flat-space helix (Riewe / Zitterbewegung validator)
# ----------------------------------------------------------------------

class RieweHelix:
    """Closed-form helical worldline in Minkowski coordinates.

    x(s) = (b s, r cos(omega s + phase), r sin(omega s + phase), 0) with
    b^2 = 1 + r^2 omega^2, so <u,u> = 1 under signature (+,-,-,-).  Every
    derivative satisfies d4x/ds4 + omega^2 d2x/ds2 = 0 identically.
    """

    def __init__(self, r, omega, phase=0.0, axes=(1, 2), dim=4):
        self.r = float(r)
        self.omega = float(omega)
        self.phase = float(phase)
        self.axes = tuple(axes)
        self.dim = dim
        self.b = np.sqrt(1.0 + self.r ** 2 * self.omega ** 2)

    @property
    def alpha(self):
        """<u',u'> = -(r omega^2)^2 on the helix (natural gauge)."""
        return -(self.r * self.omega ** 2) ** 2

    @property
    def k2(self):
        return self.alpha

    def on_constraint_A(self):
        """The A for which the helix is extremal: k^2 = A/3 + 2 omega^2 / 3."""
        return 3.0 * self.alpha - 2.0 * self.omega ** 2

    def _trig(self, s, order):
        w, ph = self.omega, self.phase
        c = self.r * w ** order * np.cos(w * s + ph + order * np.pi / 2.0)
        sn = self.r * w ** order * np.sin(w * s + ph + order * np.pi / 2.0)
        return c, sn

    def derivative(self, s, order):
        """order-th derivative of x with respect to arc length s."""
        out = np.zeros(self.dim)
        if order == 0:
            out[0] = self.b * s
        elif order == 1:
            out[0] = self.b
        c, sn = self._trig(s, order)
        i, j = self.axes
        out[i] = c
        out[j] = sn
        return out

    def x(self, s):
        return self.derivative(s, 0)

    def jet(self, s, with_u3=True):
        """Natural-gauge covariant jet at arc length s (flat space)."""
        return CovariantJet(
            self.derivative(s, 0), self.derivative(s, 1), self.derivative(s, 2),
            self.derivative(s, 3), self.derivative(s, 4) if with_u3 else None,
            param=float(s), gauge="natural")


def riewe_helix(r, omega, axes=(1, 2), phase=0.0):
    """Factory for the closed-form Riewe helix validator."""
    return RieweHelix(r, omega, phase=phase, axes=axes)


# ----------------------------------------------------------------------
# integration
# ----------------------------------------------------------------------

def _pack(jet):
    return np.concatenate([jet.x, jet.u, jet.u1, jet.u2])


def _unpack(y, dim):
    return y[:dim], y[dim:2 * dim], y[2 * dim:3 * dim], y[3 * dim:]


def _rhs(chart, L, y, eps_abort):
    dim = chart.dim
    x, u, u1, u2 = _unpack(y, dim)
    pt = chart.point(x)
    jet = CovariantJet(x, u, u1, u2)
    u3 = solve_u3(chart, jet, L, pt=pt, eps_abort=eps_abort)
    if pt.flat:
        return np.concatenate([u, u1, u2, u3])
    gamma = pt.gamma
    du = u1 - np.einsum("nlm,m,l->n", gamma, u, u)
    du1 = u2 - np.einsum("nlm,m,l->n", gamma, u1, u)
    du2 = u3 - np.einsum("nlm,m,l->n", gamma, u2, u)
    return np.concatenate([u, du, du1, du2])


def _project(chart, y):
    dim = chart.dim
    x, u, u1, u2 = _unpack(y, dim)
    pt = chart.point(x)
    u = u / np.sqrt(pt.inner(u, u))
    u1 = u1 - pt.inner(u, u1) * u
    return np.concatenate([x, u, u1, u2])


def _rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])


def _dp_step(f, y, h):
    k = []
    for i in range(7):
        yi = y.copy()
        for j, aij in enumerate(_DP_A[i]):
            yi = yi + h * aij * k[j]
        k.append(f(yi))
    k = np.array(k)
    y5 = y + h * (_DP_B5 @ k)
    err = h * ((_DP_B5 - _DP_B4) @ k)
    return y5, err


def integrate(chart, initial, L, cfg):
    """Propagate a natural-gauge jet along the extremal flow of L.

    Returns a Trajectory with one sample per recorded step; raises
    GaugeViolated / OutOfChart with the partial trajectory attached when
    the flow leaves its admissible region.
    """
    pt0 = chart.point(initial.x)
    dg, db = var.gauge_drift(chart, initial, pt=pt0)
    if max(dg, db) > EPS_GAUGE:
        raise GaugeViolated(
            f"initial jet not natural to {EPS_GAUGE:.0e} "
            f"(|gamma-1|={dg:.2e}, |beta|={db:.2e})")
    if initial.u2 is None:
        raise ValueError("integration needs a full (u, u', u'') jet")

    traj = Trajectory()
    f = lambda y: _rhs(chart, L, y, cfg.drift_abort)
    y = _pack(initial)
    s = 0.0
    traj.samples.append(_sample(chart, L, s, y))

    try:
        if cfg.method == "rk4":
            n_steps = int(round(cfg.horizon / cfg.step))
            for i in range(1, n_steps + 1):
                y = _rk4_step(f, y, cfg.step)
                if cfg.gauge_projection:
                    y = _project(chart, y)
                s = i * cfg.step
                _check_drift(chart, y, s, cfg.drift_abort)
                if i % cfg.record_stride == 0 or i == n_steps:
                    traj.samples.append(_sample(chart, L, s, y))
        else:
            h = cfg.step
            h_min = 1e-12 * cfg.horizon
            while s < cfg.horizon - 1e-14 * cfg.horizon:
                h = min(h, cfg.horizon - s)
                y_new, err = _dp_step(f, y, h)
                scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
                err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))
                if err_norm <= 1.0:
                    s += h
                    y = y_new
                    if cfg.gauge_projection:
                        y = _project(chart, y)
                    _check_drift(chart, y, s, cfg.drift_abort)
                    traj.samples.append(_sample(chart, L, s, y))
                h = h * min(5.0, max(0.2, 0.9 * (max(err_norm, 1e-10)) ** -0.2))
                if h < h_min:
                    raise StepUnderflow(
                        f"step fell below {h_min:.1e} at s={s}", trajectory=traj)
        return traj
    except (GaugeViolated, StepUnderflow) as exc:
        traj.truncated = True
        exc.trajectory = traj
        raise
    except WkError as exc:
        traj.truncated = True
        exc.trajectory = traj
        raise


def _check_drift(chart, y, s, eps_abort):
    dim = chart.dim
    x, u, u1, _ = _unpack(y, dim)
    pt = chart.point(x)
    dg = abs(pt.inner(u, u) - 1.0)
    db = abs(pt.inner(u, u1))
    if max(dg, db) > eps_abort:
        raise GaugeViolated(
            f"gauge drift (|gamma-1|={dg:.3e}, |beta|={db:.3e}) "
            f"exceeded {eps_abort:.1e} at s={s}")


def _sample(chart, L, s, y):
    dim = chart.dim
    x, u, u1, u2 = _unpack(y, dim)
    pt = chart.point(x)
    jet = CovariantJet(x, u, u1, u2, param=s, gauge="natural")
    inv = var.invariants_at(chart, jet, pt=pt)
    u3 = solve_u3(chart, jet, L, pt=pt, eps_abort=np.inf)
    jet = jet.with_u3(u3)
    momenta = var.momenta_general(chart, jet, L, pt=pt)
    dixon = dixon_state(chart, jet, L, pt=pt, momenta=momenta)
    E = var.euler_poisson_covariant(chart, jet, L, pt=pt).E
    k2 = (inv.alpha * inv.gamma - inv.beta ** 2) / inv.gamma ** 3
    diagnostics = {
        "gamma_drift": abs(inv.gamma - 1.0),
        "beta_drift": abs(inv.beta),
        "k2": k2,
        "E_residual": float(np.linalg.norm(E) / max(1.0, np.linalg.norm(momenta.pi))),
    }
    return TrajectorySample(s, jet, inv, momenta, dixon, diagnostics)
