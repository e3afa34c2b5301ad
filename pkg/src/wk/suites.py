"""Named verification suites behind the ``wk verify`` subcommand.

Each suite returns a report dict::

    {"suite": name,
     "checks": [{"check_name", "n_cases", "max_residual", "tolerance", "pass"}],
     "pass": bool}

Suites are deterministic given the seed (WK_SEED, default 42).
"""

from __future__ import annotations

import numpy as np

from . import dynamics as dyn
from . import oracles as orc
from . import variational as var
from .geometry import SpacetimeChart
from .sampling import random_jet, random_point, seed_from_env

SUITES = ("proposition1", "zermelo", "riewe", "dixon", "proposition2")


def _charts():
    return [SpacetimeChart.minkowski(),
            SpacetimeChart.schwarzschild(1.0),
            SpacetimeChart.desitter(0.1)]


def _check(name, n_cases, max_residual, tolerance):
    return {"check_name": name,
            "n_cases": int(n_cases),
            "max_residual": float(max_residual),
            "tolerance": float(tolerance),
            "pass": bool(max_residual <= tolerance)}


def _report(name, checks):
    return {"suite": name, "checks": checks,
            "pass": all(c["pass"] for c in checks)}


# ----------------------------------------------------------------------
# scenario builders shared with the shipped configs
# ----------------------------------------------------------------------

def helix_scenario(r=0.5, omega=2.0):
    """Flat-space helix initial data with the on-constraint coefficient A."""
    chart = SpacetimeChart.minkowski()
    helix = dyn.riewe_helix(r, omega)
    L = var.InvariantLagrangian.kawaguchi(helix.on_constraint_A())
    jet0 = helix.jet(0.0, with_u3=False)
    return chart, helix, jet0, L


def schwarzschild_spin_scenario(L=None, a_spin=0.7, omega_spin=2.0,
                                r0=10.0, M=1.0):
    """Circular-orbit base with a transverse acceleration loop exciting spin."""
    chart = SpacetimeChart.schwarzschild(M)
    x0 = np.array([0.0, r0, np.pi / 2, 0.0])
    f = 1.0 - 2.0 * M / r0
    Omega = np.sqrt(M / r0 ** 3)
    ut = 1.0 / np.sqrt(f - r0 ** 2 * Omega ** 2)
    u = np.array([ut, 0.0, 0.0, Omega * ut])
    e_r = np.array([0.0, np.sqrt(f), 0.0, 0.0])
    e_th = np.array([0.0, 0.0, 1.0 / r0, 0.0])
    alpha = -a_spin ** 2
    u1 = a_spin * e_r
    u2 = -alpha * u + a_spin * omega_spin * e_th
    if L is None:
        L = var.InvariantLagrangian.kawaguchi(3.0 * alpha - 2.0 * omega_spin ** 2)
    jet0 = var.make_natural(chart, var.CovariantJet(x0, u, u1, u2))
    return chart, jet0, L


# ----------------------------------------------------------------------
# suites
# ----------------------------------------------------------------------

def suite_proposition1(n_curves=50, seed=None):
    """Coordinate brute-force Euler-Poisson vs the covariant assembler."""
    rng = np.random.default_rng(seed_from_env() if seed is None else seed)
    lagrangians = [var.InvariantLagrangian.kawaguchi(0.8),
                   var.InvariantLagrangian.test2()]
    checks = []
    for chart in _charts():
        for L in lagrangians:
            Lc = var.as_coordinate_function(chart, L)
            worst_E = worst_p = 0.0
            for _ in range(n_curves):
                curve = orc.random_test_curve(chart, rng)
                xi = rng.uniform(-0.2, 0.2)
                Ec = orc.coordinate_euler_poisson(chart, curve, xi, Lc)
                jet = curve.jet(chart, xi)
                Ev = var.euler_poisson_covariant(chart, jet, L).E
                worst_E = max(worst_E, float(
                    np.max(np.abs(Ec - Ev)) / max(1.0, np.max(np.abs(Ev)))))
                cm = orc.coordinate_momenta(chart, curve, xi, Lc)
                mom = var.momenta_general(chart, jet, L)
                pt = chart.point(jet.x)
                corr = (np.zeros(chart.dim) if pt.flat else
                        np.einsum("qmn,m,q->n", pt.gamma, jet.u, mom.pi1))
                worst_p = max(worst_p, float(
                    np.max(np.abs(cm.p - mom.pi - corr))
                    / max(1.0, np.max(np.abs(mom.pi)))))
            tag = f"{chart.name}/{L.name}"
            checks.append(_check(f"euler_poisson_equivalence[{tag}]",
                                 n_curves, worst_E, 1e-6))
            checks.append(_check(f"momentum_relation[{tag}]",
                                 n_curves, worst_p, 1e-6))
    return _report("proposition1", checks)


def suite_zermelo(n_points=100, seed=None):
    """Parametrization-independence identities of the coordinate Lagrangian."""
    rng = np.random.default_rng(seed_from_env() if seed is None else seed)
    L = var.InvariantLagrangian.kawaguchi(0.8)
    checks = []
    for chart in _charts():
        Lc = var.as_coordinate_function(chart, L)
        w1 = w2 = 0.0
        for _ in range(n_points):
            jet, _pt = random_jet(chart, rng, with_u3=False)
            udot = var.jet_covariant_to_coordinate(chart, jet)[2]
            r1, r2 = var.zermelo_check(chart, jet.x, jet.u, udot, Lc)
            w1, w2 = max(w1, r1), max(w2, r2)
        checks.append(_check(f"homogeneity_first[{chart.name}]",
                             n_points, w1, 1e-6))
        checks.append(_check(f"homogeneity_second[{chart.name}]",
                             n_points, w2, 1e-6))
    checks.append(_check("reparametrized_helix_extremal",
                         *(_reparam_helix_residual()), 1e-7))
    return _report("zermelo", checks)


def _reparam_helix_residual(n_points=20):
    """E residual of the helix after the reparametrization phi(t) = t + 0.3 sin t."""
    chart, helix, _jet0, L = helix_scenario()
    worst = 0.0
    for t in np.linspace(0.2, 9.8, n_points):
        s = t + 0.3 * np.sin(t)
        phi = (1.0 + 0.3 * np.cos(t), -0.3 * np.sin(t),
               -0.3 * np.cos(t), 0.3 * np.sin(t))
        x = helix.derivative(s, 0)
        u, ud, udd, uddd = var.reparametrize_derivs(
            helix.derivative(s, 1), helix.derivative(s, 2),
            helix.derivative(s, 3), helix.derivative(s, 4), phi)
        jet = var.jet_coordinate_to_covariant(chart, x, u, ud, udd, uddd)
        E = var.euler_poisson_covariant(chart, jet, L).E
        worst = max(worst, float(np.max(np.abs(E))))
    return n_points, worst


def suite_riewe(step=1e-3, horizon=10.0):
    """Flat-space helical recovery of the fourth-order oscillator motion."""
    chart, helix, jet0, L = helix_scenario()
    cfg = dyn.IntegratorConfig(step=step, horizon=horizon)
    traj = dyn.integrate(chart, jet0, L, cfg)
    sup = 0.0
    for smp in traj.samples:
        sup = max(sup, float(np.max(np.abs(smp.jet.x - helix.x(smp.s)))))
    k2 = traj.column(lambda smp: smp.diagnostics["k2"])
    drift = float(np.max(np.abs(k2 - helix.k2)))
    n = len(traj.samples)
    return _report("riewe", [
        _check("helix_supnorm_error", n, sup, 1e-6),
        _check("k2_constancy", n, drift, 1e-7),
    ])


def _transport_leg(chart, x0, direction, eps, V, nsteps=8):
    """Parallel-transport V along the straight coordinate leg x0 + t*eps*dir."""
    h = 1.0 / nsteps
    x, v = np.array(x0, dtype=float), np.array(V, dtype=float)
    step_vec = eps * np.asarray(direction, dtype=float)
    for _ in range(nsteps):
        def rhs(tau, vv):
            pt = chart.point(x + tau * h * step_vec)
            return -h * np.einsum("nlm,l,m->n", pt.gamma, vv, step_vec)
        k1 = rhs(0.0, v)
        k2 = rhs(0.5, v + 0.5 * k1)
        k3 = rhs(0.5, v + 0.5 * k2)
        k4 = rhs(1.0, v + k3)
        v = v + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        x = x + h * step_vec
    return x, v


def curvature_holonomy_residual(chart, x0, a, b, V, eps=5e-3):
    """Relative mismatch between loop-transport holonomy and the curvature tensor.

    Transport uses only the connection, so this catches any inconsistency
    (sign included) between the assembled curvature and the connection it
    is supposed to come from. The leading O(eps) loop error is removed by
    extrapolating over two loop sizes.
    """

    def loop(e):
        x, v = _transport_leg(chart, x0, a, e, V)
        x, v = _transport_leg(chart, x, b, e, v)
        x, v = _transport_leg(chart, x, -np.asarray(a, dtype=float), e, v)
        _x, v = _transport_leg(chart, x, -np.asarray(b, dtype=float), e, v)
        return (v - V) / e ** 2

    dV = 2.0 * loop(eps / 2.0) - loop(eps)
    pt = chart.point(x0)
    expected = -np.einsum("kmnl,n,m,k->l", pt.riemann, V, a, b)
    scale = max(float(np.max(np.abs(expected))), 1e-12)
    return float(np.max(np.abs(dV - expected))) / scale


def _dixon_checks(L=None, seed=None, n_jets=25, step=0.01, horizon=50.0):
    # L=None picks the on-constraint Kawaguchi coefficient of the scenario
    chart, jet0, L = schwarzschild_spin_scenario(L=L)
    rng = np.random.default_rng(seed_from_env() if seed is None else seed)
    checks = []
    worst2 = 0.0
    n2 = 0
    for ch in _charts():
        for _ in range(n_jets):
            jet, _pt = random_jet(ch, rng, with_u3=True)
            worst2 = max(worst2, dyn.dixon_spin_identity_residual(ch, jet, L))
            n2 += 1
    checks.append(_check(f"spin_identity_pointwise[{L.name}]", n2, worst2, 1e-9))

    # holonomy anchor: a sign-consistent flip of the curvature tensor would
    # cancel out of the transport identities, so tie it to the connection
    worst_h = 0.0
    n_h = 0
    for ch in _charts():
        if ch.name == "minkowski":
            continue
        for _ in range(3):
            _x, pt = random_point(ch, rng)
            a, b, V = rng.normal(size=(3, ch.dim))
            worst_h = max(worst_h,
                          curvature_holonomy_residual(ch, pt.x, a, b, V))
            n_h += 1
    checks.append(_check("curvature_holonomy", n_h, worst_h, 1e-3))

    cfg = dyn.IntegratorConfig(step=step, horizon=horizon)
    traj = dyn.integrate(chart, jet0, L, cfg)
    res1 = dyn.dixon_momentum_residual(chart, traj)
    checks.append(_check(f"momentum_transport[{L.name}]",
                         len(traj.samples), res1, 1e-5))
    return checks


def suite_dixon(seed=None):
    """Momentum/spin transport along an extremal Schwarzschild worldline."""
    return _report("dixon", _dixon_checks(seed=seed))


def suite_proposition2(seed=None):
    """The Dixon checks repeated with the second sample Lagrangian."""
    return _report("proposition2", _dixon_checks(
        L=var.InvariantLagrangian.test2(), seed=seed))


def run_suite(name, seed=None):
    if name == "proposition1":
        return suite_proposition1(seed=seed)
    if name == "zermelo":
        return suite_zermelo(seed=seed)
    if name == "riewe":
        return suite_riewe()
    if name == "dixon":
        return suite_dixon(seed=seed)
    if name == "proposition2":
        return suite_proposition2(seed=seed)
    raise ValueError(f"unknown suite {name!r}")
