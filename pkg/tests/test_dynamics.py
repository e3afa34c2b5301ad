import numpy as np
import pytest

from wk import dynamics as dyn
from wk import variational as var
from wk.errors import GaugeViolated
from wk.geometry import SpacetimeChart
from wk.sampling import random_jet
from wk.suites import schwarzschild_spin_scenario


def test_minkowski_geodesic_straight_line():
    chart = SpacetimeChart.minkowski()
    jet0 = var.CovariantJet(np.zeros(4), np.array([1.0, 0.0, 0.0, 0.0]),
                            np.zeros(4), np.zeros(4), gauge="natural")
    L = var.InvariantLagrangian.kawaguchi(1.0)
    traj = dyn.integrate(chart, jet0, L, dyn.IntegratorConfig(step=0.01))
    for smp in traj.samples:
        expected = jet0.x + jet0.u * smp.s
        assert np.max(np.abs(smp.jet.x - expected)) < 1e-12
        assert smp.diagnostics["E_residual"] < 1e-12


def test_helix_closed_form_short():
    chart = SpacetimeChart.minkowski()
    helix = dyn.riewe_helix(0.5, 2.0)
    L = var.InvariantLagrangian.kawaguchi(helix.on_constraint_A())
    traj = dyn.integrate(chart, helix.jet(0.0, with_u3=False), L,
                         dyn.IntegratorConfig(step=1e-3, horizon=2.0))
    sup = max(np.max(np.abs(s.jet.x - helix.x(s.s))) for s in traj.samples)
    assert sup < 1e-7


def test_helix_u3_closed_form():
    chart = SpacetimeChart.minkowski()
    helix = dyn.riewe_helix(0.5, 2.0)
    L = var.InvariantLagrangian.kawaguchi(helix.on_constraint_A())
    for s in (0.0, 0.7, 2.2):
        jet = helix.jet(s, with_u3=False)
        u3 = dyn.solve_u3(chart, jet, L)
        assert np.max(np.abs(u3 - helix.derivative(s, 4))) < 1e-12


def test_solve_u3_general_matches_closed_form():
    rng = np.random.default_rng(12)
    L = var.InvariantLagrangian.kawaguchi(0.8)
    for chart in (SpacetimeChart.minkowski(), SpacetimeChart.schwarzschild(1.0)):
        jet, pt = random_jet(chart, rng, with_u3=False)
        jet = var.make_natural(chart, jet, pt=pt)
        a = dyn.solve_u3_kawaguchi(chart, jet, 0.8, pt=pt)
        b = dyn.solve_u3_general(chart, jet, L, pt=pt)
        assert np.max(np.abs(a - b)) < 1e-10


def test_solve_u3_self_consistent():
    # plugging the solved u''' back in makes the extremal equation vanish
    rng = np.random.default_rng(13)
    for L in (var.InvariantLagrangian.kawaguchi(-2.0),
              var.InvariantLagrangian.test2()):
        chart = SpacetimeChart.schwarzschild(1.0)
        jet, pt = random_jet(chart, rng, with_u3=False)
        jet = var.make_natural(chart, jet, pt=pt)
        jet = jet.with_u3(dyn.solve_u3(chart, jet, L, pt=pt))
        E = var.euler_poisson_covariant(chart, jet, L, pt=pt).E
        assert np.max(np.abs(E)) < 1e-10


def test_riewe_helix_properties():
    straight = dyn.riewe_helix(0.0, 1.0)
    assert np.max(np.abs(straight.derivative(1.0, 2))) == 0.0
    helix = dyn.riewe_helix(0.5, 2.0)
    # fourth-order oscillator form: d4x/ds4 + omega^2 d2x/ds2 = 0
    for s in (0.0, 0.9, 3.1):
        res = helix.derivative(s, 4) + 4.0 * helix.derivative(s, 2)
        assert np.max(np.abs(res)) < 1e-12
    assert helix.alpha == pytest.approx(-4.0)
    assert helix.on_constraint_A() == pytest.approx(-20.0)


def test_dixon_state_trivial_cases():
    chart = SpacetimeChart.minkowski()
    A = 1.7
    L = var.InvariantLagrangian.kawaguchi(A)
    u = np.array([1.0, 0.0, 0.0, 0.0])
    geod = var.CovariantJet(np.zeros(4), u, np.zeros(4), np.zeros(4),
                            gauge="natural")
    dx = dyn.dixon_state(chart, geod.with_u3(np.zeros(4)), L)
    assert np.max(np.abs(dx.S)) < 1e-14
    pt = chart.point(np.zeros(4))
    assert np.max(np.abs(dx.P - A * pt.lower(u))) < 1e-12

    helix = dyn.riewe_helix(0.5, 2.0)
    jet = helix.jet(0.3)
    dx = dyn.dixon_state(chart, jet, var.InvariantLagrangian.kawaguchi(
        helix.on_constraint_A()))
    ul = pt.lower(jet.u)
    u1l = pt.lower(jet.u1)
    expected = 2.0 * (np.outer(ul, u1l) - np.outer(u1l, ul))
    assert np.max(np.abs(dx.S - expected)) < 1e-12


def test_dixon_spin_antisymmetry():
    rng = np.random.default_rng(14)
    L = var.InvariantLagrangian.test2()
    for chart in (SpacetimeChart.minkowski(), SpacetimeChart.desitter(0.1)):
        jet, _ = random_jet(chart, rng)
        dx = dyn.dixon_state(chart, jet, L)
        assert np.array_equal(dx.S, -dx.S.T)


def test_dixon_spin_identity_arbitrary_jets():
    rng = np.random.default_rng(15)
    L = var.InvariantLagrangian.kawaguchi(0.5)
    for chart in (SpacetimeChart.schwarzschild(1.0),
                  SpacetimeChart.desitter(0.1)):
        for _ in range(5):
            jet, _ = random_jet(chart, rng)
            assert dyn.dixon_spin_identity_residual(chart, jet, L) < 1e-9


def test_gauge_projection_off_drift_bounded():
    chart = SpacetimeChart.minkowski()
    helix = dyn.riewe_helix(0.5, 2.0)
    L = var.InvariantLagrangian.kawaguchi(helix.on_constraint_A())
    cfg = dyn.IntegratorConfig(step=1e-3, horizon=10.0,
                               gauge_projection=False, drift_abort=1e-3,
                               record_stride=100)
    traj = dyn.integrate(chart, helix.jet(0.0, with_u3=False), L, cfg)
    assert max(s.diagnostics["gamma_drift"] for s in traj.samples) <= 1e-4
    assert max(s.diagnostics["beta_drift"] for s in traj.samples) <= 1e-4


def test_rk45_matches_rk4():
    chart = SpacetimeChart.minkowski()
    helix = dyn.riewe_helix(0.5, 2.0)
    L = var.InvariantLagrangian.kawaguchi(helix.on_constraint_A())
    cfg = dyn.IntegratorConfig(step=1e-2, horizon=3.0, method="rk45")
    traj = dyn.integrate(chart, helix.jet(0.0, with_u3=False), L, cfg)
    final = traj.samples[-1]
    assert final.s == pytest.approx(3.0, abs=1e-10)
    assert np.max(np.abs(final.jet.x - helix.x(final.s))) < 1e-6


def test_initial_gauge_enforced():
    chart = SpacetimeChart.minkowski()
    bad = var.CovariantJet(np.zeros(4), np.array([1.3, 0.0, 0.0, 0.0]),
                           np.zeros(4), np.zeros(4))
    with pytest.raises(GaugeViolated):
        dyn.integrate(chart, bad, var.InvariantLagrangian.kawaguchi(1.0),
                      dyn.IntegratorConfig())


def test_truncation_attaches_partial_trajectory():
    # strong off-flow data in Schwarzschild violates the drift guard
    chart, jet0, L = schwarzschild_spin_scenario(a_spin=0.7, omega_spin=2.0)
    wrongL = var.InvariantLagrangian.kawaguchi(1.0)  # far off the constraint
    cfg = dyn.IntegratorConfig(step=0.05, horizon=50.0, drift_abort=1e-6,
                               gauge_projection=False)
    with pytest.raises(GaugeViolated) as exc_info:
        dyn.integrate(chart, jet0, wrongL, cfg)
    traj = exc_info.value.trajectory
    assert traj is not None and traj.truncated and len(traj.samples) >= 1
