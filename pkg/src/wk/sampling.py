"""Random admissible jets and points for property tests and verify suites.

Velocity components are drawn in an orthonormal frame and rescaled by the
coordinate frame factors 1/sqrt(|g_kk|), which keeps the differential
invariants O(1) on every built-in chart regardless of coordinate ranges.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import OutOfChart
from .variational import CovariantJet

DEFAULT_SEED = 42


def seed_from_env():
    return int(os.environ.get("WK_SEED", DEFAULT_SEED))


def frame_scales(pt):
    return 1.0 / np.sqrt(np.abs(np.diag(pt.g)))


def random_point(chart, rng):
    while True:
        x = chart.sample_point(rng)
        try:
            return x, chart.point(x)
        except OutOfChart:
            continue


def random_jet(chart, rng, with_u2=True, with_u3=True, gamma_range=(0.5, 1.5)):
    """Random timelike jet with frame-scaled components and gamma in gamma_range."""
    while True:
        x, pt = random_point(chart, rng)
        sc = frame_scales(pt)
        u = rng.uniform(-0.3, 0.3, chart.dim)
        u[0] = rng.uniform(0.9, 1.5)
        u = u * sc
        g0 = pt.inner(u, u)
        if g0 <= 0.05:
            continue
        u = u * np.sqrt(rng.uniform(*gamma_range) / g0)
        u1 = rng.uniform(-0.5, 0.5, chart.dim) * sc
        u2 = rng.uniform(-0.5, 0.5, chart.dim) * sc if with_u2 else None
        u3 = rng.uniform(-0.5, 0.5, chart.dim) * sc if (with_u2 and with_u3) else None
        return CovariantJet(x, u, u1, u2, u3), pt
