"""Extremal worldlines of a second-order arc-length functional.

Modules: geometry (charts and tensors), variational (invariants, momenta,
extremal expression), dynamics (gauge-fixed integration, momentum/spin
transport), oracles (brute-force verifiers), suites (named verification
suites), cli (scenario runner).
"""

from .dynamics import DixonState, IntegratorConfig, Trajectory, integrate, riewe_helix
from .geometry import SpacetimeChart
from .variational import CovariantJet, InvariantLagrangian

__all__ = [
    "CovariantJet",
    "DixonState",
    "IntegratorConfig",
    "InvariantLagrangian",
    "SpacetimeChart",
    "Trajectory",
    "integrate",
    "riewe_helix",
]

__version__ = "0.1.0"
