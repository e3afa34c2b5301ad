"""Small finite-difference helpers shared by the variational layer and the oracles."""

from __future__ import annotations

import numpy as np

from .errors import DifferentiationFailure


def partial_gradient(fn, v, h_rel=1e-4):
    """Gradient of scalar fn with respect to vector v, 5-point stencil per axis."""
    v = np.asarray(v, dtype=float)
    out = np.empty(v.shape[0])
    for k in range(v.shape[0]):
        h = h_rel * max(1.0, abs(v[k]))
        out[k] = _stencil5(lambda t: fn(_bump(v, k, t)), h)
    return out


def _bump(v, k, t):
    w = v.copy()
    w[k] += t
    return w


def _stencil5(f, h):
    """4th-order central derivative of f at 0."""
    return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)


def deriv_along(fn, xi, h, check=None):
    """4th-order derivative of an array-valued function of one parameter.

    With ``check`` set, re-evaluates at half step, raises
    DifferentiationFailure if the two estimates disagree by more than
    ``check`` (absolute, relative to max(1, scale)), and returns the
    Richardson-extrapolated 6th-order combination of the two.
    """
    d = _stencil5_arr(fn, xi, h)
    if check is not None:
        d2 = _stencil5_arr(fn, xi, h / 2.0)
        scale = max(1.0, float(np.max(np.abs(d))))
        if float(np.max(np.abs(d - d2))) / scale > check:
            raise DifferentiationFailure(
                f"half-step derivative check failed at xi={xi} (h={h})")
        d = (16.0 * d2 - d) / 15.0
    return d


def _stencil5_arr(fn, xi, h):
    return (-np.asarray(fn(xi + 2 * h)) + 8 * np.asarray(fn(xi + h))
            - 8 * np.asarray(fn(xi - h)) + np.asarray(fn(xi - 2 * h))) / (12 * h)
