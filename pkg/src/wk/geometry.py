"""Pseudo-Riemannian metric kernel.

Index conventions used for every array in this package:

    g[m, n]                 metric components g_mn
    dg[m, n, k]             d g_mn / d x^k
    ddg[m, n, k, l]         d^2 g_mn / d x^k d x^l
    gamma[l, m, n]          Gamma^l_mn  (symmetric in m, n)
    dgamma[l, m, n, k]      d Gamma^l_mn / d x^k
    riemann[k, m, n, l]     R_kmn^l = d_m Gamma^l_kn - d_k Gamma^l_mn
                                      + Gamma^l_mq Gamma^q_kn - Gamma^l_kq Gamma^q_mn

The last convention (lower-lower-lower-upper, antisymmetric in the first
pair) is fixed once here and consumed as-is by the variational and
dynamics layers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMetric, OutOfChart

DET_FLOOR = 1e-10

BUILTIN_METRICS = ("minkowski", "schwarzschild", "desitter")


@dataclass(frozen=True)
class MetricJet:
    """Metric with first and second coordinate derivatives at one point."""

    x: np.ndarray
    g: np.ndarray
    dg: np.ndarray
    ddg: np.ndarray


@dataclass(frozen=True)
class Christoffel:
    """Connection coefficients and their first coordinate derivatives."""

    gamma: np.ndarray
    dgamma: np.ndarray


@dataclass(frozen=True)
class Curvature:
    """Riemann tensor R_kmn^l, indexed [k, m, n, l]."""

    riemann: np.ndarray


def _as_point(x, dim):
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise ValueError(f"expected a point of dimension {dim}, got shape {x.shape}")
    return x


def _check_metric(g, x):
    scale = max(np.max(np.abs(g)), 1e-300)
    asym = np.max(np.abs(g - g.T)) / scale
    if asym > 1e-12:
        raise ValueError(f"metric asymmetric at {x}: relative asymmetry {asym:.3e}")
    if abs(np.linalg.det(g)) <= DET_FLOOR:
        raise DegenerateMetric(f"|det g| <= {DET_FLOOR} at {x}")


class PointGeometry:
    """Lazily evaluated geometric data at a single chart point.

    Immutable from the caller's perspective; internal memoization only
    fills write-once slots, so instances are safe to share after any
    single thread has finished with them and cheap when only g is needed.
    """

    __slots__ = ("chart", "x", "g", "ginv", "_jet", "_chris", "_riemann", "_d2gamma")

    def __init__(self, chart, x, g):
        self.chart = chart
        self.x = x
        self.g = g
        self.ginv = np.linalg.inv(g)
        self._jet = None
        self._chris = None
        self._riemann = None
        self._d2gamma = None

    @property
    def flat(self):
        return self.chart.flat

    @property
    def jet(self):
        if self._jet is None:
            self._jet = self.chart.metric_jet_raw(self.x, g=self.g)
        return self._jet

    @property
    def gamma(self):
        return self.christoffel.gamma

    @property
    def dgamma(self):
        return self.christoffel.dgamma

    @property
    def christoffel(self):
        if self._chris is None:
            self._chris = christoffel(self.jet)
        return self._chris

    @property
    def riemann(self):
        if self._riemann is None:
            self._riemann = riemann(self.christoffel).riemann
        return self._riemann

    @property
    def d2gamma(self):
        if self._d2gamma is None:
            self._d2gamma = self.chart.d2gamma(self.x)
        return self._d2gamma

    # -- pointwise index gymnastics ------------------------------------

    def inner(self, a, b):
        return float(a @ self.g @ b)

    def lower(self, a):
        return self.g @ a

    def raise_(self, omega):
        return self.ginv @ omega


class SpacetimeChart:
    """A coordinate chart with a metric provider and its derivatives.

    Built-in charts (``minkowski``, ``schwarzschild``, ``desitter``) carry
    exact derivative functions generated once at construction; any chart
    can instead run in ``numeric`` derivative mode, where derivatives come
    from Richardson-extrapolated central differences of the pointwise
    metric function.  All evaluated values are immutable; a chart is
    read-only after construction and safe to share across threads.
    """

    def __init__(self, name, metric_fn, dim=4, signature=(1, -1, -1, -1),
                 params=None, derivative_mode="analytic", h=1e-4,
                 validity_fn=None, sample_box=None, analytic_fns=None):
        if dim <= 0:
            raise ValueError("dim must be positive")
        signature = tuple(int(s) for s in signature)
        if len(signature) != dim or any(s not in (-1, 1) for s in signature):
            raise ValueError("signature must be a list of +/-1 of length dim")
        if derivative_mode not in ("analytic", "numeric"):
            raise ValueError(f"unknown derivative_mode {derivative_mode!r}")
        if derivative_mode == "analytic" and analytic_fns is None:
            raise ValueError("analytic mode requires analytic derivative functions")
        self.name = name
        self.dim = dim
        self.signature = signature
        self.params = dict(params or {})
        self.derivative_mode = derivative_mode
        self.h = float(h)
        self._metric_fn = metric_fn
        self._validity_fn = validity_fn
        self._sample_box = sample_box
        self._analytic = analytic_fns  # dict with dg, ddg, dddg callables
        self.flat = name == "minkowski"
        self._flat_point = None
        if self.flat:
            g = np.diag(np.asarray(signature, dtype=float))
            pt = PointGeometry(self, np.zeros(dim), g)
            z3 = np.zeros((dim,) * 3)
            pt._jet = MetricJet(pt.x, g, z3, np.zeros((dim,) * 4))
            pt._chris = Christoffel(z3, np.zeros((dim,) * 4))
            pt._riemann = np.zeros((dim,) * 4)
            pt._d2gamma = np.zeros((dim,) * 5)
            self._flat_point = pt

    # -- construction --------------------------------------------------

    @classmethod
    def minkowski(cls, signature=(1, -1, -1, -1), derivative_mode="analytic"):
        dim = len(signature)
        g = np.diag(np.asarray(signature, dtype=float))

        def metric_fn(x):
            return g

        z3 = np.zeros((dim,) * 3)
        z4 = np.zeros((dim,) * 4)
        z5 = np.zeros((dim,) * 5)
        fns = {"dg": lambda x: z3, "ddg": lambda x: z4, "dddg": lambda x: z5}
        return cls("minkowski", metric_fn, dim=dim, signature=signature,
                   derivative_mode=derivative_mode,
                   analytic_fns=fns if derivative_mode == "analytic" else None,
                   sample_box=[(-2.0, 2.0)] * dim)

    @classmethod
    def schwarzschild(cls, M=1.0, derivative_mode="analytic"):
        M = float(M)
        if M <= 0:
            raise ValueError("M must be positive")

        def metric_fn(x):
            _, r, th, _ = x
            f = 1.0 - 2.0 * M / r
            return np.diag([f, -1.0 / f, -r * r, -r * r * np.sin(th) ** 2])

        def validity_fn(x):
            _, r, th, _ = x
            if not r > 2.0 * M * (1.0 + 1e-6):
                raise OutOfChart(f"r = {r} inside the exterior-chart guard r > 2M")
            if not abs(np.sin(th)) > 1e-8:
                raise OutOfChart(f"theta = {th} too close to the polar axis")

        fns = _sympy_metric_fns("schwarzschild", {"M": M}) \
            if derivative_mode == "analytic" else None
        return cls("schwarzschild", metric_fn, params={"M": M},
                   derivative_mode=derivative_mode, analytic_fns=fns,
                   validity_fn=validity_fn,
                   sample_box=[(-1.0, 1.0), (4.0 * M, 15.0 * M),
                               (0.4, np.pi - 0.4), (-np.pi, np.pi)])

    @classmethod
    def desitter(cls, H=0.1, derivative_mode="analytic"):
        H = float(H)
        if H <= 0:
            raise ValueError("H must be positive")

        def metric_fn(x):
            _, r, th, _ = x
            f = 1.0 - H * H * r * r
            return np.diag([f, -1.0 / f, -r * r, -r * r * np.sin(th) ** 2])

        def validity_fn(x):
            _, r, th, _ = x
            if not 1e-6 < r < (1.0 - 1e-6) / H:
                raise OutOfChart(f"r = {r} outside the static patch 0 < r < 1/H")
            if not abs(np.sin(th)) > 1e-8:
                raise OutOfChart(f"theta = {th} too close to the polar axis")

        fns = _sympy_metric_fns("desitter", {"H": H}) \
            if derivative_mode == "analytic" else None
        return cls("desitter", metric_fn, params={"H": H},
                   derivative_mode=derivative_mode, analytic_fns=fns,
                   validity_fn=validity_fn,
                   sample_box=[(-1.0, 1.0), (0.5, 0.6 / H),
                               (0.4, np.pi - 0.4), (-np.pi, np.pi)])

    @classmethod
    def from_metric_function(cls, metric_fn, dim=4, signature=(1, -1, -1, -1),
                             h=1e-4, validity_fn=None, sample_box=None):
        """Chart over a user-supplied pointwise metric; numeric derivatives."""
        return cls("custom", metric_fn, dim=dim, signature=signature,
                   derivative_mode="numeric", h=h, validity_fn=validity_fn,
                   sample_box=sample_box)

    @classmethod
    def from_config(cls, cfg):
        """Build a chart from its JSON configuration object."""
        name = cfg.get("metric")
        params = cfg.get("params", {})
        mode = cfg.get("derivative_mode", "analytic")
        signature = tuple(cfg.get("signature", (1, -1, -1, -1)))
        if name == "minkowski":
            return cls.minkowski(signature=signature, derivative_mode=mode)
        if name == "schwarzschild":
            chart = cls.schwarzschild(M=params.get("M", 1.0), derivative_mode=mode)
        elif name == "desitter":
            chart = cls.desitter(H=params.get("H", 0.1), derivative_mode=mode)
        else:
            raise ValueError(f"unknown built-in metric {name!r}")
        if signature != chart.signature:
            raise ValueError(f"{name} chart is built with signature {chart.signature}")
        return chart

    # -- evaluation ----------------------------------------------------

    def check_point(self, x):
        x = _as_point(x, self.dim)
        if self._validity_fn is not None:
            self._validity_fn(x)
        return x

    def metric(self, x):
        x = self.check_point(x)
        g = np.asarray(self._metric_fn(x), dtype=float)
        _check_metric(g, x)
        return g

    def point(self, x):
        """PointGeometry bundle at x (validity-checked)."""
        x = self.check_point(x)
        if self.flat:
            fp = self._flat_point
            pt = PointGeometry.__new__(PointGeometry)
            pt.chart = self
            pt.x = x
            pt.g = fp.g
            pt.ginv = fp.ginv
            pt._jet = fp._jet
            pt._chris = fp._chris
            pt._riemann = fp._riemann
            pt._d2gamma = fp._d2gamma
            return pt
        return PointGeometry(self, x, self.metric(x))

    def metric_jet_raw(self, x, g=None):
        if g is None:
            g = self.metric(x)
        if self.derivative_mode == "analytic":
            dg = np.asarray(self._analytic["dg"](x), dtype=float)
            ddg = np.asarray(self._analytic["ddg"](x), dtype=float)
        else:
            dg = _numeric_grad(lambda y: np.asarray(self._metric_fn(y), float), x, self.h)
            ddg = _numeric_grad(
                lambda y: _numeric_grad(
                    lambda z: np.asarray(self._metric_fn(z), float), y, self.h),
                x, self.h * 10.0)
            ddg = 0.5 * (ddg + ddg.swapaxes(2, 3))
        return MetricJet(x, g, dg, ddg)

    def d2gamma(self, x):
        """Second coordinate derivatives of Gamma, indexed [l, m, n, k, p]."""
        if self.flat:
            return np.zeros((self.dim,) * 5)
        if self.derivative_mode == "analytic":
            jet = self.metric_jet_raw(x)
            dddg = np.asarray(self._analytic["dddg"](x), dtype=float)
            return _d2gamma_from_derivs(jet.g, jet.dg, jet.ddg, dddg)
        return _numeric_hess_gamma(self, x)

    def sample_point(self, rng):
        """Random chart-interior point, for property tests and verify suites."""
        box = self._sample_box or [(-1.0, 1.0)] * self.dim
        return np.array([rng.uniform(lo, hi) for lo, hi in box])

    def check_signature(self, x):
        """True iff the eigenvalue signs of g(x) match the declared signature."""
        w = np.linalg.eigvalsh(self.metric(x))
        return sorted(np.sign(w)) == sorted(self.signature)

    def __repr__(self):
        return (f"SpacetimeChart({self.name!r}, dim={self.dim}, params={self.params}, "
                f"derivative_mode={self.derivative_mode!r})")


def _numeric_hess_gamma(chart, x):
    def gamma_at(y):
        return christoffel(chart.metric_jet_raw(y)).gamma

    def dgamma_at(y):
        return _numeric_grad(gamma_at, y, chart.h * 10.0)

    return _numeric_grad(dgamma_at, x, chart.h * 100.0)


def _numeric_grad(fn, x, h_rel):
    """Richardson-extrapolated central difference of an array field.

    Output appends the derivative axis last: out[..., k] = d fn / d x^k.
    """
    f0 = np.asarray(fn(x))
    dim = len(x)
    out = np.empty(f0.shape + (dim,))
    for k in range(dim):
        h = h_rel * max(1.0, abs(x[k]))
        d_h = _central(fn, x, k, h)
        d_h2 = _central(fn, x, k, h / 2.0)
        out[..., k] = (4.0 * d_h2 - d_h) / 3.0
    return out


def _central(fn, x, k, h):
    xp = x.copy()
    xm = x.copy()
    xp[k] += h
    xm[k] -= h
    return (np.asarray(fn(xp)) - np.asarray(fn(xm))) / (2.0 * h)


# ----------------------------------------------------------------------
# sympy-generated exact derivatives for the curved built-ins
# ----------------------------------------------------------------------

def _sympy_metric_fns(name, params):
    import sympy as sp

    X = sp.symbols("x0 x1 x2 x3", real=True)
    _, r, th, _ = X
    if name == "schwarzschild":
        f = 1 - 2 * sp.Float(params["M"]) / r
    elif name == "desitter":
        f = 1 - sp.Float(params["H"]) ** 2 * r ** 2
    else:  # pragma: no cover
        raise ValueError(name)
    gexpr = sp.diag(f, -1 / f, -r ** 2, -r ** 2 * sp.sin(th) ** 2)

    dim = 4
    g_mat = [[gexpr[m, n] for n in range(dim)] for m in range(dim)]
    dg = [[[sp.diff(g_mat[m][n], X[k]) for k in range(dim)]
           for n in range(dim)] for m in range(dim)]
    ddg = [[[[sp.diff(dg[m][n][k], X[l]) for l in range(dim)]
             for k in range(dim)] for n in range(dim)] for m in range(dim)]
    dddg = [[[[[sp.diff(ddg[m][n][k][l], X[p]) for p in range(dim)]
               for l in range(dim)] for k in range(dim)]
             for n in range(dim)] for m in range(dim)]

    dg_fn = sp.lambdify(X, dg, "numpy")
    ddg_fn = sp.lambdify(X, ddg, "numpy")
    dddg_fn = sp.lambdify(X, dddg, "numpy")
    return {
        "dg": lambda x: dg_fn(*x),
        "ddg": lambda x: ddg_fn(*x),
        "dddg": lambda x: dddg_fn(*x),
    }


# ----------------------------------------------------------------------
# tensor-level operations
# ----------------------------------------------------------------------

def metric_jet(chart, x):
    """Metric with first and second derivatives at a chart point."""
    x = chart.check_point(x)
    return chart.metric_jet_raw(x)


def christoffel(jet):
    """Levi-Civita connection of a metric jet.

    Construction is the standard formula
    Gamma^l_kn = (1/2) g^lq (d_k g_qn + d_n g_qk - d_q g_kn); the
    metric-compatibility identity
    d_k g_mn = g_ml Gamma^l_kn + g_nl Gamma^l_km holds as a consequence
    and is enforced by tests, not assumed here.
    """
    g, dg, ddg = jet.g, jet.dg, jet.ddg
    if abs(np.linalg.det(g)) <= DET_FLOOR:
        raise DegenerateMetric("metric jet from a degenerate metric")
    ginv = np.linalg.inv(g)
    # T[q, k, n] = d_k g_qn + d_n g_qk - d_q g_kn
    T = (dg.transpose(0, 2, 1)       # dg[q,n,k] viewed as [q,k,n]
         + dg                        # dg[q,k,n] already ordered [q,k,n]
         - dg.transpose(2, 0, 1))    # dg[k,n,q] viewed as [q,k,n]
    gamma = 0.5 * np.einsum("lq,qkn->lkn", ginv, T)

    # dT[q, k, n, p] = d_p T[q, k, n]
    dT = (ddg.transpose(0, 2, 1, 3)
          + ddg
          - ddg.transpose(2, 0, 1, 3))
    dginv = -np.einsum("la,abp,bq->lqp", ginv, dg, ginv)
    dgamma = (0.5 * np.einsum("lqp,qkn->lknp", dginv, T)
              + 0.5 * np.einsum("lq,qknp->lknp", ginv, dT))
    return Christoffel(gamma, dgamma)


def _d2gamma_from_derivs(g, dg, ddg, dddg):
    """d^2 Gamma^l_kn / dx^p dx^r, indexed [l, k, n, p, r]."""
    ginv = np.linalg.inv(g)
    T = (dg.transpose(0, 2, 1) + dg - dg.transpose(2, 0, 1))
    dT = (ddg.transpose(0, 2, 1, 3) + ddg - ddg.transpose(2, 0, 1, 3))
    ddT = (dddg.transpose(0, 2, 1, 3, 4) + dddg - dddg.transpose(2, 0, 1, 3, 4))
    dginv = -np.einsum("la,abp,bq->lqp", ginv, dg, ginv)
    ddginv = (-np.einsum("lar,abp,bq->lqpr", dginv, dg, ginv)
              - np.einsum("la,abpr,bq->lqpr", ginv, ddg, ginv)
              - np.einsum("la,abp,bqr->lqpr", ginv, dg, dginv))
    d2gamma = (0.5 * np.einsum("lqpr,qkn->lknpr", ddginv, T)
               + 0.5 * np.einsum("lqp,qknr->lknpr", dginv, dT)
               + 0.5 * np.einsum("lqr,qknp->lknpr", dginv, dT)
               + 0.5 * np.einsum("lq,qknpr->lknpr", ginv, ddT))
    return d2gamma


def riemann(chris):
    """Riemann tensor R_kmn^l, array indexed [k, m, n, l].

    Convention anchors: de Sitter comes out as
    R_kmn^l = -H^2 (g_kn d^l_m - g_mn d^l_k), and small-loop transport
    holonomy reproduces -R_kmn^l V^n a^m b^k (see the verify suites).
    """
    gamma, dgamma = chris.gamma, chris.dgamma
    term1 = dgamma.transpose(1, 3, 2, 0)   # d_m Gamma^l_kn -> [k,m,n,l]
    term2 = dgamma.transpose(3, 1, 2, 0)   # d_k Gamma^l_mn -> [k,m,n,l]
    term3 = np.einsum("lmq,qkn->kmnl", gamma, gamma)
    term4 = np.einsum("lkq,qmn->kmnl", gamma, gamma)
    return Curvature(term1 - term2 + term3 - term4)


def covariant_derivative(chart_or_pt, x, u, a, da_dxi, covector=False):
    """Covariant derivative of a field along a curve with velocity u.

    Vector pattern:   a'^n = da^n/dxi + Gamma^n_lm a^m u^l
    Covector pattern: a'_n = da_n/dxi - Gamma^m_ln a_m u^l
    """
    pt = chart_or_pt if isinstance(chart_or_pt, PointGeometry) else chart_or_pt.point(x)
    if pt.flat:
        return np.asarray(da_dxi, dtype=float)
    gamma = pt.gamma
    if covector:
        return da_dxi - np.einsum("mln,m,l->n", gamma, a, u)
    return da_dxi + np.einsum("nlm,m,l->n", gamma, a, u)


def inner(chart, x, a, b):
    """Metric inner product <a, b> at x."""
    return chart.point(x).inner(a, b)


def lower(chart, x, a):
    """Lower the index of a vector at x."""
    return chart.point(x).lower(a)


def raise_index(chart, x, omega):
    """Raise the index of a covector at x."""
    return chart.point(x).raise_(omega)
