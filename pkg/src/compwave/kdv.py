"""Dispersive shock wave for ``u_t + u u_x + eps u_xxx = 0`` from a smoothed step.

The initial datum is ``u(x, 0) = Lambda(x / rho)`` with ``Lambda`` falling
from ``a`` to ``0``.  For a sharp step the solution inside the fan
``-a t < x < 2 a t / 3`` is a modulated cnoidal wave

    a * (2 dn^2(a^{3/2} t omega(y) / sqrt(eps), sigma(y)) + sigma(y)^2 - 1),

``y = x / (a t)``, with ``sigma(y)`` fixed by an implicit Whitham relation.
Convolving the step solution with ``Lambda'`` renormalizes it to the smooth
datum and gives an explicit three-term formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .errors import DomainError
from .specfun import (DEFAULT_QUAD, cos2_weighted_k, dn_mc, ellipk_mc)

Y_MIN, Y_MAX = -1.0, 2.0 / 3.0
_SQRT6 = math.sqrt(6.0)
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class DSWParams:
    a: float
    eps: float
    rho: float
    mu: Optional[float] = None

    def __post_init__(self):
        if not (self.a > 0 and self.eps > 0 and self.rho > 0):
            raise DomainError("a, eps and rho must be positive")
        mu = self.rho / math.sqrt(self.eps)
        if self.mu is None:
            object.__setattr__(self, "mu", mu)
        elif abs(self.mu - mu) > 1e-14 * max(1.0, mu):
            raise DomainError(f"mu = {self.mu} inconsistent with rho/sqrt(eps) = {mu}")


@dataclass(frozen=True)
class StepProfile:
    """Smooth monotone step ``Lambda(s)`` with limits at -inf and +inf.

    ``decay_rate`` bounds the tails: ``|Lambda'(s)| <= C exp(-decay_rate |s|)``.
    """

    lam: Callable
    dlam: Callable
    limit_minus: float
    limit_plus: float
    decay_rate: float = 1.0

    @classmethod
    def tanh(cls, a):
        """``Lambda(s) = (a/2)(1 - tanh(s/2))``."""
        return cls(lambda s: 0.5 * a * (1.0 - np.tanh(0.5 * np.asarray(s))),
                   lambda s: -0.25 * a / np.cosh(0.5 * np.asarray(s)) ** 2,
                   a, 0.0, 1.0)

    @property
    def jump(self):
        return self.limit_plus - self.limit_minus

    def check(self, window=60.0):
        """Total variation of ``Lambda'`` against the limit difference."""
        total = quad(self.dlam, -window, window, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        return abs(total - self.jump)


# ---------------------------------------------------------------------------
# Whitham modulation


def modulation_lhs(m, mc=None):
    """``1 + m - 2 m (1-m) K / (E - (1-m) K)`` in terms of ``m = sigma^2``."""
    m = np.asarray(m, dtype=float)
    mc = 1.0 - m if mc is None else np.asarray(mc, dtype=float)
    J = cos2_weighted_k(m, mc)
    with np.errstate(divide="ignore", invalid="ignore"):
        mcK = np.where(mc > 0, mc * ellipk_mc(np.where(mc > 0, mc, 0.5)), 0.0)
    out = 1.0 + m - 2.0 * mcK / J
    return out[()] if out.ndim == 0 else out


def modulation_residual(sigma, y):
    s = np.asarray(sigma, dtype=float)
    return modulation_lhs(s * s, (1.0 - s) * (1.0 + s)) - 3.0 * np.asarray(y)


def _solve_m(y):
    """Vectorized bracketed bisection; returns ``(m, mc)`` with full precision of both."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any((y < Y_MIN) | (y > Y_MAX)):
        raise DomainError("y must lie in [-1, 2/3]")
    target = 3.0 * y
    m = np.zeros_like(y)
    mc = np.ones_like(y)
    lhs_half = float(modulation_lhs(0.5))
    low = target <= lhs_half
    # lower half: unknown m in [0, 1/2]
    sel = low & (y > Y_MIN)
    if np.any(sel):
        lo = np.zeros(sel.sum())
        hi = np.full(sel.sum(), 0.5)
        t = target[sel]
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            above = modulation_lhs(mid) > t
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        m[sel] = 0.5 * (lo + hi)
        mc[sel] = 1.0 - m[sel]
    # upper half: unknown log(mc) in (-745, log 1/2]
    sel = ~low & (y < Y_MAX)
    if np.any(sel):
        lo = np.full(sel.sum(), -740.0)
        hi = np.full(sel.sum(), math.log(0.5))
        t = target[sel]
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            e = np.exp(mid)
            above = modulation_lhs(1.0 - e, e) > t
            # lhs decreases as mc grows
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        mc[sel] = np.exp(0.5 * (lo + hi))
        m[sel] = 1.0 - mc[sel]
    top = y >= Y_MAX
    m[top], mc[top] = 1.0, 0.0
    return m, mc


def modulation_sigma(y, spec=DEFAULT_QUAD):
    """Modulus ``sigma(y)`` of the local cnoidal wave, ``y = x / (a t)``."""
    m, _ = _solve_m(y)
    s = np.sqrt(m)
    return float(s[0]) if np.ndim(y) == 0 else s


def omega_of(m, y):
    return (np.asarray(y) - (1.0 + np.asarray(m)) / 3.0) / _SQRT6


@dataclass(frozen=True)
class GPModulationTable:
    """``sigma(y)`` and ``omega(y)`` on a grid graded toward both ends of [-1, 2/3].

    Off-node values come from bisection inside the bracketing node interval,
    so they carry the same accuracy as the nodes.
    """

    y: np.ndarray
    sigma: np.ndarray
    omega: np.ndarray
    mc: np.ndarray = field(repr=False)

    def evaluate(self, y):
        """``(m, mc, omega)`` at arbitrary ``y`` in [-1, 2/3]."""
        y = np.asarray(y, dtype=float)
        m, mc = _solve_m(y.ravel())
        m, mc = m.reshape(y.shape), mc.reshape(y.shape)
        return m, mc, omega_of(m, y)

    def sigma_at(self, y):
        return np.sqrt(self.evaluate(y)[0])

    def residuals(self):
        return np.asarray(modulation_residual(self.sigma, self.y))

    def rows(self):
        return np.column_stack([self.y, self.sigma, self.omega])


def build_modulation_table(n_nodes=64, spec=DEFAULT_QUAD):
    if n_nodes < 16:
        raise DomainError("need at least 16 nodes")
    # cosine grading clusters nodes at both endpoints
    th = np.linspace(0.0, math.pi, n_nodes)
    y = Y_MIN + (Y_MAX - Y_MIN) * 0.5 * (1.0 - np.cos(th))
    y[0], y[-1] = Y_MIN, Y_MAX
    m, mc = _solve_m(y)
    return GPModulationTable(y=y, sigma=np.sqrt(m), omega=omega_of(m, y), mc=mc)


def gp_interior_profile(y, t, params, table):
    """``2 dn^2(a^{3/2} t omega / sqrt(eps), sigma) + sigma^2`` at ``y`` in the fan."""
    if not t > 0:
        raise DomainError("t must be positive")
    m, mc, om = table.evaluate(y)
    phase = params.a ** 1.5 * t * om / math.sqrt(params.eps)
    d = dn_mc(phase, mc)
    out = 2.0 * d * d + m
    return float(out) if np.ndim(y) == 0 else out


def _fast_phase_panels(t, params, table, y_lo, y_hi, max_width):
    """Panel edges in y, each spanning at most a tenth of the local dn^2 period."""
    ys = np.linspace(y_lo, y_hi, 4001)
    m, mc, om = table.evaluate(ys)
    phase = params.a ** 1.5 * t * om / math.sqrt(params.eps)
    period = 2.0 * ellipk_mc(np.maximum(mc, 1e-300))
    cycles = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(phase)) /
                                              (0.5 * (period[1:] + period[:-1])))])
    by_cycles = np.interp(np.arange(0.0, cycles[-1], 0.1), cycles, ys)
    by_width = np.linspace(y_lo, y_hi, int(math.ceil((y_hi - y_lo) / max_width)) + 1)
    edges = np.unique(np.concatenate([by_cycles, by_width, [y_hi]]))
    return edges[edges <= y_hi]


@dataclass
class DSWFormula:
    """Three-term formula at fixed ``t``; the fast bracket is tabulated once in y."""

    params: DSWParams
    profile: StepProfile
    table: GPModulationTable
    t: float
    window: float = 40.0
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    bracket: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.t > 0:
            raise DomainError("t must be positive")
        p = self.params
        at = p.a * self.t
        edges = _fast_phase_panels(self.t, p, self.table, Y_MIN, Y_MAX,
                                   max_width=min(0.02, 0.5 * p.rho / at))
        a_, b_ = edges[:-1, None], edges[1:, None]
        self.nodes = (0.5 * (a_ + b_) + 0.5 * (b_ - a_) * _GL_X).ravel()
        self.weights = (0.5 * (b_ - a_) * _GL_W).ravel()
        self.bracket = gp_interior_profile(self.nodes, self.t, p, self.table)

    @property
    def tail_bound(self):
        """Bound on the discarded part of the y-integral (relative to a)."""
        return 3.0 * math.exp(-self.profile.decay_rate * self.window)

    def __call__(self, x, chunk=256):
        p, lam = self.params, self.profile
        x = np.atleast_1d(np.asarray(x, dtype=float))
        at = p.a * self.t
        out = (2.0 * lam.lam((x + at) / p.rho) - lam.lam((x - 2.0 * at / 3.0) / p.rho))
        for i in range(0, x.size, chunk):
            xs = x[i:i + chunk, None]
            arg = (xs - at * self.nodes[None, :]) / p.rho
            inside = np.abs(arg) <= self.window
            w = np.where(inside, lam.dlam(np.where(inside, arg, 0.0)), 0.0)
            out[i:i + chunk] -= (at / p.rho) * (w * self.weights * self.bracket).sum(axis=1)
        return out


def dsw_approximation(x, t, params, profile, table, spec=DEFAULT_QUAD, window=40.0):
    """Explicit approximation
    ``2 Lambda((x+at)/rho) - Lambda((x-2at/3)/rho) - (at/rho) int Lambda'((x-aty)/rho) B(y) dy``
    with ``B`` the fast bracket of :func:`gp_interior_profile`."""
    val = DSWFormula(params, profile, table, t, window)(x)
    return float(val[0]) if np.ndim(x) == 0 else val


# ---------------------------------------------------------------------------
# step solution in the stretched variables and its renormalization


@dataclass(frozen=True)
class GPStepSolution:
    """Modulation solution ``Z(eta, theta)`` of the step problem with unit dispersion.

    Equals ``a`` for ``eta < -a theta``, the cnoidal fan in between, and ``0``
    beyond ``eta = 2 a theta / 3``.
    """

    a: float
    table: GPModulationTable

    def __call__(self, eta, theta):
        eta = np.asarray(eta, dtype=float)
        if not theta > 0:
            return np.where(eta < 0, self.a, 0.0)
        y = eta / (self.a * theta)
        out = np.where(y < Y_MIN, self.a, 0.0)
        fan = (y >= Y_MIN) & (y <= Y_MAX)
        if np.any(fan):
            m, mc, om = self.table.evaluate(y[fan])
            d = dn_mc(self.a ** 1.5 * theta * om, mc)
            out = np.array(out, dtype=float)
            out[fan] = self.a * (2.0 * d * d + m - 1.0)
        return out[()] if out.ndim == 0 else out

    def breakpoints(self, theta):
        return (-self.a * theta, 2.0 * self.a * theta / 3.0)


@dataclass(frozen=True)
class GridStepSolution:
    """Numerical ``Z(., theta)`` at one time, from grid samples (cubic spline)."""

    eta: np.ndarray
    values: np.ndarray
    theta: float

    def __post_init__(self):
        from scipy.interpolate import CubicSpline
        object.__setattr__(self, "_spline", CubicSpline(self.eta, self.values))

    def __call__(self, eta, theta=None):
        if theta is not None and abs(theta - self.theta) > 1e-12:
            raise DomainError("grid solution stored only at theta = %g" % self.theta)
        return self._spline(np.asarray(eta, dtype=float))

    def breakpoints(self, theta=None):
        return ()

    def integrate_against(self, weight):
        """``int Z w d eta`` by the trapezoid rule on the stored uniform grid
        (spectrally accurate for smooth ``w`` vanishing at the grid ends)."""
        dx = self.eta[1] - self.eta[0]
        return float(np.sum(self.values * weight(self.eta)) * dx)


def renormalized_u0(x, t, params, profile, z_field, spec=DEFAULT_QUAD, window=40.0):
    """``(1/(L+ - L-)) int Z((x - rho s)/sqrt(eps), t/sqrt(eps)) Lambda'(s) ds``."""
    se = math.sqrt(params.eps)
    theta = t / se
    pts = []
    if hasattr(z_field, "breakpoints"):
        # eta_b = (x - rho s)/sqrt(eps)  ->  s = (x - sqrt(eps) eta_b)/rho
        pts = [(x - se * e) / params.rho for e in z_field.breakpoints(theta)]
    pts = sorted(p for p in pts if -window < p < window)
    f = lambda s: float(z_field((x - params.rho * s) / se, theta) * profile.dlam(s))
    val, err = quad(f, -window, window, points=pts or None, epsabs=spec.abs_tol,
                    epsrel=spec.rel_tol, limit=max(spec.max_subdivisions, 2000))
    return val / profile.jump


def green_property_check(z_field, test_fn, theta, params, spec=DEFAULT_QUAD,
                         support=(-1.0, 1.0), dtest_fn=None, profile=None):
    """``int G f d eta - f(0)`` via ``-(1/(L+ - L-)) int Z f' d eta - f(0)``.

    ``G = Z_eta / (L+ - L-)``; ``f`` must vanish outside ``support``.  The
    derivative is taken from ``dtest_fn`` or ``test_fn.derivative``.
    """
    jump = (profile.jump if profile is not None else -params.a)
    if dtest_fn is None:
        dtest_fn = lambda e: test_fn.derivative(e, 1)
    lo, hi = support
    if hasattr(z_field, "integrate_against"):
        window = lambda e: np.where((e > lo) & (e < hi), dtest_fn(e), 0.0)
        val = z_field.integrate_against(window)
    else:
        pts = [p for p in getattr(z_field, "breakpoints", lambda th: ())(theta) if lo < p < hi]
        g = lambda e: float(z_field(e, theta) * dtest_fn(e))
        val = quad(g, lo, hi, points=pts or None, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                   limit=max(spec.max_subdivisions, 2000))[0]
    return -val / jump - float(test_fn(0.0))
