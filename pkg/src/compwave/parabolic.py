"""Shock-layer machinery for ``u_t + phi(u)_x = eps u_xx`` with convex flux.

Covers the Riemann data of the inviscid problem, the traveling-wave profile
``Lambda`` connecting the two states, the linearized operator ``L3`` about
that profile, the solvability functional for ``L3 v = F`` with prescribed
asymptotics, a solver for that equation, and the phase-shift update.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.integrate import quad, solve_ivp

from .errors import (DegenerateStatesError, DomainError, PreconditionError,
                     SolvabilityError)
from .specfun import DEFAULT_QUAD, QuadratureSpec

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)
# nodes on [0, 1]
_U8 = 0.5 * (_GL8_X + 1.0)
_W8 = 0.5 * _GL8_W


@dataclass(frozen=True)
class FluxModel:
    phi: Callable
    dphi: Callable
    d2phi: Callable
    name: str = "custom"

    @classmethod
    def burgers(cls):
        return cls(lambda u: 0.5 * u * u, lambda u: u,
                   lambda u: np.ones_like(np.asarray(u, dtype=float)), "burgers")

    @classmethod
    def polynomial(cls, coeffs):
        """Flux ``sum coeffs[k] u**k``."""
        p = np.polynomial.Polynomial(coeffs)
        dp, d2p = p.deriv(1), p.deriv(2)
        return cls(p, dp, lambda u: d2p(u) + np.zeros_like(np.asarray(u, dtype=float)),
                   f"poly{tuple(coeffs)}")

    def check_convex(self, lo, hi, samples=257):
        u = np.linspace(lo, hi, samples)
        bad = ~(np.asarray(self.d2phi(u)) > 0)
        if np.any(bad):
            raise DomainError(f"flux is not strictly convex on [{lo}, {hi}]: "
                              f"phi'' <= 0 at u = {u[bad][0]:.17g}")


@dataclass(frozen=True)
class StepStates:
    nu_minus: float
    nu_plus: float

    def __post_init__(self):
        if self.nu_minus == self.nu_plus:
            raise DegenerateStatesError("states coincide")
        if not self.nu_minus > self.nu_plus:
            raise DomainError("shock branch requires nu_minus > nu_plus")

    @property
    def mid(self):
        return 0.5 * (self.nu_minus + self.nu_plus)

    @property
    def jump(self):
        return self.nu_minus - self.nu_plus


@dataclass(frozen=True)
class RankineHugoniot:
    c: float
    b: float


def rankine_hugoniot(flux, states):
    """Shock speed ``c`` and constant ``b`` with ``phi(nu) = c nu + b`` at both states."""
    vm, vp = states.nu_minus, states.nu_plus
    if vm == vp:
        raise DegenerateStatesError("states coincide")
    fm, fp = float(flux.phi(vm)), float(flux.phi(vp))
    c = (fp - fm) / (vp - vm)
    b = (vp * fm - vm * fp) / (vp - vm)
    return RankineHugoniot(c=c, b=b)


class _Rhs:
    """``f(v) = phi(v) - c v - b`` evaluated from offsets to either state.

    Both ``f(nu + d)/d`` and ``1/f - A/d`` are written as integrals of
    ``phi'`` and ``phi''`` so that neither cancels as ``d -> 0``.
    """

    def __init__(self, flux, states, rh):
        self.flux, self.states, self.rh = flux, states, rh
        self.slope_p = float(flux.dphi(states.nu_plus)) - rh.c
        self.slope_m = float(flux.dphi(states.nu_minus)) - rh.c
        if not (self.slope_p < 0 < self.slope_m):
            raise DomainError("profile equation has no connecting orbit (check convexity)")
        self.A_p = 1.0 / self.slope_p
        self.A_m = 1.0 / self.slope_m

    def _h(self, nu, d):
        # f(nu + d) / d
        d = np.asarray(d, dtype=float)[..., None]
        return np.sum(_W8 * (self.flux.dphi(nu + _U8 * d) - self.rh.c), axis=-1)

    def _h_minus_h0(self, nu, d):
        # (h(d) - h(0)) / d = int_0^1 int_0^1 s phi''(nu + r s d) dr ds
        d = np.asarray(d, dtype=float)[..., None, None]
        s = _U8[:, None]
        r = _U8[None, :]
        w = (_W8[:, None] * _W8[None, :]) * s
        return np.sum(w * self.flux.d2phi(nu + r * s * d), axis=(-2, -1))

    def f_from_offset(self, nu, d):
        return np.asarray(d, dtype=float) * self._h(nu, d)

    def regular(self, p):
        """``g = 1/f - A+/(v - nu+) - A-/(v - nu-)`` at ``v = nu+ + jump*p``."""
        st = self.states
        p = np.asarray(p, dtype=float)
        near_plus = p <= 0.5
        dp = st.jump * p
        dm = -st.jump * (1 - p)
        out = np.empty_like(p)
        if np.any(near_plus):
            d = dp[near_plus]
            h = self._h(st.nu_plus, d)
            sing = -self._h_minus_h0(st.nu_plus, d) / (h * self.slope_p)
            out[near_plus] = sing - self.A_m / dm[near_plus]
        if np.any(~near_plus):
            d = dm[~near_plus]
            h = self._h(st.nu_minus, d)
            sing = -self._h_minus_h0(st.nu_minus, d) / (h * self.slope_m)
            out[~near_plus] = sing - self.A_p / dp[~near_plus]
        return out


@dataclass
class TravelingWaveProfile:
    """Monotone profile ``Lambda`` with ``Lambda' = phi(Lambda) - c Lambda - b``
    and ``Lambda(0)`` at the midpoint of the states."""

    flux: FluxModel
    states: StepStates
    rh: RankineHugoniot
    spec: QuadratureSpec = field(default=DEFAULT_QUAD)

    def __post_init__(self):
        self._rhs = _Rhs(self.flux, self.states, self.rh)
        self._fits = {True: self._build_fit(True), False: self._build_fit(False)}
        self._coefs = {side: [[float(c) for c in piece.coef] for piece in fit[1]]
                       for side, fit in self._fits.items()}
        self._last = None

    def _build_fit(self, plus_side):
        # piecewise Chebyshev model of z(sigma) + gamma*|sigma|, which tends
        # to a constant in the tail; beyond the last panel it is frozen
        g = self.gamma_plus if plus_side else self.gamma_minus
        sgn = 1.0 if plus_side else -1.0
        S = math.log(1e17) / g
        width = 2.0 / max(self.gamma_plus, self.gamma_minus)
        edges = [0.0]
        while edges[-1] < S:
            edges.append(min(S, edges[-1] + width))
            width *= 1.5
        target = lambda x: self._solve_z(sgn * x, plus_side) + g * x
        pieces = [Chebyshev.interpolate(target, 32, domain=[a, b])
                  for a, b in zip(edges[:-1], edges[1:])]
        return np.asarray(edges), pieces, g

    def _z_fit(self, abs_sigma, plus_side):
        edges, pieces, g = self._fits[plus_side]
        if abs_sigma.size == 1:
            return np.array([self._z_fit_scalar(float(abs_sigma[0]), plus_side)])
        x = np.minimum(abs_sigma, edges[-1])
        idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, len(pieces) - 1)
        out = np.empty_like(x)
        for k in np.unique(idx):
            sel = idx == k
            out[sel] = pieces[k](x[sel])
        return out - g * abs_sigma

    def _z_fit_scalar(self, abs_sigma, plus_side):
        # Clenshaw in plain floats; the ODE solvers call this one point at a time
        edges, pieces, g = self._fits[plus_side]
        x = min(abs_sigma, edges[-1])
        k = min(max(bisect.bisect_right(edges, x) - 1, 0), len(pieces) - 1)
        lo, hi = edges[k], edges[k + 1]
        u = (2.0 * x - lo - hi) / (hi - lo)
        b1 = b2 = 0.0
        coef = self._coefs[plus_side][k]
        for c in coef[:0:-1]:
            b1, b2 = 2.0 * u * b1 - b2 + c, b1
        return u * b1 - b2 + coef[0] - g * abs_sigma

    @property
    def limits(self):
        return self.states.nu_minus, self.states.nu_plus

    @property
    def gamma_plus(self):
        """Decay rate of ``Lambda - nu+`` as sigma -> +inf."""
        return -self._rhs.slope_p

    @property
    def gamma_minus(self):
        """Decay rate of ``Lambda - nu-`` as sigma -> -inf."""
        return self._rhs.slope_m

    @property
    def decay_rate(self):
        return min(self.gamma_plus, self.gamma_minus)

    def half_width(self, tol=None):
        """``L`` with ``exp(-gamma L) < tol`` on both sides."""
        tol = self.spec.abs_tol if tol is None else tol
        return math.log(1.0 / tol) / self.decay_rate

    # G as a function of the log-offset
    def _G(self, z, plus_side):
        st, rhs = self.states, self._rhs
        z = np.asarray(z, dtype=float)
        e = np.exp(z)
        p = e if plus_side else 1.0 - e
        if plus_side:
            lp, lm = z - math.log(0.5), np.log1p(-e) - math.log(0.5)
        else:
            lp, lm = np.log1p(-e) - math.log(0.5), z - math.log(0.5)
        sing = rhs.A_p * lp + rhs.A_m * lm
        # int_{1/2}^{p} g(p') jump dp'
        half = 0.5 * (p - 0.5)
        nodes = 0.5 * (p + 0.5)[..., None] + half[..., None] * _GL_X
        reg = st.jump * half * np.sum(_GL_W * rhs.regular(nodes), axis=-1)
        return sing + reg

    def _solve_z(self, sigma, plus_side):
        """Vectorized bisection for ``G(z) = sigma`` on one side."""
        sigma = np.asarray(sigma, dtype=float)
        A = self._rhs.A_p if plus_side else self._rhs.A_m
        hi = np.full_like(sigma, math.log(0.5))
        lo = sigma / A - 60.0
        # G is monotone in z; make sure the bracket straddles the target
        sgn = 1.0 if plus_side else -1.0
        for _ in range(60):
            bad = sgn * (self._G(lo, plus_side) - sigma) < 0
            if not np.any(bad):
                break
            lo = np.where(bad, 2 * lo - 10.0, lo)
        else:
            raise RuntimeError("profile inversion failed to bracket (convexity violated?)")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            above = sgn * (self._G(mid, plus_side) - sigma) > 0
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
            if np.all(hi - lo <= 4e-16 * np.maximum(1.0, np.abs(lo))):
                break
        return 0.5 * (lo + hi)

    def offsets(self, sigma, exact=False):
        """``(side, |Lambda - nu_side|)`` with full relative precision.

        ``side`` is +1 where the offset is measured from ``nu+`` (sigma >= 0)
        and -1 where it is measured from ``nu-``.  ``exact=True`` inverts
        ``G`` directly instead of using the stored Chebyshev model.
        """
        s = np.atleast_1d(np.asarray(sigma, dtype=float))
        off = np.empty_like(s)
        pos = s >= 0
        for side, sel in ((True, pos), (False, ~pos)):
            if np.any(sel):
                z = (self._solve_z(s[sel], side) if exact
                     else self._z_fit(np.abs(s[sel]), side))
                off[sel] = self.states.jump * np.exp(z)
        side = np.where(pos, 1, -1)
        return side, off

    def _offset_scalar(self, sigma):
        # pure-float path with a one-entry cache: solvers probe one point repeatedly
        if self._last is not None and self._last[0] == sigma:
            return self._last[1]
        plus = sigma >= 0.0
        res = plus, self.states.jump * math.exp(self._z_fit_scalar(abs(sigma), plus))
        self._last = (sigma, res)
        return res

    def __call__(self, sigma):
        scalar = np.ndim(sigma) == 0
        if scalar:
            plus, off = self._offset_scalar(float(sigma))
            return self.states.nu_plus + off if plus else self.states.nu_minus - off
        side, off = self.offsets(sigma)
        val = np.where(side > 0, self.states.nu_plus + off, self.states.nu_minus - off)
        return float(val[0]) if scalar else val

    def derivative(self, sigma):
        """``Lambda'`` from the profile equation."""
        scalar = np.ndim(sigma) == 0
        st = self.states
        if scalar:
            plus, off = self._offset_scalar(float(sigma))
            if plus:
                return float(self._rhs.f_from_offset(st.nu_plus, off))
            return float(self._rhs.f_from_offset(st.nu_minus, -off))
        side, off = self.offsets(sigma)
        out = np.where(side > 0,
                       self._rhs.f_from_offset(st.nu_plus, off),
                       self._rhs.f_from_offset(st.nu_minus, -off))
        return float(out[0]) if scalar else out

    def second_derivative(self, sigma):
        lam = self(sigma)
        return (self.flux.dphi(lam) - self.rh.c) * self.derivative(sigma)

    def table(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        return np.column_stack([sigma, self(sigma), self.derivative(sigma)])


def traveling_wave(flux, states, rh=None, spec=DEFAULT_QUAD):
    """Build the profile by inverting ``G(v) = int_mid^v dw / f(w)``."""
    rh = rankine_hugoniot(flux, states) if rh is None else rh
    flux.check_convex(states.nu_plus, states.nu_minus)
    return TravelingWaveProfile(flux, states, rh, spec)


# ---------------------------------------------------------------------------
# scalar fields and the linearized operator

_D1 = np.array([-1, 9, -45, 0, 45, -9, 1]) / 60.0
_D2 = np.array([2, -27, 270, -490, 270, -27, 2]) / 180.0
_OFF = np.arange(-3, 4)


class Field:
    """Function of sigma with optional analytic derivatives.

    Missing derivatives come from sixth-order central differences with step
    ``h``.
    """

    def __init__(self, f, d1=None, d2=None, h=1e-3):
        self.f, self.d1, self.d2, self.h = f, d1, d2, h

    def __call__(self, s):
        return self.f(s)

    def _fd(self, g, s, stencil):
        s = np.asarray(s, dtype=float)
        pts = s[..., None] + self.h * _OFF
        return np.sum(stencil * np.asarray(g(pts)), axis=-1)

    def derivative(self, s, order=1):
        if order == 0:
            return self.f(s)
        if order == 1:
            return self.d1(s) if self.d1 is not None else self._fd(self.f, s, _D1) / self.h
        if order == 2:
            if self.d2 is not None:
                return self.d2(s)
            if self.d1 is not None:
                return self._fd(self.d1, s, _D1) / self.h
            return self._fd(self.f, s, _D2) / self.h ** 2
        raise ValueError("order must be 0, 1 or 2")

    def _combine(self, other, op):
        if not isinstance(other, Field):
            other = Field.constant(other)
        d = lambda k: (lambda s: op(self.derivative(s, k), other.derivative(s, k)))
        return Field(d(0), d(1), d(2), min(self.h, other.h))

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, k):
        if isinstance(k, Field):
            return NotImplemented
        return Field(lambda s: k * self.f(s), lambda s: k * self.derivative(s, 1),
                     lambda s: k * self.derivative(s, 2), self.h)

    __rmul__ = __mul__

    @classmethod
    def constant(cls, k):
        z = lambda s: np.zeros_like(np.asarray(s, dtype=float))
        return cls(lambda s: k + z(s), z, z)

    @classmethod
    def zero(cls):
        return cls.constant(0.0)

    @classmethod
    def profile_derivative(cls, profile):
        """``v0'``, the bounded kernel element of L3."""
        return cls(profile.derivative, profile.second_derivative)


def _q(sigma, profile, flux, rh):
    return rh.c - flux.dphi(profile(sigma))


def apply_l3(v, profile, flux, rh):
    """``L3 v = v'' + (c - phi'(v0)) v' - phi''(v0) v0' v``."""
    if not isinstance(v, Field):
        v = Field(v)

    def l3(s):
        lam = profile(s)
        return (v.derivative(s, 2) + (rh.c - flux.dphi(lam)) * v.derivative(s, 1)
                - flux.d2phi(lam) * profile.derivative(s) * v(s))

    return Field(l3)


def _flux_form(v, s, profile, flux, rh):
    # v' + (c - phi'(v0)) v ; L3 v is its derivative
    return v.derivative(s, 1) + _q(s, profile, flux, rh) * v(s)


def _check_tail(r, profile, side, spec):
    L = profile.half_width(spec.abs_tol)
    s = side * L * np.linspace(0.25, 2.0, 8)
    vals = np.abs(np.asarray([float(r(x)) for x in s]))
    scale = 1.0 + float(np.max(vals))
    if not np.all(np.isfinite(vals)) or np.max(vals[-2:]) > 1e-6 * scale:
        raise PreconditionError(
            f"F - L3 P does not decay on the {'right' if side > 0 else 'left'} "
            f"(|.| = {vals[-1]:.3e} at sigma = {s[-1]:.1f})")


def _half_integral(r, side, profile, spec):
    L = profile.half_width(spec.abs_tol)
    g = lambda x: float(r(x))
    kw = dict(epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=spec.max_subdivisions)
    if side > 0:
        return quad(g, 0.0, L, **kw)[0] + quad(g, L, np.inf, **kw)[0]
    return quad(g, -L, 0.0, **kw)[0] + quad(g, -np.inf, -L, **kw)[0]


def _as_field(v):
    return v if isinstance(v, Field) else Field(v)


def solvability_functional(F, P_minus, P_plus, profile, flux, rh, spec=DEFAULT_QUAD):
    """Value whose vanishing is necessary and sufficient for ``L3 v = F``
    to have a solution with ``v - P-`` decaying on the left and ``v - P+``
    decaying on the right."""
    F, Pm, Pp = _as_field(F), _as_field(P_minus), _as_field(P_plus)
    lm, lp = apply_l3(Pm, profile, flux, rh), apply_l3(Pp, profile, flux, rh)
    rm = lambda s: F(s) - lm(s)
    rp = lambda s: F(s) - lp(s)
    _check_tail(rm, profile, -1, spec)
    _check_tail(rp, profile, +1, spec)
    jump = float(_flux_form(Pp, 0.0, profile, flux, rh) - _flux_form(Pm, 0.0, profile, flux, rh))
    return jump - _half_integral(rm, -1, profile, spec) - _half_integral(rp, +1, profile, spec)


def solve_l3(F, P_minus, P_plus, profile, flux, rh, spec=DEFAULT_QUAD,
             half_width=None, tol=1e-8):
    """One solution of ``L3 v = F`` with the prescribed tails, normalized by
    ``v(0) = (P+(0) + P-(0))/2``.

    Writes ``L3 v = (v' + q v)'`` with ``q = c - phi'(v0)`` and integrates
    the first-order system for ``(v' + q v, v)`` outward from ``sigma = 0``;
    both directions are stable because ``q`` is positive on the right and
    negative on the left.  Outside ``[-L, L]`` the tails ``P+-`` are returned.
    """
    F, Pm, Pp = _as_field(F), _as_field(P_minus), _as_field(P_plus)
    func = solvability_functional(F, Pm, Pp, profile, flux, rh, spec)
    if abs(func) > tol:
        raise SolvabilityError(f"solvability functional = {func:.3e}", functional=func)
    L = profile.half_width(spec.abs_tol) if half_width is None else float(half_width)
    lp = apply_l3(Pp, profile, flux, rh)
    C = float(_flux_form(Pp, 0.0, profile, flux, rh)) - _half_integral(
        lambda s: F(s) - lp(s), +1, profile, spec)
    v_mid = 0.5 * float(Pp(0.0) + Pm(0.0))

    def rhs(s, y):
        R, v = y
        return [float(F(s)), R - float(_q(s, profile, flux, rh)) * v]

    kw = dict(method="DOP853", rtol=1e-12, atol=1e-14, dense_output=True)
    right = solve_ivp(rhs, (0.0, L), [C, v_mid], **kw)
    left = solve_ivp(rhs, (0.0, -L), [C, v_mid], **kw)
    if not (right.success and left.success):
        raise RuntimeError("integration of L3 v = F failed")

    def state(s):
        s = np.asarray(s, dtype=float)
        flat = s.ravel()
        out = np.empty((2, flat.size))
        inside = np.abs(flat) <= L
        r = inside & (flat >= 0)
        l_ = inside & (flat < 0)
        if np.any(r):
            out[:, r] = right.sol(flat[r])
        if np.any(l_):
            out[:, l_] = left.sol(flat[l_])
        if np.any(flat > L):
            out[1, flat > L] = np.asarray(Pp(flat[flat > L]))
            out[0, flat > L] = np.asarray(_flux_form(Pp, flat[flat > L], profile, flux, rh))
        if np.any(flat < -L):
            out[1, flat < -L] = np.asarray(Pm(flat[flat < -L]))
            out[0, flat < -L] = np.asarray(_flux_form(Pm, flat[flat < -L], profile, flux, rh))
        return out.reshape((2,) + s.shape)

    def value(s):
        res = state(s)[1]
        return float(res) if np.ndim(s) == 0 else res

    def slope(s):
        R, v = state(s)
        res = R - _q(s, profile, flux, rh) * v
        return float(res) if np.ndim(s) == 0 else res

    return Field(value, slope)


def kappa_update(f, T1, kappa_T1, spec=DEFAULT_QUAD):
    """``kappa(t) = kappa(T1) + int_{T1}^t f``; ``kappa(T1)`` must be supplied."""
    if kappa_T1 is None:
        raise ValueError("kappa(T1) must be given explicitly")

    def kappa(t):
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        vals = np.array([kappa_T1 + quad(f, T1, tk, epsabs=spec.abs_tol,
                                         epsrel=spec.rel_tol,
                                         limit=spec.max_subdivisions)[0] for tk in ts])
        return float(vals[0]) if np.ndim(t) == 0 else vals

    return kappa
