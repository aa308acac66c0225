"""Burgers equation with a weak initial discontinuity.

Problem: ``u_t + u u_x = eps u_xx`` for ``t > -1`` with
``u(x, -1) = -(x + a x**2) * Theta(-x)``.  The exact solution comes from the
Cole-Hopf transform as a quotient of Laplace-type integrals; the inviscid
limit has a shock on ``x = s(t)`` for ``t > 0``.  Near the shock the
solution is approximated by a two-scale leading term ``h0(sigma, zeta, t)``
with ``sigma = (x - s(t))/eps`` and ``zeta = x/sqrt(eps)``.

Closed forms below are algebraically rearranged so that none of them
cancel catastrophically as ``t -> 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import AmbiguousPointError, DomainError, NoRealCriticalPoints
from .specfun import (DEFAULT_QUAD, SQRT_PI, ScaledIntegral, erf,
                      gauss_tail_over_z2, laplace_quadrature)


@dataclass(frozen=True)
class BurgersSetup:
    a: float
    eps: float

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError("a must be positive")
        if not self.eps > 0:
            raise DomainError("eps must be positive")


@dataclass(frozen=True)
class InnerCoords:
    sigma: float
    zeta: float
    t: float

    @classmethod
    def from_xt(cls, x, t, setup):
        return cls(sigma=(x - shock_position(t, setup)) / setup.eps,
                   zeta=x / math.sqrt(setup.eps), t=t)

    @classmethod
    def from_sigma(cls, sigma, t, setup):
        """Coordinates of the point ``x = s(t) + eps * sigma``."""
        x = shock_position(t, setup) + setup.eps * sigma
        return cls(sigma=sigma, zeta=x / math.sqrt(setup.eps), t=t)

    def x(self, setup):
        return self.zeta * math.sqrt(setup.eps)


@dataclass(frozen=True)
class CriticalPoints:
    y_minus: float
    y_plus: float
    R: float


@dataclass(frozen=True)
class OmegaAlphaDomain:
    alpha: float
    t_max: float

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise DomainError("alpha must lie in (0, 1)")
        if not self.t_max > 0:
            raise DomainError("t_max must be positive")


# ---------------------------------------------------------------------------
# inviscid limit and shock geometry


def shock_position(t, setup):
    """``s(t) = ((3t+4)**1.5 - 9t - 8) / (9a(1+t))`` for t >= 0."""
    if t < 0:
        raise DomainError("shock curve defined for t >= 0")
    q = math.sqrt(3 * t + 4)
    # numerator rationalized: (3t+4)^3 - (9t+8)^2 = 27 t^2 (1+t)
    return 3 * t * t / (setup.a * (q * q * q + 9 * t + 8))


def shock_speed(t, setup):
    """``mu(t) = s'(t) = ((3t+1) sqrt(3t+4) - 2) / (18 a (1+t)**2)``."""
    if t < 0:
        raise DomainError("shock speed defined for t >= 0")
    q = math.sqrt(3 * t + 4)
    return 3 * t / (2 * setup.a * ((3 * t + 1) * q + 2))


def r_and_k(t):
    """``r(t) = sqrt(3t + 4 - 2 sqrt(3t+4))`` and ``K(t) = r(t)/sqrt(3)``."""
    if t < 0:
        raise DomainError("r(t) defined for t >= 0")
    q = math.sqrt(3 * t + 4)
    r = math.sqrt(3 * t * q / (q + 2))
    return r, r / math.sqrt(3.0)


def u0_limit(x, t, setup):
    """Inviscid (characteristics) solution.

    Raises AmbiguousPointError exactly on the shock for t > 0.
    """
    a = setup.a
    if t < -1:
        raise DomainError("t must be >= -1")
    if t <= -1:
        return -(x + a * x * x) if x < 0 else 0.0
    edge = shock_position(t, setup) if t > 0 else 0.0

    def left():
        disc = t * t - 4 * a * (1 + t) * x
        return (2 * a * (1 + t) * x + t + math.sqrt(disc)) / (2 * a * (1 + t) ** 2)

    if t > 0 and x == edge:
        raise AmbiguousPointError("point lies on the shock", left=left(), right=0.0)
    if x < edge:
        return left()
    if x == edge:
        # t <= 0 at x = 0: the formula and the zero branch agree
        return left()
    return 0.0


def in_omega_alpha(x, t, setup, dom):
    """Membership in ``{|sigma| < t^2 eps^(4 alpha - 1), eps^(1-alpha) < t^3 < t_max^3}``."""
    eps = setup.eps
    if t <= 0:
        return False
    t3 = t ** 3
    if not (eps ** (1 - dom.alpha) < t3 < dom.t_max ** 3):
        return False
    sigma = (x - shock_position(t, setup)) / eps
    return abs(sigma) < t * t * eps ** (4 * dom.alpha - 1)


# ---------------------------------------------------------------------------
# Cole-Hopf integrals


def f_minus(y, x, t, setup):
    """``F-(y) = -(y-x)^2/(4(1+t)) + y^2/4 + a y^3/6`` (expanded form)."""
    return (2 * x * y - x * x + t * y * y) / (4 * (1 + t)) + setup.a * y * y * y / 6


def f_minus_y(y, x, t, setup):
    return -(y - x) / (2 * (1 + t)) + y / 2 + setup.a * y * y / 2


def f_minus_yy(y, x, t, setup):
    return t / (2 * (1 + t)) + setup.a * y


def critical_points(x, t, setup):
    """Stationary points ``y-(x,t) <= y+(x,t)`` of F- in y.

    ``y-`` is the local maximum, ``y+`` the local minimum.
    """
    a = setup.a
    if t <= -1:
        raise DomainError("t must exceed -1")
    disc = t * t - 4 * a * x * (1 + t)
    if disc < 0:
        raise NoRealCriticalPoints(f"discriminant {disc:.3e} < 0 at x={x}, t={t}")
    R = math.sqrt(disc)
    lead = 2 * a * (1 + t)
    # pick the non-cancelling form for each root (product of roots = x/(a(1+t)))
    if t >= 0:
        ym = -(t + R) / lead
        yp = -2 * x / (t + R) if t + R > 0 else 0.0
    else:
        yp = (R - t) / lead
        ym = 2 * x / (R - t)
    return CriticalPoints(y_minus=min(ym, yp), y_plus=max(ym, yp), R=R)


def f_minus_at_critical(x, t, setup, branch):
    """Closed form of F- at ``y-`` (branch=-1) or ``y+`` (branch=+1)."""
    a = setup.a
    R = critical_points(x, t, setup).R
    num = x * t + 3 * a * x * x * (1 + t) - (t - branch * R) / (2 * a * (1 + t)) * R * R
    return -num / (12 * a * (1 + t) ** 2)


def _peak_and_points(x, t, setup):
    """Location of max F- on (-inf, 0] plus breakpoints for quadrature."""
    eps = setup.eps
    try:
        cp = critical_points(x, t, setup)
    except NoRealCriticalPoints:
        return 0.0, [], math.sqrt(eps)
    ym, yp = cp.y_minus, cp.y_plus
    pts = []
    peak = 0.0
    width = math.sqrt(eps)
    if ym < 0 and cp.R > 0:
        curv = cp.R / (2 * (1 + t))
        # near a degenerate (cubic) critical point the local scale is (eps/a)^(1/3)
        width = min(math.sqrt(eps / curv), 2.0 * (eps / setup.a) ** (1.0 / 3.0))
        pts += [ym - 8 * width, ym - 3 * width, ym, ym + 3 * width, ym + 8 * width]
        if f_minus(ym, x, t, setup) > f_minus(0.0, x, t, setup):
            peak = ym
    if yp < 0:
        pts.append(yp)
    pts = [p for p in pts if p < 0]
    return peak, pts, width


def _psi_minus_integrals(x, t, setup, spec, amplitude, upper=0.0, lower=-math.inf):
    peak, pts, width = _peak_and_points(x, t, setup)
    peak = min(max(peak, lower), upper)
    pts = [p for p in pts if lower < p < upper]
    return laplace_quadrature(lambda y: f_minus(y, x, t, setup), amplitude,
                              (lower, upper), setup.eps, spec, points=pts,
                              peak=peak, width=width)


def psi_plus(x, t, setup, spec=DEFAULT_QUAD):
    """Gaussian half-line integral over y > 0 (no 1/(2 sqrt(pi(1+t))) factor).

    For ``x >= 1e-2 sqrt(eps)`` the closed form with the tail integral is
    used; closer to or left of the origin the defining integral is
    evaluated directly.
    """
    eps = setup.eps
    if x >= 1e-2 * math.sqrt(eps):
        zeta = x / math.sqrt(eps)
        w0 = zeta / (2 * math.sqrt(1 + t))
        val = (2 * math.sqrt(eps * math.pi * (1 + t))
               - 2 * eps * (1 + t) / x * math.exp(-zeta * zeta / (4 * (1 + t)))
               + math.sqrt(eps * (1 + t)) * gauss_tail_over_z2(-w0))
        return ScaledIntegral(0.0, val, {"method": "closed form"})
    res = laplace_quadrature(lambda y: -(y - x) ** 2 / (4 * (1 + t)), lambda y: 1.0,
                             (0.0, math.inf), eps, spec,
                             width=math.sqrt(eps * (1 + t)))
    res.info["method"] = "quadrature"
    return res


def psi_plus_direct(x, t, setup):
    """The same half-line integral through the error function (test oracle)."""
    w0 = x / (2 * math.sqrt(setup.eps * (1 + t)))
    return math.sqrt(math.pi * setup.eps * (1 + t)) * (1 + float(erf(w0)))


def psi_parts(x, t, setup, spec=DEFAULT_QUAD):
    """``(Psi-, Psi+, Psi0)`` as scaled integrals; ``u = -Psi0/(Psi- + Psi+)``."""
    if not t > -1:
        raise DomainError("t must exceed -1")
    a = setup.a
    pm = _psi_minus_integrals(x, t, setup, spec, lambda y: 1.0)
    p0 = _psi_minus_integrals(x, t, setup, spec, lambda y: y + a * y * y)
    pp = psi_plus(x, t, setup, spec)
    return pm, pp, p0


def psi_minus_split(x, t, setup, spec=DEFAULT_QUAD):
    """``Psi-`` split at the local minimum ``y+``: ``(Psi-_s, Psi-_b)``."""
    cp = critical_points(x, t, setup)
    yp = min(cp.y_plus, 0.0)
    s = _psi_minus_integrals(x, t, setup, spec, lambda y: 1.0, upper=yp)
    if yp >= 0.0:
        return s, ScaledIntegral(0.0, 0.0)
    b = laplace_quadrature(lambda y: f_minus(y, x, t, setup), lambda y: 1.0,
                           (yp, 0.0), setup.eps, spec, peak=0.0,
                           width=2 * setup.eps * (1 + t) / max(x, 1e-300))
    return s, b


def laplace_series_psi_s(x, t, setup, order=1):
    """Laplace series of ``Psi-_s`` truncated after ``order`` correction terms,
    as a scaled integral (gamma_0 = 1, gamma_1 = 5/24)."""
    gammas = (1.0, 5.0 / 24.0)
    if order > 1:
        raise ValueError("only gamma_0 and gamma_1 are available")
    eps, a = setup.eps, setup.a
    cp = critical_points(x, t, setup)
    H = 1.0 / math.sqrt(cp.R / (2 * (1 + t)))
    total = sum(eps ** j * g * a ** (2 * j) * H ** (6 * j + 1)
                for j, g in enumerate(gammas[:order + 1]))
    log_scale = f_minus(cp.y_minus, x, t, setup) / eps
    return ScaledIntegral(log_scale, math.sqrt(2 * math.pi * eps) * total)


def psi_b_leading(x, t, setup):
    """Leading boundary term ``2 eps (1+t)/x * exp(-zeta^2/(4(1+t)))``."""
    eps = setup.eps
    return ScaledIntegral(-x * x / (4 * eps * (1 + t)), 2 * eps * (1 + t) / x)


def u_exact(x, t, setup, spec=DEFAULT_QUAD):
    """Exact solution from the Cole-Hopf quotient ``-Psi0 / (Psi- + Psi+)``."""
    if t <= -1:
        return u0_limit(x, -1.0, setup)
    pm, pp, p0 = psi_parts(x, t, setup, spec)
    return -float(p0 / (pm + pp))


def u_cole_hopf_gradient(x, t, setup, spec=DEFAULT_QUAD):
    """Exact solution from ``-2 eps Psi_x / Psi`` with the x-derivative taken
    under the integral sign (independent of the quotient identity)."""
    eps = setup.eps
    weight = lambda y: (x - y) / (1 + t)
    num_m = _psi_minus_integrals(x, t, setup, spec, weight)
    den_m = _psi_minus_integrals(x, t, setup, spec, lambda y: 1.0)
    gauss = lambda y: -(y - x) ** 2 / (4 * (1 + t))
    pts = [x] if x > 0 else []
    num_p = laplace_quadrature(gauss, weight, (0.0, math.inf), eps, spec, points=pts,
                               peak=max(x, 0.0), width=math.sqrt(eps * (1 + t)))
    den_p = laplace_quadrature(gauss, lambda y: 1.0, (0.0, math.inf), eps, spec,
                               points=pts, peak=max(x, 0.0),
                               width=math.sqrt(eps * (1 + t)))
    return float((num_m + num_p) / (den_m + den_p))


def h0_leading(coords, setup):
    """Two-scale leading term of the shock-layer expansion."""
    t = coords.t
    if not t > 0:
        raise DomainError("h0 needs t > 0")
    if not coords.zeta > 0:
        raise DomainError("h0 needs zeta > 0")
    mu = shock_speed(t, setup)
    _, K = r_and_k(t)
    bracket = 1.0 + gauss_tail_over_z2(-coords.zeta / (2 * math.sqrt(1 + t))) / (2 * SQRT_PI)
    ex = mu * coords.sigma
    if ex > 700:
        return 0.0
    return 2 * mu / (1 + K * math.exp(ex) * bracket)
