"""Special functions and overflow-safe quadrature kernels.

Elliptic quantities use the *modulus* convention: ``K(sigma)`` integrates
``1/sqrt(1 - sigma**2 sin(v)**2)``.  The parameter is ``m = sigma**2``; the
private ``*_mc`` helpers take the complementary parameter ``mc = 1 - m`` so
that values close to the logarithmic singularity at ``sigma = 1`` keep full
relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate
import scipy.special

from .errors import DivergenceError, DomainError, ToleranceNotMet

EPS = float(np.finfo(float).eps)
SQRT_PI = math.sqrt(math.pi)

# dn falls back to sech when 1 - sigma is below this
SOLITON_EDGE = 1e-6


@dataclass(frozen=True)
class EllipticModulus:
    """Elliptic modulus ``sigma`` in [0, 1]."""

    sigma: float
    tol: float = 1e-14

    def __post_init__(self):
        s = float(self.sigma)
        if not (-self.tol <= s <= 1.0 + self.tol) or math.isnan(s):
            raise DomainError(f"elliptic modulus {s!r} outside [0, 1]")
        object.__setattr__(self, "sigma", min(max(s, 0.0), 1.0))

    @property
    def m(self) -> float:
        return self.sigma * self.sigma

    @property
    def mc(self) -> float:
        return (1.0 - self.sigma) * (1.0 + self.sigma)


def _as_sigma(sigma) -> float:
    if isinstance(sigma, EllipticModulus):
        return sigma.sigma
    return EllipticModulus(sigma).sigma


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-14
    rel_tol: float = 1e-12
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if int(self.max_subdivisions) < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureSpec()


# ---------------------------------------------------------------------------
# complete elliptic integrals


def _agm_ke(mc):
    """K and E from the complementary parameter by the AGM recurrence."""
    mc = np.asarray(mc, dtype=float)
    a = np.ones_like(mc)
    b = np.sqrt(mc)
    acc = 0.5 * (1.0 - mc)
    weight = 0.5
    for _ in range(64):
        if np.all(np.abs(a - b) < 4 * EPS * a):
            break
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), np.sqrt(a * b)
        weight *= 2.0
        acc = acc + weight * c * c
    k = np.pi / (2.0 * a)
    return k, k * (1.0 - acc)


def ellipk_mc(mc):
    """K as a function of the complementary parameter (vectorized)."""
    mc = np.asarray(mc, dtype=float)
    if np.any(mc <= 0):
        raise DivergenceError("K diverges at sigma = 1")
    k, _ = _agm_ke(mc)
    return k[()] if k.ndim == 0 else k


def ellipe_mc(mc):
    mc = np.asarray(mc, dtype=float)
    safe = np.where(mc > 0, mc, 1.0)
    _, e = _agm_ke(safe)
    e = np.where(mc > 0, e, 1.0)
    return e[()] if e.ndim == 0 else e


def complete_elliptic_k(sigma) -> float:
    """Complete elliptic integral of the first kind, modulus ``sigma``."""
    s = _as_sigma(sigma)
    if s >= 1.0:
        raise DivergenceError("K(sigma) diverges at sigma = 1")
    return float(ellipk_mc((1.0 - s) * (1.0 + s)))


def complete_elliptic_e(sigma) -> float:
    """Complete elliptic integral of the second kind, modulus ``sigma``."""
    s = _as_sigma(sigma)
    return float(ellipe_mc((1.0 - s) * (1.0 + s)))


def cos2_weighted_k(m, mc=None):
    """``J(m) = (E - (1 - m) K) / m`` without the cancellation at small m.

    J is the integral of cos(v)**2 / sqrt(1 - m sin(v)**2) over [0, pi/2];
    ``J(0) = pi/4`` and ``J(1) = 1``.
    """
    m = np.asarray(m, dtype=float)
    mc = 1.0 - m if mc is None else np.asarray(mc, dtype=float)
    small = m < 0.25
    # (pi/4) 2F1(1/2, 1/2; 2; m)
    ms = np.where(small, m, 0.0)
    term = np.ones_like(ms)
    total = np.ones_like(ms)
    for n in range(80):
        term = term * (n + 0.5) ** 2 / ((n + 1.0) * (n + 2.0)) * ms
        total = total + term
        if np.all(term <= EPS * total):
            break
    series = 0.25 * np.pi * total
    big_mc = np.where(small, 0.5, mc)
    big_m = np.where(small, 0.5, m)
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = big_mc > 0
        kk, ee = _agm_ke(np.where(pos, big_mc, 0.5))
        direct = np.where(pos, (ee - big_mc * kk) / big_m, 1.0)
    out = np.where(small, series, direct)
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Jacobi dn


def _dn_landen(u, mc):
    """dn by the descending Landen (AGM) scheme; u already reduced."""
    a = [np.ones_like(mc)]
    c = [np.sqrt(np.clip(1.0 - mc, 0.0, None))]
    b = np.sqrt(mc)
    for _ in range(32):
        an, cn = 0.5 * (a[-1] + b), 0.5 * (a[-1] - b)
        b = np.sqrt(a[-1] * b)
        a.append(an)
        c.append(cn)
        if np.all(np.abs(cn) < EPS * an):
            break
    n = len(a) - 1
    phi = (2.0 ** n) * a[n] * u
    prev = phi
    for j in range(n, 0, -1):
        prev = phi
        phi = 0.5 * (phi + np.arcsin(np.clip(c[j] / a[j] * np.sin(phi), -1.0, 1.0)))
    return np.cos(phi) / np.cos(prev - phi)


def dn_mc(u, mc):
    """Vectorized dn with complementary parameter ``mc`` (broadcasts)."""
    u, mc = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(mc, dtype=float))
    out = np.ones(u.shape)
    sigma_c = 1.0 - np.sqrt(np.clip(1.0 - mc, 0.0, 1.0))
    edge = sigma_c < SOLITON_EDGE
    trivial = mc >= 1.0
    if np.any(edge):
        out[edge] = 1.0 / np.cosh(u[edge])
    mid = ~(edge | trivial)
    if np.any(mid):
        um, mm = u[mid], mc[mid]
        period = 2.0 * ellipk_mc(mm)
        ur = np.abs(um - period * np.round(um / period))
        out[mid] = _dn_landen(ur, mm)
    return out[()] if out.ndim == 0 else out


def jacobi_dn(u, sigma):
    """Jacobi ``dn(u, sigma)`` in the modulus convention.

    Arguments are reduced modulo the real period ``2K(sigma)`` before the
    Landen recursion; within ``SOLITON_EDGE`` of ``sigma = 1`` the exact
    limit ``sech(u)`` is used.
    """
    if isinstance(sigma, EllipticModulus):
        s = np.asarray(sigma.sigma, dtype=float)
    else:
        s = np.asarray(sigma, dtype=float)
        if np.any((s < 0) | (s > 1)):
            raise DomainError("modulus outside [0, 1]")
    return dn_mc(u, (1.0 - s) * (1.0 + s))


# ---------------------------------------------------------------------------
# Gaussian tails


def erf(x):
    return scipy.special.erf(x)


def gauss_tail_over_z2(w: float) -> float:
    """Integral of exp(-z**2)/z**2 over (-inf, w] for w < 0.

    Uses the integration-by-parts closed form
    ``-exp(-w**2)/w - sqrt(pi) (1 + erf(w))``.
    """
    w = float(w)
    if not w < 0:
        raise DomainError("gauss_tail_over_z2 needs w < 0")
    z = -w
    if z >= 8.0:
        # asymptotic series of 1/z - sqrt(pi) erfcx(z); terms shrink until k ~ z**2
        inv = 1.0 / (2.0 * z * z)
        term, total = inv, 0.0
        for k in range(1, 40):
            total += term if k % 2 else -term
            term *= (2 * k + 1) * inv
        return math.exp(-z * z) * total / z
    return math.exp(-z * z) * (1.0 / z - SQRT_PI * float(scipy.special.erfcx(z)))


# ---------------------------------------------------------------------------
# scaled integrals


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@dataclass(frozen=True)
class ScaledIntegral:
    """A real number stored as ``mantissa * exp(log_scale)``.

    The constructor renormalizes so that ``|mantissa|`` lies in (0.1, 10]
    (or is exactly zero).  ``info`` carries diagnostics and never takes part
    in comparisons.
    """

    log_scale: float
    mantissa: float
    info: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        m, ls = float(self.mantissa), float(self.log_scale)
        if not (math.isfinite(m) and not math.isnan(ls)):
            raise ValueError(f"non-finite scaled integral ({ls}, {m})")
        if m == 0.0:
            object.__setattr__(self, "log_scale", 0.0)
            object.__setattr__(self, "mantissa", 0.0)
            return
        if not math.isfinite(ls):
            raise ValueError("infinite log_scale with nonzero mantissa")
        if 0.1 < abs(m) <= 10.0:
            object.__setattr__(self, "log_scale", ls)
            object.__setattr__(self, "mantissa", m)
            return
        shift = math.log(abs(m))
        new_ls, err = _two_sum(ls, shift)
        object.__setattr__(self, "log_scale", new_ls)
        object.__setattr__(self, "mantissa", m * math.exp(-shift) * math.exp(err))

    @classmethod
    def from_float(cls, value: float) -> "ScaledIntegral":
        return cls(0.0, float(value))

    def __float__(self) -> float:
        return self.mantissa * math.exp(self.log_scale)

    value = property(__float__)

    def log_abs(self) -> float:
        return self.log_scale + math.log(abs(self.mantissa)) if self.mantissa else -math.inf

    def _rescaled(self, target: float) -> float:
        if self.mantissa == 0.0:
            return 0.0
        d, e = _two_sum(self.log_scale, -target)
        return self.mantissa * math.exp(d) * math.exp(e)

    def __add__(self, other):
        if not isinstance(other, ScaledIntegral):
            other = ScaledIntegral.from_float(other)
        if self.mantissa == 0.0:
            return other
        if other.mantissa == 0.0:
            return self
        top = max(self.log_scale, other.log_scale)
        return ScaledIntegral(top, self._rescaled(top) + other._rescaled(top))

    __radd__ = __add__

    def __neg__(self):
        return ScaledIntegral(self.log_scale, -self.mantissa)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, ScaledIntegral):
            other = ScaledIntegral.from_float(other)
        ls, err = _two_sum(self.log_scale, other.log_scale)
        return ScaledIntegral(ls, self.mantissa * other.mantissa * math.exp(err))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, ScaledIntegral):
            other = ScaledIntegral.from_float(other)
        if other.mantissa == 0.0:
            raise ZeroDivisionError("division by a zero scaled integral")
        ls, err = _two_sum(self.log_scale, -other.log_scale)
        return ScaledIntegral(ls, self.mantissa / other.mantissa * math.exp(err))


# ---------------------------------------------------------------------------
# overflow-safe quadrature of amplitude * exp(exponent / eps)


def _tail_cutoff(log_weight, anchor, direction, step, threshold):
    """Walk outward from ``anchor`` doubling the step until the log-weight
    drops below ``threshold``; returns the cutoff and the log-weight there."""
    h = step
    for _ in range(200):
        y = anchor + direction * h
        lw = log_weight(y)
        if lw < threshold:
            return y, lw
        h *= 2.0
    raise ToleranceNotMet("integrand does not decay toward infinity")


def laplace_quadrature(exponent, amplitude, interval, eps, spec=DEFAULT_QUAD,
                       points=(), peak=None, width=None):
    """Integrate ``amplitude(y) * exp(exponent(y) / eps)`` over ``interval``.

    The exponent is shifted by its maximum (taken over ``peak``, ``points``
    and finite endpoints, then refined by what the integrator actually
    sees), so the result never overflows.  Infinite ends are truncated
    where the shifted integrand falls below ``abs_tol * exp(-10)``; the
    cutoffs and the log-weight there are recorded in ``info``.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise DomainError("empty integration interval")
    anchors = sorted({float(p) for p in points if lo < p < hi})
    if peak is not None and lo <= peak <= hi:
        anchors = sorted(set(anchors) | {float(peak)} - {lo, hi})
    cands = anchors + [e for e in (lo, hi) if math.isfinite(e)]
    if not cands:
        cands = [0.0]
        anchors = [0.0]
    top = max(exponent(c) for c in cands)
    if width is None:
        spread = (max(cands) - min(cands)) if len(cands) > 1 else 0.0
        width = max(math.sqrt(eps), 1e-3 * spread, 1e-12)

    threshold = math.log(spec.abs_tol) - 10.0

    for _attempt in range(3):
        seen = [-math.inf]

        def log_weight(y, top=top):
            amp = abs(amplitude(y))
            la = math.log(amp) if amp > 0 else -745.0
            return la + (exponent(y) - top) / eps

        cut_lo, cut_hi = lo, hi
        info = {"log_shift": top / eps, "cutoffs": [], "pieces": 0}
        if not math.isfinite(lo):
            start = min(cands)
            cut_lo, lw = _tail_cutoff(log_weight, start, -1.0, width, threshold)
            info["cutoffs"].append({"side": "lower", "at": cut_lo, "log_weight": lw})
        if not math.isfinite(hi):
            start = max(cands)
            cut_hi, lw = _tail_cutoff(log_weight, start, 1.0, width, threshold)
            info["cutoffs"].append({"side": "upper", "at": cut_hi, "log_weight": lw})
        edges = [cut_lo] + [p for p in anchors if cut_lo < p < cut_hi] + [cut_hi]

        def integrand(y, top=top):
            arg = (exponent(y) - top) / eps
            if arg > seen[0]:
                seen[0] = arg
            return amplitude(y) * math.exp(min(arg, 700.0))

        total, err_total, bad = 0.0, 0.0, []
        for a, b in zip(edges[:-1], edges[1:]):
            if not b > a:
                continue
            val, err, out = scipy.integrate.quad(
                integrand, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                limit=int(spec.max_subdivisions), full_output=1)[:3]
            total += val
            err_total += err
            info["pieces"] += 1
            if out.get("last", 0) >= spec.max_subdivisions:
                bad.append((a, b, err))
        if seen[0] > 50.0:
            # the true maximum sits well above the guessed one: reshift
            top = top + eps * seen[0]
            continue
        break

    info["abs_error"] = err_total
    result = ScaledIntegral(top / eps, total, info)
    allowed = max(spec.abs_tol * max(len(edges) - 1, 1), spec.rel_tol * abs(total))
    if bad and err_total > 10.0 * allowed:
        raise ToleranceNotMet(
            f"quadrature did not converge (estimated error {err_total:.3e})",
            best_estimate=result)
    return result
