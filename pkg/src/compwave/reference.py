"""Pseudospectral reference solvers for the KdV and viscous Burgers equations.

Both equations are split as ``u_t = L u + N(u)`` on a periodic grid with a
diagonal linear part (``-eps d^3/dx^3`` or ``eps d^2/dx^2``) and the
quadratic flux ``N(u) = -(u^2/2)_x``.  Time stepping is exponential
time-differencing RK4: the linear part is integrated exactly, the
nonlinearity explicitly.  The phi-function coefficients are evaluated by
contour averages to avoid cancellation at small ``|L dt|``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import CFLViolation, DomainError, SolverInstability


@dataclass(frozen=True)
class PeriodicGridField:
    """Samples ``u(x0 + j L / N)``, ``j = 0..N-1``, at time ``t``."""

    length: float
    values: np.ndarray
    t: float = 0.0
    x0: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        n = v.size
        if n < 256 or n & (n - 1):
            raise DomainError("N must be a power of two >= 256")
        if not self.length > 0:
            raise DomainError("length must be positive")
        if not np.all(np.isfinite(v)):
            raise DomainError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, f, length, n, x0=0.0, t=0.0):
        x = x0 + length * np.arange(n) / n
        return cls(length, np.asarray(f(x), dtype=float), t, x0)

    @property
    def n(self):
        return self.values.size

    @property
    def dx(self):
        return self.length / self.n

    @property
    def x(self):
        return self.x0 + self.dx * np.arange(self.n)

    @property
    def mass(self):
        return float(np.mean(self.values) * self.length)

    def to_csv(self, metadata=None):
        buf = io.StringIO()
        meta = {"t": self.t, "length": self.length, "n": self.n, "x0": self.x0}
        meta.update(metadata or {})
        for k, v in meta.items():
            buf.write(f"# {k} = {v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "u"])
        for xi, ui in zip(self.x, self.values):
            w.writerow(["%.17g" % xi, "%.17g" % ui])
        return buf.getvalue()


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    dealias: bool = True
    scheme: str = "etdrk4"
    cfl: float = 1.0
    contour_points: int = 32

    def __post_init__(self):
        if not (self.dt > 0 and self.t_end >= 0):
            raise DomainError("dt must be positive and t_end non-negative")
        if self.scheme != "etdrk4":
            raise DomainError(f"unknown scheme {self.scheme!r}")

    def stable_dt(self, dx, umax):
        """Advective bound ``cfl * dx / max|u|``."""
        return math.inf if umax == 0 else self.cfl * dx / umax

    def config_hash(self):
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()[:16]


def conserved_quantities(f):
    """``(int u dx, int u^2 dx)`` by the periodic trapezoid rule."""
    v = f.values
    return float(v.sum() * f.dx), float((v * v).sum() * f.dx)


def _etdrk4_coefficients(lin, dt, m):
    """``exp(L dt/2)``, ``exp(L dt)`` and the ETDRK4 weights (Kassam-Trefethen)."""
    # upper half-circle suffices for real L (conjugate symmetry); full circle otherwise
    span = np.pi if np.isrealobj(lin) else 2 * np.pi
    r = np.exp(1j * span * (np.arange(1, m + 1) - 0.5) / m)
    Lh = dt * lin
    LR = Lh[:, None] + r[None, :]
    Q = dt * np.mean((np.exp(LR / 2) - 1) / LR, axis=1)
    f1 = dt * np.mean((-4 - LR + np.exp(LR) * (4 - 3 * LR + LR ** 2)) / LR ** 3, axis=1)
    f2 = dt * np.mean((2 + LR + np.exp(LR) * (-2 + LR)) / LR ** 3, axis=1)
    f3 = dt * np.mean((-4 - 3 * LR - LR ** 2 + np.exp(LR) * (4 - LR)) / LR ** 3, axis=1)
    if np.isrealobj(lin):
        Q, f1, f2, f3 = Q.real, f1.real, f2.real, f3.real
    return np.exp(Lh / 2), np.exp(Lh), Q, f1, f2, f3


def _run(initial, lin_of_k, cfg, check_every=50):
    n, L = initial.n, initial.length
    k = 2 * np.pi * np.fft.rfftfreq(n, d=L / n)
    umax = float(np.max(np.abs(initial.values)))
    bound = cfg.stable_dt(initial.dx, umax)
    if cfg.dt > bound:
        raise CFLViolation(f"dt = {cfg.dt:g} exceeds advective bound {bound:g}",
                           suggested_dt=bound)
    steps = max(1, int(math.ceil(cfg.t_end / cfg.dt - 1e-12)))
    dt = cfg.t_end / steps if cfg.t_end > 0 else 0.0
    if dt == 0.0:
        return initial
    lin = lin_of_k(k)
    E2, E, Q, f1, f2, f3 = _etdrk4_coefficients(lin, dt, cfg.contour_points)
    g = -0.5j * k
    if cfg.dealias:
        g = g * (k < (2.0 / 3.0) * k.max())
    if n % 2 == 0:
        g[-1] = 0.0

    def nonlin(vh):
        u = np.fft.irfft(vh, n)
        return g * np.fft.rfft(u * u)

    v = np.fft.rfft(initial.values)
    with np.errstate(over="ignore", invalid="ignore"):
        v = _march(v, nonlin, steps, dt, initial.t, E2, E, Q, f1, f2, f3, check_every)
    u = np.fft.irfft(v, n)
    return PeriodicGridField(L, u, initial.t + cfg.t_end, initial.x0)


def _march(v, nonlin, steps, dt, t0, E2, E, Q, f1, f2, f3, check_every):
    for step in range(steps):
        Nv = nonlin(v)
        a = E2 * v + Q * Nv
        Na = nonlin(a)
        b = E2 * v + Q * Na
        Nb = nonlin(b)
        c = E2 * a + Q * (2 * Nb - Nv)
        Nc = nonlin(c)
        v = E * v + f1 * Nv + 2 * f2 * (Na + Nb) + f3 * Nc
        if (step + 1) % check_every == 0 or step == steps - 1:
            if not np.all(np.isfinite(v)):
                raise SolverInstability(f"non-finite values at t = {t0 + (step + 1) * dt:g}")
    return v


def solve_kdv(initial, eps, cfg):
    """Advance ``u_t + u u_x + eps u_xxx = 0`` to ``initial.t + cfg.t_end``."""
    return _run(initial, lambda k: 1j * eps * k ** 3, cfg)


def solve_burgers(initial, eps, cfg):
    """Advance ``u_t + u u_x = eps u_xx`` to ``initial.t + cfg.t_end``."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    return _run(initial, lambda k: -eps * k * k, cfg)


def soliton(x, t, eps, kappa, x0=0.0):
    """Exact KdV soliton ``12 eps kappa^2 sech^2(kappa (x - x0 - 4 eps kappa^2 t))``."""
    return 12 * eps * kappa ** 2 / np.cosh(kappa * (x - x0 - 4 * eps * kappa ** 2 * t)) ** 2


def periodic_distance(x, center, length):
    return (x - center + 0.5 * length) % length - 0.5 * length


def _smooth_step(x, width):
    """Smooth monotone 0 -> 1 transition of given width, centred at 0."""
    return 0.5 * (1.0 + np.tanh(x / width))


def closed_step(x, a, rho, ramp_center, ramp_width=0.2):
    """Step ``(a/2)(1 - tanh(x/(2 rho)))`` plus a smooth return ramp from 0
    back up to ``a`` centred at ``ramp_center`` (periodic closure)."""
    x = np.asarray(x, dtype=float)
    return 0.5 * a * (1.0 - np.tanh(x / (2 * rho))) + a * _smooth_step(x - ramp_center, ramp_width)


def burgers_datum(x, a, keep_from=-2.0, scale=0.5, seam=None, seam_width=0.3):
    """``-(x + a x^2) Theta(-x)`` kept exact for ``x >= keep_from``.

    Further left the datum continues as a C1 exponential saturation (still
    monotone, so no compression is created); below ``seam`` it returns to
    zero through a tanh transition so the profile is periodic.
    """
    x = np.asarray(x, dtype=float)
    base = np.where(x < 0, -(x + a * x * x), 0.0)
    cap = -(keep_from + a * keep_from ** 2)
    slope = -(1.0 + 2.0 * a * keep_from)
    if slope <= 0:
        raise DomainError("keep_from must lie left of the datum's maximum")
    s = np.maximum(keep_from - x, 0.0)
    sat = cap - slope * scale * (-np.expm1(-s / scale))
    out = np.where(x >= keep_from, base, sat)
    if seam is not None:
        out = out * _smooth_step(x - seam, seam_width)
    return out
