"""Command-line driver.

Every subcommand reads its parameters from defaults, then an optional flat
``key = value`` config file, then command-line flags (flags win), and emits
a table as CSV (with a ``#`` metadata header) or as a JSON array of rows.

Exit codes: 0 success, 2 usage error, 3 tolerance failure, 4 solver
instability.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np
import scipy

from . import __version__
from .burgers import (BurgersSetup, InnerCoords, OmegaAlphaDomain, h0_leading,
                      in_omega_alpha, shock_position, u0_limit, u_exact)
from .errors import (AmbiguousPointError, CFLViolation, DegenerateStatesError,
                     DomainError, SolverInstability, ToleranceNotMet)
from .kdv import DSWFormula, DSWParams, StepProfile, build_modulation_table
from .parabolic import FluxModel, StepStates, rankine_hugoniot, traveling_wave
from .reference import (PeriodicGridField, SolverConfig, burgers_datum, closed_step,
                        conserved_quantities, solve_burgers, solve_kdv)

EXIT_OK, EXIT_USAGE, EXIT_TOL, EXIT_UNSTABLE = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _floats(text):
    return [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]


# parameter name -> (type, default, help)
COMMANDS = {
    "burgers-eval": {
        "a": (float, 1.0, "quadratic coefficient of the datum"),
        "eps": (float, 1e-3, "dissipation"),
        "t": (float, 0.5, "time"),
        "x_min": (float, None, "left end of x range (default s(t) - 10 eps)"),
        "x_max": (float, None, "right end of x range (default s(t) + 10 eps)"),
        "n": (int, 21, "number of x samples"),
        "alpha": (float, 0.125, "domain exponent"),
        "t_max": (float, 1.0, "upper time bound of the inner domain"),
    },
    "error-scaling": {
        "a": (float, 1.0, "quadratic coefficient"),
        "t": (float, 0.5, "time"),
        "eps_list": (_floats, "1e-3,2.5e-4,6.25e-5", "comma-separated eps values"),
        "sigma_min": (float, -5.0, "smallest stretched coordinate"),
        "sigma_max": (float, 5.0, "largest stretched coordinate"),
        "n": (int, 21, "samples per eps"),
        "alpha": (float, 0.125, "domain exponent"),
        "t_max": (float, 1.0, "upper time bound of the inner domain"),
    },
    "modulation-table": {
        "n_nodes": (int, 64, "number of table nodes (>= 16)"),
    },
    "dsw-compare": {
        "a": (float, 1.0, "left state"),
        "eps": (float, 2e-4, "dispersion"),
        "rho": (float, 0.02, "initial gradient width"),
        "t": (float, 1.0, "time"),
        "n": (int, 4096, "grid size (power of two)"),
        "length": (float, 16.0, "periodic domain length"),
        "ramp": (float, 6.0, "centre of the closing ramp"),
        "dt": (float, 4e-4, "time step"),
        "amp_tol": (float, 0.10, "relative tolerance on the leading amplitude"),
        "edge_tol": (float, 0.05, "relative tolerance on the fan edges"),
    },
    "traveling-wave": {
        "flux": (str, "quadratic", "'quadratic' or 'poly:c0,c1,c2,...'"),
        "nu_minus": (float, 1.0, "left state"),
        "nu_plus": (float, 0.0, "right state"),
        "sigma_min": (float, -40.0, "left end of the table"),
        "sigma_max": (float, 40.0, "right end of the table"),
        "n": (int, 161, "table rows"),
    },
    "kdv-run": {
        "a": (float, 1.0, "left state"),
        "eps": (float, 2e-4, "dispersion"),
        "rho": (float, 0.02, "initial gradient width"),
        "t": (float, 1.0, "final time"),
        "n": (int, 4096, "grid size (power of two)"),
        "length": (float, 16.0, "periodic domain length"),
        "ramp": (float, 6.0, "centre of the closing ramp"),
        "dt": (float, 4e-4, "time step"),
    },
    "burgers-run": {
        "a": (float, 1.0, "quadratic coefficient"),
        "eps": (float, 0.05, "dissipation"),
        "t": (float, 0.5, "final time (start is t = -1)"),
        "n": (int, 2048, "grid size (power of two)"),
        "length": (float, 32.0, "periodic domain length"),
        "dt": (float, 2e-3, "time step"),
        "x_lo": (float, -0.5, "left end of the comparison window"),
        "x_hi": (float, 1.0, "right end of the comparison window"),
    },
}

DEFAULT_TOL = {
    "burgers-eval": 1e-8,
    "error-scaling": 1e-8,
    "modulation-table": 1e-10,
    "dsw-compare": 0.0,
    "traveling-wave": 1e-9,
    "kdv-run": 1e-8,
    "burgers-run": 1e-3,
}


@dataclass
class RunConfig:
    command: str
    params: dict
    fmt: str = "csv"
    out: str | None = None
    tol: float = 1e-8
    stamp: bool = False
    meta: list = field(default_factory=list)

    def config_hash(self):
        blob = json.dumps({"command": self.command, "params": self.params, "tol": self.tol},
                          sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def read_config_file(path):
    """Flat ``key = value`` file; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="compwave", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, params in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value parameter file")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--tol", type=float, help="tolerance for the command's checks")
        sp.add_argument("--stamp", action="store_true", help="add a timestamp to the header")
        for key, (_, default, help_) in params.items():
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                            help=f"{help_} (default {default})")
    return p


def resolve_config(ns):
    spec = COMMANDS[ns.command]
    raw = {k: d for k, (_, d, _) in spec.items()}
    if ns.config:
        try:
            from_file = read_config_file(ns.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}")
        unknown = set(from_file) - set(spec) - {"tol"}
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        raw.update({k: v for k, v in from_file.items() if k in spec})
        if "tol" in from_file and ns.tol is None:
            ns.tol = float(from_file["tol"])
    for k in spec:
        v = getattr(ns, k)
        if v is not None:
            raw[k] = v
    params = {}
    for k, (typ, _, _) in spec.items():
        v = raw[k]
        if v is None:
            params[k] = None
            continue
        try:
            params[k] = typ(v) if not isinstance(v, list) else v
        except (TypeError, ValueError):
            raise UsageError(f"invalid value for '{k}': {v!r}")
    tol = DEFAULT_TOL[ns.command] if ns.tol is None else ns.tol
    if tol < 0 or not math.isfinite(tol):
        raise UsageError("'tol' must be a non-negative finite number")
    return RunConfig(ns.command, params, ns.format, ns.out, tol, ns.stamp)


def _require(cond, key, why):
    if not cond:
        raise UsageError(f"invalid '{key}': {why}")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    if v is None:
        return ""
    return "%.17g" % float(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if v is None or isinstance(v, str):
        return v
    v = float(v)
    return v if math.isfinite(v) else None


def render(cfg, columns, rows):
    if cfg.fmt == "json":
        data = [{c: _json_value(v) for c, v in zip(columns, r)} for r in rows]
        return json.dumps(data, indent=1) + "\n"
    lines = [f"# command = {cfg.command}", f"# config_hash = {cfg.config_hash()}",
             f"# compwave = {__version__}, numpy = {np.__version__}, scipy = {scipy.__version__}"]
    lines += [f"# {k} = {_fmt(v) if not isinstance(v, list) else ','.join(map(_fmt, v))}"
              for k, v in sorted(cfg.params.items())]
    lines.append(f"# tol = {_fmt(cfg.tol)}")
    if cfg.stamp:
        lines.append(f"# stamp = {time.strftime('%Y-%m-%dT%H:%M:%S')}")
    lines += [f"# {m}" for m in cfg.meta]
    lines.append(",".join(columns))
    lines += [",".join(_fmt(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands; each returns (columns, rows, failures)


def cmd_burgers_eval(cfg):
    p = cfg.params
    setup = BurgersSetup(p["a"], p["eps"])
    t = p["t"]
    _require(t > -1, "t", "must exceed -1")
    s = shock_position(t, setup) if t >= 0 else 0.0
    lo = s - 10 * p["eps"] if p["x_min"] is None else p["x_min"]
    hi = s + 10 * p["eps"] if p["x_max"] is None else p["x_max"]
    _require(p["n"] >= 1, "n", "must be at least 1")
    _require(hi > lo or (p["n"] == 1 and hi == lo), "x_max", "x range is empty")
    dom = OmegaAlphaDomain(p["alpha"], p["t_max"])
    rows = []
    for x in np.linspace(lo, hi, p["n"]):
        try:
            u0 = u0_limit(x, t, setup)
        except AmbiguousPointError:
            u0 = math.nan
        h0 = math.nan
        if t > 0 and x > 0:
            h0 = h0_leading(InnerCoords.from_xt(x, t, setup), setup)
        rows.append((x, t, u_exact(x, t, setup), u0, h0, in_omega_alpha(x, t, setup, dom)))
    return ["x", "t", "u_exact", "u0", "h0", "in_omega_alpha"], rows, []


def error_scaling_rows(a, t, eps_list, sigmas, alpha, t_max):
    """``(eps, max_error, order, n_used, n_flagged)`` rows plus the flagged points."""
    rows, flagged, prev = [], [], None
    dom = OmegaAlphaDomain(alpha, t_max)
    for eps in eps_list:
        setup = BurgersSetup(a, eps)
        errs, n_out = [], 0
        for sg in sigmas:
            c = InnerCoords.from_sigma(sg, t, setup)
            x = c.x(setup)
            if not in_omega_alpha(x, t, setup, dom):
                n_out += 1
                flagged.append((eps, sg))
                continue
            errs.append(abs(u_exact(x, t, setup) - h0_leading(c, setup)))
        err = max(errs) if errs else math.nan
        order = None
        if prev is not None and errs:
            order = math.log(prev[1] / err) / math.log(prev[0] / eps)
        rows.append((eps, err, order, len(errs), n_out))
        prev = (eps, err)
    return rows, flagged


def cmd_error_scaling(cfg):
    p = cfg.params
    eps_list = p["eps_list"]
    _require(len(eps_list) >= 1 and all(e > 0 for e in eps_list), "eps_list",
             "need positive values")
    _require(p["n"] >= 1, "n", "must be at least 1")
    sig = np.linspace(p["sigma_min"], p["sigma_max"], p["n"])
    rows, flagged = error_scaling_rows(p["a"], p["t"], eps_list, sig, p["alpha"], p["t_max"])
    cfg.meta += [f"flagged eps={_fmt(e)} sigma={_fmt(s)} (outside inner domain)" for e, s in flagged]
    return ["eps", "max_error", "order", "n_used", "n_flagged"], rows, []


def cmd_modulation_table(cfg):
    n = cfg.params["n_nodes"]
    _require(n >= 16, "n_nodes", "must be at least 16")
    tab = build_modulation_table(n)
    res = tab.residuals()
    rows = [(y, s, w, r) for y, s, w, r in zip(tab.y, tab.sigma, tab.omega, res)]
    fails = [f"residual {r:.3e} at y={y:.17g}" for y, _, _, r in rows if abs(r) > cfg.tol]
    return ["y", "sigma", "omega", "residual"], rows, fails


def _kdv_reference(p):
    n = p["n"]
    _require(n >= 256 and n & (n - 1) == 0, "n", "must be a power of two >= 256")
    _require(p["length"] > 0, "length", "must be positive")
    f0 = PeriodicGridField.from_function(
        lambda x: closed_step(x, p["a"], p["rho"], p["ramp"], 0.3),
        p["length"], n, x0=-0.5 * p["length"])
    return f0, solve_kdv(f0, p["eps"], SolverConfig(dt=p["dt"], t_end=p["t"]))


def fan_summary(x, u, a, t, ramp=None):
    """Fan edges by the ``a/100`` threshold, leading amplitude and window."""
    right = ramp - 1.0 if ramp is not None else x.max()
    w = (x > -3 * a * t) & (x < min(right, 3 * a * t))
    dev_left = np.abs(u - a) > a / 100
    dev_right = np.abs(u) > a / 100
    xl = float(x[w & dev_left].min()) if np.any(w & dev_left) else math.nan
    xr = float(x[w & dev_right].max()) if np.any(w & dev_right) else math.nan
    return xl, xr, float(u[w].max())


def cmd_dsw_compare(cfg):
    p = cfg.params
    a, t = p["a"], p["t"]
    params = DSWParams(a, p["eps"], p["rho"])
    f0, ref = _kdv_reference(p)
    x, u = ref.x, ref.values
    sel = (x > -2 * a * t) & (x < 1.5 * a * t)
    table = build_modulation_table(64)
    ud = DSWFormula(params, StepProfile.tanh(a), table, t)(x[sel])
    fan = (x[sel] >= -a * t) & (x[sel] <= 2 * a * t / 3)
    l2 = math.sqrt(float(np.sum((ud - u[sel])[fan] ** 2) * ref.dx))
    xl, xr, amp = fan_summary(x, u, a, t, p["ramp"])
    cfg.meta += [f"leading_amplitude = {_fmt(amp)}", f"fan_left = {_fmt(xl)}",
                 f"fan_right = {_fmt(xr)}", f"l2_fan = {_fmt(l2)}", f"mu = {_fmt(params.mu)}"]
    fails = []
    if abs(amp - 2 * a) > p["amp_tol"] * 2 * a:
        fails.append(f"leading amplitude {amp:.4g} vs {2 * a:.4g}")
    if not abs(xl + a * t) <= p["edge_tol"] * a * t:
        fails.append(f"left edge {xl:.4g} vs {-a * t:.4g}")
    if not abs(xr - 2 * a * t / 3) <= p["edge_tol"] * 2 * a * t / 3:
        fails.append(f"right edge {xr:.4g} vs {2 * a * t / 3:.4g}")
    rows = [(xi, di, ui, di - ui) for xi, di, ui in zip(x[sel], ud, u[sel])]
    return ["x", "u_dsw_formula", "u_reference", "diff"], rows, fails


def _flux_from(text):
    if text == "quadratic":
        return FluxModel.burgers()
    if text.startswith("poly:"):
        try:
            return FluxModel.polynomial(_floats(text[5:]))
        except ValueError:
            pass
    raise UsageError(f"invalid 'flux': {text!r}")


def cmd_traveling_wave(cfg):
    p = cfg.params
    flux = _flux_from(p["flux"])
    states = StepStates(p["nu_minus"], p["nu_plus"])
    _require(p["n"] >= 1, "n", "must be at least 1")
    _require(p["sigma_max"] >= p["sigma_min"], "sigma_max", "range is empty")
    rh = rankine_hugoniot(flux, states)
    prof = traveling_wave(flux, states, rh)
    s = np.linspace(p["sigma_min"], p["sigma_max"], p["n"])
    lam, dlam = prof(s), prof.derivative(s)
    res = dlam - (flux.phi(lam) - rh.c * lam - rh.b)
    cfg.meta += [f"c = {_fmt(rh.c)}", f"b = {_fmt(rh.b)}"]
    fails = [f"ode residual {r:.3e} at sigma={si:.17g}" for si, r in zip(s, res) if abs(r) > cfg.tol]
    return ["sigma", "Lambda", "Lambda_prime", "ode_residual"], list(zip(s, lam, dlam, res)), fails


def cmd_kdv_run(cfg):
    p = cfg.params
    f0, ref = _kdv_reference(p)
    m0, e0 = conserved_quantities(f0)
    m1, e1 = conserved_quantities(ref)
    cfg.meta += [f"mass_initial = {_fmt(m0)}", f"mass_final = {_fmt(m1)}",
                 f"energy_initial = {_fmt(e0)}", f"energy_final = {_fmt(e1)}"]
    fails = []
    if abs(m1 - m0) > cfg.tol * max(1.0, abs(m0)):
        fails.append(f"mass drift {m1 - m0:.3e}")
    return ["x", "u"], list(zip(ref.x, ref.values)), fails


def cmd_burgers_run(cfg):
    p = cfg.params
    n = p["n"]
    _require(n >= 256 and n & (n - 1) == 0, "n", "must be a power of two >= 256")
    setup = BurgersSetup(p["a"], p["eps"])
    half = 0.5 * p["length"]
    f0 = PeriodicGridField.from_function(
        lambda x: burgers_datum(x, p["a"], -2.0, seam=-half + 2.0),
        p["length"], n, x0=-half, t=-1.0)
    out = solve_burgers(f0, p["eps"], SolverConfig(dt=p["dt"], t_end=p["t"] + 1.0))
    w = (out.x >= p["x_lo"]) & (out.x <= p["x_hi"])
    exact = np.array([u_exact(x, p["t"], setup) for x in out.x[w]])
    err = float(np.max(np.abs(out.values[w] - exact))) if exact.size else math.nan
    cfg.meta.append(f"linf_vs_exact = {_fmt(err)}")
    fails = [f"L-inf difference {err:.3e} exceeds {cfg.tol:.3e}"] if err > cfg.tol else []
    return ["x", "u"], list(zip(out.x, out.values)), fails


HANDLERS = {
    "burgers-eval": cmd_burgers_eval,
    "error-scaling": cmd_error_scaling,
    "modulation-table": cmd_modulation_table,
    "dsw-compare": cmd_dsw_compare,
    "traveling-wave": cmd_traveling_wave,
    "kdv-run": cmd_kdv_run,
    "burgers-run": cmd_burgers_run,
}


def main(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = resolve_config(ns)
        columns, rows, fails = HANDLERS[cfg.command](cfg)
    except (UsageError, DomainError, DegenerateStatesError) as exc:
        print(f"compwave {ns.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverInstability, CFLViolation) as exc:
        print(f"compwave {ns.command}: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except ToleranceNotMet as exc:
        print(f"compwave {ns.command}: {exc}", file=sys.stderr)
        return EXIT_TOL
    text = render(cfg, columns, rows)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for f in fails:
        print(f"compwave {cfg.command}: FAIL {f}", file=sys.stderr)
    return EXIT_TOL if fails else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
