"""Command-line front end: ``rotsym <command> --config FILE``.

Exit codes: 0 pass, 1 hypothesis failure, 2 input error, 3 numerical
non-convergence (power iteration, NLS blow-up).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from rotsym.config import ConfigError, ExperimentConfig, load_config
from rotsym.exponents import INF, AdmissiblePair, effective_dimension, pair_from_q, scattering_window
from rotsym.grid import Grid
from rotsym.hypotheses import (
    RadialPotential,
    check_exp_theorem,
    check_integrability_I1,
    check_local,
    check_poly_theorem,
    check_potential_H,
    check_tau_conditions,
)
from rotsym.manifold import ProfileError, curvature, potential_values, tau_sigma_eval
from rotsym.norms import (
    FAMILY_MODULATIONS,
    FAMILY_WIDTHS,
    modulated_gaussian,
    scattering_residual,
    spacetime_norm,
    standard_family,
    strichartz_quotient_sweep,
)
from rotsym.resolvent import DEFAULT_EPS, assemble_from_profile, resolvent_sweep, smallest_eigenvalue
from rotsym.solver import BlowUpError, Representation, solve_linear, solve_nls

EXIT_OK, EXIT_HYPOTHESIS, EXIT_INPUT, EXIT_NONCONVERGENCE = 0, 1, 2, 3

DESCRIBE_RADII = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, command: str, cfg: ExperimentConfig, columns, rows, meta=None):
    """CSV with ``#`` header lines (command, config hash, metadata) then a column row."""
    buf = io.StringIO()
    buf.write(f"# rotsym {command}\n")
    buf.write(f"# config_sha256: {cfg.digest}\n")
    for k, v in (meta or {}).items():
        buf.write(f"# {k}: {_fmt(v)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    _emit(path, buf.getvalue())


def _emit(path, text):
    if path in ("", "-"):
        sys.stdout.write(text)
        return
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)


def _grid(cfg) -> Grid:
    r_max = cfg.get_float("grid", "r_max")
    num = cfg.get_int("grid", "num_points")
    if not (r_max > 0 and num >= 3):
        raise ConfigError("[grid] needs r_max > 0 and num_points >= 3")
    return Grid(r_max, num)


def _datum(cfg, grid):
    width = cfg.get_float("data", "width", 1.0)
    modulation = cfg.get_float("data", "modulation", 0.0)
    amplitude = cfg.get_float("data", "amplitude", 1.0)
    if not width > 0:
        raise ConfigError("[data] width must be positive")
    u0 = modulated_gaussian(grid, cfg.n, width, modulation)
    return type(u0)(grid, amplitude * u0.values, u0.representation, cfg.n)


def _times(cfg):
    T = cfg.get_float("time", "T")
    if T == 0:
        raise ConfigError("[time] T must be nonzero")
    per_unit = cfg.get_int("time", "snapshots_per_unit", 64)
    count = max(2, int(math.ceil(per_unit * abs(T)))) + 1
    dt = cfg.get_float("time", "dt", 0.0) or None
    return T, np.linspace(0.0, T, count), dt


# ---------------------------------------------------------------------------


def cmd_describe(cfg: ExperimentConfig, out=None) -> int:
    """Curvature, potential and weight tables plus a growth-regime guess."""
    profile = cfg.build_profile()
    n = cfg.n
    radii = cfg.get_floats("describe", "radii", ",".join(map(str, DESCRIBE_RADII)))
    rows = []
    for r in radii:
        c = curvature(profile, n, r)
        ts = tau_sigma_eval(profile, n, r)
        V = float(potential_values(profile, n, np.array([r]))[0])
        Q = V + 0.25 * (n - 1) * (n - 3) / (r * r)
        rows.append((r, c.sec_rad, c.sec_tan, c.ricci_rad, c.ricci_tan, c.scalar, V, Q, ts.sigma, ts.tau))
    regime = _regime(profile, n)
    lines = [f"profile: {profile!r}", f"n: {n}", f"regime: {regime['kind']}"]
    lines += [f"{k}: {_fmt(v)}" for k, v in regime.items() if k != "kind"]
    text = "\n".join("# " + s for s in lines) + "\n"
    sys.stdout.write(text)
    columns = ["r", "sec_rad", "sec_tan", "ricci_rad", "ricci_tan", "scalar", "V", "Q", "sigma", "tau"]
    write_csv(cfg.output if out is None else out, "describe", cfg, columns, rows,
              meta={f"regime_{k}" if k != "kind" else "regime": v for k, v in regime.items()})
    return EXIT_OK


def _regime(profile, n) -> dict:
    try:
        _, poly = check_poly_theorem(profile, n)
        if poly.passed:
            m = poly.extracted["m"]
            N = effective_dimension(m, n)
            lo, hi = scattering_window(n, N)
            return {"kind": "polynomial", "m": round(m, 6), "N": round(N, 6),
                    "power_window": f"({lo:.6g}, {hi:.6g})"}
    except ValueError:
        pass
    try:
        _, exp = check_exp_theorem(profile, n)
        if exp.passed:
            return {"kind": "exponential", "alpha": round(exp.extracted["alpha"], 6),
                    "A": round(exp.extracted["A"], 6)}
    except ValueError:
        pass
    return {"kind": "undetermined"}


THEOREMS = ("local", "poly", "exp", "tau", "potential")


def cmd_check(cfg: ExperimentConfig, out=None) -> int:
    """Run the checks of the selected theorem; exit 0 iff all of its conditions pass."""
    profile = cfg.build_profile()
    n = cfg.n
    theorem = cfg.get_str("check", "theorem", "poly")
    if theorem not in THEOREMS:
        raise ConfigError(f"[check] theorem must be one of {', '.join(THEOREMS)}")
    selected = []
    if theorem == "poly":
        selected = list(check_poly_theorem(profile, n))
    elif theorem == "exp":
        try:
            selected = list(check_exp_theorem(profile, n))
        except ValueError as exc:  # no exponential growth at all
            return _check_output(cfg, out, theorem, [], False, note=str(exc))
    elif theorem == "tau":
        selected = list(check_tau_conditions(profile, n, cfg.get_float("check", "c0", 0.0)))
    elif theorem == "potential":
        c0 = cfg.get_float("check", "c0", 0.0)
        selected = list(check_potential_H(RadialPotential.from_profile(profile, n, c0), n))
    local = check_local(profile, n)
    if theorem == "local":
        selected = [local]
    extra = [] if theorem == "local" else [local]
    if cfg.has("check", "d"):
        extra.append(check_integrability_I1(profile, n, cfg.get_float("check", "d")))
    passed = all(r.passed for r in selected)
    return _check_output(cfg, out, theorem, selected + extra, passed, n_selected=len(selected))


def _check_output(cfg, out, theorem, reports, passed, n_selected=0, note=""):
    doc = {
        "config_sha256": cfg.digest,
        "theorem": theorem,
        "passed": passed,
        "reports": [dict(r.to_dict(), selected=i < n_selected) for i, r in enumerate(reports)],
    }
    if note:
        doc["note"] = note
    _emit(cfg.output if out is None else out, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if passed else EXIT_HYPOTHESIS


def cmd_solve(cfg: ExperimentConfig, out=None) -> int:
    """Evolve the configured datum; CSV rows ``(t, r, re, im, mass, boundary_mass)``."""
    profile = cfg.build_profile()
    grid = _grid(cfg)
    u0 = _datum(cfg, grid)
    T, times, dt = _times(cfg)
    rep = Representation(cfg.get_str("solve", "representation", "U_on_M"))
    c0 = cfg.get_float("solve", "c0_shift", 0.0) or None
    if cfg.has("nls"):
        power, sign = _nls_params(cfg)
        traj = solve_nls(profile, cfg.n, u0, power, sign, T, times, dt=dt, output=rep)
    else:
        traj = solve_linear(profile, cfg.n, u0, T, times, c0_shift=c0, dt=dt, output=rep)
    every = cfg.get_int("solve", "export_every", 1)
    stride = cfg.get_int("solve", "export_r_stride", 1)
    rows = []
    r = grid.r[::stride]
    for i in range(0, len(traj), every):
        vals = traj.values[i, ::stride]
        for rj, v in zip(r, vals):
            rows.append((traj.times[i], rj, v.real, v.imag, traj.mass_series[i], traj.boundary_mass_series[i]))
    write_csv(cfg.output if out is None else out, "solve", cfg, ["t", "r", "re", "im", "mass", "boundary_mass"],
              rows, meta={"representation": rep.value, "step_dt": traj.step_dt,
                          "boundary_flagged": traj.boundary_flagged})
    return EXIT_OK


def _nls_params(cfg):
    power = cfg.get_float("nls", "power")
    sign_txt = cfg.get_str("nls", "sign", "defocusing")
    signs = {"focusing": 1, "+1": 1, "1": 1, "defocusing": -1, "-1": -1}
    if sign_txt not in signs:
        raise ConfigError("[nls] sign must be focusing or defocusing")
    if not power > 0:
        raise ConfigError("[nls] power must be positive")
    return power, signs[sign_txt]


def _pairs(cfg, n):
    pairs = []
    for item in cfg.get_str("norms", "pairs", "2:6").split(","):
        p_txt, _, q_txt = item.strip().partition(":")
        try:
            q = INF if q_txt.strip() == "inf" else float(q_txt)
            pair = pair_from_q(q, n) if q != INF else AdmissiblePair(2.0, INF, n)
            p = INF if p_txt.strip() == "inf" else float(p_txt)
        except ValueError as exc:
            raise ConfigError(f"[norms] pairs: {exc}") from exc
        if not math.isclose(pair.p, p, rel_tol=1e-12) and not (pair.p == p == INF):
            raise ConfigError(f"[norms] pair ({p_txt}, {q_txt}) is not {n}-admissible")
        pairs.append(pair)
    return pairs


def cmd_norms(cfg: ExperimentConfig, out=None) -> int:
    """Space-time norms of one run, or the quotient sweep over the standard family."""
    profile = cfg.build_profile()
    n = cfg.n
    weighted = cfg.get_bool("norms", "weighted", False)
    pairs = _pairs(cfg, n)
    name = profile.kind
    rows = []
    meta = {}
    if cfg.get_bool("norms", "sweep", False):
        widths = cfg.get_floats("norms", "widths", ",".join(map(repr, FAMILY_WIDTHS)))
        mods = cfg.get_floats("norms", "modulations", ",".join(map(repr, FAMILY_MODULATIONS)))
        family = standard_family(widths, mods)
        for pair in pairs:
            sw = strichartz_quotient_sweep(profile, n, pair, weighted, family)
            for d, rep in zip(sw.data, sw.reports):
                rows.append((name, n, pair.p, pair.q, weighted, rep.T, rep.value, rep.quotient,
                             rep.tail_value, d.width, d.modulation))
            meta[f"spread_p{pair.p:g}_q{pair.q:g}"] = sw.spread
            meta[f"excluded_p{pair.p:g}_q{pair.q:g}"] = len(sw.excluded)
    else:
        grid = _grid(cfg)
        u0 = _datum(cfg, grid)
        T, times, dt = _times(cfg)
        traj = solve_linear(profile, n, u0, T, times, dt=dt, output=Representation.W_halfline)
        meta["boundary_flagged"] = traj.boundary_flagged
        for pair in pairs:
            rep = spacetime_norm(traj, pair, weighted)
            rows.append((name, n, pair.p, pair.q, weighted, rep.T, rep.value, rep.quotient, rep.tail_value,
                         cfg.get_float("data", "width", 1.0), cfg.get_float("data", "modulation", 0.0)))
    columns = ["profile", "n", "p", "q", "weighted", "T", "value", "quotient", "tail_value", "width", "modulation"]
    write_csv(cfg.output if out is None else out, "norms", cfg, columns, rows, meta=meta)
    return EXIT_OK


def cmd_resolvent(cfg: ExperimentConfig, out=None) -> int:
    """Weighted resolvent sweep; CSV rows ``(lambda, eps, norm, scaled, converged)``."""
    profile = cfg.build_profile()
    grid = _grid(cfg)
    c0 = cfg.get_float("resolvent", "c0", 0.0)
    op = assemble_from_profile(profile, cfg.n, grid, c0)
    lam = np.linspace(cfg.get_float("resolvent", "lambda_min", -2.0), cfg.get_float("resolvent", "lambda_max", 20.0),
                      cfg.get_int("resolvent", "lambda_count", 40))
    eps = cfg.get_floats("resolvent", "eps", ",".join(map(repr, DEFAULT_EPS)))
    if any(e == 0 for e in eps):
        raise ConfigError("[resolvent] eps values must be nonzero")
    sw = resolvent_sweep(op, lam, eps, seed=cfg.seed)
    rows = [(s.lam, s.eps, s.norm, s.scaled, s.converged) for s in sw.samples + sw.excluded]
    meta = {"sup_scaled": sw.sup_scaled, "argsup_lambda": sw.argsup[0], "argsup_eps": sw.argsup[1],
            "smallest_eigenvalue": smallest_eigenvalue(op),
            "blowup_lambdas": " ".join(_fmt(x) for x in sw.blowup_lambdas) or "none",
            "seed": cfg.seed}
    write_csv(cfg.output if out is None else out, "resolvent", cfg,
              ["lambda", "eps", "norm", "scaled", "converged"], rows, meta=meta)
    return EXIT_OK if sw.all_converged else EXIT_NONCONVERGENCE


def cmd_scatter(cfg: ExperimentConfig, out=None) -> int:
    """NLS run and its H^1(M) distance to the pulled-back linear evolution."""
    profile = cfg.build_profile()
    grid = _grid(cfg)
    u0 = _datum(cfg, grid)
    T, times, dt = _times(cfg)
    power, sign = _nls_params(cfg)
    traj = solve_nls(profile, cfg.n, u0, power, sign, T, times, dt=dt, output=Representation.W_halfline)
    residual = scattering_residual(traj, profile, cfg.n)
    rows = [(t, res, m, b) for t, res, m, b in
            zip(traj.times, residual, traj.mass_series, traj.boundary_mass_series)]
    write_csv(cfg.output if out is None else out, "scatter", cfg, ["t", "residual", "mass", "boundary_mass"], rows,
              meta={"power": power, "sign": sign, "boundary_flagged": traj.boundary_flagged,
                    "power_window": "({:.6g}, {:.6g})".format(*_window_for(profile, cfg.n))})
    return EXIT_OK


def _window_for(profile, n):
    regime = _regime(profile, n)
    if regime["kind"] == "polynomial":
        return scattering_window(n, regime["N"])
    if regime["kind"] == "exponential":
        return scattering_window(n, INF)
    return (math.nan, math.nan)


COMMANDS = {
    "describe": cmd_describe,
    "check": cmd_check,
    "solve": cmd_solve,
    "norms": cmd_norms,
    "resolvent": cmd_resolvent,
    "scatter": cmd_scatter,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rotsym", description="Radial Schrodinger experiments on warped manifolds")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or "").splitlines()[0])
        p.add_argument("--config", required=True, help="INI-style experiment file")
        p.add_argument("--output", default=None, help="output path ('-' for stdout); overrides [run] output")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args.output)
    except (ConfigError, ProfileError) as exc:
        print(f"rotsym: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BlowUpError as exc:
        print(f"rotsym: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (ValueError, OverflowError) as exc:
        print(f"rotsym: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ArithmeticError, RuntimeError) as exc:
        print(f"rotsym: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
