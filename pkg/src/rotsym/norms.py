"""Lebesgue and Strichartz-type norms of radial fields and trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rotsym.exponents import INF, AdmissiblePair
from rotsym.grid import Grid
from rotsym.manifold import WarpProfile, sphere_area
from rotsym.solver import (
    RadialField,
    Representation,
    Trajectory,
    log_representation_weight,
    propagate_linear,
    solve_linear,
)

__all__ = [
    "NormReport",
    "SnapshotDensityError",
    "DecayWindowError",
    "weight_exponent",
    "lq_on_M",
    "lq_on_Rn",
    "l2_on_M",
    "spacetime_norm",
    "QuotientSweep",
    "SweepDatum",
    "standard_family",
    "modulated_gaussian",
    "strichartz_quotient_sweep",
    "decay_fit",
    "h1_norm_on_M",
    "scattering_residual",
    "holder_check",
    "MIN_SNAPSHOTS_PER_UNIT_TIME",
]

MIN_SNAPSHOTS_PER_UNIT_TIME = 32


class SnapshotDensityError(ValueError):
    pass


class DecayWindowError(ValueError):
    pass


def weight_exponent(n: int, q: float) -> float:
    """Exponent of ``phi/r`` in the weighted norm: ``(n-1)/2 (1 - 2/q)``."""
    return 0.5 * (n - 1) * (1.0 - (0.0 if q == INF else 2.0 / q))


def _log_abs(values) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.abs(values))


def _log_abs_u(field: RadialField, profile: WarpProfile) -> np.ndarray:
    """``log|u|`` for a field in any representation, computed without forming ``u``."""
    r = field.grid.r
    n = field.dim_n
    return (_log_abs(field.values)
            + log_representation_weight(field.representation, profile, n, r)
            - log_representation_weight(Representation.U_on_M, profile, n, r))


def _lq_from_log(log_density_q, grid: Grid, n: int, q: float) -> float:
    """``(omega h sum exp(log_density_q))^(1/q)`` with the sum done stably."""
    if np.any(np.isnan(log_density_q)) or np.any(log_density_q == np.inf):
        raise FloatingPointError("non-finite field values in norm evaluation")
    finite = np.isfinite(log_density_q)
    if not np.any(finite):
        return 0.0
    peak = np.max(log_density_q[finite])
    total = np.sum(np.exp(log_density_q[finite] - peak))
    return float(np.exp((peak + math.log(sphere_area(n) * grid.h * total)) / q))


def lq_on_M(field: RadialField, profile: WarpProfile, n: int, q: float, weight_exp: float = 0.0) -> float:
    """``||u (phi/r)^weight_exp||_{L^q(M)}``; ``q = inf`` gives the weighted sup over nodes.

    ``field`` may be in any representation; ``u`` is recovered in log space so
    that huge weights and tiny amplitudes do not over/underflow.
    """
    if not (q == INF or q >= 1):
        raise ValueError(f"q must be >= 1 or inf, got {q}")
    r = field.grid.r
    log_phi = profile.log_phi(r)
    log_u = _log_abs_u(field, profile) + weight_exp * (log_phi - np.log(r))
    if q == INF:
        return float(np.exp(np.max(log_u))) if np.any(np.isfinite(log_u)) else 0.0
    return _lq_from_log(q * log_u + (n - 1) * log_phi, field.grid, n, q)


def lq_on_Rn(values, grid: Grid, n: int, q: float) -> float:
    """``||v||_{L^q(R^n)}`` for radial samples ``v`` (plain quadrature)."""
    v = np.abs(np.asarray(values))
    if q == INF:
        return float(np.max(v)) if v.size else 0.0
    return float((sphere_area(n) * grid.trapezoid(v**q * grid.r ** (n - 1))) ** (1.0 / q))


def l2_on_M(field: RadialField, profile: WarpProfile) -> float:
    return lq_on_M(field, profile, field.dim_n, 2.0)


@dataclass(frozen=True)
class NormReport:
    """Space-time norm of one trajectory.

    ``tail_value`` extends the time integral to ``t = inf`` with a power law
    fitted to the last quarter of the integrand (``nan`` when not applicable).
    """

    pair: AdmissiblePair
    weighted: bool
    weight_exponent: float
    value: float
    quotient: float
    T: float = float("nan")
    tail_value: float = float("nan")

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError("norm value must be nonnegative")


def _snapshot_norms(traj: Trajectory, q: float, weight_exp: float) -> np.ndarray:
    return np.array([lq_on_M(traj.snapshot(i), traj.profile, traj.dim_n, q, weight_exp)
                     for i in range(len(traj))])


def _tail_extension(t, integrand) -> float:
    """Integral over ``[t_end, inf)`` of a power law fitted to the last quarter of ``integrand``."""
    start = int(0.75 * t.size)
    tt, yy = t[start:], integrand[start:]
    ok = (tt > 0) & (yy > 0)
    if ok.sum() < 4:
        return float("nan")
    slope, icpt = np.polyfit(np.log(tt[ok]), np.log(yy[ok]), 1)
    if slope >= -1:
        return INF
    return float(np.exp(icpt) * tt[-1] ** (slope + 1) / -(slope + 1))


def spacetime_norm(traj: Trajectory, pair: AdmissiblePair, weighted: bool = False) -> NormReport:
    """``|| ||u(t)(phi/r)^a||_{L^q(M)} ||_{L^p(t)}`` over the snapshot times (trapezoid in time)."""
    t = np.asarray(traj.times, dtype=float)
    span = abs(t[-1] - t[0])
    if t.size < 2 or (t.size - 1) < MIN_SNAPSHOTS_PER_UNIT_TIME * span - 1e-9:
        raise SnapshotDensityError(
            f"{t.size} snapshots over |T|={span:g}; need at least {MIN_SNAPSHOTS_PER_UNIT_TIME} per unit time")
    a = weight_exponent(traj.dim_n, pair.q) if weighted else 0.0
    norms = _snapshot_norms(traj, pair.q, a)
    mass0 = lq_on_M(traj.snapshot(0), traj.profile, traj.dim_n, 2.0)
    if pair.p == INF:
        value = float(np.max(norms))
        tail = value
    else:
        integrand = norms**pair.p
        body = float(np.trapezoid(integrand, np.abs(t - t[0])))
        value = body ** (1.0 / pair.p)
        ext = _tail_extension(np.abs(t - t[0]), integrand)
        tail = (body + ext) ** (1.0 / pair.p) if np.isfinite(ext) else ext
    quotient = value / mass0 if mass0 > 0 else (0.0 if value == 0 else INF)
    return NormReport(pair, weighted, a, value, quotient, float(t[-1]), tail)


# ---------------------------------------------------------------------------
# Strichartz quotient sweeps

FAMILY_WIDTHS = tuple(2.0**j for j in range(-3, 4))
FAMILY_MODULATIONS = (0.0, 1.0, 2.0)
FAMILY_VERSION = 1


@dataclass(frozen=True)
class SweepDatum:
    """Modulated Gaussian (see ``modulated_gaussian``) with the grid and horizon of its run."""

    width: float
    modulation: float
    r_max: float
    num_points: int
    T: float


def standard_family(widths=FAMILY_WIDTHS, modulations=FAMILY_MODULATIONS, *, horizon: float = 8.0,
                    reach: float = 16.0, resolution: float = 10.0, center_scale=None) -> list[SweepDatum]:
    """The fixed 7 widths x 3 outgoing modulations family, with per-datum numerics.

    Time and space are scaled with the width ``s``: the run lasts
    ``T = horizon s^2`` (the Gaussian dispersion time is ``s^2/4``). By then the
    packet has drifted ``2 horizon modulation s`` and spread to a width of about
    ``4 horizon s``; the grid reaches ``reach * horizon * s`` beyond both (plus
    ``center_scale(s)`` when the packet does not sit at the origin), divided by
    0.9 so the boundary-diagnostic tail stays empty, with spacing ``s/resolution``.
    """
    out = []
    for s in widths:
        for kappa in modulations:
            c = 0.0 if center_scale is None else center_scale(s)
            T = horizon * s * s
            r_max = (c + horizon * s * (2.0 * kappa + reach)) / 0.9
            h = s / resolution
            out.append(SweepDatum(s, kappa, r_max, int(math.ceil(r_max / h)), T))
    return out


@dataclass(frozen=True)
class QuotientSweep:
    max_quotient: float
    argmax: SweepDatum
    min_quotient: float
    reports: tuple
    data: tuple
    excluded: tuple

    @property
    def spread(self) -> float:
        return self.max_quotient / self.min_quotient


def strichartz_quotient_sweep(profile: WarpProfile, n: int, pair: AdmissiblePair, weighted: bool,
                              family=None, snapshots_per_unit_time: int = MIN_SNAPSHOTS_PER_UNIT_TIME,
                              dt_scale: float = 0.02, min_snapshots: int = 256) -> QuotientSweep:
    """Largest quotient ``norm / ||u0||_{L^2(M)}`` over a family of Gaussian data.

    Runs whose boundary diagnostic is flagged are excluded (and listed).
    Every run gets at least ``min_snapshots`` snapshots, more when
    ``snapshots_per_unit_time`` demands it. The time step is ``dt_scale * width^2``, capped by the snapshot spacing.
    """
    family = standard_family() if family is None else list(family)
    reports, kept, excluded = [], [], []
    for d in family:
        grid = Grid(d.r_max, d.num_points)
        u0 = modulated_gaussian(grid, n, d.width, d.modulation)
        nsnap = max(min_snapshots, int(math.ceil(snapshots_per_unit_time * d.T)))
        times = np.linspace(0.0, d.T, nsnap + 1)
        traj = solve_linear(profile, n, u0, d.T, snapshot_times=times, dt=dt_scale * d.width**2,
                            output=Representation.W_halfline)
        if traj.boundary_flagged:
            excluded.append(d)
            continue
        reports.append(spacetime_norm(traj, pair, weighted))
        kept.append(d)
    if not reports:
        raise RuntimeError("every run in the family was boundary-flagged")
    q = np.array([rep.quotient for rep in reports])
    i = int(np.argmax(q))
    return QuotientSweep(float(q[i]), kept[i], float(np.min(q)), tuple(reports), tuple(kept), tuple(excluded))


def modulated_gaussian(grid: Grid, n: int, width: float, modulation: float) -> RadialField:
    """``exp(-(r/s)^2 + i kappa (sqrt(s^2 + r^2) - s)/s)`` with ``s = width``, ``kappa = modulation``.

    The phase is outgoing with momentum tending to ``kappa/s``; unlike
    ``exp(i kappa r/s)`` it is smooth at the origin as a radial function.
    """
    r, s = grid.r, width
    phase = modulation * (np.hypot(s, r) - s) / s
    return RadialField(grid, np.exp(-(r / s) ** 2 + 1j * phase), Representation.U_on_M, n)


# ---------------------------------------------------------------------------
# decay and scattering


def decay_fit(traj: Trajectory, t_window: tuple[float, float], onset_fraction: float = 0.5) -> float:
    """Least-squares slope of ``log ||u(t)||_inf`` against ``log t`` on ``t_window``.

    The window must start after dispersion has set in: at the first snapshot
    the amplitude must already be below ``onset_fraction`` of its initial value.
    """
    t0, t1 = t_window
    if not 0 < t0 < t1:
        raise DecayWindowError(f"invalid window {t_window}")
    t = np.asarray(traj.times)
    sel = (t >= t0) & (t <= t1)
    if sel.sum() < 3:
        raise DecayWindowError("fewer than 3 snapshots in the window")
    rep = Representation.U_on_M if traj.representation is not Representation.V_on_Rn else Representation.V_on_Rn

    def amp(i):
        field = traj.snapshot(i)
        if rep is Representation.V_on_Rn:
            return float(np.max(np.abs(field.values)))
        return lq_on_M(field, traj.profile, traj.dim_n, INF)

    a0 = amp(0)
    idx = np.flatnonzero(sel)
    amps = np.array([amp(i) for i in idx])
    if not amps[0] < onset_fraction * a0:
        raise DecayWindowError(
            f"window starts before dispersion onset (amplitude ratio {amps[0] / a0:.3g} >= {onset_fraction})")
    slope, _ = np.polyfit(np.log(t[idx]), np.log(amps), 1)
    return float(slope)


def h1_norm_on_M(field: RadialField, profile: WarpProfile) -> float:
    """``||u||_{L^2(M)} + ||d_r u||_{L^2(M)}``.

    Computed from ``w = tau u``: ``tau d_r u = w' - (tau'/tau) w`` with centered
    differences and ``w = 0`` at both ends.
    """
    w_field = field if field.representation is Representation.W_halfline else _to_w(field, profile)
    w = w_field.values
    grid, n = field.grid, field.dim_n
    padded = np.concatenate([[0.0], w, [0.0]])
    dw = (padded[2:] - padded[:-2]) / (2.0 * grid.h)
    dlog_tau = 0.5 * (n - 1) * profile.ratios(grid.r)[0]
    grad = dw - dlog_tau * w
    l2 = math.sqrt(sphere_area(n) * grid.trapezoid(np.abs(w) ** 2))
    return l2 + math.sqrt(sphere_area(n) * grid.trapezoid(np.abs(grad) ** 2))


def _to_w(field, profile):
    return field.to(Representation.W_halfline, profile)


def scattering_residual(traj: Trajectory, profile: WarpProfile, n: int, free_state: RadialField | None = None,
                        dt: float | None = None) -> np.ndarray:
    """``||u(t) - e^{i t Delta_M} u_+||_{H^1(M)}`` on the snapshot times.

    By default the free state is pulled back from the last snapshot, so the
    comparison evolution is the linear flow run backwards from ``u(T)``.
    ``free_state`` (given at ``t = 0``) overrides it.
    """
    t = np.asarray(traj.times)
    dt = traj.step_dt if dt is None else dt
    w_traj = traj.to(Representation.W_halfline)
    if free_state is None:
        ref = w_traj.snapshot(-1)
        free = propagate_linear(profile, n, ref, t[::-1], dt=dt, output=Representation.W_halfline)
        free_values = free.values[::-1]
    else:
        free = propagate_linear(profile, n, free_state, t, dt=dt, output=Representation.W_halfline)
        free_values = free.values
    out = np.empty(t.size)
    for i in range(t.size):
        diff = RadialField(traj.grid, w_traj.values[i] - free_values[i], Representation.W_halfline, n)
        out[i] = h1_norm_on_M(diff, profile)
    return out


def holder_check(field: RadialField, profile: WarpProfile, n: int, d: float) -> tuple[float, float]:
    """Both sides of ``||u||_{2d/(d-2)} <= ||u sigma^{-1/n}||_{2n/(n-2)} ||sigma^{1/n}||_{nd/(d-n)}`` on ``M``.

    Needs ``d > n``. Returns ``(lhs, rhs)``.
    """
    if not d > n:
        raise ValueError(f"need d > n, got d={d}, n={n}")
    k = 0.5 * (n - 1)
    lhs = lq_on_M(field, profile, n, 2.0 * d / (d - 2.0))
    first = lq_on_M(field, profile, n, 2.0 * n / (n - 2.0), weight_exp=k / n)
    ones = RadialField(field.grid, np.ones(field.grid.num_points), Representation.U_on_M, n)
    second = lq_on_M(ones, profile, n, n * d / (d - n), weight_exp=-k / n)
    return lhs, first * second
