"""Radial Schrodinger evolution in the half-line representation.

A radial function has three equivalent forms:

* ``u`` on the manifold ``M``,
* ``v = u / sigma`` on ``R^n`` with ``sigma = (r/phi)^((n-1)/2)``,
* ``w = tau u = r^((n-1)/2) v`` on the half-line, ``tau = phi^((n-1)/2)``.

In the ``w`` form the radial Laplace-Beltrami equation becomes
``i w_t + w'' - Q w = tau f`` with ``Q = tau''/tau`` and ``w(0) = 0``, which is
what gets discretized: second differences, Dirichlet at both ends of the grid,
Crank-Nicolson in time. The discrete ``l^2`` norm of ``w`` is the discrete
``L^2(M)`` mass, so the linear scheme conserves it exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from rotsym.grid import Grid
from rotsym.manifold import Euclidean, EffectivePotential, WarpProfile, potential, sphere_area
from rotsym.tridiag import TridiagonalLU, tridiag_matvec

__all__ = [
    "Representation",
    "RadialField",
    "SourceSpec",
    "Trajectory",
    "BlowUpError",
    "representation_weight",
    "log_representation_weight",
    "propagate_linear",
    "transform",
    "gaussian",
    "CrankNicolson",
    "cn_step",
    "evolve",
    "solve_linear",
    "solve_nls",
    "free_euclidean_reference",
    "boundary_diagnostic",
    "mass",
    "BOUNDARY_THRESHOLD",
]

BOUNDARY_THRESHOLD = 1e-6
BLOWUP_FACTOR = 1e6


class BlowUpError(RuntimeError):
    """NLS amplitude grew beyond the blow-up threshold."""

    def __init__(self, message, time, amplitude_ratio):
        super().__init__(message)
        self.time = time
        self.amplitude_ratio = amplitude_ratio


class Representation(str, enum.Enum):
    U_on_M = "U_on_M"
    V_on_Rn = "V_on_Rn"
    W_halfline = "W_halfline"


def log_representation_weight(rep: Representation, profile: WarpProfile, n: int, r) -> np.ndarray:
    """Logarithm of ``representation_weight``; finite where the weight itself overflows."""
    r = np.asarray(r, dtype=float)
    k = 0.5 * (n - 1)
    rep = Representation(rep)
    if rep is Representation.W_halfline:
        return np.zeros_like(r)
    if rep is Representation.U_on_M:
        return k * profile.log_phi(r)
    return k * np.log(r)


def representation_weight(rep: Representation, profile: WarpProfile, n: int, r) -> np.ndarray:
    """Multiplier taking a field from ``rep`` to the ``w`` form."""
    r = np.asarray(r, dtype=float)
    k = 0.5 * (n - 1)
    if rep is Representation.W_halfline:
        return np.ones_like(r)
    if rep is Representation.U_on_M:
        weight = np.exp(k * profile.log_phi(r))
    elif rep is Representation.V_on_Rn:
        weight = r**k
    else:
        raise ValueError(f"unknown representation {rep!r}")
    if not np.all(np.isfinite(weight)):
        raise OverflowError("representation weight overflows on this grid")
    return weight


@dataclass(frozen=True)
class RadialField:
    grid: Grid
    values: np.ndarray
    representation: Representation
    dim_n: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.num_points,):
            raise ValueError(f"values must have shape ({self.grid.num_points},), got {values.shape}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "representation", Representation(self.representation))
        if self.dim_n < 3:
            raise ValueError("dimension n >= 3 required")

    def to(self, target: Representation, profile: WarpProfile) -> "RadialField":
        return transform(self, target, profile)


def transform(field: RadialField, target: Representation, profile: WarpProfile) -> RadialField:
    """Change representation by pointwise multiplication with the exact weights."""
    target = Representation(target)
    if target is field.representation:
        return field
    log_ratio = _log_ratio(field.representation, target, profile, field.dim_n, field.grid.r)
    return RadialField(field.grid, _scale_by_log(field.values, log_ratio), target, field.dim_n)


def _log_ratio(source, target, profile, n, r):
    return (log_representation_weight(source, profile, n, r)
            - log_representation_weight(target, profile, n, r))


def _scale_by_log(values, log_factor):
    """``values * exp(log_factor)`` without overflowing the intermediate weight."""
    values = np.asarray(values, dtype=complex)
    log_factor = np.asarray(log_factor, dtype=float)
    if log_factor.size and np.max(np.abs(log_factor)) < 600.0:
        return values * np.exp(log_factor)
    mag = np.abs(values)
    nz = mag > 0
    out = np.empty(np.broadcast(values, log_factor).shape, dtype=complex)
    with np.errstate(divide="ignore"):
        log_mag = np.where(nz, np.log(np.where(nz, mag, 1.0)), -np.inf)
    out[...] = np.exp(log_mag + log_factor + 1j * np.angle(values))
    return out


def gaussian(grid: Grid, n: int, width: float = 1.0, center: float = 0.0, momentum: float = 0.0,
             amplitude: float = 1.0, representation=Representation.U_on_M) -> RadialField:
    """``amplitude * exp(-(r - center)^2 / width^2 + i momentum r)``."""
    r = grid.r
    values = amplitude * np.exp(-((r - center) / width) ** 2 + 1j * momentum * r)
    return RadialField(grid, values, Representation(representation), n)


def mass(w: np.ndarray, grid: Grid, n: int) -> np.ndarray:
    """``||u||^2_{L^2(M)}`` from ``w`` samples (last axis = space)."""
    return sphere_area(n) * grid.h * np.sum(np.abs(w) ** 2, axis=-1)


@dataclass(frozen=True)
class SourceSpec:
    """Source sampled at ``times``, linear in between, zero outside.

    ``values[j]`` is the source at ``times[j]`` in ``representation``: ``f`` for
    the manifold equation (``U_on_M``) or ``g`` for the flat one (``V_on_Rn``).
    """

    times: np.ndarray
    values: np.ndarray
    representation: Representation = Representation.U_on_M

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != 2 or values.shape[0] != times.size:
            raise ValueError("source values must be (len(times), num_points)")
        if np.any(np.diff(times) <= 0):
            raise ValueError("source times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "representation", Representation(self.representation))

    def at(self, t: float) -> np.ndarray:
        ts = self.times
        if t < ts[0] or t > ts[-1]:
            return np.zeros(self.values.shape[1], dtype=complex)
        j = int(np.clip(np.searchsorted(ts, t, side="right") - 1, 0, ts.size - 2)) if ts.size > 1 else 0
        if ts.size == 1:
            return self.values[0]
        s = (t - ts[j]) / (ts[j + 1] - ts[j])
        return (1 - s) * self.values[j] + s * self.values[j + 1]


@dataclass(frozen=True)
class Trajectory:
    """Snapshots of one evolution, sharing a grid and representation."""

    times: np.ndarray
    values: np.ndarray  # (len(times), num_points)
    grid: Grid
    representation: Representation
    dim_n: int
    step_dt: float
    mass_series: np.ndarray
    boundary_mass_series: np.ndarray
    profile: WarpProfile = field(default_factory=Euclidean, compare=False)

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0) and not np.all(np.diff(self.times) < 0):
            raise ValueError("snapshot times must be strictly monotone")

    def __len__(self):
        return self.times.size

    def snapshot(self, i: int) -> RadialField:
        return RadialField(self.grid, self.values[i], self.representation, self.dim_n)

    @property
    def boundary_flagged(self) -> bool:
        return bool(np.max(self.boundary_mass_series) > BOUNDARY_THRESHOLD)

    def to(self, target: Representation) -> "Trajectory":
        target = Representation(target)
        if target is self.representation:
            return self
        log_ratio = _log_ratio(self.representation, target, self.profile, self.dim_n, self.grid.r)
        return Trajectory(self.times, _scale_by_log(self.values, log_ratio), self.grid, target, self.dim_n,
                          self.step_dt, self.mass_series, self.boundary_mass_series, self.profile)


class CrankNicolson:
    """One-step map ``(I - i dt/2 L) w+ = (I + i dt/2 L) w - i dt g`` with ``L = D2 - diag(Q)``."""

    def __init__(self, grid: Grid, Q: np.ndarray, dt: float):
        Q = np.asarray(Q, dtype=float)
        if Q.shape != (grid.num_points,):
            raise ValueError("Q must be sampled on the grid")
        self.dt = dt
        h2 = grid.h**2
        a = 0.5j * dt
        self._lu = TridiagonalLU(-a / h2, 1.0 + a * (2.0 / h2 + Q), -a / h2)
        self._b_main = 1.0 - a * (2.0 / h2 + Q)
        self._b_off = a / h2

    def __call__(self, w: np.ndarray, source_mid: np.ndarray | None = None) -> np.ndarray:
        rhs = tridiag_matvec(self._b_off, self._b_main, self._b_off, w)
        if source_mid is not None:
            rhs = rhs - 1j * self.dt * source_mid
        return self._lu.solve(rhs)


def _as_Q(Q, grid):
    if isinstance(Q, EffectivePotential):
        return Q.Q_shifted
    Q = np.asarray(Q, dtype=float)
    return np.full(grid.num_points, float(Q)) if Q.ndim == 0 else Q


def cn_step(field: RadialField, Q, dt: float, source_at_half_step=None) -> RadialField:
    """Advance a ``W_halfline`` field by one Crank-Nicolson step.

    ``Q`` is an array on the grid, a constant, or an ``EffectivePotential``
    (its ``c0``-shifted ``Q`` is used). The source is the ``w``-form source
    ``tau f`` at ``t + dt/2``.
    """
    if field.representation is not Representation.W_halfline:
        raise ValueError("cn_step acts on W_halfline fields")
    stepper = CrankNicolson(field.grid, _as_Q(Q, field.grid), dt)
    return RadialField(field.grid, stepper(field.values, source_at_half_step), field.representation, field.dim_n)


def _substeps(interval: float, dt_max: float) -> int:
    return max(1, math.ceil(abs(interval) / dt_max - 1e-9))


def evolve(w0: np.ndarray, grid: Grid, Q: np.ndarray, times, dt_max: float,
           source=None, nonlinear=None, callback=None) -> tuple[np.ndarray, float]:
    """Evolve ``w0`` (given at ``times[0]``) and sample it at every entry of ``times``.

    ``times`` may decrease (backward evolution). Each interval between
    snapshots is split into equal steps no longer than ``dt_max``. ``source(t)``
    returns the ``w``-form source; ``nonlinear(w, s)`` applies the nonlinear
    flow for time ``s`` (Strang splitting around each linear step).
    Returns the snapshots and the largest step used.
    """
    times = np.asarray(times, dtype=float)
    out = np.empty((times.size, grid.num_points), dtype=complex)
    w = np.asarray(w0, dtype=complex).copy()
    out[0] = w
    steppers: dict[float, CrankNicolson] = {}
    largest = 0.0
    for j in range(1, times.size):
        interval = times[j] - times[j - 1]
        nsub = _substeps(interval, dt_max)
        dt = interval / nsub
        largest = max(largest, abs(dt))
        key = round(dt, 15)
        if key not in steppers:
            steppers[key] = CrankNicolson(grid, Q, dt)
        step = steppers[key]
        t = times[j - 1]
        for i in range(nsub):
            if nonlinear is not None:
                w = nonlinear(w, 0.5 * dt)
            g = None if source is None else source(t + (i + 0.5) * dt)
            w = step(w, g)
            if nonlinear is not None:
                w = nonlinear(w, 0.5 * dt)
            if callback is not None:
                callback(t + (i + 1) * dt, w)
        out[j] = w
    return out, largest


def _evolve_factored(w0, grid, Q, times, dt_max, source=None, **kw):
    """``evolve`` with the far-field level ``q = Q[-1]`` integrated exactly.

    CN runs on ``Q - q`` and the factor ``exp(-i q t)`` is restored afterwards,
    so adding a constant to ``Q`` changes the discrete solution by exactly that
    global phase.
    """
    q = float(Q[-1])
    src = None if source is None else (lambda t: np.exp(1j * q * t) * source(t))
    w, used = evolve(w0, grid, Q - q, times, dt_max, source=src, **kw)
    return w * np.exp(-1j * q * np.asarray(times))[:, None], used


def boundary_diagnostic(traj: Trajectory, tail_fraction: float = 0.1) -> np.ndarray:
    """Mass fraction in the outer ``tail_fraction`` of the grid, per snapshot."""
    w = traj.to(Representation.W_halfline).values
    return _tail_mass_fraction(w, tail_fraction)


def _tail_mass_fraction(w, tail_fraction=0.1):
    m = w.shape[-1]
    start = int(math.floor((1.0 - tail_fraction) * m))
    dens = np.abs(w) ** 2
    total = np.sum(dens, axis=-1)
    tail = np.sum(dens[..., start:], axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, tail / np.where(total > 0, total, 1.0), 0.0)


def default_dt(grid: Grid, T: float) -> float:
    return min(grid.h, 1e-2 * abs(T))


def default_snapshot_times(T: float, per_unit_time: int = 64) -> np.ndarray:
    return np.linspace(0.0, T, max(2, math.ceil(per_unit_time * abs(T)) + 1))


def _prepare(profile, n, u0, T, snapshot_times, dt):
    if u0.dim_n != n:
        raise ValueError(f"field dimension {u0.dim_n} does not match n={n}")
    grid = u0.grid
    times = default_snapshot_times(T) if snapshot_times is None else np.asarray(snapshot_times, dtype=float)
    if times[0] != 0.0:
        times = np.concatenate([[0.0], times])
    if times[-1] != T:
        raise ValueError("snapshot times must end at T")
    w0 = transform(u0, Representation.W_halfline, profile).values
    return grid, times, w0, default_dt(grid, T) if dt is None else dt


def _trajectory(times, w, grid, n, dt, profile, output):
    traj = Trajectory(times, w, grid, Representation.W_halfline, n, dt,
                      mass(w, grid, n), _tail_mass_fraction(w), profile)
    return traj.to(output)


def solve_linear(profile: WarpProfile, n: int, u0: RadialField, T: float, snapshot_times=None,
                 source: SourceSpec | None = None, c0_shift: float | None = None, dt: float | None = None,
                 output: Representation = Representation.U_on_M) -> Trajectory:
    """Solve ``i u_t + Delta_M u = f`` for radial data on the grid of ``u0``.

    With ``c0_shift`` the ``w`` equation is evolved with ``Q - c0`` and the
    snapshots are multiplied by ``exp(-i c0 t)``, an equivalent evolution. The
    far-field level of ``Q`` is always factored out as an exact phase, so the
    two runs agree to rounding.
    ``T`` may be negative (backward in time).
    """
    grid, times, w0, dt = _prepare(profile, n, u0, T, snapshot_times, dt)
    Q = potential(profile, n, grid).Q_values
    if c0_shift is not None:
        Q = Q - float(c0_shift)
    src = None
    if source is not None:
        to_w = representation_weight(source.representation, profile, n, grid.r)
        src = lambda t: to_w * source.at(t)  # noqa: E731
    w, used = _evolve_factored(w0, grid, Q, times, abs(dt), source=src)
    if c0_shift is not None:
        w = w * np.exp(-1j * float(c0_shift) * times)[:, None]
    return _trajectory(times, w, grid, n, used, profile, output)


def propagate_linear(profile: WarpProfile, n: int, field: RadialField, times, dt: float | None = None,
                     output: Representation = Representation.U_on_M) -> Trajectory:
    """Linear evolution of ``field`` given at ``times[0]`` through ``times`` (monotone, either direction).

    Unlike ``solve_linear`` the start time need not be 0; stepping a list of
    times backwards undoes the forward run to rounding.
    """
    times = np.asarray(times, dtype=float)
    grid = field.grid
    span = times[-1] - times[0]
    dt = default_dt(grid, span) if dt is None else dt
    w0 = transform(field, Representation.W_halfline, profile).values
    Q = potential(profile, n, grid).Q_values
    w, used = _evolve_factored(w0, grid, Q, times - times[0], abs(dt))
    traj = Trajectory(times, w, grid, Representation.W_halfline, n, used,
                      mass(w, grid, n), _tail_mass_fraction(w), profile)
    return traj.to(output)


def solve_nls(profile: WarpProfile, n: int, u0: RadialField, power: float, sign: int, T: float,
              snapshot_times=None, dt: float | None = None,
              output: Representation = Representation.U_on_M) -> Trajectory:
    """Strang-split solve of ``i u_t + Delta_M u + sign |u|^p u = 0``.

    ``sign = +1`` is focusing, ``-1`` defocusing. The nonlinear substep is the
    exact flow ``u -> u exp(i sign s |u|^p)`` with ``|u| = |w|/tau``; it does not
    change ``|w|``, so the discrete mass is conserved exactly.
    """
    if not power > 0:
        raise ValueError("power must be positive")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 (focusing) or -1 (defocusing)")
    grid, times, w0, dt = _prepare(profile, n, u0, T, snapshot_times, dt)
    Q = potential(profile, n, grid).Q_values
    inv_tau = np.exp(-0.5 * (n - 1) * profile.log_phi(grid.r))
    amp0 = float(np.max(np.abs(w0)))

    def nonlinear(w, s):
        return w * np.exp(1j * sign * s * np.abs(w * inv_tau) ** power)

    def watch(t, w):
        if amp0 > 0:
            ratio = float(np.max(np.abs(w))) / amp0
            if ratio > BLOWUP_FACTOR:
                raise BlowUpError(f"|w|_inf grew by {ratio:.3g} at t={t:.4g}", t, ratio)

    w, used = _evolve_factored(w0, grid, Q, times, abs(dt), nonlinear=nonlinear, callback=watch)
    return _trajectory(times, w, grid, n, used, profile, output)


def free_euclidean_reference(n: int, v0: RadialField, T: float, snapshot_times=None,
                             dt: float | None = None) -> Trajectory:
    """Free evolution on ``R^n`` (the Euclidean profile) of the radial datum ``v0``."""
    if v0.representation is Representation.W_halfline:
        raise ValueError("pass v0 as a function on R^n")
    v0 = RadialField(v0.grid, v0.values, Representation.U_on_M, v0.dim_n)
    return solve_linear(Euclidean(), n, v0, T, snapshot_times, dt=dt)
