"""Weighted resolvent norms and the bottom of the spectrum for the radial operator.

The radial part of ``P_V = -Delta + V`` is conjugated to the half-line
operator ``-d^2/dr^2 + Q`` with ``Q = V + (n-1)(n-3)/(4 r^2)`` acting on
``w = r^((n-1)/2) v``. The weight ``<x>^{-1}`` is a multiplication operator, so
it commutes with the conjugation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from rotsym.grid import Grid
from rotsym.manifold import EffectivePotential, WarpProfile, centrifugal, potential
from rotsym.tridiag import TridiagonalLU

__all__ = [
    "DiscreteOperator",
    "ResolventSample",
    "SweepResult",
    "NonConvergenceError",
    "assemble",
    "assemble_from_profile",
    "weighted_resolvent_norm",
    "dense_weighted_resolvent_norm",
    "resolvent_sweep",
    "smallest_eigenvalue",
    "sturm_count",
    "DEFAULT_SEED",
    "DEFAULT_EPS",
]

DEFAULT_SEED = 20240917
DEFAULT_EPS = (0.5, 0.1, 0.02)
POWER_RTOL = 1e-8
POWER_MAXITER = 500


class NonConvergenceError(ArithmeticError):
    def __init__(self, message, last_iterates):
        super().__init__(message)
        self.last_iterates = last_iterates


@dataclass(frozen=True)
class DiscreteOperator:
    """``-D2 + diag(Q)`` with Dirichlet ends: diagonal ``2/h^2 + Q``, off-diagonal ``-1/h^2``."""

    grid: Grid
    diag: np.ndarray
    offdiag: float
    n: int

    @property
    def size(self) -> int:
        return self.diag.size

    def shifted(self, beta: float) -> "DiscreteOperator":
        return DiscreteOperator(self.grid, self.diag + beta, self.offdiag, self.n)

    def dense(self) -> np.ndarray:
        m = self.size
        return (np.diag(self.diag) + self.offdiag * (np.eye(m, k=1) + np.eye(m, k=-1)))

    def matvec(self, x):
        y = self.diag * x
        y[1:] += self.offdiag * x[:-1]
        y[:-1] += self.offdiag * x[1:]
        return y

    def gershgorin(self) -> tuple[float, float]:
        rad = np.full(self.size, 2.0 * abs(self.offdiag))
        rad[0] = rad[-1] = abs(self.offdiag)
        if self.size == 1:
            rad[:] = 0.0
        return float(np.min(self.diag - rad)), float(np.max(self.diag + rad))


def assemble(grid: Grid, n: int, V=None, Q=None) -> DiscreteOperator:
    """Discretize ``-d^2/dr^2 + Q`` from either ``V`` (flat form) or ``Q`` (half-line form).

    ``V``/``Q`` may be a constant, an array on the grid, or a callable of ``r``.
    """
    if (V is None) == (Q is None):
        raise ValueError("give exactly one of V and Q")
    r = grid.r

    def sample(f):
        if callable(f):
            return np.asarray(f(r), dtype=float) * np.ones_like(r)
        return np.broadcast_to(np.asarray(f, dtype=float), r.shape).astype(float)

    q = sample(Q) if Q is not None else sample(V) + centrifugal(n, r)
    if not np.all(np.isfinite(q)):
        raise ValueError("potential is not finite at the grid nodes")
    h2 = grid.h**2
    return DiscreteOperator(grid, 2.0 / h2 + q, -1.0 / h2, n)


def assemble_from_profile(profile: WarpProfile, n: int, grid: Grid, c0: float = 0.0) -> DiscreteOperator:
    """The operator with ``Q - c0`` of a warp profile (same ``Q`` the solver uses)."""
    eff: EffectivePotential = potential(profile, n, grid, c0)
    return assemble(grid, n, Q=eff.Q_shifted)


@dataclass(frozen=True)
class ResolventSample:
    lam: float
    eps: float
    norm: float
    converged: bool = True
    iterations: int = 0
    last_iterates: tuple = field(default=(), compare=False)

    @property
    def scaled(self) -> float:
        return self.norm * math.sqrt(abs(self.lam) + 1.0)


def _weights(grid: Grid) -> np.ndarray:
    return 1.0 / np.sqrt(1.0 + grid.r**2)


def weighted_resolvent_norm(op: DiscreteOperator, lam: float, eps: float, *, seed: int = DEFAULT_SEED,
                            rtol: float = POWER_RTOL, maxiter: int = POWER_MAXITER,
                            raise_on_failure: bool = False) -> ResolventSample:
    """``||<r>^{-1} (P - lam - i eps)^{-1} <r>^{-1}||`` by power iteration on ``M^* M``.

    One LU of ``P - z`` serves both ``M`` and ``M^*`` (adjoint solve). The
    start vector comes from ``numpy.random.default_rng(seed)``. Iterates until
    the singular-value estimate changes by less than ``rtol`` (relative).
    """
    if eps == 0:
        raise ValueError("eps must be nonzero")
    z = complex(lam, eps)
    d = _weights(op.grid)
    lu = TridiagonalLU(op.offdiag, op.diag - z, op.offdiag)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.size) + 1j * rng.standard_normal(op.size)
    x /= np.linalg.norm(x)
    history = []
    est = 0.0
    for it in range(1, maxiter + 1):
        y = d * lu.solve(d * x)
        x_new = d * lu.solve(d * y, adjoint=True)
        nrm = float(np.linalg.norm(x_new))  # ||M^* M x|| -> sigma_max^2
        est_new = math.sqrt(nrm)
        if nrm == 0:
            return ResolventSample(lam, eps, 0.0, True, it)
        x = x_new / nrm
        history.append(est_new)
        if it > 1 and abs(est_new - est) <= rtol * est_new:
            return ResolventSample(lam, eps, est_new, True, it, tuple(history[-2:]))
        est = est_new
    sample = ResolventSample(lam, eps, est, False, maxiter, tuple(history[-2:]))
    if raise_on_failure:
        raise NonConvergenceError(f"power iteration did not converge at lam={lam}, eps={eps}", sample.last_iterates)
    return sample


def dense_weighted_resolvent_norm(op: DiscreteOperator, lam: float, eps: float) -> float:
    """Dense reference: largest singular value of ``D (P - z)^{-1} D``."""
    d = _weights(op.grid)
    inv = np.linalg.inv(op.dense() - complex(lam, eps) * np.eye(op.size))
    return float(np.linalg.svd(d[:, None] * inv * d[None, :], compute_uv=False)[0])


@dataclass(frozen=True)
class SweepResult:
    samples: tuple
    sup_scaled: float
    argsup: tuple  # (lam, eps)
    min_scaled: float
    excluded: tuple
    blowup_lambdas: tuple

    @property
    def all_converged(self) -> bool:
        return not self.excluded


def blowup_ratio(eps_list) -> float:
    """Growth factor of the norm over the ``eps`` range that signals a pole.

    Near an eigenvalue the norm grows like ``1/eps``; against a continuum it
    saturates. The flag threshold is the geometric midpoint,
    ``sqrt(eps_max/eps_min)``.
    """
    e = sorted(abs(x) for x in eps_list)
    return math.sqrt(e[-1] / e[0])


def resolvent_sweep(op: DiscreteOperator, lambda_grid, eps_list=DEFAULT_EPS, *, seed: int = DEFAULT_SEED,
                    rtol: float = POWER_RTOL, maxiter: int = POWER_MAXITER) -> SweepResult:
    """Sample the weighted resolvent norm on ``lambda_grid x eps_list``.

    Non-converged samples are excluded from the sup and listed. A ``lam`` is
    flagged when the norm grows by more than ``blowup_ratio(eps_list)`` as
    ``eps`` decreases from its largest to its smallest value.
    """
    lambda_grid = [float(x) for x in np.atleast_1d(lambda_grid)]
    eps_sorted = sorted((float(e) for e in eps_list), key=abs, reverse=True)
    samples, excluded, flagged = [], [], []
    for lam in lambda_grid:
        row = []
        for eps in eps_sorted:
            s = weighted_resolvent_norm(op, lam, eps, seed=seed, rtol=rtol, maxiter=maxiter)
            (samples if s.converged else excluded).append(s)
            row.append(s)
        good = [s for s in row if s.converged]
        if len(eps_sorted) > 1 and len(good) == len(row):
            if row[-1].norm > blowup_ratio(eps_sorted) * row[0].norm:
                flagged.append(lam)
    if not samples:
        raise NonConvergenceError("no sample converged", ())
    scaled = np.array([s.scaled for s in samples])
    i = int(np.argmax(scaled))
    return SweepResult(tuple(samples), float(scaled[i]), (samples[i].lam, samples[i].eps),
                       float(np.min(scaled)), tuple(excluded), tuple(flagged))


def sturm_count(op: DiscreteOperator, x: float) -> int:
    """Number of eigenvalues strictly below ``x`` (LDL^T inertia of ``P - x``)."""
    b2 = op.offdiag * op.offdiag
    tiny = np.finfo(float).tiny
    count = 0
    d = 1.0
    first = True
    for a in op.diag.tolist():
        d = a - x if first else a - x - b2 / d
        first = False
        if d == 0.0:
            d = -tiny
        if d < 0.0:
            count += 1
    return count


def smallest_eigenvalue(op: DiscreteOperator, rtol: float = 1e-10) -> float:
    """Bisection on Sturm counts between the Gershgorin bounds.

    Stops when the bracket is narrower than ``rtol * max(1, |lambda|)``.
    """
    lo, hi = op.gershgorin()
    lo -= 1e-12 * max(1.0, abs(lo))
    while hi - lo > rtol * max(1.0, min(abs(lo), abs(hi))):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if sturm_count(op, mid) >= 1:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
