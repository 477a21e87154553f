"""Numerical certification of the curvature, growth and potential hypotheses.

Each check samples its condition on a finite grid, reports the worst margin
and where it occurs, and extracts the constants the corresponding estimate
needs. Conditions that are asymptotic in ``r`` are only certified on the
sampled range; the ``caveat`` field of every report says so.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from rotsym.manifold import (
    WarpProfile,
    core_terms,
    potential_derivative,
    potential_values,
)

__all__ = [
    "Condition",
    "HypothesisReport",
    "default_grid",
    "check_local",
    "check_poly_theorem",
    "check_tau_conditions",
    "check_exp_theorem",
    "RadialPotential",
    "check_potential_H",
    "smoothstep_cutoff",
    "WAResult",
    "build_W_A",
    "check_integrability_I1",
]

R_CHECK_MAX = 1e3
SLOPE_TOL = 0.02  # allowed spread of the local log-log slope on a fit window
TAIL_SLOPE_TOL = 0.1  # allowed growth exponent for "bounded" quantities
EXP_FIT_TOL = 1e-3  # allowed residual of log(phi) - (alpha r + log A)


class Condition(str, enum.Enum):
    SecBounded = "SecBounded"
    NegCurvPoly = "NegCurvPoly"
    PolyBehaviour = "PolyBehaviour"
    TauShifted_H1 = "TauShifted_H1"
    TauShifted_H2 = "TauShifted_H2"
    TauShifted_H3 = "TauShifted_H3"
    ExpCurv = "ExpCurv"
    ExpBehaviour = "ExpBehaviour"
    PotH1 = "PotH1"
    PotH2 = "PotH2"
    PotH3 = "PotH3"
    IntegrabilityI1 = "IntegrabilityI1"


@dataclass(frozen=True)
class HypothesisReport:
    condition_id: Condition
    passed: bool
    worst_margin: float
    worst_r: float
    extracted: dict = field(default_factory=dict)
    grid_range: tuple = (0.0, 0.0)
    caveat: str = ""

    def __post_init__(self):
        if self.passed != (self.worst_margin > 0):
            raise ValueError("passed must agree with the sign of worst_margin")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["condition_id"] = self.condition_id.value
        d["grid_range"] = list(self.grid_range)
        d["extracted"] = {k: _jsonable(v) for k, v in self.extracted.items()}
        d["worst_margin"] = _jsonable(self.worst_margin)
        d["worst_r"] = _jsonable(self.worst_r)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def _report(cond, margins, r, *, extracted=None, caveat=""):
    """Build a report from a margin array: worst = min, located at argmin."""
    i = int(np.argmin(margins))
    worst = float(margins[i])
    return HypothesisReport(
        condition_id=cond,
        passed=bool(worst > 0),
        worst_margin=worst,
        worst_r=float(r[i]),
        extracted=extracted or {},
        grid_range=(float(r[0]), float(r[-1])),
        caveat=caveat,
    )


def default_grid(r_min: float = 1e-3, r_max: float = R_CHECK_MAX, num: int = 4001) -> np.ndarray:
    """Geometric sampling grid used by the checks."""
    return np.geomspace(r_min, r_max, num)


def _fit_window(r, window):
    if window is None:
        window = (r[-1] / 10.0, r[-1])
    sel = (r >= window[0]) & (r <= window[1])
    if sel.sum() < 3:
        raise ValueError(f"fit window {window} holds fewer than 3 grid points")
    return sel


def _tail_slope(r, y, decade=10.0, floor=1e-12):
    """Log-log slope of ``|y|`` over the last decade of ``r``; 0 when ``|y| <= floor`` there."""
    sel = r >= r[-1] / decade
    ya = np.abs(y[sel])
    if np.max(ya) <= floor:
        return 0.0
    return float(np.polyfit(np.log(r[sel]), np.log(ya + 1e-300), 1)[0])


def _asymptotic_caveat(r):
    return f"sampled on [{r[0]:.3g}, {r[-1]:.3g}]; (r_max, inf) not checked"


def check_local(profile: WarpProfile, n: int, grid=None) -> HypothesisReport:
    """Bounded curvature on ``[1, inf)``: ``m = sup 1/phi + |sec_rad|``."""
    r = np.asarray(default_grid(1.0) if grid is None else grid, dtype=float)
    if r[0] < 1.0:
        raise ValueError("check_local samples r >= 1")
    _, p2, _ = profile.ratios(r)
    values = np.exp(-profile.log_phi(r)) + np.abs(p2)
    i = int(np.argmax(values))
    m = float(values[i])
    margin = m if math.isfinite(m) else -math.inf
    return HypothesisReport(
        Condition.SecBounded,
        passed=margin > 0,
        worst_margin=margin,
        worst_r=float(r[i]),
        extracted={"m": m},
        grid_range=(float(r[0]), float(r[-1])),
        caveat=_asymptotic_caveat(r),
    )


def check_poly_theorem(profile: WarpProfile, n: int, grid=None, fit_window=None):
    """Negative radial curvature and polynomial growth ``phi = A r^m + o_3(r^m)``.

    Returns ``(NegCurvPoly report, PolyBehaviour report)``.
    """
    r = np.asarray(default_grid(max(1e-3 * profile.scale, profile.r_min)) if grid is None else grid, dtype=float)
    ratio2 = core_terms(profile, r)[0]
    # sec_rad = -phi''/phi, so the margin 1/(2(n-1)) - r^2 sec_rad
    neg_margin = 0.5 / (n - 1) + r * r * ratio2
    neg = _report(
        Condition.NegCurvPoly, neg_margin, r,
        extracted={"delta0": float(np.min(neg_margin))},
        caveat=_asymptotic_caveat(r),
    )

    sel = _fit_window(r, fit_window)
    rw = r[sel]
    log_phi = profile.log_phi(rw)
    m, logA = np.polyfit(np.log(rw), log_phi, 1)
    m, A = float(m), float(math.exp(logA))
    local_slope = rw * profile.ratios(rw)[0]
    spread = float(np.ptp(local_slope))
    residual = float(np.max(np.abs(log_phi - (m * np.log(rw) + logA))))
    extracted = {"m": m, "A": A, "slope_spread": spread, "fit_residual": residual}
    margin = min(SLOPE_TOL - spread, m - 1.0 / (n - 1))
    if margin > 0:
        extracted["N"] = m * (n - 1) + 1
        extracted["C"] = _o3_constant(profile, r[r >= 1.0], m, A)
    k = int(np.argmax(np.abs(local_slope - m)))
    poly = HypothesisReport(
        Condition.PolyBehaviour,
        passed=margin > 0,
        worst_margin=margin,
        worst_r=float(rw[k]),
        extracted=extracted,
        grid_range=(float(r[0]), float(r[-1])),
        caveat=f"fit on [{rw[0]:.3g}, {rw[-1]:.3g}]; " + _asymptotic_caveat(r),
    )
    return neg, poly


def _o3_constant(profile, r, m, A):
    """``sup_j sup_r r^(j-m) |eps^(j)(r)|`` for ``eps = phi - A r^m``, ``j = 0..3``."""
    if r.size == 0:
        return math.nan
    derivs = profile.derivatives(r)
    coef = [1.0, m, m * (m - 1), m * (m - 1) * (m - 2)]
    worst = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(4):
            eps = derivs[j] - A * coef[j] * r ** (m - j)
            worst = max(worst, float(np.max(np.abs(eps) * r ** (j - m))))
    return worst


def _suffix_min(a):
    return np.minimum.accumulate(a[::-1])[::-1]


def _repulsive_report(cond, lhs, r, R_search, base_extra):
    """Find the smallest ``R`` with ``lhs > 0`` on ``r >= R`` and report it."""
    suffix = _suffix_min(lhs)
    if suffix[0] > 0:
        R, margin, i0 = 0.0, float(suffix[0]), 0
    else:
        R_search = np.sort(np.asarray(r if R_search is None else R_search, dtype=float))
        R, margin, i0 = None, -math.inf, 0
        for cand in R_search:
            i = int(np.searchsorted(r, cand))
            if i >= r.size:
                break
            if suffix[i] > margin:
                margin, i0 = float(suffix[i]), i
            if suffix[i] > 0:
                R, margin, i0 = float(cand), float(suffix[i]), i
                break
    worst_i = i0 + int(np.argmin(lhs[i0:]))
    extracted = dict(base_extra)
    extracted["R"] = R
    return HypothesisReport(
        cond,
        passed=margin > 0,
        worst_margin=margin,
        worst_r=float(r[worst_i]),
        extracted=extracted,
        grid_range=(float(r[0]), float(r[-1])),
        caveat=_asymptotic_caveat(r),
    ), margin


def check_tau_conditions(profile: WarpProfile, n: int, c0: float, grid=None, R_search=None):
    """Shifted bounds on ``tau''/tau - c0`` (boundedness, positivity, repulsivity).

    Returns the three reports ``(H1, H2, H3)``.
    """
    if c0 < 0:
        raise ValueError("c0 < 0 (exponentially decaying phi) is not supported")
    r = np.asarray(default_grid(1e-3 * profile.scale) if grid is None else grid, dtype=float)
    K = 0.25 * (n - 1) * (n - 3)
    V = potential_values(profile, n, r) - c0
    dV = potential_derivative(profile, n, r)
    r2g = r * r * V + K  # r^2 (tau''/tau - c0)
    rep = K - r * r * V - r**3 * dV  # -r^2 d/dr (r (tau''/tau - c0))

    C = float(np.max(np.abs(r2g)))
    slope = _tail_slope(r, r2g)
    h1 = _report(
        Condition.TauShifted_H1, np.full_like(r, TAIL_SLOPE_TOL - slope), r,
        extracted={"C": C, "tail_slope": slope, "c0": c0},
        caveat="boundedness judged from the log-log tail slope; " + _asymptotic_caveat(r),
    )
    h1 = _relocate(h1, r, np.abs(r2g), argmax=True)

    h2_margin = 0.25 + r2g
    d2 = float(np.min(h2_margin))
    h3, d3 = _repulsive_report(Condition.TauShifted_H3, 0.25 + rep, r, R_search, {"c0": c0})
    delta0 = min(d2, d3)
    h2 = _report(
        Condition.TauShifted_H2, h2_margin, r,
        extracted={"delta0": delta0, "c0": c0}, caveat=_asymptotic_caveat(r),
    )
    h3 = _with_extracted(h3, delta0=delta0)
    return h1, h2, h3


def _relocate(report, r, values, argmax=False):
    i = int(np.argmax(values) if argmax else np.argmin(values))
    return HypothesisReport(**{**report.__dict__, "worst_r": float(r[i])})


def _with_extracted(report, **kw):
    return HypothesisReport(**{**report.__dict__, "extracted": {**report.extracted, **kw}})


def check_exp_theorem(profile: WarpProfile, n: int, grid=None, fit_window=None):
    """Exponential growth ``phi = e^(alpha r)(A + o_3(1/r))`` and the matching curvature bound.

    Returns ``(ExpCurv report, ExpBehaviour report)``.
    """
    r = np.asarray(default_grid(1e-3 * profile.scale) if grid is None else grid, dtype=float)
    sel = _fit_window(r, fit_window)
    rw = r[sel]
    log_phi = profile.log_phi(rw)
    alpha, logA = (float(x) for x in np.polyfit(rw, log_phi, 1))
    if not alpha > 0:
        raise ValueError(f"estimated growth rate alpha = {alpha:.3g} is not positive")
    A = math.exp(logA)
    residual = float(np.max(np.abs(log_phi - alpha * rw - logA)))

    # eps^(j) = (e^{-alpha r} phi)^(j) - A delta_j0, written through phi^(i)/phi
    rt = r[r >= 1.0]
    scaled = np.exp(profile.log_phi(rt) - alpha * rt)
    p = (np.ones_like(rt),) + tuple(profile.ratios(rt))
    C, tail = 0.0, 0.0
    for j in range(4):
        eps = scaled * sum(math.comb(j, i) * (-alpha) ** (j - i) * p[i] for i in range(j + 1))
        if j == 0:
            eps = eps - A
            # |eps| below ~1e-9 A is rounding noise from the fitted alpha and A
            tail = _tail_slope(rt, rt * eps, floor=1e-9 * A * rt[-1])
        C = max(C, float(np.max(np.abs(eps) * rt ** (1 + j))))
    margin = min(EXP_FIT_TOL - residual, TAIL_SLOPE_TOL - tail)
    k = int(np.argmax(np.abs(log_phi - alpha * rw - logA)))
    behaviour = HypothesisReport(
        Condition.ExpBehaviour,
        passed=margin > 0,
        worst_margin=margin,
        worst_r=float(rw[k]),
        extracted={"alpha": alpha, "A": A, "C": C, "fit_residual": residual},
        grid_range=(float(r[0]), float(r[-1])),
        caveat=f"fit on [{rw[0]:.3g}, {rw[-1]:.3g}]; " + _asymptotic_caveat(r),
    )

    c0 = alpha**2 * (n - 1) ** 2 / 4.0
    K = 0.25 * (n - 1) * (n - 3)
    curv_margin = 0.25 + r * r * (potential_values(profile, n, r) - c0) + K
    delta0 = float(np.min(curv_margin))
    curv = _report(
        Condition.ExpCurv, curv_margin, r,
        extracted={"alpha": alpha, "A": A, "delta0": delta0, "c0": c0},
        caveat=_asymptotic_caveat(r),
    )
    return curv, behaviour


@dataclass(frozen=True)
class RadialPotential:
    """A radial potential ``V(r)`` with optional analytic derivative ``V'(r)``."""

    value: Callable
    derivative: Callable | None = None
    name: str = "V"

    def __call__(self, r):
        return np.asarray(self.value(np.asarray(r, dtype=float)), dtype=float) * np.ones_like(r, dtype=float)

    def d(self, r):
        if self.derivative is None:
            raise ValueError(f"potential {self.name} has no derivative data")
        return np.asarray(self.derivative(np.asarray(r, dtype=float)), dtype=float) * np.ones_like(r, dtype=float)

    def __add__(self, other: "RadialPotential") -> "RadialPotential":
        deriv = None
        if self.derivative is not None and other.derivative is not None:
            deriv = lambda r: self.d(r) + other.d(r)  # noqa: E731
        return RadialPotential(lambda r: self(r) + other(r), deriv, f"{self.name}+{other.name}")

    @classmethod
    def zero(cls):
        return cls(lambda r: np.zeros_like(r), lambda r: np.zeros_like(r), "0")

    @classmethod
    def constant(cls, c: float):
        return cls(lambda r: np.full_like(r, c), lambda r: np.zeros_like(r), f"{c:g}")

    @classmethod
    def japanese_inverse_square(cls, beta: float):
        """``beta / <r>^2`` with ``<r> = (1 + r^2)^(1/2)``."""
        return cls(
            lambda r: beta / (1.0 + r * r),
            lambda r: -2.0 * beta * r / (1.0 + r * r) ** 2,
            f"{beta:g}/<r>^2",
        )

    @classmethod
    def from_profile(cls, profile: WarpProfile, n: int, c0: float = 0.0):
        """The effective potential ``V - c0`` of a warp profile."""
        return cls(
            lambda r: potential_values(profile, n, r) - c0,
            lambda r: potential_derivative(profile, n, r),
            f"V[{profile!r}]-{c0:g}",
        )


def check_potential_H(potential: RadialPotential, n: int, grid=None, R_search=None, delta0: float = 0.0):
    """(H1) decay, (H2) positivity and (H3) repulsivity of a radial potential.

    Margins are measured against the required constant ``delta0``: a report
    passes when its condition holds with a constant strictly above it.
    """
    r = np.asarray(default_grid() if grid is None else grid, dtype=float)
    base = (0.5 * n - 1.0) ** 2
    V = potential(r)
    weighted = (1.0 + r * r) * np.abs(V)
    slope = _tail_slope(r, weighted)
    h1 = _report(
        Condition.PotH1, np.full_like(r, TAIL_SLOPE_TOL - slope), r,
        extracted={"C": float(np.max(weighted)), "tail_slope": slope},
        caveat="boundedness judged from the log-log tail slope; " + _asymptotic_caveat(r),
    )
    h1 = _relocate(h1, r, weighted, argmax=True)

    h2_lhs = base + r * r * V
    h2 = _report(
        Condition.PotH2, h2_lhs - delta0, r,
        extracted={"delta0": float(np.min(h2_lhs))}, caveat=_asymptotic_caveat(r),
    )
    if potential.derivative is None:
        h3 = HypothesisReport(
            Condition.PotH3, False, -math.inf, float(r[0]), {},
            (float(r[0]), float(r[-1])), "no derivative data: (H3) unverifiable",
        )
        return h1, h2, h3
    h3_lhs = base - r * r * (V + r * potential.d(r))
    h3, _ = _repulsive_report(Condition.PotH3, h3_lhs - delta0, r, R_search, {})
    h3 = _with_extracted(h3, delta0=h3.worst_margin + delta0)
    return h1, h2, h3


def smoothstep_cutoff(R: float):
    """Quintic ``chi``: 0 on ``[0, R]``, 1 on ``[2R, inf)``, C^2 and nondecreasing.

    Returns ``(chi, dchi)`` callables.
    """
    def chi(r):
        t = np.clip((np.asarray(r, dtype=float) - R) / R, 0.0, 1.0)
        return t**3 * (10.0 - 15.0 * t + 6.0 * t * t)

    def dchi(r):
        t = np.clip((np.asarray(r, dtype=float) - R) / R, 0.0, 1.0)
        return 30.0 * t * t * (1.0 - t) ** 2 / R

    return chi, dchi


@dataclass(frozen=True)
class WAResult:
    A: float
    W: RadialPotential
    R: float
    delta0: float
    a2_margin: float
    a3_margin: float
    sup_r2V: float


def build_W_A(potential: RadialPotential, R: float, n: int, delta0: float | None = None,
              grid=None, A_grid=None, A_cap: float = 1e6, cutoff=smoothstep_cutoff) -> WAResult:
    """Glue ``A/r^2`` inside ``R`` to ``V`` beyond ``2R``: ``W_A = (1-chi) A/r^2 + chi V``.

    Scans ``A_grid`` (default ``0`` then geometric from ``1e-6`` with ratio 1.01)
    for the smallest ``A >= sup r^2 V`` with ``(n/2-1)^2 + A >= delta0`` for
    which ``W_A`` satisfies the positivity and repulsivity bounds with
    ``delta0`` at every grid point. ``delta0`` defaults to the constant
    certified for ``V`` by :func:`check_potential_H` beyond ``R``.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    r = np.asarray(default_grid() if grid is None else grid, dtype=float)
    base = (0.5 * n - 1.0) ** 2
    V, dV = potential(r), potential.d(r)
    chi_f, dchi_f = cutoff(R)
    chi, dchi = chi_f(r), dchi_f(r)
    if delta0 is None:
        h2 = base + r * r * V
        h3 = base - r * r * (V + r * dV)
        delta0 = float(min(np.min(h2), np.min(h3[r >= R])))
    sup_r2V = float(np.max(r * r * V))
    if A_grid is None:
        steps = int(math.ceil(math.log(A_cap / 1e-6) / math.log(1.01)))
        A_grid = np.concatenate([[0.0], 1e-6 * 1.01 ** np.arange(steps + 1)])
    for A in A_grid:
        if A < sup_r2V or base + A < delta0:
            continue
        a2 = base + r * r * ((1 - chi) * A / (r * r) + chi * V)
        d_rW = -dchi * A / r - (1 - chi) * A / (r * r) + dchi * r * V + chi * (V + r * dV)
        a3 = base - r * r * d_rW
        if np.min(a2) >= delta0 and np.min(a3) >= delta0:
            W = _glued(potential, float(A), chi_f, dchi_f)
            return WAResult(float(A), W, R, delta0, float(np.min(a2)), float(np.min(a3)), sup_r2V)
    raise ValueError(f"no admissible A found up to {A_cap:g}")


def _glued(potential, A, chi_f, dchi_f):
    def value(r):
        chi = chi_f(r)
        return (1 - chi) * A / (r * r) + chi * potential(r)

    def deriv(r):
        chi, dchi = chi_f(r), dchi_f(r)
        return (-dchi * A / (r * r) - 2 * (1 - chi) * A / r**3
                + dchi * potential(r) + chi * potential.d(r))

    return RadialPotential(value, deriv, f"W_A[{potential.name}, A={A:g}]")


def check_integrability_I1(profile: WarpProfile, n: int, d: float, r_max: float = R_CHECK_MAX) -> HypothesisReport:
    """Finiteness of ``int_0^inf sigma^(2d/(d-n)) phi^(n-1) dr``.

    The integral is computed on ``[0, r_max]``; convergence at infinity is
    judged from the log-log slope of the integrand over the last decade.
    """
    if d <= n:
        raise ValueError(f"need d > n, got d={d}, n={n}")
    k = 0.5 * (n - 1)
    expo = 2.0 * d / (d - n)
    r0 = min(1.0, r_max / 10.0)
    r = np.concatenate([np.linspace(0.0, r0, 2001)[1:], np.geomspace(r0, r_max, 4001)[1:]])
    log_phi = profile.log_phi(r)
    log_f = expo * k * (np.log(r) - log_phi) + (n - 1) * log_phi
    f = np.exp(log_f)
    integral = float(np.trapezoid(np.concatenate([[0.0], f]), np.concatenate([[0.0], r])))
    tail = r >= r_max / 10.0
    slope = float(np.polyfit(np.log(r[tail]), log_f[tail], 1)[0])
    margin = -1.0 - slope
    return HypothesisReport(
        Condition.IntegrabilityI1,
        passed=margin > 0,
        worst_margin=margin,
        worst_r=float(r[-1]),
        extracted={"integral": integral, "tail_exponent": slope, "d": d},
        grid_range=(0.0, float(r_max)),
        caveat="convergence at infinity extrapolated from the tail exponent",
    )
