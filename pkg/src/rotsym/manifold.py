"""Warp profiles of rotationally symmetric manifolds and the quantities built on them.

A manifold ``dr^2 + phi(r)^2 dw^2`` is described by its warp profile ``phi``.
Everything here is evaluated from analytic derivatives of ``phi`` (orders 0..3);
nothing is differentiated numerically.

Near ``r = 0`` the combinations ``phi''/phi`` and ``(phi'/phi)^2 - 1/r^2`` are
evaluated from their Taylor expansions to avoid cancellation, using
``phi = r + a r^3 + b r^5 + O(r^7)`` with ``a = phi'''(0)/6`` and
``b = phi^(5)(0)/120``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from rotsym.grid import Grid

__all__ = [
    "ProfileError",
    "WarpProfile",
    "Euclidean",
    "Hyperbolic",
    "OddPolynomial",
    "PowerTail",
    "CustomClosedForm",
    "power_law",
    "profile_from_dict",
    "phi_eval",
    "CurvaturePoint",
    "curvature",
    "TauSigma",
    "tau_sigma_eval",
    "sigma_log_derivative",
    "EffectivePotential",
    "potential",
    "potential_values",
    "potential_derivative",
    "volume_weight",
    "centrifugal",
    "sphere_area",
]

SERIES_RADIUS = 1e-3


class ProfileError(ValueError):
    """Raised for an invalid warp profile or a query outside its domain."""


class WarpProfile:
    """Base class; subclasses provide ``derivatives``.

    Attributes
    ----------
    kind : str
        Tag used in config files.
    phi3_at_0 : float
        ``phi'''(0)``; drives the near-origin expansions.
    phi5_at_0 : float or None
        ``phi^(5)(0)``; when known the expansions carry one more order.
    scale : float
        Length scale; the series switch radius is ``1e-3 * scale``.
    r_min : float
        Left end of the domain where the profile is defined. Tail-only
        profiles (``r_min > 0``) skip origin handling entirely.
    """

    kind: str = "abstract"
    phi3_at_0: float = 0.0
    phi5_at_0: float | None = None
    scale: float = 1.0
    r_min: float = 0.0

    def derivatives(self, r):
        """Return ``(phi, phi', phi'', phi''')`` at ``r``."""
        raise NotImplementedError

    def ratios(self, r):
        """Return ``(phi'/phi, phi''/phi, phi'''/phi)``."""
        p0, p1, p2, p3 = self.derivatives(r)
        return p1 / p0, p2 / p0, p3 / p0

    def log_phi(self, r):
        return np.log(self.derivatives(r)[0])

    @property
    def series_radius(self) -> float:
        return SERIES_RADIUS * self.scale

    def _check_domain(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < self.r_min):
            raise ProfileError(
                f"{self.kind} profile is only defined for r >= {self.r_min}"
            )
        return r

    def to_dict(self) -> dict:
        raise ProfileError(f"{self.kind} profile is not serializable")

    def __repr__(self):
        try:
            params = ", ".join(f"{k}={v!r}" for k, v in self.to_dict().items() if k != "kind")
        except ProfileError:
            params = "..."
        return f"{type(self).__name__}({params})"


@dataclass(frozen=True, repr=False)
class Euclidean(WarpProfile):
    kind = "euclidean"

    def derivatives(self, r):
        r = self._check_domain(r)
        return r, np.ones_like(r), np.zeros_like(r), np.zeros_like(r)

    def ratios(self, r):
        r = self._check_domain(r)
        return 1.0 / r, np.zeros_like(r), np.zeros_like(r)

    @property
    def phi3_at_0(self):
        return 0.0

    @property
    def phi5_at_0(self):
        return 0.0

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True, repr=False)
class Hyperbolic(WarpProfile):
    """``phi(r) = sinh(alpha r) / alpha``: constant curvature ``-alpha^2``."""

    alpha: float = 1.0
    kind = "hyperbolic"

    def __post_init__(self):
        if not self.alpha > 0:
            raise ProfileError(f"alpha must be positive, got {self.alpha}")

    @property
    def phi3_at_0(self):
        return self.alpha**2

    @property
    def phi5_at_0(self):
        return self.alpha**4

    @property
    def scale(self):
        return 1.0 / self.alpha

    def derivatives(self, r):
        r = self._check_domain(r)
        a = self.alpha
        s, c = np.sinh(a * r), np.cosh(a * r)
        return s / a, c, a * s, a * a * c

    def ratios(self, r):
        r = self._check_domain(r)
        a = self.alpha
        with np.errstate(divide="ignore"):
            coth = 1.0 / np.tanh(a * r)
        return a * coth, np.full_like(r, a * a), a**3 * coth

    def log_phi(self, r):
        r = self._check_domain(r)
        a = self.alpha
        # log(sinh(ar)/a) without overflow
        return a * r + np.log(-np.expm1(-2 * a * r)) - math.log(2 * a)

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha}


@dataclass(frozen=True, repr=False)
class OddPolynomial(WarpProfile):
    """``phi(r) = r + a_1 r^3 + ... + a_k r^(2k+1)`` with positive coefficients."""

    coeffs: tuple = (1.0,)
    kind = "odd_polynomial"

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs or any(c <= 0 for c in self.coeffs):
            raise ProfileError("odd polynomial coefficients must be a non-empty list of positives")

    @property
    def phi3_at_0(self):
        return 6.0 * self.coeffs[0]

    @property
    def phi5_at_0(self):
        return 120.0 * self.coeffs[1] if len(self.coeffs) > 1 else 0.0

    @property
    def degree(self) -> int:
        return 2 * len(self.coeffs) + 1

    def derivatives(self, r):
        r = self._check_domain(r)
        poly = np.polynomial.Polynomial([0.0, 1.0] + [x for c in self.coeffs for x in (0.0, c)])
        return tuple(poly.deriv(j)(r) if j else poly(r) for j in range(4))

    def to_dict(self):
        return {"kind": self.kind, "coeffs": list(self.coeffs)}


@dataclass(frozen=True, repr=False)
class PowerTail(WarpProfile):
    """``phi(r) = r (1 + (r/l)^2)^((m-1)/2)``: odd, smooth, ``~ l^(1-m) r^m`` at infinity."""

    m: float = 2.0
    length: float = 1.0
    kind = "power_tail"

    def __post_init__(self):
        if not self.m > 0 or not self.length > 0:
            raise ProfileError("power tail needs m > 0 and length > 0")

    @property
    def scale(self):
        return self.length

    @property
    def phi3_at_0(self):
        return 3.0 * (self.m - 1.0) / self.length**2

    @property
    def phi5_at_0(self):
        # 5 g''''(0) with g = (1 + r^2/l^2)^k, g''''(0) = 12 k (k-1) / l^4
        k = 0.5 * (self.m - 1.0)
        return 60.0 * k * (k - 1.0) / self.length**4

    def derivatives(self, r):
        r = self._check_domain(r)
        k = 0.5 * (self.m - 1.0)
        inv_l2 = 1.0 / self.length**2
        s = 1.0 + r * r * inv_l2
        ds, d2s = 2.0 * r * inv_l2, 2.0 * inv_l2
        g0 = s**k
        g1 = k * s ** (k - 1) * ds
        g2 = k * (k - 1) * s ** (k - 2) * ds**2 + k * s ** (k - 1) * d2s
        g3 = k * (k - 1) * (k - 2) * s ** (k - 3) * ds**3 + 3 * k * (k - 1) * s ** (k - 2) * ds * d2s
        return r * g0, g0 + r * g1, 2 * g1 + r * g2, 3 * g2 + r * g3

    def to_dict(self):
        return {"kind": self.kind, "m": self.m, "length": self.length}


_EXPR_NAMESPACE = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "sinh", "cosh", "tanh", "exp", "log", "sqrt", "pi", "arctan")
}


def _compile(expr: str) -> Callable:
    code = compile(expr, "<profile>", "eval")

    def f(r):
        r = np.asarray(r, dtype=float)
        return np.broadcast_to(eval(code, {"__builtins__": {}}, {**_EXPR_NAMESPACE, "r": r}), r.shape) * 1.0

    return f


@dataclass(frozen=True, repr=False)
class CustomClosedForm(WarpProfile):
    """User profile from closed-form evaluators for ``phi`` through ``phi'''``.

    Evaluators are callables of an array ``r`` or expression strings in ``r``
    (numpy functions such as ``sinh`` are available). ``phi3_at_0`` is
    mandatory for profiles defined at the origin.
    """

    funcs: tuple = ()
    phi3_at_0: float | None = None
    phi5_at_0: float | None = None
    r_min: float = 0.0
    scale: float = 1.0
    name: str = "custom"
    kind = "custom"
    _callables: tuple = field(default=(), init=False, compare=False)

    def __post_init__(self):
        if len(self.funcs) != 4 or any(f is None for f in self.funcs):
            raise ProfileError("custom profile needs evaluators for phi, phi', phi'', phi'''")
        callables = tuple(_compile(f) if isinstance(f, str) else f for f in self.funcs)
        object.__setattr__(self, "_callables", callables)
        if self.r_min == 0.0:
            if self.phi3_at_0 is None:
                raise ProfileError("custom profile defined at the origin needs phi3_at_0")
            self._validate_origin()

    def _validate_origin(self):
        phi, dphi, d2phi, d3phi = self._callables
        z = np.zeros(1)
        scale = max(1.0, abs(self.phi3_at_0))
        if abs(phi(z)[0]) > 1e-12:
            raise ProfileError("custom profile must satisfy phi(0) = 0")
        if abs(dphi(z)[0] - 1.0) > 1e-12:
            raise ProfileError("custom profile must satisfy phi'(0) = 1")
        if abs(d2phi(z)[0]) > 1e-12 * scale:
            raise ProfileError("custom profile must satisfy phi''(0) = 0")
        if abs(d3phi(z)[0] - self.phi3_at_0) > 1e-8 * scale:
            raise ProfileError("phi3_at_0 disagrees with the phi''' evaluator")
        # phi'''' (0) by a symmetric difference of phi'''; orders above 4 are not checked
        h = 1e-4 * self.scale
        fourth = (d3phi(np.array([h]))[0] - d3phi(np.array([-h]))[0]) / (2 * h)
        if abs(fourth) > 1e-6 * scale:
            raise ProfileError("custom profile must have phi''''(0) = 0")

    def derivatives(self, r):
        r = self._check_domain(r)
        return tuple(f(r) for f in self._callables)

    def to_dict(self):
        if not all(isinstance(f, str) for f in self.funcs):
            raise ProfileError("only expression-string custom profiles are serializable")
        d = {"kind": self.kind, "phi": self.funcs[0], "dphi": self.funcs[1],
             "d2phi": self.funcs[2], "d3phi": self.funcs[3]}
        for key in ("phi3_at_0", "phi5_at_0"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        if self.r_min:
            d["r_min"] = self.r_min
        if self.scale != 1.0:
            d["scale"] = self.scale
        return d


def power_law(m: float, r_min: float = 1.0) -> CustomClosedForm:
    """Pure power law ``phi = r^m``, defined only for ``r >= r_min``."""
    m = float(m)
    return CustomClosedForm(
        funcs=(
            f"r**{m!r}",
            f"{m!r}*r**({m - 1!r})",
            f"{m * (m - 1)!r}*r**({m - 2!r})",
            f"{m * (m - 1) * (m - 2)!r}*r**({m - 3!r})",
        ),
        r_min=r_min,
        name=f"power_law_{m:g}",
    )


def profile_from_dict(d: dict) -> WarpProfile:
    """Inverse of ``WarpProfile.to_dict``."""
    d = dict(d)
    kind = d.pop("kind", None)
    if kind == "euclidean":
        return Euclidean()
    if kind == "hyperbolic":
        return Hyperbolic(float(d.get("alpha", 1.0)))
    if kind == "odd_polynomial":
        return OddPolynomial(tuple(float(c) for c in d["coeffs"]))
    if kind == "power_tail":
        return PowerTail(float(d["m"]), float(d.get("length", 1.0)))
    if kind == "custom":
        missing = [k for k in ("phi", "dphi", "d2phi", "d3phi") if k not in d]
        if missing:
            raise ProfileError(f"custom profile is missing {', '.join(missing)}")
        opt = lambda key: float(d[key]) if key in d else None  # noqa: E731
        return CustomClosedForm(
            funcs=(d["phi"], d["dphi"], d["d2phi"], d["d3phi"]),
            phi3_at_0=opt("phi3_at_0"),
            phi5_at_0=opt("phi5_at_0"),
            r_min=float(d.get("r_min", 0.0)),
            scale=float(d.get("scale", 1.0)),
        )
    raise ProfileError(f"unknown profile kind {kind!r}")


def phi_eval(profile: WarpProfile, r, order: int = 0):
    """``phi^(order)(r)`` for ``order`` in 0..3."""
    if order not in (0, 1, 2, 3):
        raise ValueError(f"unsupported derivative order {order}")
    if np.any(np.asarray(r) < 0):
        raise ValueError("r must be non-negative")
    out = profile.derivatives(r)[order]
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class CurvaturePoint:
    r: float
    sec_rad: float
    sec_tan: float
    ricci_tan: float
    ricci_rad: float
    scalar: float


def curvature(profile: WarpProfile, n: int, r: float) -> CurvaturePoint:
    """Sectional, Ricci and scalar curvature at ``r > 0``."""
    if not r > 0:
        raise ValueError("curvature is evaluated at r > 0 only")
    p0, p1, p2, _ = (float(x) for x in profile.derivatives(r))
    sec_rad = -p2 / p0
    sec_tan = -(p1 * p1 - 1.0) / (p0 * p0)
    ricci_rad = (n - 1) * sec_rad
    return CurvaturePoint(
        r=float(r),
        sec_rad=sec_rad,
        sec_tan=sec_tan,
        ricci_tan=(n - 2) * sec_tan + sec_rad,
        ricci_rad=ricci_rad,
        scalar=2 * ricci_rad + (n - 1) * (n - 2) * sec_tan,
    )


@dataclass(frozen=True)
class TauSigma:
    tau: float
    dtau: float
    d2tau: float
    sigma: float


def tau_sigma_eval(profile: WarpProfile, n: int, r: float) -> TauSigma:
    """``tau = phi^((n-1)/2)`` with two derivatives, and ``sigma = (r/phi)^((n-1)/2)``."""
    if not r > 0:
        raise ValueError("tau and sigma are evaluated at r > 0 only")
    k = 0.5 * (n - 1)
    p0, p1, p2, _ = (float(x) for x in profile.derivatives(r))
    tau = p0**k
    dtau = k * p0 ** (k - 1) * p1
    d2tau = k * (k - 1) * p0 ** (k - 2) * p1 * p1 + k * p0 ** (k - 1) * p2
    return TauSigma(tau, dtau, d2tau, (r / p0) ** k)


def sigma_log_derivative(profile: WarpProfile, n: int, r):
    """``sigma'/sigma = (n-1)/2 (1/r - phi'/phi)``."""
    r = np.asarray(r, dtype=float)
    return 0.5 * (n - 1) * (1.0 / r - profile.ratios(r)[0])


def sphere_area(n: int) -> float:
    """Area of the unit sphere ``S^(n-1)``."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def centrifugal(n: int, r):
    """``(n-1)(n-3) / (4 r^2)``, the gap between Q and V."""
    return 0.25 * (n - 1) * (n - 3) / np.asarray(r, dtype=float) ** 2


def volume_weight(profile: WarpProfile, n: int, r):
    """Radial volume density ``phi(r)^(n-1)``."""
    if np.any(np.asarray(r) < 0):
        raise ValueError("r must be non-negative")
    out = profile.derivatives(r)[0] ** (n - 1)
    return float(out) if np.ndim(out) == 0 else out


def _series_coeffs(profile):
    a = profile.phi3_at_0 / 6.0
    b = None if profile.phi5_at_0 is None else profile.phi5_at_0 / 120.0
    return a, b


def core_terms(profile: WarpProfile, r: np.ndarray):
    """``phi''/phi``, ``(phi'/phi)^2 - 1/r^2`` and their r-derivatives.

    Series branch below the switch radius, direct formulas above.
    """
    p1, p2, p3 = profile.ratios(r)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio2 = p2
        gap = p1 * p1 - 1.0 / (r * r)
        d_ratio2 = p3 - p2 * p1
        d_gap = 2.0 * p1 * (p2 - p1 * p1) + 2.0 / r**3
    if profile.r_min == 0.0:
        near = r < profile.series_radius
        if np.any(near):
            a, b = _series_coeffs(profile)
            rn = r[near]
            c2_ratio2 = 0.0 if b is None else 20.0 * b - 6.0 * a * a
            c2_gap = 0.0 if b is None else 8.0 * b
            ratio2 = np.where(near, 0.0, ratio2)
            gap = np.where(near, 0.0, gap)
            d_ratio2 = np.where(near, 0.0, d_ratio2)
            d_gap = np.where(near, 0.0, d_gap)
            ratio2[near] = 6.0 * a + c2_ratio2 * rn * rn
            gap[near] = 4.0 * a + c2_gap * rn * rn
            d_ratio2[near] = 2.0 * c2_ratio2 * rn
            d_gap[near] = 2.0 * c2_gap * rn
    return ratio2, gap, d_ratio2, d_gap


def potential_values(profile: WarpProfile, n: int, r) -> np.ndarray:
    """``V = (n-1)/2 phi''/phi + (n-1)(n-3)/4 ((phi'/phi)^2 - 1/r^2)`` at ``r > 0``."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r <= 0):
        raise ValueError("potential is evaluated at r > 0 only")
    k = 0.5 * (n - 1)
    ratio2, gap, _, _ = core_terms(profile, r)
    return k * ratio2 + k * (k - 1) * gap


def potential_derivative(profile: WarpProfile, n: int, r) -> np.ndarray:
    """``dV/dr`` from analytic derivatives of ``phi`` up to order 3."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r <= 0):
        raise ValueError("potential is evaluated at r > 0 only")
    k = 0.5 * (n - 1)
    _, _, d_ratio2, d_gap = core_terms(profile, r)
    return k * d_ratio2 + k * (k - 1) * d_gap


@dataclass(frozen=True)
class EffectivePotential:
    """``V`` (flat R^n form) and ``Q = tau''/tau`` (half-line form) on a grid.

    ``c0`` is a constant carried along for the shifted evolution; the stored
    arrays are unshifted.
    """

    grid: Grid
    Q_values: np.ndarray
    V_values: np.ndarray
    c0: float = 0.0

    @property
    def V_shifted(self) -> np.ndarray:
        return self.V_values - self.c0

    @property
    def Q_shifted(self) -> np.ndarray:
        return self.Q_values - self.c0


def potential(profile: WarpProfile, n: int, grid: Grid, c0: float = 0.0) -> EffectivePotential:
    """Evaluate ``V`` and ``Q = V + (n-1)(n-3)/(4r^2)`` on ``grid``."""
    r = grid.r
    if profile.r_min > 0 and r[0] < profile.r_min:
        raise ProfileError(f"grid starts below the profile domain r >= {profile.r_min}")
    if np.any(profile.log_phi(r) == -np.inf) or np.any(np.isnan(profile.log_phi(r))):
        raise ProfileError("phi must be positive on the grid")
    V = potential_values(profile, n, r)
    if not np.all(np.isfinite(V)):
        raise ProfileError("potential is not finite on the grid")
    return EffectivePotential(grid, V + centrifugal(n, r), V, float(c0))
