import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rotsym.grid import Grid
from rotsym.manifold import (
    CustomClosedForm,
    Euclidean,
    Hyperbolic,
    OddPolynomial,
    PowerTail,
    ProfileError,
    centrifugal,
    core_terms,
    curvature,
    phi_eval,
    potential,
    potential_derivative,
    potential_values,
    power_law,
    profile_from_dict,
    sigma_log_derivative,
    sphere_area,
    tau_sigma_eval,
    volume_weight,
)
from tests.conftest import PROFILES
from tests.oracles import symbolic as sym

IDS = [f"{kind}-{i}" for i, (_, kind, _) in enumerate(PROFILES)]


@pytest.mark.parametrize("profile,kind,params", PROFILES, ids=IDS)
def test_derivatives_match_symbolic(profile, kind, params):
    phi = sym.phi_expr(kind, **params)
    for r0 in (1e-3, 0.3, 1.0, 4.0):
        got = [phi_eval(profile, r0, j) for j in range(4)]
        want = sym.derivatives(phi, r0)
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("profile,kind,params", PROFILES, ids=IDS)
@pytest.mark.parametrize("n", [3, 4, 5])
def test_curvature_matches_symbolic(profile, kind, params, n):
    phi = sym.phi_expr(kind, **params)
    for r0 in (0.2, 1.0, 3.0):
        c = curvature(profile, n, r0)
        want = sym.curvature(phi, n, r0)
        for key, val in want.items():
            assert getattr(c, key) == pytest.approx(val, rel=1e-10, abs=1e-10), key


@pytest.mark.parametrize("profile,kind,params", PROFILES, ids=IDS)
@pytest.mark.parametrize("n", [3, 4, 5])
def test_potential_matches_symbolic_including_near_origin(profile, kind, params, n):
    phi = sym.phi_expr(kind, **params)
    radii = [1e-5, 5e-4, 2e-3, 0.1, 1.0, 5.0]
    V = potential_values(profile, n, radii)
    dV = potential_derivative(profile, n, radii)
    for r0, v, dv in zip(radii, V, dV):
        assert v == pytest.approx(sym.potential_V(phi, n, r0), rel=1e-9, abs=1e-9)
        # the direct dV formula cancels a 2/r^3 term: rounding error scales like eps/r^3
        assert dv == pytest.approx(sym.potential_dV(phi, n, r0), rel=1e-6, abs=1e-13 / r0**3)


def test_euclidean_is_flat():
    for r0 in (0.1, 1.0, 10.0):
        c = curvature(Euclidean(), 3, r0)
        assert (c.sec_rad, c.sec_tan, c.ricci_rad, c.ricci_tan, c.scalar) == (0, 0, 0, 0, 0)
    np.testing.assert_allclose(potential_values(Euclidean(), 5, [1e-4, 1.0, 10.0]), 0.0, atol=1e-15)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_hyperbolic_constant_curvature(alpha):
    for r0 in (0.05, 1.0, 8.0):
        c = curvature(Hyperbolic(alpha), 4, r0)
        assert c.sec_rad == pytest.approx(-alpha**2, rel=1e-12)
        assert c.sec_tan == pytest.approx(-alpha**2, rel=1e-9)


def test_hyperbolic_n3_potential_is_constant():
    r = np.geomspace(1e-6, 300, 200)
    np.testing.assert_allclose(potential_values(Hyperbolic(1.0), 3, r), 1.0, rtol=1e-12)


def test_cubic_profile_curvature_values():
    c = curvature(OddPolynomial((1.0,)), 4, 1.0)
    assert c.sec_rad == pytest.approx(-3.0)
    assert c.sec_tan == pytest.approx(-3.75)


def test_series_branch_is_continuous_at_switch():
    for profile, _, _ in PROFILES:
        rs = profile.series_radius
        below, above = potential_values(profile, 4, [rs * (1 - 1e-9), rs * (1 + 1e-9)])
        assert below == pytest.approx(above, rel=1e-9, abs=1e-9)


@given(st.floats(1e-3, 50.0), st.integers(3, 7), st.sampled_from(range(len(PROFILES))))
def test_tau_sigma_product_is_r_power(r0, n, i):
    profile = PROFILES[i][0]
    if profile.log_phi(np.array([r0]))[0] > 200:
        return
    ts = tau_sigma_eval(profile, n, r0)
    assert ts.tau * ts.sigma == pytest.approx(r0 ** ((n - 1) / 2), rel=1e-12)


@given(st.floats(1e-2, 30.0), st.integers(3, 7))
def test_q_minus_v_is_centrifugal(r0, n):
    grid = Grid(r0 * 4, 3)
    eff = potential(PowerTail(2.0), n, grid)
    np.testing.assert_allclose(eff.Q_values - eff.V_values, centrifugal(n, grid.r), rtol=1e-12, atol=1e-12)


def test_sigma_log_derivative_matches_finite_difference():
    p = OddPolynomial((1.0,))
    r0, h = 1.3, 1e-5
    s = lambda x: tau_sigma_eval(p, 4, x).sigma  # noqa: E731
    fd = (math.log(s(r0 + h)) - math.log(s(r0 - h))) / (2 * h)
    assert sigma_log_derivative(p, 4, r0) == pytest.approx(fd, rel=1e-8)


def test_volume_and_sphere():
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert sphere_area(4) == pytest.approx(2 * math.pi**2)
    assert volume_weight(Hyperbolic(1.0), 3, 1.0) == pytest.approx(math.sinh(1.0) ** 2)


@pytest.mark.parametrize("profile", [p for p, _, _ in PROFILES])
def test_profile_dict_round_trip(profile):
    again = profile_from_dict(profile.to_dict())
    r = np.array([0.3, 2.0])
    for a, b in zip(profile.derivatives(r), again.derivatives(r)):
        np.testing.assert_array_equal(a, b)


def test_custom_profile_from_strings_matches_builtin():
    custom = CustomClosedForm(("sinh(r)", "cosh(r)", "sinh(r)", "cosh(r)"), phi3_at_0=1.0, phi5_at_0=1.0)
    r = np.array([1e-4, 0.5, 3.0])
    np.testing.assert_allclose(potential_values(custom, 4, r), potential_values(Hyperbolic(1.0), 4, r), rtol=1e-12)
    assert profile_from_dict(custom.to_dict()).phi3_at_0 == 1.0


def test_custom_profile_validation():
    with pytest.raises(ProfileError):
        CustomClosedForm(("sinh(r)", "cosh(r)", "sinh(r)", "cosh(r)"))  # phi'''(0) missing
    with pytest.raises(ProfileError):
        CustomClosedForm(("r + r**2", "1 + 2*r", "2 + 0*r", "0*r"), phi3_at_0=0.0)  # phi''(0) != 0
    with pytest.raises(ProfileError):
        CustomClosedForm(("sinh(r)", "cosh(r)", "sinh(r)", "cosh(r)"), phi3_at_0=2.0)
    with pytest.raises(ProfileError):
        profile_from_dict({"kind": "custom", "phi": "r", "dphi": "1+0*r", "d2phi": "0*r"})
    with pytest.raises(ProfileError):
        profile_from_dict({"kind": "nope"})


def test_power_law_tail_only():
    p = power_law(2.0)
    with pytest.raises(ProfileError):
        p.derivatives(np.array([0.5]))
    with pytest.raises(ProfileError):
        potential(p, 3, Grid(10.0, 20))


def test_core_terms_series_values():
    # phi = r + r^3: phi''/phi -> 6, (phi'/phi)^2 - 1/r^2 -> 4 at the origin
    ratio2, gap, _, _ = core_terms(OddPolynomial((1.0,)), np.array([1e-6]))
    assert ratio2[0] == pytest.approx(6.0, rel=1e-10)
    assert gap[0] == pytest.approx(4.0, rel=1e-10)


def test_domain_errors():
    with pytest.raises(ValueError):
        curvature(Euclidean(), 3, 0.0)
    with pytest.raises(ValueError):
        potential_values(Euclidean(), 3, [0.0])
    with pytest.raises(ValueError):
        phi_eval(Euclidean(), 1.0, 4)
