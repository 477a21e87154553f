import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotsym.grid import Grid
from rotsym.manifold import Euclidean, Hyperbolic
from rotsym.resolvent import (
    DEFAULT_SEED,
    NonConvergenceError,
    assemble,
    assemble_from_profile,
    dense_weighted_resolvent_norm,
    resolvent_sweep,
    smallest_eigenvalue,
    sturm_count,
    weighted_resolvent_norm,
)


def test_free_operator_eigenvalues():
    # n=3 has no centrifugal term: eigenvalues 4/h^2 sin^2(j pi h / (2 r_max))
    g = Grid(10.0, 99)
    op = assemble(g, 3, V=0.0)
    j = np.arange(1, 100)
    exact = 4 / g.h**2 * np.sin(j * np.pi * g.h / (2 * g.r_max)) ** 2
    np.testing.assert_allclose(np.linalg.eigvalsh(op.dense()), exact, rtol=1e-12, atol=1e-12)
    assert smallest_eigenvalue(op) == pytest.approx(exact[0], rel=1e-9)


def test_constant_shift():
    g = Grid(10.0, 99)
    a = assemble(g, 3, V=0.0)
    b = assemble(g, 3, V=1.0)
    np.testing.assert_allclose(b.diag, a.diag + 1.0, rtol=1e-15)
    assert smallest_eigenvalue(b) == pytest.approx(smallest_eigenvalue(a) + 1.0, rel=1e-9)


def test_hyperbolic_diagonal():
    g = Grid(10.0, 99)
    op = assemble_from_profile(Hyperbolic(1.0), 3, g)
    np.testing.assert_allclose(op.diag, 2 / g.h**2 + 1.0, rtol=1e-14)
    assert op.offdiag == -1 / g.h**2
    shifted = assemble_from_profile(Hyperbolic(1.0), 3, g, c0=1.0)
    np.testing.assert_allclose(shifted.diag, 2 / g.h**2, rtol=1e-14)


def test_assemble_argument_forms():
    g = Grid(5.0, 49)
    a = assemble(g, 4, V=lambda r: 1 / (1 + r**2))
    b = assemble(g, 4, V=1 / (1 + g.r**2))
    np.testing.assert_array_equal(a.diag, b.diag)
    c = assemble(g, 4, Q=b.diag - 2 / g.h**2)
    np.testing.assert_allclose(c.diag, b.diag, rtol=1e-14)
    with pytest.raises(ValueError):
        assemble(g, 4)
    with pytest.raises(ValueError):
        assemble(g, 4, V=0.0, Q=0.0)
    with pytest.raises(ValueError):
        assemble(g, 4, V=np.inf)


@settings(max_examples=25)
@given(st.integers(0, 10**6), st.floats(-5.0, 30.0))
def test_sturm_count_matches_eigvalsh(seed, x):
    rng = np.random.default_rng(seed)
    g = Grid(6.0, 60)
    op = assemble(g, 3, V=rng.normal(scale=5.0, size=60))
    assert sturm_count(op, x) == int(np.sum(np.linalg.eigvalsh(op.dense()) < x))


def test_smallest_eigenvalue_negative_well():
    g = Grid(20.0, 399)
    op = assemble(g, 3, V=lambda r: -5.0 / (1 + r**2))
    ref = np.linalg.eigvalsh(op.dense())[0]
    assert ref < 0
    assert smallest_eigenvalue(op) == pytest.approx(ref, rel=1e-9)


def test_dense_agreement_random_points():
    g = Grid(40.0, 399)
    op = assemble_from_profile(Hyperbolic(1.0), 3, g, c0=1.0)
    rng = np.random.default_rng(3)
    for lam, eps in zip(rng.uniform(-2, 20, 10), rng.choice([0.5, 0.1, 0.02], 10)):
        s = weighted_resolvent_norm(op, lam, eps)
        assert s.converged
        assert s.norm == pytest.approx(dense_weighted_resolvent_norm(op, lam, eps), rel=1e-6)


def test_adjoint_symmetry():
    # the operator is real symmetric, so ||R(lam + i eps)|| = ||R(lam - i eps)||
    g = Grid(30.0, 299)
    op = assemble(g, 3, V=lambda r: 1 / (1 + r**2))
    for lam in (-1.0, 0.5, 4.0):
        a = weighted_resolvent_norm(op, lam, 0.1, rtol=1e-13, maxiter=5000).norm
        b = weighted_resolvent_norm(op, lam, -0.1, rtol=1e-13, maxiter=5000).norm
        assert a == pytest.approx(b, rel=1e-10)


def test_shift_covariance():
    g = Grid(30.0, 299)
    op = assemble(g, 3, V=lambda r: 1 / (1 + r**2))
    for lam in (-1.0, 2.0):
        a = weighted_resolvent_norm(op, lam, 0.1, rtol=1e-13, maxiter=5000).norm
        b = weighted_resolvent_norm(op.shifted(0.75), lam + 0.75, 0.1, rtol=1e-13, maxiter=5000).norm
        assert a == pytest.approx(b, rel=1e-10)


def test_far_below_spectrum():
    g = Grid(20.0, 199)
    op = assemble(g, 3, V=0.0)
    s = weighted_resolvent_norm(op, -100.0, 0.1)
    assert s.norm <= 1 / 100 and s.scaled <= 0.11


def test_seed_reproducible():
    g = Grid(20.0, 199)
    op = assemble(g, 3, V=0.0)
    a = weighted_resolvent_norm(op, 1.0, 0.1)
    b = weighted_resolvent_norm(op, 1.0, 0.1, seed=DEFAULT_SEED)
    assert a == b


def test_non_convergence_reported():
    g = Grid(20.0, 199)
    op = assemble(g, 3, V=0.0)
    s = weighted_resolvent_norm(op, 1.0, 0.02, rtol=1e-16, maxiter=3)
    assert not s.converged and len(s.last_iterates) == 2
    with pytest.raises(NonConvergenceError) as info:
        weighted_resolvent_norm(op, 1.0, 0.02, rtol=1e-16, maxiter=3, raise_on_failure=True)
    assert info.value.last_iterates == s.last_iterates
    with pytest.raises(ValueError):
        weighted_resolvent_norm(op, 1.0, 0.0)


def test_one_point_sweep():
    g = Grid(20.0, 199)
    op = assemble(g, 3, V=0.0)
    sweep = resolvent_sweep(op, [2.0], [0.1])
    s = weighted_resolvent_norm(op, 2.0, 0.1)
    assert sweep.samples == (s,)
    assert sweep.sup_scaled == sweep.min_scaled == s.scaled == pytest.approx(s.norm * math.sqrt(3.0))
    assert sweep.argsup == (2.0, 0.1) and sweep.blowup_lambdas == () and sweep.all_converged


def test_sweep_flags_eigenvalue():
    g = Grid(20.0, 199)
    op = assemble(g, 3, V=lambda r: -5.0 / (1 + r**2))
    e0 = smallest_eigenvalue(op)
    sweep = resolvent_sweep(op, [e0, 3.0])
    assert sweep.blowup_lambdas == (e0,)
