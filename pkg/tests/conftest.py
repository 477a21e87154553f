import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rotsym.manifold import Euclidean, Hyperbolic, OddPolynomial, PowerTail

settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# (profile, sympy kind, sympy params)
PROFILES = [
    (Euclidean(), "euclidean", {}),
    (Hyperbolic(1.0), "hyperbolic", {"alpha": 1}),
    (Hyperbolic(2.0), "hyperbolic", {"alpha": 2}),
    (OddPolynomial((1.0,)), "odd_polynomial", {"coeffs": [1]}),
    (OddPolynomial((0.5, 0.25)), "odd_polynomial", {"coeffs": ["1/2", "1/4"]}),
    (PowerTail(2.0, 1.0), "power_tail", {"m": 2, "length": 1}),
    (PowerTail(3.0, 2.0), "power_tail", {"m": 3, "length": 2}),
]
