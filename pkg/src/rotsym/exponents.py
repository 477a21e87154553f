"""Admissible Strichartz pairs, effective dimension and scattering power windows."""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "AdmissiblePair",
    "pair_from_q",
    "effective_dimension",
    "scattering_window",
    "improves_euclidean_threshold",
    "d_range_for_classical",
]

INF = math.inf


def _inv(x: float) -> float:
    return 0.0 if x == INF else 1.0 / x


@dataclass(frozen=True)
class AdmissiblePair:
    """``2/p + dim/q = dim/2`` with ``p >= 2``; ``p = inf`` is the conservation endpoint."""

    p: float
    q: float
    dim: float

    def __post_init__(self):
        if (self.p, self.q, self.dim) == (2, INF, 2):
            raise ValueError("(p, q, dim) = (2, inf, 2) is excluded")
        if self.p < 2:
            raise ValueError(f"p must be >= 2, got {self.p}")
        if abs(self.defect) > 1e-12:
            raise ValueError(f"({self.p}, {self.q}) is not {self.dim}-admissible")

    @property
    def defect(self) -> float:
        """``2/p + dim/q - dim/2``; zero for admissible pairs."""
        return 2.0 * _inv(self.p) + self.dim * _inv(self.q) - 0.5 * self.dim

    @property
    def inverse(self) -> tuple[float, float]:
        return _inv(self.p), _inv(self.q)

    def __str__(self):
        return f"p={self.p:g}, q={self.q:g}, dim={self.dim:g}"


def pair_from_q(q: float, dim: float) -> AdmissiblePair:
    """The ``dim``-admissible pair with spatial exponent ``q``."""
    if not dim > 2:
        raise ValueError(f"admissibility dimension must exceed 2, got {dim}")
    q_end = 2.0 * dim / (dim - 2.0)
    if not 2.0 <= q <= q_end:
        raise ValueError(f"q={q} outside [2, {q_end:g}] for dim={dim}")
    if q == 2.0:
        return AdmissiblePair(INF, 2.0, dim)
    if q == q_end:
        return AdmissiblePair(2.0, q, dim)
    return AdmissiblePair(2.0 / (0.5 * dim - dim / q), q, dim)


def effective_dimension(m: float, n: int) -> float:
    """``N = m(n-1) + 1``: the Euclidean dimension with the same volume growth."""
    if not m > 1.0 / (n - 1):
        raise ValueError(f"m must exceed 1/(n-1) = {1 / (n - 1):g}, got {m}")
    return m * (n - 1) + 1


def scattering_window(n: int, N: float) -> tuple[float, float]:
    """Open range ``(4/N, 4/(n-2))`` of NLS powers with short-range behaviour.

    ``N = inf`` stands for exponential volume growth, giving ``(0, 4/(n-2))``.
    """
    if n < 3:
        raise ValueError("dimension n >= 3 required")
    return (0.0 if N == INF else 4.0 / N, 4.0 / (n - 2))


def improves_euclidean_threshold(n: int, N: float) -> bool:
    """Whether ``4/N`` beats the Euclidean critical power ``2/n``.

    Equivalent to ``m > 2 + 1/(n-1)`` for ``N = m(n-1) + 1``.
    """
    return (0.0 if N == INF else 4.0 / N) < 2.0 / n


def d_range_for_classical(n: int, N: float) -> tuple[float, float] | None:
    """Open interval ``(n, N)`` of dimensions ``d`` with unweighted d-admissible estimates.

    ``None`` when the interval is empty.
    """
    if N <= n:
        return None
    return (float(n), float(N))
