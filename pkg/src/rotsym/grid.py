"""Uniform half-line grid shared by the solver, norms and resolvent code."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Interior nodes ``r_j = j*h``, ``j = 1..num_points`` of ``[0, r_max]``.

    Both ends are Dirichlet boundary points and are not stored, so
    ``h = r_max / (num_points + 1)``.
    """

    r_max: float
    num_points: int

    def __post_init__(self):
        if not self.r_max > 0:
            raise ValueError(f"r_max must be positive, got {self.r_max}")
        if self.num_points < 2:
            raise ValueError(f"need at least 2 grid points, got {self.num_points}")

    @property
    def h(self) -> float:
        return self.r_max / (self.num_points + 1)

    @property
    def r(self) -> np.ndarray:
        return self.h * np.arange(1, self.num_points + 1)

    def refine(self, factor: int = 2) -> "Grid":
        """Grid on the same interval with spacing divided by ``factor``."""
        return Grid(self.r_max, factor * (self.num_points + 1) - 1)

    def trapezoid(self, values: np.ndarray) -> float:
        """Composite trapezoid over ``[0, r_max]`` for integrands vanishing at both ends."""
        return float(self.h * np.sum(values, axis=-1))
