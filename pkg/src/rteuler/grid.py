"""Uniform time grids and the two evaluation-point maps used by the steppers.

Every stepper in this package works on an equidistant partition
``0 = t_0 < t_1 < ... < t_n = T`` and evaluates coefficients either at the
left endpoint of the current cell (``kappa``) or at a uniformly randomized
point inside it (``xi``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TimeGrid:
    """Equidistant partition of [0, horizon] into ``n`` cells.

    Grid points are always computed as ``(k * horizon) / n`` rather than by
    accumulating ``dt``, so nested grids (n and 2n) share points exactly.
    """

    n: int
    horizon: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"step count must be >= 1, got {self.n}")
        if not self.horizon > 0.0:
            raise ValueError(f"horizon must be > 0, got {self.horizon}")

    @property
    def dt(self) -> float:
        return self.horizon / self.n

    def point(self, k: int) -> float:
        """Grid point t_k = k*T/n for k in 0..n."""
        if not 0 <= k <= self.n:
            raise ValueError(f"grid index {k} outside 0..{self.n}")
        return (k * self.horizon) / self.n

    def points(self) -> np.ndarray:
        """All n+1 grid points as an array."""
        return np.arange(self.n + 1) * self.horizon / self.n

    def kappa_index(self, t: float) -> int:
        """Index k-1 of the cell [t_{k-1}, t_k) containing t; t = T maps to n-1."""
        if not 0.0 <= t <= self.horizon:
            raise ValueError(f"time {t} outside [0, {self.horizon}]")
        return min(int(math.floor(t * self.n / self.horizon)), self.n - 1)

    def kappa(self, t: float) -> float:
        """Left endpoint t_{k-1} of the cell containing t.

        The last cell is treated as closed on the right, so kappa(T) = t_{n-1}.
        """
        return self.point(self.kappa_index(t))

    def xi(self, k: int, phi: float) -> float:
        """Randomized evaluation point t_{k-1} + dt*phi inside cell k (1-based).

        ``phi`` must lie in (0, 1], so the result lies in (t_{k-1}, t_k].
        """
        if not 1 <= k <= self.n:
            raise ValueError(f"cell index {k} outside 1..{self.n}")
        if not 0.0 < phi <= 1.0:
            raise ValueError(f"phi must be in (0, 1], got {phi}")
        return self.point(k - 1) + self.dt * phi

    def cell_of(self, times: np.ndarray) -> np.ndarray:
        """1-based cell indices for event times, with tau in (t_{k-1}, t_k] -> k.

        Matches the stochastic-integral convention for jump increments: a jump
        exactly on a grid point belongs to the cell ending there.
        """
        times = np.asarray(times, dtype=float)
        if times.size and (times.min() <= 0.0 or times.max() > self.horizon):
            raise ValueError("event times must lie in (0, horizon]")
        right_edges = np.arange(1, self.n + 1) * self.horizon / self.n
        return np.searchsorted(right_edges, times, side="left") + 1
