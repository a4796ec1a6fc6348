"""Angular-momentum basis and physical constants for a particle on a ring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PhysicalParams:
    """Particle mass, ring radius and Planck constant.

    Natural units (all three equal to 1) are the default; arrival times
    scale with mass * radius**2 / hbar.
    """

    mass: float = 1.0
    radius: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("mass", "radius", "hbar"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value <= 0.0:
                raise ValueError(f"{name} must be positive and finite, got {value!r}")

    @property
    def time_scale(self) -> float:
        """Overall scale m r^2 / hbar of the arrival-time operator."""
        return self.mass * self.radius**2 / self.hbar


@dataclass(frozen=True)
class BasisTruncation:
    """Finite angular-momentum basis |k>, k = -n_max .. n_max.

    Row 0 of every matrix corresponds to k = -n_max.
    """

    n_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be a positive integer, got {self.n_max!r}")
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def dimension(self) -> int:
        return 2 * self.n_max + 1

    def row(self, k: int) -> int:
        """Matrix row/column of the momentum label k."""
        if abs(k) > self.n_max:
            raise ValueError(f"label {k} outside truncation |k| <= {self.n_max}")
        return int(k) + self.n_max

    def k_values(self) -> np.ndarray:
        """All momentum labels in row order, -n_max .. n_max."""
        return np.arange(-self.n_max, self.n_max + 1)
