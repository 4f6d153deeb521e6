"""Physical coefficients of the damped NLS

    i u_t + (1/2) Lap u = V(x) u + lambda |u|^(2 sigma1) u - i a |u|^(2 sigma2) u,
    V(x) = (1/2) sum_j omega_j^2 x_j^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import GridSpec


def critical_sigma(dim: int) -> float:
    """Energy-subcritical upper bound 2/(d-2)_+ (inf for d <= 2)."""
    return math.inf if dim <= 2 else 2.0 / (dim - 2)


@dataclass(frozen=True)
class PhysicsParams:
    lam: float
    a: float
    sigma1: float
    sigma2: float
    omegas: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        object.__setattr__(self, "omegas", tuple(float(w) for w in np.atleast_1d(self.omegas)))
        for name in ("lam", "a", "sigma1", "sigma2"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        if self.a < 0:
            raise ValueError(f"damping a must be >= 0, got {self.a}")
        if self.sigma1 <= 0 or self.sigma2 <= 0:
            raise ValueError("sigma1 and sigma2 must be positive")
        if any(w < 0 or not math.isfinite(w) for w in self.omegas):
            raise ValueError("trap frequencies must be finite and >= 0")

    @property
    def dim(self) -> int:
        return len(self.omegas)

    @classmethod
    def make(cls, lam, a, sigma1, sigma2, omegas: float | Sequence[float] = 0.0, dim: int = 1):
        if np.ndim(omegas) == 0:
            omegas = (float(omegas),) * dim
        return cls(float(lam), float(a), float(sigma1), float(sigma2), tuple(omegas))

    def check_subcritical(self) -> None:
        bound = critical_sigma(self.dim)
        for name in ("sigma1", "sigma2"):
            s = getattr(self, name)
            if not s < bound:
                raise ValueError(
                    f"{name} = {s} violates energy-subcriticality bound sigma < 2/(d-2) = {bound:g} "
                    f"for dim = {self.dim}"
                )

    def potential(self, grid: GridSpec) -> np.ndarray:
        if len(self.omegas) != grid.dim:
            raise ValueError(f"{len(self.omegas)} trap frequencies for a {grid.dim}-d grid")
        return 0.5 * sum(w**2 * x**2 for w, x in zip(self.omegas, grid.coords))

    @property
    def confined(self) -> bool:
        return all(w > 0 for w in self.omegas)

    @property
    def free(self) -> bool:
        return all(w == 0 for w in self.omegas)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "a": self.a,
            "sigma1": self.sigma1,
            "sigma2": self.sigma2,
            "omegas": list(self.omegas),
        }
