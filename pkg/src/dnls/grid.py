"""Uniform periodic grids, wave fields, and initial profiles."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np


class Topology(enum.Enum):
    TORUS = "torus"
    LINE = "line"

    @classmethod
    def parse(cls, value: Union[str, "Topology"]) -> "Topology":
        if isinstance(value, Topology):
            return value
        key = str(value).strip().lower()
        aliases = {
            "torus": cls.TORUS,
            "torusexact": cls.TORUS,
            "line": cls.LINE,
            "linetruncation": cls.LINE,
        }
        if key not in aliases:
            raise ValueError(f"unknown topology {value!r} (expected 'torus' or 'line')")
        return aliases[key]


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on the box prod_j [-L_j, L_j), periodic in every axis.

    ``TORUS`` means the box *is* the domain; ``LINE`` means the box is a
    truncation of R^d and boundary mass must be monitored.
    """

    dim: int
    half_extents: tuple[float, ...]
    points: tuple[int, ...]
    topology: Topology = Topology.LINE

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if len(self.half_extents) != self.dim or len(self.points) != self.dim:
            raise ValueError("half_extents and points need one entry per axis")
        for L in self.half_extents:
            if not (math.isfinite(L) and L > 0):
                raise ValueError(f"half extent must be positive and finite, got {L}")
        for n in self.points:
            if n < 8 or n % 2:
                raise ValueError(f"points per axis must be even and >= 8, got {n}")

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.points)

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(2.0 * L / n for L, n in zip(self.half_extents, self.points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def measure(self) -> float:
        return float(np.prod([2.0 * L for L in self.half_extents]))

    def axis_nodes(self, j: int) -> np.ndarray:
        L, n = self.half_extents[j], self.points[j]
        return -L + np.arange(n) * (2.0 * L / n)

    def axis_wavenumbers(self, j: int) -> np.ndarray:
        """Wavenumbers pi*k/L_j in FFT order."""
        L, n = self.half_extents[j], self.points[j]
        return np.fft.fftfreq(n, d=1.0 / n) * (np.pi / L)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*[self.axis_nodes(j) for j in range(self.dim)], indexing="ij"))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        return tuple(
            np.meshgrid(*[self.axis_wavenumbers(j) for j in range(self.dim)], indexing="ij")
        )

    @cached_property
    def derivative_wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Wavenumbers for first derivatives: the unpaired Nyquist mode is zeroed
        so that real fields keep real gradients."""
        axes = []
        for j in range(self.dim):
            k = self.axis_wavenumbers(j)
            k[self.points[j] // 2] = 0.0
            axes.append(k)
        return tuple(np.meshgrid(*axes, indexing="ij"))

    @cached_property
    def k_squared(self) -> np.ndarray:
        return sum(k**2 for k in self.wavenumbers)

    @cached_property
    def r_squared(self) -> np.ndarray:
        return sum(x**2 for x in self.coords)

    @property
    def k_max(self) -> float:
        return max(np.pi * n / (2.0 * L) for L, n in zip(self.half_extents, self.points))

    @cached_property
    def shell_mask(self) -> np.ndarray:
        """Nodes in the outermost 5% of each axis."""
        mask = np.zeros(self.shape, dtype=bool)
        for j, n in enumerate(self.points):
            w = max(1, math.ceil(0.05 * n))
            idx = [slice(None)] * self.dim
            idx[j] = slice(0, w)
            mask[tuple(idx)] = True
            idx[j] = slice(n - w, n)
            mask[tuple(idx)] = True
        return mask

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "half_extents": list(self.half_extents),
            "points": list(self.points),
            "topology": self.topology.value,
        }


def make_grid(
    dim: int,
    half_extents: Union[float, Sequence[float]],
    points: Union[int, Sequence[int]],
    topology: Union[str, Topology] = Topology.LINE,
) -> GridSpec:
    if np.ndim(half_extents) == 0:
        half_extents = [half_extents] * dim
    if np.ndim(points) == 0:
        points = [points] * dim
    return GridSpec(
        dim=int(dim),
        half_extents=tuple(float(L) for L in half_extents),
        points=tuple(int(n) for n in points),
        topology=Topology.parse(topology),
    )


@dataclass(frozen=True, eq=False)
class WaveField:
    """Complex samples of u on a grid at time ``time``. Values are read-only."""

    grid: GridSpec
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128, copy=True)
        if v.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {v.size}")
        v = v.reshape(self.grid.shape)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "time", float(self.time))

    @property
    def is_finite(self) -> bool:
        return bool(np.isfinite(self.values).all())

    def replace(self, values: np.ndarray, time: float | None = None) -> "WaveField":
        return WaveField(self.grid, values, self.time if time is None else time)

    def __add__(self, other: "WaveField") -> "WaveField":
        return self.replace(self.values + other.values)

    def __mul__(self, c: complex) -> "WaveField":
        return self.replace(self.values * c)

    __rmul__ = __mul__


# -- initial profiles -------------------------------------------------------


@dataclass(frozen=True)
class Gaussian:
    """amplitude * exp(-|x - center|^2 / (2 width^2)) * exp(i momentum . x)"""

    amplitude: complex = 1.0
    width: float = 1.0
    center: tuple[float, ...] = ()
    momentum: tuple[float, ...] = ()

    def sample(self, grid: GridSpec) -> np.ndarray:
        if not self.width > 0:
            raise ValueError(f"Gaussian width must be positive, got {self.width}")
        x0 = _per_axis(self.center, grid.dim, "center")
        k0 = _per_axis(self.momentum, grid.dim, "momentum")
        r2 = sum((x - c) ** 2 for x, c in zip(grid.coords, x0))
        phase = sum(k * x for k, x in zip(k0, grid.coords))
        return self.amplitude * np.exp(-r2 / (2.0 * self.width**2) + 1j * phase)


@dataclass(frozen=True)
class PlaneWave:
    amplitude: complex = 1.0
    wavenumber: tuple[float, ...] = ()

    def sample(self, grid: GridSpec) -> np.ndarray:
        k0 = _per_axis(self.wavenumber, grid.dim, "wavenumber")
        if grid.topology is Topology.TORUS:
            for j, k in enumerate(k0):
                m = k * grid.half_extents[j] / np.pi
                if abs(m - round(m)) > 1e-12 * max(1.0, abs(m)):
                    raise ValueError(
                        f"plane wave wavenumber {k} on axis {j} is not resonant with the torus "
                        f"(must be a multiple of pi/L = {np.pi / grid.half_extents[j]})"
                    )
        phase = sum(k * x for k, x in zip(k0, grid.coords))
        return self.amplitude * np.exp(1j * phase)


@dataclass(frozen=True)
class HermiteGround:
    """Normalized harmonic-oscillator ground state prod_j (w_j/pi)^(1/4) exp(-w_j x_j^2 / 2)."""

    omegas: tuple[float, ...] = ()
    amplitude: complex = 1.0

    def sample(self, grid: GridSpec) -> np.ndarray:
        om = _per_axis(self.omegas, grid.dim, "omegas", default=1.0)
        if any(w <= 0 for w in om):
            raise ValueError("HermiteGround needs positive frequencies")
        out = np.full(grid.shape, complex(self.amplitude))
        for w, x in zip(om, grid.coords):
            out = out * (w / np.pi) ** 0.25 * np.exp(-0.5 * w * x**2)
        return out


@dataclass(frozen=True)
class Constant:
    value: complex = 1.0

    def sample(self, grid: GridSpec) -> np.ndarray:
        return np.full(grid.shape, complex(self.value))


@dataclass(frozen=True)
class Zero:
    def sample(self, grid: GridSpec) -> np.ndarray:
        return np.zeros(grid.shape, dtype=np.complex128)


@dataclass(frozen=True)
class Superposition:
    parts: tuple = field(default_factory=tuple)

    def sample(self, grid: GridSpec) -> np.ndarray:
        out = np.zeros(grid.shape, dtype=np.complex128)
        for p in self.parts:
            out = out + p.sample(grid)
        return out


InitialProfile = Union[Gaussian, PlaneWave, HermiteGround, Constant, Zero, Superposition]


def _per_axis(vals, dim, name, default=0.0) -> tuple[float, ...]:
    if vals is None or (np.ndim(vals) > 0 and len(vals) == 0):
        return (default,) * dim
    if np.ndim(vals) == 0:
        return (float(vals),) * dim
    if len(vals) != dim:
        raise ValueError(f"{name} needs {dim} components, got {len(vals)}")
    out = tuple(float(v) for v in vals)
    if not all(math.isfinite(v) for v in out):
        raise ValueError(f"{name} must be finite")
    return out


def sample_initial(grid: GridSpec, profile: InitialProfile) -> WaveField:
    values = profile.sample(grid)
    if not np.isfinite(values).all():
        raise ValueError("initial profile produced non-finite values")
    return WaveField(grid, values, 0.0)
