"""Spectral transforms, derivatives, quadrature norms and the polar factor.

Transforms use the unitary DFT normalization, so the node sum of |u|^2 equals
the mode sum of |u_hat|^2. Integrals are rectangle-rule sums times the cell
volume, which is spectrally accurate for smooth periodic data.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .grid import GridSpec, Topology, WaveField


class Direction(enum.Enum):
    FORWARD = "forward"
    INVERSE = "inverse"


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: GridSpec
    coefficients: np.ndarray
    time: float = 0.0


def fft(values: np.ndarray) -> np.ndarray:
    return np.fft.fftn(values, norm="ortho")


def ifft(coeffs: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(coeffs, norm="ortho")


def spectral_transform(obj, direction: Direction | str = Direction.FORWARD):
    """Forward: WaveField -> SpectralField. Inverse: SpectralField -> WaveField."""
    direction = Direction(direction)
    if direction is Direction.FORWARD:
        if not isinstance(obj, WaveField):
            raise TypeError("forward transform expects a WaveField")
        return SpectralField(obj.grid, fft(obj.values), obj.time)
    if not isinstance(obj, SpectralField):
        raise TypeError("inverse transform expects a SpectralField")
    return WaveField(obj.grid, ifft(obj.coefficients), obj.time)


def gradient_arrays(values: np.ndarray, grid: GridSpec) -> list[np.ndarray]:
    uh = fft(values)
    return [ifft(1j * k * uh) for k in grid.derivative_wavenumbers]


def gradient(f: WaveField) -> list[WaveField]:
    """Spectral gradient, one field per axis."""
    return [f.replace(g) for g in gradient_arrays(f.values, f.grid)]


def divergence_arrays(components: Iterable[np.ndarray], grid: GridSpec) -> np.ndarray:
    out = np.zeros(grid.shape, dtype=np.complex128)
    for c, k in zip(components, grid.derivative_wavenumbers):
        out += ifft(1j * k * fft(c))
    return out


def integrate(density: np.ndarray, grid: GridSpec) -> float:
    return float(np.sum(density) * grid.cell_volume)


def l2_squared(values: np.ndarray, grid: GridSpec) -> float:
    return integrate(np.abs(values) ** 2, grid)


def grad_l2_squared(values: np.ndarray, grid: GridSpec) -> float:
    # Parseval: sum |k|^2 |u_hat|^2 with the unitary normalization
    uh = fft(values)
    return float(np.sum(grid.k_squared * np.abs(uh) ** 2) * grid.cell_volume)


def weight_l2_squared(values: np.ndarray, grid: GridSpec) -> float:
    return integrate(grid.r_squared * np.abs(values) ** 2, grid)


def lp_norm(values: np.ndarray, grid: GridSpec, p: float) -> float:
    if p == np.inf:
        return float(np.max(np.abs(values))) if values.size else 0.0
    return integrate(np.abs(values) ** p, grid) ** (1.0 / p)


def h1_norm(values: np.ndarray, grid: GridSpec) -> float:
    """(||v||^2 + ||grad v||^2)^(1/2)."""
    return float(np.sqrt(l2_squared(values, grid) + grad_l2_squared(values, grid)))


@dataclass(frozen=True)
class NormReport:
    l2: float
    grad_l2: float
    weight_l2: float
    sigma_norm: float
    lp: dict = field(default_factory=dict)


def norms(f: WaveField, ps: Iterable[float] = ()) -> NormReport:
    """L^2, gradient, weighted and Sigma norms plus any requested L^p norms.

    On a torus ``weight_l2`` uses coordinates of the chart [-L, L)^d and so
    depends on the choice of fundamental domain.
    """
    if not f.is_finite:
        raise ValueError("norms of a non-finite field are undefined")
    g = f.grid
    l2 = float(np.sqrt(l2_squared(f.values, g)))
    gl2 = float(np.sqrt(grad_l2_squared(f.values, g)))
    wl2 = float(np.sqrt(weight_l2_squared(f.values, g)))
    return NormReport(
        l2=l2,
        grad_l2=gl2,
        weight_l2=wl2,
        sigma_norm=l2 + gl2 + wl2,
        lp={float(p): lp_norm(f.values, g, float(p)) for p in ps},
    )


def polar_factor_array(values: np.ndarray, eps: float = 0.0) -> np.ndarray:
    if eps < 0:
        raise ValueError("eps must be non-negative")
    mod = np.abs(values)
    if eps > 0:
        return values / np.sqrt(mod**2 + eps**2)
    out = np.zeros_like(values)
    nz = mod > 0
    out[nz] = values[nz] / mod[nz]
    return out


def polar_factor(f: WaveField, eps: float = 0.0) -> WaveField:
    """u/|u| (zero where u = 0), or the regularized u/sqrt(|u|^2 + eps^2)."""
    return f.replace(polar_factor_array(f.values, eps))


def polar_identity_residual(f: WaveField, cutoff: float = 1e-8) -> float:
    """Max relative defect of |grad u|^2 = |Re(conj(phi) grad u)|^2 + |Im(conj(phi) grad u)|^2.

    Only nodes with |u| > cutoff * max|u| are inspected.
    """
    mod = np.abs(f.values)
    if mod.max() == 0:
        return 0.0
    phi = polar_factor_array(f.values)
    grads = gradient_arrays(f.values, f.grid)
    total = sum(np.abs(g) ** 2 for g in grads)
    split = sum(np.real(np.conj(phi) * g) ** 2 + np.imag(np.conj(phi) * g) ** 2 for g in grads)
    mask = (mod > cutoff * mod.max()) & (total > 0)
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(total[mask] - split[mask]) / total[mask]))


def shell_mass_fraction(f: WaveField) -> float:
    """Fraction of the mass sitting in the outer 5% of nodes along any axis."""
    rho = np.abs(f.values) ** 2
    total = rho.sum()
    if total == 0:
        return 0.0
    return float(rho[f.grid.shell_mask].sum() / total)


def require_line(grid: GridSpec, what: str) -> None:
    if grid.topology is Topology.TORUS:
        raise ValueError(f"{what} needs |x|, which is chart-dependent on a torus")
