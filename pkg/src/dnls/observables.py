"""Functionals and balance laws evaluated on fields and recorded series."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import TYPE_CHECKING

import numpy as np

from .grid import Topology, WaveField
from .params import PhysicsParams
from .regimes import default_kappa, kappa_window
from .spectral import (
    divergence_arrays,
    grad_l2_squared,
    gradient_arrays,
    integrate,
    l2_squared,
    lp_norm,
    require_line,
    weight_l2_squared,
)

if TYPE_CHECKING:
    from .propagator import Trajectory

SERIES_COLUMNS = (
    "t",
    "mass",
    "damping_norm",
    "grad_norm",
    "weight_norm",
    "e_mod",
    "e_lin",
    "dissipation_residual",
)


@dataclass(frozen=True)
class EnergyConfig:
    kappa: float

    def __post_init__(self):
        if not (self.kappa >= 0 and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be finite and >= 0, got {self.kappa}")

    @classmethod
    def default(cls, params: PhysicsParams) -> "EnergyConfig":
        """Midpoint of the admissible window; 0 in the undamped case."""
        return cls(default_kappa(params))

    def validate(self, params: PhysicsParams) -> None:
        lo, hi = kappa_window(params)
        if not lo < self.kappa < hi:
            raise ValueError(
                f"kappa = {self.kappa} outside (0, a/(sigma2^2 + sigma2)) = ({lo:g}, {hi:g})"
            )


@dataclass
class ObservableSeries:
    t: np.ndarray
    mass: np.ndarray
    damping_norm: np.ndarray
    grad_norm: np.ndarray
    weight_norm: np.ndarray
    e_mod: np.ndarray
    e_lin: np.ndarray
    dissipation_residual: np.ndarray

    def __post_init__(self):
        for f in fields(self):
            setattr(self, f.name, np.asarray(getattr(self, f.name), dtype=float))
        n = len(self.t)
        if any(len(getattr(self, f.name)) != n for f in fields(self)):
            raise ValueError("all series columns must have equal length")
        if n > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("series times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)

    @classmethod
    def empty(cls) -> "ObservableSeries":
        return cls(*[np.empty(0)] * len(SERIES_COLUMNS))

    def columns(self) -> list[np.ndarray]:
        return [getattr(self, c) for c in SERIES_COLUMNS]


# -- pointwise functionals -------------------------------------------------------


def mass(f: WaveField) -> float:
    return l2_squared(f.values, f.grid)


def damping_norm(f: WaveField, params: PhysicsParams) -> float:
    """||u||_{L^(2 s2 + 2)}^(2 s2 + 2)."""
    return integrate(np.abs(f.values) ** (2 * params.sigma2 + 2), f.grid)


def weight_norm(f: WaveField) -> float:
    """||x u||_{L^2}; undefined on a torus."""
    require_line(f.grid, "the weighted norm ||x u||")
    return math.sqrt(weight_l2_squared(f.values, f.grid))


def potential_energy(f: WaveField, params: PhysicsParams) -> float:
    if params.free:
        return 0.0
    return integrate(params.potential(f.grid) * np.abs(f.values) ** 2, f.grid)


def linear_energy(f: WaveField, params: PhysicsParams) -> float:
    """(1/2)||grad u||^2 + int V |u|^2."""
    return 0.5 * grad_l2_squared(f.values, f.grid) + potential_energy(f, params)


def modified_energy(f: WaveField, params: PhysicsParams, cfg: EnergyConfig) -> float:
    """Linear energy plus lambda/(s1+1) int |u|^(2s1+2) plus kappa int |u|^(2s2+2)."""
    rho = np.abs(f.values) ** 2
    s1, s2 = params.sigma1, params.sigma2
    return (
        linear_energy(f, params)
        + params.lam / (s1 + 1) * integrate(rho ** (s1 + 1), f.grid)
        + cfg.kappa * integrate(rho ** (s2 + 1), f.grid)
    )


def current_density(f: WaveField) -> np.ndarray:
    """J = Im(conj(u) grad u), stacked along a leading axis of length d."""
    grads = gradient_arrays(f.values, f.grid)
    return np.stack([np.imag(np.conj(f.values) * g) for g in grads])


# -- recording -------------------------------------------------------------------


class SeriesRecorder:
    def __init__(self, params: PhysicsParams, energy: EnergyConfig):
        self.params = params
        self.energy = energy
        self.rows: list[list[float]] = []

    def record(self, f: WaveField) -> None:
        p = self.params
        g = f.grid
        rho = np.abs(f.values) ** 2
        grad2 = grad_l2_squared(f.values, g)
        epot = potential_energy(f, p)
        e_lin = 0.5 * grad2 + epot
        e_mod = (
            e_lin
            + p.lam / (p.sigma1 + 1) * integrate(rho ** (p.sigma1 + 1), g)
            + self.energy.kappa * integrate(rho ** (p.sigma2 + 1), g)
        )
        wn = math.sqrt(weight_l2_squared(f.values, g)) if g.topology is Topology.LINE else math.nan
        m = integrate(rho, g)
        dn = integrate(rho ** (p.sigma2 + 1), g)
        resid = 0.0
        if self.rows:
            t0, m0, d0 = self.rows[-1][0], self.rows[-1][1], self.rows[-1][2]
            ref = self.rows[0][1]
            raw = (m - m0) + p.a * (f.time - t0) * (d0 + dn)
            resid = raw / ref if ref > 0 else raw
        self.rows.append([f.time, m, dn, math.sqrt(grad2), wn, e_mod, e_lin, resid])

    def series(self) -> ObservableSeries:
        if not self.rows:
            return ObservableSeries.empty()
        return ObservableSeries(*np.array(self.rows, dtype=float).T)


# -- balance laws ------------------------------------------------------------------


def dissipation_balance(
    series: ObservableSeries, params: PhysicsParams, rate: bool = False
) -> np.ndarray:
    """Per-interval defect of d/dt ||u||^2 + 2a ||u||^(2s2+2)_(2s2+2) = 0.

    Each entry is [m(t_{n+1}) - m(t_n)] + 2a * trapezoid(damping_norm), divided by
    the initial mass. With ``rate=True`` it is further divided by the interval
    length, giving the defect of the rate equation itself.
    """
    if len(series) < 2:
        raise ValueError("dissipation balance needs at least two samples")
    dt = np.diff(series.t)
    dm = np.diff(series.mass)
    trap = 0.5 * dt * (series.damping_norm[1:] + series.damping_norm[:-1])
    out = dm + 2.0 * params.a * trap
    m0 = series.mass[0]
    if m0 > 0:
        out = out / m0
    if rate:
        out = out / dt
    return out


def conservation_law_residual(traj: "Trajectory", params: PhysicsParams, t_index: int) -> float:
    """Sup-norm defect of d_t rho + div J + 2a rho^(s2+1) at snapshot ``t_index``.

    d_t rho uses a centered difference of the neighbouring snapshots; the result
    is normalized by max rho^(s2+1).
    """
    snaps = traj.snapshots
    if not 1 <= t_index <= len(snaps) - 2:
        raise IndexError(f"t_index {t_index} needs neighbours in 0..{len(snaps) - 1}")
    (tm, fm), (_, f0), (tp, fp) = snaps[t_index - 1], snaps[t_index], snaps[t_index + 1]
    rho_m, rho_p = np.abs(fm.values) ** 2, np.abs(fp.values) ** 2
    dtrho = (rho_p - rho_m) / (tp - tm)
    div_j = np.real(divergence_arrays(current_density(f0), f0.grid))
    sink = np.abs(f0.values) ** (2 * params.sigma2 + 2)
    resid = dtrho + div_j + 2.0 * params.a * sink
    scale = float(sink.max())
    if scale == 0:
        return float(np.max(np.abs(resid)))
    return float(np.max(np.abs(resid)) / scale)


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def localization_bound(f: WaveField, p: float, R: float) -> tuple[float, float]:
    """(||f||_2, C_d R^(d(1/2-1/p)) ||f||_p + ||x f||_2 / R), C_d = |B_1|^(1/2-1/p)."""
    require_line(f.grid, "the localization bound")
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    if not R > 0:
        raise ValueError(f"R must be positive, got {R}")
    d = f.grid.dim
    e = 0.5 - 1.0 / p
    lhs = math.sqrt(l2_squared(f.values, f.grid))
    rhs = unit_ball_volume(d) ** e * R ** (d * e) * lp_norm(f.values, f.grid, p) + math.sqrt(
        weight_l2_squared(f.values, f.grid)
    ) / R
    return lhs, rhs


def balancing_radius(f: WaveField, p: float) -> float:
    """R with R^(1 + d(1/2-1/p)) = ||x f|| / ||f||_p."""
    d = f.grid.dim
    wl = math.sqrt(weight_l2_squared(f.values, f.grid))
    return (wl / lp_norm(f.values, f.grid, p)) ** (1.0 / (1.0 + d * (0.5 - 1.0 / p)))


# -- energy bounds ----------------------------------------------------------------


def focusing_energy_allowance(series: ObservableSeries, params: PhysicsParams, kappa: float) -> np.ndarray:
    """Cumulative allowance 2a|lambda| eps^(-gamma/(1-gamma)) int_0^t damping_norm ds.

    eps = kappa (s2 + 1) / (2 |lambda|) halves the coefficient of the
    L^(4 s2 + 2) term, keeping it negative; gamma = s1/s2 < 1.
    """
    s1, s2, lam, a = params.sigma1, params.sigma2, params.lam, params.a
    if not s2 > s1:
        raise ValueError("the focusing energy bound needs sigma2 > sigma1")
    if lam == 0:
        return np.zeros(len(series))
    gamma = s1 / s2
    eps = kappa * (s2 + 1) / (2 * abs(lam))
    coeff = 2 * a * abs(lam) * eps ** (-gamma / (1 - gamma))
    dt = np.diff(series.t)
    trap = 0.5 * dt * (series.damping_norm[1:] + series.damping_norm[:-1])
    return coeff * np.concatenate([[0.0], np.cumsum(trap)])
