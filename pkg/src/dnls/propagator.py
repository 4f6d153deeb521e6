"""Strang-split time integration with exact substep flows.

One step of size dt is

    K(dt/2) . P(dt/2) . N(dt) . P(dt/2) . K(dt/2)

where K is the free flow i u_t = -(1/2) Lap u (exact in Fourier space),
P the potential phase and N the pointwise nonlinear + damping flow, solved
in closed form.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .grid import Topology, WaveField
from .observables import EnergyConfig, ObservableSeries, SeriesRecorder
from .params import PhysicsParams
from .spectral import fft, grad_l2_squared, ifft, shell_mass_fraction

# below this |1 - sigma1/sigma2| the log branch of the phase integral is used
LOG_BRANCH_TOL = 1e-8


class Termination(str, enum.Enum):
    COMPLETED = "Completed"
    BLOWUP_SUSPECTED = "BlowUpSuspected"
    NON_FINITE = "NonFinite"


@dataclass(frozen=True)
class StepConfig:
    dt: float
    t_end: float
    record_every: int = 1
    watchdog_factor: float = 1e6
    keep_snapshots: bool = True

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.dt > self.t_end * (1 + 1e-12):
            raise ValueError(f"dt = {self.dt} exceeds t_end = {self.t_end}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError(f"record_every must be a positive integer, got {self.record_every}")
        if not self.watchdog_factor > 1:
            raise ValueError(f"watchdog_factor must exceed 1, got {self.watchdog_factor}")

    @property
    def n_steps(self) -> int:
        return max(1, int(math.ceil(self.t_end / self.dt - 1e-9)))


@dataclass
class Trajectory:
    snapshots: list[tuple[float, WaveField]]
    series: ObservableSeries
    termination: Termination = Termination.COMPLETED
    termination_time: Optional[float] = None
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> WaveField:
        return self.snapshots[-1][1]

    @property
    def completed(self) -> bool:
        return self.termination is Termination.COMPLETED


# -- substeps -----------------------------------------------------------------


def _kinetic_phase(grid, t: float) -> np.ndarray:
    return np.exp(-0.5j * grid.k_squared * t)


def kinetic_halfstep(f: WaveField, dt: float) -> WaveField:
    """Exact free flow over dt/2; dt may be negative."""
    return f.replace(ifft(_kinetic_phase(f.grid, 0.5 * dt) * fft(f.values)))


def free_evolve(f: WaveField, t: float) -> WaveField:
    """Apply exp(i (t/2) Lap); negative t inverts."""
    if t == 0:
        return f.replace(f.values)
    return f.replace(ifft(_kinetic_phase(f.grid, t) * fft(f.values)))


def potential_step(f: WaveField, params: PhysicsParams, dt: float) -> WaveField:
    if params.free:
        return f.replace(f.values)
    return f.replace(f.values * np.exp(-1j * params.potential(f.grid) * dt))


def _expm1_ratio(x: np.ndarray, c: float) -> np.ndarray:
    """((1+x)^c - 1) / (c x), continuous at x = 0 (value 1)."""
    out = np.ones_like(x)
    nz = x > 0
    out[nz] = np.expm1(c * np.log1p(x[nz])) / (c * x[nz])
    return out


def _log_ratio(x: np.ndarray, c: float = 0.0) -> np.ndarray:
    """log(1+x)/x * (1 + c log(1+x)/2), continuous at x = 0.

    The bracket is the first-order expansion of _expm1_ratio in c, so the
    near-equal-power branch stays accurate to O(c^2).
    """
    out = np.ones_like(x)
    nz = x > 0
    lg = np.log1p(x[nz])
    out[nz] = lg / x[nz] * (1.0 + 0.5 * c * lg)
    return out


def nonlinear_factor(rho0: np.ndarray, params: PhysicsParams, dt: float) -> np.ndarray:
    """Multiplier m with u(dt) = m * u0 for the node ODE
    i u' = lambda |u|^(2 s1) u - i a |u|^(2 s2) u, given rho0 = |u0|^2.
    """
    if dt < 0:
        raise ValueError("the damped nonlinear flow is not reversible: dt must be >= 0")
    lam, a, s1, s2 = params.lam, params.a, params.sigma1, params.sigma2
    rho0 = np.asarray(rho0, dtype=float)
    base = lam * rho0**s1 * dt  # undamped phase decrement
    if a == 0:
        return np.exp(-1j * base)
    # rho(t)^(-s2) = rho0^(-s2) + 2 a s2 t
    x = 2.0 * a * s2 * dt * rho0**s2
    log1p_x = np.log1p(x)
    amp = np.exp(-log1p_x / (2.0 * s2))
    c = 1.0 - s1 / s2
    if abs(c) < LOG_BRANCH_TOL:
        decrement = base * _log_ratio(x, c)
    else:
        decrement = base * _expm1_ratio(x, c)
    return amp * np.exp(-1j * decrement)


def nonlinear_step(f: WaveField, params: PhysicsParams, dt: float) -> WaveField:
    """Exact pointwise flow of the nonlinear and damping terms over dt >= 0."""
    rho0 = np.abs(f.values) ** 2
    return f.replace(f.values * nonlinear_factor(rho0, params, dt))


def strang_step(f: WaveField, params: PhysicsParams, dt: float) -> WaveField:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    g = kinetic_halfstep(f, dt)
    g = potential_step(g, params, 0.5 * dt)
    g = nonlinear_step(g, params, dt)
    g = potential_step(g, params, 0.5 * dt)
    g = kinetic_halfstep(g, dt)
    return g.replace(g.values, f.time + dt)


# -- time loop ----------------------------------------------------------------


def suggest_dt(f: WaveField, params: PhysicsParams) -> float:
    """dt <= 0.1 / max(k_max^2/2, V_max, |lambda| rho_max^s1 + a rho_max^s2)."""
    g = f.grid
    rho_max = float(np.max(np.abs(f.values) ** 2)) if f.values.size else 0.0
    v_max = float(params.potential(g).max()) if not params.free else 0.0
    rate = max(
        0.5 * g.k_max**2,
        v_max,
        abs(params.lam) * rho_max**params.sigma1 + params.a * rho_max**params.sigma2,
    )
    return 0.1 / rate


class _Stepper:
    """Strang stepper on raw arrays with the constant phase tables cached."""

    def __init__(self, grid, params: PhysicsParams):
        self.grid = grid
        self.params = params
        self._half = {}
        self._pot = {}
        self._v = None if params.free else params.potential(grid)

    def _kin(self, dt):
        if dt not in self._half:
            self._half[dt] = _kinetic_phase(self.grid, 0.5 * dt)
        return self._half[dt]

    def _potphase(self, dt):
        if dt not in self._pot:
            self._pot[dt] = np.exp(-0.5j * self._v * dt)
        return self._pot[dt]

    def step(self, u: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
        """Advance one step; also return the final spectrum for cheap gradient norms."""
        kin = self._kin(dt)
        u = ifft(kin * fft(u))
        if self._v is not None:
            u = u * self._potphase(dt)
        u = u * nonlinear_factor(np.abs(u) ** 2, self.params, dt)
        if self._v is not None:
            u = u * self._potphase(dt)
        uh = kin * fft(u)
        return ifft(uh), uh


def evolve(
    initial: WaveField,
    params: PhysicsParams,
    cfg: StepConfig,
    energy: Optional[EnergyConfig] = None,
) -> Trajectory:
    """Integrate from ``initial.time`` over ``cfg.t_end``.

    Observables are recorded at t0 and every ``record_every`` steps, plus at the
    final step. The run stops early when ||grad u|| exceeds ``watchdog_factor``
    times its initial value (blow-up suspected, never proved on a finite grid)
    or when a non-finite value appears.
    """
    if not initial.is_finite:
        raise ValueError("initial field is not finite")
    grid = initial.grid
    if energy is None:
        energy = EnergyConfig.default(params)
    rec = SeriesRecorder(params, energy)
    stepper = _Stepper(grid, params)
    t0 = initial.time
    n = cfg.n_steps
    u = np.array(initial.values)
    grad0 = math.sqrt(grad_l2_squared(u, grid))
    # a spatially constant start has zero gradient; measure growth against 1 then
    limit = cfg.watchdog_factor * (grad0 if grad0 > 0 else 1.0)

    track_shell = grid.topology is Topology.LINE
    max_shell = shell_mass_fraction(initial) if track_shell else 0.0

    snapshots = [(t0, initial)]
    rec.record(initial)
    termination, t_stop = Termination.COMPLETED, None
    for i in range(1, n + 1):
        dt = cfg.dt if i < n else cfg.t_end - (n - 1) * cfg.dt
        u, uh = stepper.step(u, dt)
        t = t0 + (cfg.t_end if i == n else i * cfg.dt)
        if not np.isfinite(u).all():
            termination, t_stop = Termination.NON_FINITE, t
            break
        grad = math.sqrt(float(np.sum(grid.k_squared * np.abs(uh) ** 2)) * grid.cell_volume)
        if i % cfg.record_every == 0 or i == n or grad > limit:
            w = WaveField(grid, u, t)
            rec.record(w)
            if track_shell:
                max_shell = max(max_shell, shell_mass_fraction(w))
            if cfg.keep_snapshots or i == n or grad > limit:
                snapshots.append((t, w))
        if grad > limit:
            termination, t_stop = Termination.BLOWUP_SUSPECTED, t
            break

    if not cfg.keep_snapshots and len(snapshots) > 2:
        snapshots = [snapshots[0], snapshots[-1]]
    return Trajectory(
        snapshots=snapshots,
        series=rec.series(),
        termination=termination,
        termination_time=t_stop,
        meta={
            "dt": cfg.dt,
            "t_end": cfg.t_end,
            "n_steps": n,
            "record_every": cfg.record_every,
            "watchdog_factor": cfg.watchdog_factor,
            "watchdog_limit": limit,
            "kappa": energy.kappa,
            "suggested_dt": suggest_dt(initial, params),
            "max_shell_fraction": max_shell if track_shell else None,
        },
    )
