"""The acceptance property suite, shared by ``dnls check`` and the test suite.

Each check returns a ``CheckResult`` carrying the measured quantities next to
the threshold they were compared with.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .experiments import (
    PROBE_WATCHDOG_FACTOR,
    run_confined_decay,
    run_energy_monotonicity,
    run_scattering,
    run_torus_decay,
    torus_proof_bound,
)
from .grid import Constant, Gaussian, Topology, WaveField, make_grid, sample_initial
from .observables import dissipation_balance, localization_bound
from .params import PhysicsParams
from .propagator import StepConfig, evolve, nonlinear_factor, strang_step
from .regimes import Verdict, classify
from .spectral import h1_norm, polar_identity_residual

ORACLE_RTOL = 1e-10
ORDER_RANGE = (3.5, 4.5)


@dataclass
class CheckResult:
    name: str
    passed: bool
    summary: str
    budget_s: float
    elapsed_s: float = 0.0
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.summary} ({self.elapsed_s:.1f}s / {self.budget_s:.0f}s)"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "summary": self.summary,
            "budget_s": self.budget_s,
            "elapsed_s": self.elapsed_s,
            "details": self.details,
        }


def _timed(fn: Callable[[], CheckResult]) -> CheckResult:
    t0 = time.perf_counter()
    res = fn()
    res.elapsed_s = time.perf_counter() - t0
    if res.elapsed_s > res.budget_s:
        res.passed = False
        res.summary += f"; over budget {res.budget_s:.0f}s"
    return res


# -- 1. exact substep vs ODE oracle --------------------------------------------------

ORACLE_COMBOS = (
    # (lambda, a, sigma1, sigma2): undamped, equal powers, log branch, generic
    (1.0, 0.0, 0.5, 1.0),
    (-1.0, 0.0, 1.0, 1.0),
    (0.5, 0.0, 0.75, 2.0),
    (1.0, 1.0, 1.0, 1.0),
    (-1.0, 0.5, 0.5, 0.5),
    (0.5, 2.0, 1.0, 1.0),
    (-1.0, 1.0, 2.0, 2.0),
    (1.0, 1.0, 1.0, 2.0),
    (-1.0, 0.5, 0.5, 1.0),
    (2.0, 1.0, 1.0, 1.5),
    (-1.0, 1.0, 1.0, 0.5),
    (1.0, 1.0, 0.5, 1.5),
    (-2.0, 3.0, 1.0, 1.2),
    (1.0, 0.1, 1.0, 1.0 + 5e-9),
)
ORACLE_RHO = (1e-6, 1e-3, 1.0, 10.0, 100.0)
ORACLE_DT = (1e-3, 0.03, 1.0)
# the oracle integrates a rotating vector; keep the total phase within its resolution
ORACLE_MAX_PHASE = 200.0


def ode_oracle(rho0: float, params: PhysicsParams, dt: float) -> complex:
    """High-accuracy integration of the node ODE from u0 = sqrt(rho0)."""
    lam, a, s1, s2 = params.lam, params.a, params.sigma1, params.sigma2
    u0 = math.sqrt(rho0)

    def rhs(_t, y):
        r = y[0] * y[0] + y[1] * y[1]
        g = lam * r**s1
        h = a * r**s2
        return [g * y[1] - h * y[0], -g * y[0] - h * y[1]]

    sol = solve_ivp(rhs, (0.0, dt), [u0, 0.0], method="DOP853", rtol=1e-13, atol=1e-15 * u0)
    return complex(sol.y[0, -1], sol.y[1, -1])


def oracle_lattice() -> list[tuple[PhysicsParams, float, float]]:
    pts = []
    for lam, a, s1, s2 in ORACLE_COMBOS:
        p = PhysicsParams(lam, a, s1, s2, (0.0,))
        for rho in ORACLE_RHO:
            for dt in ORACLE_DT:
                if abs(lam) * rho**s1 * dt <= ORACLE_MAX_PHASE:
                    pts.append((p, rho, dt))
    return pts


def check_substep_oracle() -> CheckResult:
    pts = oracle_lattice()
    worst, where = 0.0, None
    for p, rho, dt in pts:
        exact = ode_oracle(rho, p, dt)
        got = complex(nonlinear_factor(np.array([rho]), p, dt)[0]) * math.sqrt(rho)
        err = abs(got - exact) / abs(exact)
        if err > worst:
            worst, where = err, (p.lam, p.a, p.sigma1, p.sigma2, rho, dt)
    ok = len(pts) >= 200 and worst < ORACLE_RTOL
    return CheckResult(
        "substep_oracle",
        ok,
        f"{len(pts)} points, max rel err {worst:.2e} < {ORACLE_RTOL:g}",
        30.0,
        details={"points": len(pts), "max_rel_err": worst, "worst_point": where},
    )


# -- 2. mass-dissipation balance ------------------------------------------------------


def check_dissipation_balance() -> CheckResult:
    params = PhysicsParams(1.0, 1.0, 1.0, 1.0, (1.0,))
    grid = make_grid(1, 10.0, 256)
    u0 = sample_initial(grid, Gaussian(1.0, 1.0))
    dts = (0.02, 0.01, 0.005)
    res = []
    for dt in dts:
        traj = evolve(u0, params, StepConfig(dt, 10.0, keep_snapshots=False))
        res.append(float(np.max(np.abs(dissipation_balance(traj.series, params, rate=True)))))
    ratios = [res[i] / res[i + 1] for i in range(len(res) - 1)]
    ok = all(ORDER_RANGE[0] <= r <= ORDER_RANGE[1] for r in ratios)
    return CheckResult(
        "dissipation_balance",
        ok,
        "residual ratios " + ", ".join(f"{r:.3f}" for r in ratios) + f" in {list(ORDER_RANGE)}",
        120.0,
        details={"dts": dts, "max_residual": res, "ratios": ratios},
    )


# -- 3. Strang order --------------------------------------------------------------------


def _run_fixed(u0: WaveField, params: PhysicsParams, dt: float, T: float) -> WaveField:
    n = int(round(T / dt))
    u = u0
    for _ in range(n):
        u = strang_step(u, params, dt)
    return u


def check_strang_order() -> CheckResult:
    params = PhysicsParams(1.0, 1.0, 1.0, 1.0, (1.0,))
    grid = make_grid(1, 10.0, 256)
    u0 = sample_initial(grid, Gaussian(1.0, 1.0, center=1.0, momentum=0.5))
    dts = (0.1, 0.05, 0.025)
    ref = _run_fixed(u0, params, dts[-1] / 16, 1.0)
    errs = [h1_norm(_run_fixed(u0, params, dt, 1.0).values - ref.values, grid) for dt in dts]
    ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    ok = all(ORDER_RANGE[0] <= r <= ORDER_RANGE[1] for r in ratios)
    return CheckResult(
        "strang_order",
        ok,
        "H1 error ratios " + ", ".join(f"{r:.3f}" for r in ratios) + f" in {list(ORDER_RANGE)}",
        120.0,
        details={"dts": dts, "h1_errors": errs, "ratios": ratios},
    )


# -- 4. energy monotonicity ------------------------------------------------------------


def check_energy() -> CheckResult:
    grid = make_grid(1, 20.0, 256)
    cfg = StepConfig(0.005, 20.0, keep_snapshots=False)
    defoc = run_energy_monotonicity(
        PhysicsParams(1.0, 1.0, 1.0, 1.0, (0.0,)), grid, cfg, initial=Gaussian(1.5, 1.0)
    )
    focus = run_energy_monotonicity(
        PhysicsParams(-1.0, 1.0, 1.0, 2.0, (0.0,)), grid, cfg, initial=Gaussian(1.5, 1.0)
    )
    ok = defoc.passed and focus.passed
    return CheckResult(
        "energy_monotonicity",
        ok,
        f"defocusing max step increase {defoc.max_violation:.2e}, "
        f"focusing excess over bound {focus.max_violation:.2e} (tol {defoc.tolerance:g})",
        240.0,
        details={"defocusing": defoc.to_dict(), "focusing": focus.to_dict()},
    )


# -- 5. strong-damping threshold --------------------------------------------------------


def check_threshold() -> CheckResult:
    grid = make_grid(2, 4.0, 128)
    tight = Gaussian(6.0, 0.5)
    cfg = StepConfig(1e-3, 2.0, record_every=10, keep_snapshots=False)
    damped = run_energy_monotonicity(PhysicsParams(-1.0, 1.2, 1.0, 1.0, (0.0, 0.0)), grid, cfg, initial=tight)
    ctrl_cfg = StepConfig(1e-3, 2.0, record_every=10, watchdog_factor=PROBE_WATCHDOG_FACTOR, keep_snapshots=False)
    ctrl = evolve(sample_initial(grid, tight), PhysicsParams(-1.0, 0.0, 1.0, 1.0, (0.0, 0.0)), ctrl_cfg)
    fired = ctrl.termination.value == "BlowUpSuspected"
    ok = damped.passed and damped.property == "linear_energy_nonincreasing" and fired
    return CheckResult(
        "strong_damping_threshold",
        ok,
        f"a=1.2 completed with E_lin max step increase {damped.max_violation:.2e}; "
        f"a=0 watchdog {'fired at t=' + format(ctrl.termination_time, '.3f') if fired else 'did not fire'}",
        180.0,
        details={"damped": damped.to_dict(), "control_termination": ctrl.termination.value,
                 "control_time": ctrl.termination_time},
    )


# -- 6. confined decay ------------------------------------------------------------------


def check_confined_decay() -> CheckResult:
    params = PhysicsParams(1.0, 1.0, 1.0, 1.0, (1.0,))
    grid = make_grid(1, 10.0, 256)
    rep = run_confined_decay(
        params, grid, StepConfig(0.005, 50.0, record_every=10, keep_snapshots=False),
        initial=Gaussian(1.0, 1.0, center=1.0),
    )
    ok = rep.envelope_nonincreasing and rep.trusted and math.isfinite(rep.envelope_ratio_max)
    return CheckResult(
        "confined_decay",
        ok,
        f"envelope quartile max {rep.envelope_first_quartile_max:.3f} -> {rep.envelope_last_quartile_max:.3f}, "
        f"slope {rep.fitted_slope:.3f} (bound {rep.predicted_bound_slope:.3f}), shell {rep.max_shell_fraction:.1e}",
        300.0,
        details=rep.to_dict(),
    )


# -- 7. torus bound ------------------------------------------------------------------


def check_torus_bound() -> CheckResult:
    params = PhysicsParams(1.0, 1.0, 1.0, 1.0, (0.0,))
    grid = make_grid(1, math.pi, 64, Topology.TORUS)
    dt = 0.005
    cfg = StepConfig(dt, 50.0, record_every=10, keep_snapshots=False)
    const = run_torus_decay(params, grid, cfg, initial=Constant(0.8))
    s = const.series
    bound = torus_proof_bound(s.mass[0], params.a, params.sigma2, grid.measure, s.t)
    const_err = float(np.max(np.abs(s.mass - bound) / bound))
    generic = run_torus_decay(params, grid, cfg, initial=Gaussian(2.0, 0.5, momentum=1.0))
    ok = const_err <= dt**2 and bool(generic.bounds_hold)
    return CheckResult(
        "torus_bound",
        ok,
        f"constant data rel dev {const_err:.1e} <= dt^2; generic mass/bound max "
        f"{generic.proof_bound_ratio_max:.3f} (proof), {generic.explicit_bound_ratio_max:.3f} (explicit)",
        180.0,
        details={"constant_rel_dev": const_err, "generic": generic.to_dict()},
    )


# -- 8. scattering ------------------------------------------------------------------


def check_scattering() -> CheckResult:
    params = PhysicsParams(1.0, 1.0, 2.0, 2.0, (0.0,))
    grid = make_grid(1, 200.0, 8192)
    rep = run_scattering(params, grid, (5.0, 10.0, 20.0, 40.0), dt=0.005, initial=Gaussian(0.5, 1.0))
    ratio = rep.limit_mass / rep.initial_mass
    ok = rep.gaps_decreasing and ratio > 0.5 and rep.trusted
    return CheckResult(
        "scattering",
        ok,
        "Cauchy gaps " + ", ".join(f"{g:.2e}" for g in rep.cauchy_gaps)
        + f"; limit/initial mass {ratio:.3f} > 0.5",
        600.0,
        details=rep.to_dict(),
    )


# -- 9. classifier truth table ------------------------------------------------------

V = Verdict
TRUTH_TABLE = (
    # (lambda, a, sigma1, sigma2, d, expected)
    (1.0, 0.5, 1.0, 1.0, 3, V.GLOBAL_DEFOCUSING),
    (0.0, 1.0, 0.5, 0.5, 1, V.GLOBAL_DEFOCUSING),
    (1.0, 0.0, 3.0, 3.0, 1, V.GLOBAL_DEFOCUSING),
    (1.0, 1.0, 1.9, 1.9, 3, V.GLOBAL_DEFOCUSING),
    (1.0, 1.0, 2.0, 1.0, 3, V.INVALID),
    (-1.0, 1.0, 1.0, 2.0, 3, V.INVALID),
    (-1.0, 1.0, 0.5, 3.0, 3, V.INVALID),
    (-1.0, 1.0, 1.0, 1.5, 3, V.GLOBAL_DAMPING_DOMINATES),
    (-1.0, 1.0, 2.0 / 3.0, 1.0, 3, V.GLOBAL_DAMPING_DOMINATES),
    (-1.0, 0.0, 0.5, 0.5, 3, V.GLOBAL_MASS_SUBCRITICAL),
    (-1.0, 1.0, 0.5, 1.5, 3, V.GLOBAL_MASS_SUBCRITICAL),
    (-1.0, 1.0, 1.5, 0.5, 1, V.GLOBAL_MASS_SUBCRITICAL),
    (-1.0, 1.0, 1.0, 1.0, 1, V.GLOBAL_MASS_SUBCRITICAL),
    (-1.0, 1.0, 2.0, 2.0, 1, V.GLOBAL_MASS_CRITICAL_EQUAL),
    (-1.0, 0.01, 1.0, 1.0, 2, V.GLOBAL_MASS_CRITICAL_EQUAL),
    (-1.0, 1.0, 2.0 / 3.0, 2.0 / 3.0, 3, V.GLOBAL_MASS_CRITICAL_EQUAL),
    (-1.0, 1.0, 1.0, 1.0, 3, V.GLOBAL_STRONG_DAMPING_EQUAL),
    (-1.0, 0.5, 1.0, 1.0, 3, V.NOT_COVERED),
    (-1.0, 0.999, 1.0, 1.0, 3, V.NOT_COVERED),
    (-2.0, 1.0, 0.8, 0.8, 3, V.NOT_COVERED),
    (-2.0, 1.6, 0.8, 0.8, 3, V.GLOBAL_STRONG_DAMPING_EQUAL),
    (-1.0, 2.0, 4.0, 4.0, 1, V.GLOBAL_STRONG_DAMPING_EQUAL),
    (-1.0, 1.9, 4.0, 4.0, 1, V.NOT_COVERED),
    (-1.0, 1.0, 2.0, 1.0, 1, V.NOT_COVERED),
    (-1.0, 0.0, 2.0, 3.0, 1, V.NOT_COVERED),
)


def check_classifier() -> CheckResult:
    wrong = []
    for lam, a, s1, s2, d, expected in TRUTH_TABLE:
        got = classify(PhysicsParams(lam, a, s1, s2, (0.0,) * d), d).verdict
        if got is not expected:
            wrong.append({"point": [lam, a, s1, s2, d], "expected": expected.value, "got": got.value})
    return CheckResult(
        "classifier_truth_table",
        not wrong,
        f"{len(TRUTH_TABLE) - len(wrong)}/{len(TRUTH_TABLE)} verdicts match",
        1.0,
        details={"mismatches": wrong},
    )


# -- 10. inequality suites ------------------------------------------------------------

POLAR_TOL = 1e-10


def random_field(rng: np.random.Generator, grid) -> WaveField:
    """Sum of a few randomly placed, modulated Gaussian bumps."""
    vals = np.zeros(grid.shape, dtype=complex)
    L = min(grid.half_extents)
    for _ in range(rng.integers(1, 4)):
        c = rng.uniform(-0.3 * L, 0.3 * L, grid.dim)
        k = rng.uniform(-2, 2, grid.dim)
        w = rng.uniform(0.05 * L, 0.2 * L)
        amp = rng.normal() + 1j * rng.normal()
        r2 = sum((x - cj) ** 2 for x, cj in zip(grid.coords, c))
        phase = sum(kj * x for kj, x in zip(k, grid.coords))
        vals += amp * np.exp(-r2 / (2 * w * w) + 1j * phase)
    return WaveField(grid, vals)


def check_inequalities(seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    grids = [make_grid(1, 10.0, 256), make_grid(2, 8.0, 64), make_grid(3, 6.0, 24)]
    polar_worst = 0.0
    loc_fail, loc_min_slack = 0, math.inf
    radii = np.logspace(-1.5, 1.5, 20)
    for i in range(100):
        g = grids[i % 3]
        f = random_field(rng, g)
        polar_worst = max(polar_worst, polar_identity_residual(f))
        p = float(rng.uniform(2.0, 8.0))
        for R in radii:
            lhs, rhs = localization_bound(f, p, float(R))
            loc_min_slack = min(loc_min_slack, rhs / lhs)
            if lhs > rhs * (1 + 1e-12):
                loc_fail += 1
    ok = polar_worst < POLAR_TOL and loc_fail == 0
    return CheckResult(
        "inequality_suites",
        ok,
        f"polar residual {polar_worst:.1e} < {POLAR_TOL:g}; localization 2000 cases, "
        f"{loc_fail} failures, min rhs/lhs {loc_min_slack:.3f}",
        60.0,
        details={"polar_residual": polar_worst, "localization_failures": loc_fail,
                 "localization_min_ratio": loc_min_slack},
    )


CHECKS: dict[str, Callable[[], CheckResult]] = {
    "substep_oracle": check_substep_oracle,
    "dissipation_balance": check_dissipation_balance,
    "strang_order": check_strang_order,
    "energy_monotonicity": check_energy,
    "strong_damping_threshold": check_threshold,
    "confined_decay": check_confined_decay,
    "torus_bound": check_torus_bound,
    "scattering": check_scattering,
    "classifier_truth_table": check_classifier,
    "inequality_suites": check_inequalities,
}


def run_check(name: str) -> CheckResult:
    return _timed(CHECKS[name])


def run_all(names=None, report: Callable[[CheckResult], None] | None = None) -> list[CheckResult]:
    out = []
    for name in names or CHECKS:
        res = run_check(name)
        if report is not None:
            report(res)
        out.append(res)
    return out
