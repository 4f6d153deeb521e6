"""Closed-form regime arithmetic: global-existence case table, Strichartz
exponents, the energy kappa window, Nash/interpolation exponents and decay rates.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Optional

from .params import PhysicsParams, critical_sigma

# relative tolerance for the equalities sigma1 == sigma2 and sigma == 2/d
EQ_RTOL = 1e-12

NOT_COVERED_CAVEAT = (
    "parameters fall outside every global-existence case; this is not a blow-up "
    "prediction, finite-time blow-up in this range is an open problem"
)


class Verdict(str, enum.Enum):
    GLOBAL_DEFOCUSING = "GlobalDefocusing"
    GLOBAL_MASS_SUBCRITICAL = "GlobalMassSubcritical"
    GLOBAL_DAMPING_DOMINATES = "GlobalDampingDominates"
    GLOBAL_MASS_CRITICAL_EQUAL = "GlobalMassCriticalEqual"
    GLOBAL_STRONG_DAMPING_EQUAL = "GlobalStrongDampingEqual"
    NOT_COVERED = "NotCoveredByTheorem"
    INVALID = "InvalidParameters"

    @property
    def is_global(self) -> bool:
        return self.value.startswith("Global")


@dataclass(frozen=True)
class RegimeVerdict:
    verdict: Verdict
    triggering_case: str
    reason: str
    expected_decay_exponent_confined: Optional[float]
    expected_decay_exponent_torus: Optional[float]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = self.verdict.value
        return d


def _close(x: float, y: float) -> bool:
    return math.isclose(x, y, rel_tol=EQ_RTOL, abs_tol=0.0)


def damping_threshold(sigma: float, lam: float) -> float:
    """min(sigma, sqrt(sigma)) * |lambda|."""
    return min(sigma, math.sqrt(sigma)) * abs(lam)


def classify(params: PhysicsParams, d: Optional[int] = None) -> RegimeVerdict:
    """Evaluate the global-existence case table for the given coefficients.

    a = 0 is accepted as the Hamiltonian reference: the defocusing case and the
    focusing mass-subcritical case still hold there, while the cases relying on
    damping (2b, 2c, 2d) require a > 0.
    """
    d = params.dim if d is None else d
    s1, s2, lam, a = params.sigma1, params.sigma2, params.lam, params.a

    def out(v: Verdict, case: str, reason: str) -> RegimeVerdict:
        ok = v.is_global
        return RegimeVerdict(
            verdict=v,
            triggering_case=case,
            reason=reason,
            expected_decay_exponent_confined=2.0 / ((d + 2) * s2) if ok else None,
            expected_decay_exponent_torus=1.0 / s2 if v is not Verdict.INVALID else None,
        )

    if d not in (1, 2, 3):
        return out(Verdict.INVALID, "-", f"dimension {d} outside {{1, 2, 3}}")
    if not (s1 > 0 and s2 > 0) or a < 0:
        return out(Verdict.INVALID, "-", "need sigma1, sigma2 > 0 and a >= 0")
    crit = critical_sigma(d)
    if not (s1 < crit and s2 < crit):
        return out(
            Verdict.INVALID,
            "-",
            f"energy-subcriticality requires sigma < 2/(d-2) = {crit:g}; "
            "the endpoint (energy-critical damping) is excluded",
        )

    mass_crit = 2.0 / d
    if lam >= 0:
        return out(Verdict.GLOBAL_DEFOCUSING, "1", "lambda >= 0 (defocusing)")
    if s1 < mass_crit and not _close(s1, mass_crit):
        return out(Verdict.GLOBAL_MASS_SUBCRITICAL, "2a", "lambda < 0 and sigma1 < 2/d")
    equal = _close(s1, s2)
    if a > 0:
        if not equal and s1 < s2:
            return out(
                Verdict.GLOBAL_DAMPING_DOMINATES, "2b", "lambda < 0 and 2/d <= sigma1 < sigma2"
            )
        if equal and _close(s1, mass_crit):
            return out(Verdict.GLOBAL_MASS_CRITICAL_EQUAL, "2c", "lambda < 0 and sigma1 = sigma2 = 2/d")
        if equal:
            thr = damping_threshold(s1, lam)
            if a >= thr * (1.0 - EQ_RTOL):
                return out(
                    Verdict.GLOBAL_STRONG_DAMPING_EQUAL,
                    "2d",
                    f"lambda < 0, sigma1 = sigma2 > 2/d and a >= min(sigma, sqrt(sigma))|lambda| = {thr:g}",
                )
            return out(
                Verdict.NOT_COVERED,
                "-",
                f"a = {a:g} below min(sigma, sqrt(sigma))|lambda| = {thr:g}; " + NOT_COVERED_CAVEAT,
            )
    return out(Verdict.NOT_COVERED, "-", NOT_COVERED_CAVEAT)


@dataclass(frozen=True)
class StrichartzExponents:
    r: float
    q: float
    theta: float
    admissible: bool


def is_admissible(q: float, r: float, d: int, tol: float = 1e-12) -> bool:
    if d == 1:
        in_range = 2 <= r <= math.inf
    elif d == 2:
        in_range = 2 <= r < math.inf
    else:
        in_range = 2 <= r < 2.0 * d / (d - 2)
    return in_range and abs(2.0 / q - d * (0.5 - 1.0 / r)) <= tol


def strichartz_exponents(sigma: float, d: int) -> StrichartzExponents:
    if not 0 < sigma < critical_sigma(d):
        raise ValueError(f"sigma = {sigma} outside (0, 2/(d-2)_+) for d = {d}")
    r = 2 * sigma + 2
    q = (4 * sigma + 4) / (d * sigma)
    theta = 2 * sigma * (2 * sigma + 2) / (2 - (d - 2) * sigma)
    return StrichartzExponents(r=r, q=q, theta=theta, admissible=is_admissible(q, r, d))


def kappa_window(params: PhysicsParams) -> tuple[float, float]:
    """Open interval (0, a/(sigma2^2 + sigma2)); empty (0, 0) when a = 0."""
    return 0.0, params.a / (params.sigma2**2 + params.sigma2)


def default_kappa(params: PhysicsParams) -> float:
    lo, hi = kappa_window(params)
    return 0.5 * (lo + hi)


def nash_theta(d: int, p: float) -> float:
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    return 1.0 / (1.0 + d * (0.5 - 1.0 / p))


def decay_exponents(params: PhysicsParams, d: Optional[int] = None) -> tuple[float, float, float]:
    """(confined, torus, ode_naive) exponents of the mass decay t^(-exponent)."""
    d = params.dim if d is None else d
    s2 = params.sigma2
    return 2.0 / ((d + 2) * s2), 1.0 / s2, 1.0 / s2


def interpolation_exponents(params: PhysicsParams) -> tuple[float, float]:
    """(theta, gamma) used to absorb the focusing term when sigma2 > sigma1."""
    s1, s2 = params.sigma1, params.sigma2
    if not s2 > s1 > 0:
        raise ValueError(f"need sigma2 > sigma1 > 0, got sigma1={s1}, sigma2={s2}")
    theta = s1 * (2 * s2 + 1) / (s2 * (s1 + s2 + 1))
    return theta, s1 / s2
