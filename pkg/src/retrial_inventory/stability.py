"""Positive-recurrence checks.

Three quantities are reported side by side:

* the average drift of the limiting jump chain, computed numerically from
  its stationary vector;
* a closed-form drift ``sum_z alpha_z (lambda_z - mu_z) + lambda_z xi_z``;
* the traffic intensity ``rho``, whose comparison with 1 is the verdict.

The numerical drift and the closed-form drift are not algebraically tied to
each other for ``m > 1``; :attr:`StabilityReport.drift_signs_agree` exposes
any disagreement instead of hiding it.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .jump_chain import JumpChainLimits, LimitStructureError, compute_limits
from .model import ModelSpec

log = logging.getLogger(__name__)

BOUNDARY_BAND = 1e-9
PI_RESIDUAL_TOL = 1e-9


class Verdict(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    BOUNDARY = "boundary"


class NoUniqueSolutionError(ValueError):
    pass


@dataclass(eq=False)
class StabilityReport:
    rho: float
    rho_per_state: np.ndarray
    D_closed: float
    verdict: Verdict
    pi_star: np.ndarray | None = None
    D_star: float | None = None
    D_star_scalar_sum: float | None = None

    @property
    def drift_signs_agree(self) -> bool | None:
        if self.D_star is None:
            return None
        return bool(np.sign(self.D_star) == np.sign(self.D_closed))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["verdict"] = self.verdict.value
        out["rho_per_state"] = [float(x) for x in self.rho_per_state]
        out["pi_star"] = None if self.pi_star is None else [float(x) for x in self.pi_star]
        out["drift_signs_agree"] = self.drift_signs_agree
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "StabilityReport":
        return cls(
            rho=data["rho"],
            rho_per_state=np.asarray(data["rho_per_state"], dtype=float),
            D_closed=data["D_closed"],
            verdict=Verdict(data["verdict"]),
            pi_star=None if data.get("pi_star") is None else np.asarray(data["pi_star"], dtype=float),
            D_star=data.get("D_star"),
            D_star_scalar_sum=data.get("D_star_scalar_sum"),
        )

    def __eq__(self, other):
        if not isinstance(other, StabilityReport):
            return NotImplemented
        a, b = self.to_dict(), other.to_dict()
        return a == b


def stationary_vector(P: np.ndarray) -> np.ndarray:
    """Stationary row vector of a stochastic matrix.

    One balance equation is replaced by the normalization row and the
    system solved by LU with partial pivoting.
    """
    n = P.shape[0]
    A = (P - np.eye(n)).T
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise NoUniqueSolutionError("stationary system is singular (reducible chain?)") from exc
    resid = np.max(np.abs(pi @ P - pi))
    if not np.isfinite(resid) or resid > PI_RESIDUAL_TOL or np.min(pi) < -PI_RESIDUAL_TOL:
        raise NoUniqueSolutionError(f"stationary solve failed: residual {resid:.3g}, min entry {np.min(pi):.3g}")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def solve_pi_star(limits: JumpChainLimits) -> np.ndarray:
    return stationary_vector(limits.tA_star)


def numerical_drift(limits: JumpChainLimits, pi_star: np.ndarray) -> float:
    step = (limits.tA0_star - limits.tA2_star).sum(axis=1)
    return float(pi_star @ step)


def drift_scalar_sum(spec: ModelSpec) -> float:
    """Per-state ratio average that the repeating-block argument assigns to
    the numerical drift. Equal to :func:`numerical_drift` when ``m == 1``."""
    e = spec.env
    num = e.alpha * (e.lam - e.mu) + e.lam * e.xi
    den = e.alpha * (e.lam + 2 * e.mu + e.q) + e.xi * (3 * e.alpha + e.lam + e.q)
    return float(np.mean(num / den))


def closed_form_drift(spec: ModelSpec) -> float:
    e = spec.env
    return float(np.sum(e.alpha * (e.lam - e.mu) + e.lam * e.xi))


def traffic_intensity(spec: ModelSpec) -> tuple[float, np.ndarray]:
    e = spec.env
    rho = float(np.sum(e.lam * (e.alpha + e.xi)) / np.sum(e.mu * e.alpha))
    rho_z = (e.lam / e.mu) * (1.0 + e.xi / e.alpha)
    return rho, rho_z


def verdict_for(rho: float) -> Verdict:
    if abs(rho - 1.0) < BOUNDARY_BAND:
        return Verdict.BOUNDARY
    return Verdict.STABLE if rho < 1.0 else Verdict.UNSTABLE


def stability_report(spec: ModelSpec) -> StabilityReport:
    rho, rho_z = traffic_intensity(spec)
    D_closed = closed_form_drift(spec)
    report = StabilityReport(
        rho=rho,
        rho_per_state=rho_z,
        D_closed=D_closed,
        verdict=verdict_for(rho),
        D_star_scalar_sum=drift_scalar_sum(spec),
    )
    try:
        limits = compute_limits(spec)
    except LimitStructureError as exc:
        log.info("numerical drift skipped: %s", exc)
        return report
    report.pi_star = solve_pi_star(limits)
    report.D_star = numerical_drift(limits, report.pi_star)
    if not report.drift_signs_agree:
        log.warning(
            "drift sign disagreement: numerical D* = %.6g, closed-form D = %.6g (rho = %.6g)",
            report.D_star,
            D_closed,
            rho,
        )
    return report
