"""Long-run performance measures from a truncated steady state."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .model import ModelSpec, is_irreducible
from .solver import SteadyState

TABLE_COLUMNS = ("Idle", "Busy", "Failure", "L_R", "L", "W_R", "W", "B_inv", "D_S")


class ReducibleEnvironmentError(ValueError):
    pass


def env_stationary(Q: np.ndarray) -> np.ndarray:
    """Stationary distribution ``p`` of generator ``Q`` (``pQ = 0``, ``p1 = 1``)."""
    Q = np.asarray(Q, dtype=float)
    m = Q.shape[0]
    if not is_irreducible(Q):
        raise ReducibleEnvironmentError("environment generator is reducible")
    if m == 1:
        return np.ones(1)
    A = Q.T.copy()
    A[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    p = np.linalg.solve(A, b)
    return np.clip(p, 0.0, None) / np.clip(p, 0.0, None).sum()


@dataclass(eq=False)
class PerformanceReport:
    p_idle: float
    p_busy: float
    p_failed: float
    orbit_marginal: np.ndarray
    inventory_marginal: np.ndarray
    L_R: float
    L: float
    lambda_bar: float
    p_env: np.ndarray
    W_R: float
    W: float
    B_inv: float
    B_inv_uniform: float
    D_S: float
    truncation_level: int
    tail_mass_bound: float

    def table_row(self) -> dict[str, float]:
        vals = (self.p_idle, self.p_busy, self.p_failed, self.L_R, self.L, self.W_R, self.W, self.B_inv, self.D_S)
        return dict(zip(TABLE_COLUMNS, vals))

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = [float(x) for x in v] if isinstance(v, np.ndarray) else v
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PerformanceReport":
        kw = {}
        for f in fields(cls):
            v = data[f.name]
            kw[f.name] = np.asarray(v, dtype=float) if isinstance(v, list) else v
        return cls(**kw)

    def __eq__(self, other):
        if not isinstance(other, PerformanceReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def compute_report(steady: SteadyState, spec: ModelSpec) -> PerformanceReport:
    m, pol = spec.m, spec.policy
    n = pol.n_levels
    x = steady.p_levels.reshape(steady.truncation_level + 1, n, 3, m)

    p_idle, p_busy, p_failed = (float(v) for v in x.sum(axis=(0, 1, 3)))
    orbit = x.sum(axis=(1, 2, 3))
    inventory = x.sum(axis=(0, 2, 3))
    L_R = float(np.arange(orbit.shape[0]) @ orbit)
    L = L_R + p_busy

    p_env = env_stationary(spec.env.Q)
    lambda_bar = float(spec.env.lam @ p_env)
    W_R = L_R / lambda_bar
    W = L / lambda_bar
    levels = np.arange(pol.s + 1, pol.S + 1)
    return PerformanceReport(
        p_idle=p_idle,
        p_busy=p_busy,
        p_failed=p_failed,
        orbit_marginal=orbit,
        inventory_marginal=inventory,
        L_R=L_R,
        L=L,
        lambda_bar=lambda_bar,
        p_env=p_env,
        W_R=W_R,
        W=W,
        B_inv=float(levels @ inventory),
        B_inv_uniform=(pol.S + pol.s + 1) / 2,
        D_S=n * W,
        truncation_level=steady.truncation_level,
        tail_mass_bound=steady.tail_mass_bound,
    )
