"""Embedded jump chain and its limit as the orbit grows without bound."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .generator import GeneratorBlocks, _cyclic_down_shift, diag
from .model import ModelSpec

STOCHASTIC_TOL = 1e-10


class DegenerateStateError(ValueError):
    pass


class LimitStructureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class JumpBlocks:
    R: int
    tA2: np.ndarray | None
    tA1: np.ndarray
    tA0: np.ndarray

    @property
    def total(self) -> np.ndarray:
        out = self.tA1 + self.tA0
        return out if self.tA2 is None else out + self.tA2


def embed_jump_blocks(blocks: GeneratorBlocks, R: int) -> JumpBlocks:
    """Divide each generator row by its exit rate and drop the diagonal."""
    A1 = np.array(blocks.A1(R))
    d = -np.diag(A1).copy()
    if np.any(d <= 0):
        bad = int(np.flatnonzero(d <= 0)[0])
        raise DegenerateStateError(f"phase {blocks.labels()[bad]} has zero exit rate at level {R}")
    np.fill_diagonal(A1, 0.0)
    inv_d = (1.0 / d)[:, None]
    tA2 = blocks.A2(R) * inv_d if R >= 1 else None
    return JumpBlocks(R=R, tA2=tA2, tA1=A1 * inv_d, tA0=blocks.A0(R) * inv_d)


@dataclass(frozen=True, eq=False)
class JumpChainLimits:
    """Closed-form limits of the jump blocks as ``R -> infinity``.

    ``tS_star`` and ``tM`` are the ``3m x 3m`` inner blocks; the ``tA*``
    matrices are full-level (one inner block per inventory level).
    """

    spec: ModelSpec
    tM: np.ndarray
    tS_star: np.ndarray
    tLambda: np.ndarray
    tA_star: np.ndarray
    tA0_star: np.ndarray
    tA2_star: np.ndarray

    @property
    def tA1_star(self) -> np.ndarray:
        return self.tA_star - self.tA0_star - self.tA2_star


def compute_limits(spec: ModelSpec) -> JumpChainLimits:
    env = spec.env
    if np.any(env.theta <= 0):
        zs = ", ".join(str(z + 1) for z in np.flatnonzero(env.theta <= 0))
        raise LimitStructureError(
            f"retrial rate is zero in environment state(s) {zs}; the limiting jump chain "
            "is only available when every theta_z > 0"
        )
    m = env.m
    n = spec.policy.n_levels
    lam, mu, xi, alpha, Q, q = env.lam, env.mu, env.xi, env.alpha, env.Q, env.q
    d_beta = q + lam + mu + xi
    d_gamma = q + lam + alpha
    Z = np.zeros((m, m))
    I_m = np.eye(m)
    env_moves = diag(lam + q) + Q  # arrival (same z, level up) plus environment moves

    tS_star = np.block(
        [
            [Z, I_m, Z],
            [Z, env_moves / d_beta[:, None], diag(xi / d_beta)],
            [diag(alpha / d_gamma), Z, env_moves / d_gamma[:, None]],
        ]
    )
    tM = np.block([[Z, Z, Z], [diag(mu / d_beta), Z, Z], [Z, Z, Z]])
    tLambda = np.block(
        [[Z, Z, Z], [Z, diag(lam / d_beta), diag(xi / d_beta)], [Z, Z, diag(lam / d_gamma)]]
    )
    tTheta = np.block([[Z, I_m, Z], [Z, Z, Z], [Z, Z, Z]])

    eye_n = np.eye(n)
    tA_star = np.kron(eye_n, tS_star) + np.kron(_cyclic_down_shift(n), tM)
    limits = JumpChainLimits(
        spec=spec,
        tM=tM,
        tS_star=tS_star,
        tLambda=tLambda,
        tA_star=tA_star,
        tA0_star=np.kron(eye_n, tLambda),
        tA2_star=np.kron(eye_n, tTheta),
    )
    rows = tA_star.sum(axis=1)
    if np.max(np.abs(rows - 1.0)) > STOCHASTIC_TOL:
        raise LimitStructureError(f"limit matrix is not stochastic (max row error {np.max(np.abs(rows - 1)):.3g})")
    return limits
