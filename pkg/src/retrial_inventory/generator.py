"""Level blocks of the orbit-size-indexed generator.

The generator is block tridiagonal in the orbit size ``R``: ``A2(R)``
lowers the orbit by one (a successful retrial), ``A1(R)`` keeps it and
``A0(R)`` raises it. Each level block is itself made of ``3m x 3m``
inner blocks, one per inventory level.
"""

from __future__ import annotations

import csv
import threading
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .model import ModelSpec, phase_labels


def diag(vec) -> np.ndarray:
    return np.diag(np.asarray(vec, dtype=float))


def _compose(rows) -> np.ndarray:
    return np.block(rows)


@dataclass(frozen=True, eq=False)
class InnerBlocks:
    Theta_R: np.ndarray
    Gamma_R: np.ndarray
    Lambda_blk: np.ndarray
    M_blk: np.ndarray
    d_iota_R: np.ndarray
    d_beta: np.ndarray
    d_gamma: np.ndarray

    @property
    def Q_iota(self) -> np.ndarray:
        m = self.d_beta.shape[0]
        return self.Gamma_R[:m, :m]

    @property
    def Q_beta(self) -> np.ndarray:
        m = self.d_beta.shape[0]
        return self.Gamma_R[m : 2 * m, m : 2 * m]

    @property
    def Q_gamma(self) -> np.ndarray:
        m = self.d_beta.shape[0]
        return self.Gamma_R[2 * m :, 2 * m :]


def build_inner_blocks(spec: ModelSpec, R: int) -> InnerBlocks:
    env = spec.env
    m = env.m
    Z = np.zeros((m, m))
    lam, mu, xi, alpha, theta, Q, q = env.lam, env.mu, env.xi, env.alpha, env.theta, env.Q, env.q

    Q_iota = Q - diag(lam + xi + R * theta)
    Q_beta = Q - diag(lam + mu + xi)
    Q_gamma = Q - diag(lam + alpha)

    theta_R = _compose([[Z, diag(R * theta), Z], [Z, Z, Z], [Z, Z, Z]])
    gamma_R = _compose(
        [
            [Q_iota, diag(lam), diag(xi)],
            [Z, Q_beta, Z],
            [diag(alpha), Z, Q_gamma],
        ]
    )
    lambda_blk = _compose([[Z, Z, Z], [Z, diag(lam), diag(xi)], [Z, Z, diag(lam)]])
    m_blk = _compose([[Z, Z, Z], [diag(mu), Z, Z], [Z, Z, Z]])

    return InnerBlocks(
        Theta_R=theta_R,
        Gamma_R=gamma_R,
        Lambda_blk=lambda_blk,
        M_blk=m_blk,
        d_iota_R=q + lam + xi + R * theta,
        d_beta=q + lam + mu + xi,
        d_gamma=q + lam + alpha,
    )


def _cyclic_down_shift(n: int) -> np.ndarray:
    """Block pattern of service completions: inventory ``i -> i-1``, with
    the lowest level wrapping to the top (instant restock)."""
    P = np.eye(n, k=-1)
    P[0, n - 1] += 1.0
    return P


class GeneratorBlocks:
    """On-demand provider of ``A0(R)``, ``A1(R)``, ``A2(R)``.

    Only the idle-row retrial terms depend on ``R``, so everything else is
    built once. Recently used levels are memoized; the cache is guarded by
    a lock so one instance can be shared between threads.
    """

    def __init__(self, spec: ModelSpec, cache_size: int = 8):
        self.spec = spec
        self.m = spec.m
        self.n_inv = spec.policy.n_levels
        self.dim = spec.phase_count
        base = build_inner_blocks(spec, 0)
        eye_n = np.eye(self.n_inv)
        shift = _cyclic_down_shift(self.n_inv)

        self._A0 = np.kron(eye_n, base.Lambda_blk)
        self._A0.setflags(write=False)
        self._A1_base = np.kron(eye_n, base.Gamma_R) + np.kron(shift, base.M_blk)
        self._A2_unit = np.kron(eye_n, build_inner_blocks(spec, 1).Theta_R)
        # per-phase retrial rate (theta_z on idle phases, 0 elsewhere)
        self.retrial_rate = self._A2_unit.sum(axis=1)
        self.retrial_rate.setflags(write=False)

        self._lock = threading.Lock()
        self._cached_A1 = lru_cache(maxsize=cache_size)(self._make_A1)

    def _make_A1(self, R: int) -> np.ndarray:
        out = self._A1_base.copy()
        idx = np.diag_indices(self.dim)
        out[idx] -= R * self.retrial_rate
        out.setflags(write=False)
        return out

    def A0(self, R: int) -> np.ndarray:
        _check_level(R)
        return self._A0

    def A1(self, R: int) -> np.ndarray:
        _check_level(R)
        with self._lock:
            return self._cached_A1(int(R))

    def A2(self, R: int) -> np.ndarray:
        _check_level(R)
        if R == 0:
            raise ValueError("A2 is defined for R >= 1 only")
        out = R * self._A2_unit
        out.setflags(write=False)
        return out

    def exit_rates(self, R: int) -> np.ndarray:
        return -np.diag(self.A1(R))

    def labels(self) -> list[str]:
        return phase_labels(self.spec.policy, self.m)

    def dump_csv(self, which: str, R: int, path) -> Path:
        """Write block ``which`` in {"A0", "A1", "A2"} at level ``R`` as CSV."""
        mat = getattr(self, which)(R)
        return write_block_csv(mat, self.labels(), path)


def _check_level(R: int) -> None:
    if R < 0:
        raise ValueError(f"level must be non-negative, got {R}")


def write_block_csv(mat: np.ndarray, labels: list[str], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phase", *labels])
        for lab, row in zip(labels, mat):
            w.writerow([lab, *(repr(float(x)) for x in row)])
    return path


def read_block_csv(path) -> tuple[list[str], np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    labels = rows[0][1:]
    mat = np.array([[float(x) for x in r[1:]] for r in rows[1:]])
    return labels, mat
