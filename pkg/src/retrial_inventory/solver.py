"""Truncated steady state via level-dependent rate matrices.

For a truncation level ``R*`` the rate matrices satisfy

    A0(l) + R_l A1(l+1) + R_l R_{l+1} A2(l+2) = 0,   l = 0 .. R*-1,

solved backwards from a tail closure at ``R*``. The level vectors then
follow ``p_{l+1} = p_l R_l`` from a boundary vector ``p_0`` with
``p_0 (A1(0) + R_0 A2(1)) = 0``.

Two closures are available. ``"reflect"`` (default) keeps the truncated
chain conservative: transitions that would leave level ``R*`` upward stay
at ``R*`` in the target phase, so the top diagonal block is
``A1(R*) + A0(R*)``. Every inner matrix then has row sums ``-A2(l) 1``,
and its diagonal is rebuilt from the off-diagonal entries to keep that
exact. ``"zero"`` sets ``R_{R*} = 0``, which leaks the upward
probability flux out of the truncated chain.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .generator import GeneratorBlocks
from .model import ModelSpec
from .stability import Verdict, traffic_intensity, verdict_for

log = logging.getLogger(__name__)

DEFAULT_TRUNCATION = 75
CLOSURES = ("reflect", "zero")
NEGATIVE_TOL = 1e-9
NULLSPACE_TOL = 1e-9
INNER_ROW_TOL = 1e-9
LEAK_SEPARATION = 0.5


class SolverError(RuntimeError):
    pass


class UnstableModelError(SolverError):
    """The model is not positive recurrent; no steady state exists."""


class DegenerateSolverError(SolverError):
    pass


class BoundaryDegenerateError(SolverError):
    pass


@dataclass(eq=False)
class SteadyState:
    p_levels: np.ndarray  # (R*+1, M)
    truncation_level: int
    tail_mass_bound: float
    closure: str = "reflect"
    R_matrices: list[np.ndarray] | None = field(default=None, repr=False)
    spec: ModelSpec | None = field(default=None, repr=False)

    @property
    def level_masses(self) -> np.ndarray:
        return self.p_levels.sum(axis=1)

    def phase_tensor(self) -> np.ndarray:
        """Probabilities reshaped to ``(R, inventory, status, environment)``."""
        if self.spec is None:
            raise ValueError("phase_tensor needs the model spec")
        m, n = self.spec.m, self.spec.policy.n_levels
        return self.p_levels.reshape(self.truncation_level + 1, n, 3, m)


def _check_stable(spec: ModelSpec) -> None:
    rho, _ = traffic_intensity(spec)
    v = verdict_for(rho)
    if v is not Verdict.STABLE:
        raise UnstableModelError(f"traffic intensity rho = {rho:.6g} ({v.value}); no steady state to compute")


def _check_inner(X: np.ndarray, level: int) -> None:
    d = np.diag(X)
    if np.any(d >= 0):
        raise DegenerateSolverError(f"non-negative diagonal in inner matrix at level {level}")
    scale = np.max(np.abs(d))
    off_min = np.min(X - np.diag(d))
    excess = X.sum(axis=1) / np.abs(X).sum(axis=1)
    if off_min < -NEGATIVE_TOL * scale or np.max(excess) > INNER_ROW_TOL:
        raise DegenerateSolverError(f"inner matrix at level {level} is not diagonally dominant")


def _right_divide(A: np.ndarray, X: np.ndarray, level: int) -> np.ndarray:
    """``-A @ inv(X)`` via an LU solve, with negative round-off clamped."""
    try:
        Rl = np.linalg.solve(X.T, -A.T).T
    except np.linalg.LinAlgError as exc:
        raise DegenerateSolverError(f"singular inner matrix at level {level}") from exc
    if not np.all(np.isfinite(Rl)) or Rl.min() < -NEGATIVE_TOL:
        raise DegenerateSolverError(f"rate matrix R_{level} has invalid entries (min {Rl.min():.3g})")
    np.clip(Rl, 0.0, None, out=Rl)
    return Rl


def _fix_diagonal(X: np.ndarray, row_sums: np.ndarray) -> None:
    """Rebuild the diagonal of ``X`` from its off-diagonal entries so that
    ``X 1 = row_sums`` holds exactly (GTH-style, no cancellation).

    Under the reflecting closure every inner matrix satisfies
    ``X_l 1 = -A2(l) 1``; computing the diagonal as a difference of large
    terms instead loses that identity once the rate matrices grow.
    """
    idx = np.diag_indices_from(X)
    X[idx] = 0.0
    X[idx] = row_sums - X.sum(axis=1)


def compute_rate_matrices(
    blocks: GeneratorBlocks,
    R_star: int,
    closure: str = "reflect",
    check_stability: bool = True,
) -> list[np.ndarray]:
    """Rate matrices ``R_0 .. R_{R*-1}`` by backward recursion."""
    if R_star < 1:
        raise ValueError("truncation level must be at least 1")
    if closure not in CLOSURES:
        raise ValueError(f"closure must be one of {CLOSURES}")
    if check_stability:
        _check_stable(blocks.spec)

    conservative = closure == "reflect"
    out: list[np.ndarray] = [None] * R_star  # type: ignore[list-item]
    top = R_star - 1
    X = np.array(blocks.A1(R_star))
    if conservative:
        X += blocks.A0(R_star)
        _fix_diagonal(X, -blocks.A2(R_star).sum(axis=1))
    _check_inner(X, R_star)
    R_next = _right_divide(blocks.A0(top), X, top)
    out[top] = R_next
    for level in range(top - 1, -1, -1):
        X = blocks.A1(level + 1) + R_next @ blocks.A2(level + 2)
        if conservative:
            _fix_diagonal(X, -blocks.A2(level + 1).sum(axis=1))
        _check_inner(X, level + 1)
        R_next = _right_divide(blocks.A0(level), X, level)
        out[level] = R_next
    return out


def solve_boundary(blocks: GeneratorBlocks, R_0: np.ndarray, exact: bool = True) -> np.ndarray:
    """Non-negative left null vector of ``A1(0) + R_0 A2(1)``, unit-sum.

    With ``exact=True`` the diagonal is rebuilt so the rows sum to zero
    and exactly one singular value may fall below ``NULLSPACE_TOL``. With
    ``exact=False`` (zero closure, where the truncated chain leaks mass)
    the system is only nearly singular; the left singular vector of the
    smallest singular value is used if it is separated from the next one.
    """
    B = blocks.A1(0) + R_0 @ blocks.A2(1)
    if exact:
        _fix_diagonal(B, np.zeros(B.shape[0]))
    U, sv, _ = np.linalg.svd(B)
    scale = sv[0]
    null_dim = int(np.sum(sv <= NULLSPACE_TOL * scale))
    if not exact and null_dim == 0 and sv.shape[0] > 1 and sv[-1] < LEAK_SEPARATION * sv[-2]:
        log.debug("boundary system leaks: smallest singular value %.3g", sv[-1] / scale)
        null_dim = 1
    if null_dim != 1:
        raise BoundaryDegenerateError(f"boundary system has null space of dimension {null_dim}, expected 1")
    p0 = U[:, -1].copy()
    p0 *= np.sign(p0[np.argmax(np.abs(p0))])
    if p0.min() < -NEGATIVE_TOL * np.abs(p0).max():
        raise BoundaryDegenerateError("boundary vector has mixed signs")
    np.clip(p0, 0.0, None, out=p0)
    return p0 / p0.sum()


def _spectral_radius(A: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def assemble_steady_state(
    p_0: np.ndarray,
    R_matrices: list[np.ndarray],
    spec: ModelSpec | None = None,
    closure: str = "reflect",
    keep_rate_matrices: bool = True,
) -> SteadyState:
    R_star = len(R_matrices)
    levels = np.empty((R_star + 1, p_0.shape[0]))
    levels[0] = p_0
    for k, Rl in enumerate(R_matrices):
        levels[k + 1] = levels[k] @ Rl
    levels /= levels.sum()

    # the last rate matrix carries the closure; the one below it is a
    # cleaner estimate of the geometric decay of the tail
    r = _spectral_radius(R_matrices[-2] if R_star >= 2 else R_matrices[-1])
    top_mass = float(levels[-1].sum())
    tail = top_mass * r / (1.0 - r) if r < 1.0 else float("inf")
    return SteadyState(
        p_levels=levels,
        truncation_level=R_star,
        tail_mass_bound=tail,
        closure=closure,
        R_matrices=list(R_matrices) if keep_rate_matrices else None,
        spec=spec,
    )


def solve_steady_state(
    spec: ModelSpec,
    truncation: int = DEFAULT_TRUNCATION,
    closure: str = "reflect",
    keep_rate_matrices: bool = True,
    blocks: GeneratorBlocks | None = None,
) -> SteadyState:
    blocks = blocks or GeneratorBlocks(spec)
    Rs = compute_rate_matrices(blocks, truncation, closure=closure)
    p0 = solve_boundary(blocks, Rs[0], exact=closure == "reflect")
    steady = assemble_steady_state(p0, Rs, spec=spec, closure=closure, keep_rate_matrices=keep_rate_matrices)
    log.debug("solved R*=%d (%s closure), tail bound %.3g", truncation, closure, steady.tail_mass_bound)
    return steady


def truncated_generator(blocks: GeneratorBlocks, R_star: int, closure: str = "reflect") -> np.ndarray:
    """Dense generator of the chain truncated at ``R*`` (small models only)."""
    M = blocks.dim
    G = np.zeros(((R_star + 1) * M,) * 2)
    for R in range(R_star + 1):
        sl = slice(R * M, (R + 1) * M)
        G[sl, sl] = blocks.A1(R)
        if R < R_star:
            G[sl, slice((R + 1) * M, (R + 2) * M)] = blocks.A0(R)
        elif closure == "reflect":
            G[sl, sl] += blocks.A0(R)
        if R >= 1:
            G[sl, slice((R - 1) * M, R * M)] = blocks.A2(R)
    return G


def balance_residuals(blocks: GeneratorBlocks, steady: SteadyState) -> np.ndarray:
    """Max-abs global balance residual per level of the truncated chain."""
    p = steady.p_levels
    R_star = steady.truncation_level
    out = np.empty(R_star + 1)
    for R in range(R_star + 1):
        r = p[R] @ blocks.A1(R)
        if R == R_star and steady.closure == "reflect":
            r = r + p[R] @ blocks.A0(R)
        if R >= 1:
            r = r + p[R - 1] @ blocks.A0(R - 1)
        if R < R_star:
            r = r + p[R + 1] @ blocks.A2(R + 1)
        out[R] = np.max(np.abs(r))
    return out
