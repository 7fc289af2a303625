"""Model parameterization, state space and phase indexing.

A phase is a triple ``(I, X, Z)`` of inventory level, server status and
environment state. Phases are laid out inventory-major, then status
(idle, busy, failed), then environment, so that every per-inventory block
of a generator level block is a contiguous ``3m x 3m`` square.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
from scipy.sparse.csgraph import connected_components

ROW_SUM_TOL = 1e-12


class Status(IntEnum):
    IDLE = 0
    BUSY = 1
    FAILED = 2

    @property
    def label(self) -> str:
        return self.name.lower()


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class EnvironmentParams:
    """Per-environment rate vectors and the environment generator ``Q``.

    Values are stored as read-only float arrays. Nothing is checked here;
    use :func:`validate_spec` to get a list of problems.
    """

    lam: np.ndarray
    mu: np.ndarray
    xi: np.ndarray
    alpha: np.ndarray
    theta: np.ndarray
    Q: np.ndarray
    q: np.ndarray = field(init=False)

    def __post_init__(self):
        for name in ("lam", "mu", "xi", "alpha", "theta"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name)).ravel())
        Q = _frozen_array(self.Q)
        if Q.ndim != 2:
            Q = Q.reshape(1, -1) if Q.size else Q.reshape(0, 0)
            Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        if Q.shape[0] == Q.shape[1]:
            q = Q.sum(axis=1) - np.diag(Q)
        else:
            q = np.full(Q.shape[0], np.nan)
        object.__setattr__(self, "q", _frozen_array(q))

    @property
    def m(self) -> int:
        return int(self.lam.shape[0])

    def __eq__(self, other):
        if not isinstance(other, EnvironmentParams):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("lam", "mu", "xi", "alpha", "theta", "Q")
        )

    def scaled(self, factor: float) -> "EnvironmentParams":
        """All rates and ``Q`` multiplied by ``factor`` (a time rescaling)."""
        return EnvironmentParams(
            lam=self.lam * factor,
            mu=self.mu * factor,
            xi=self.xi * factor,
            alpha=self.alpha * factor,
            theta=self.theta * factor,
            Q=self.Q * factor,
        )


@dataclass(frozen=True)
class InventoryPolicy:
    s: int
    S: int

    @property
    def levels(self) -> range:
        """Reachable inventory levels ``s+1 .. S``."""
        return range(self.s + 1, self.S + 1)

    @property
    def n_levels(self) -> int:
        return self.S - self.s


@dataclass(frozen=True)
class ModelSpec:
    env: EnvironmentParams
    policy: InventoryPolicy

    @property
    def m(self) -> int:
        return self.env.m

    @property
    def phase_count(self) -> int:
        return self.policy.n_levels * 3 * self.m

    def with_env(self, **rates) -> "ModelSpec":
        """Copy with some rate vectors (or ``Q``) replaced."""
        current = {k: getattr(self.env, k) for k in ("lam", "mu", "xi", "alpha", "theta", "Q")}
        current.update(rates)
        return ModelSpec(EnvironmentParams(**current), self.policy)


@dataclass(frozen=True)
class SystemState:
    R: int
    I: int
    X: Status
    Z: int


@dataclass
class ValidationResult:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def is_irreducible(Q: np.ndarray) -> bool:
    """Strong connectivity of the off-diagonal nonzero pattern of ``Q``."""
    m = Q.shape[0]
    if m <= 1:
        return True
    adj = (Q > 0) & ~np.eye(m, dtype=bool)
    n_comp, _ = connected_components(adj.astype(int), directed=True, connection="strong")
    return n_comp == 1


def validate_spec(spec: ModelSpec) -> ValidationResult:
    """Collect every problem with ``spec``; never raises."""
    out = ValidationResult()
    env, pol = spec.env, spec.policy
    v = out.violations

    if not (isinstance(pol.s, (int, np.integer)) and isinstance(pol.S, (int, np.integer))):
        v.append("s and S must be integers")
    if pol.s < 0:
        v.append("s must be non-negative")
    if pol.S <= 0:
        v.append("S must be positive")
    if pol.s >= pol.S:
        v.append("s must be strictly less than S")

    m = env.m
    if m < 1:
        v.append("m must be at least 1 (lambda is empty)")
        return out
    for name, vec in (("mu", env.mu), ("xi", env.xi), ("alpha", env.alpha), ("theta", env.theta)):
        if vec.shape[0] != m:
            v.append(f"{name} length mismatch: expected {m}, got {vec.shape[0]}")
    if env.Q.shape != (m, m):
        v.append(f"Q shape mismatch: expected {m}x{m}, got {'x'.join(map(str, env.Q.shape))}")
    if v and any("mismatch" in msg for msg in v):
        return out

    for name, vec, strict in (
        ("lambda", env.lam, True),
        ("mu", env.mu, True),
        ("xi", env.xi, False),
        ("alpha", env.alpha, True),
        ("theta", env.theta, False),
    ):
        if not np.all(np.isfinite(vec)):
            v.append(f"{name} has non-finite entries")
            continue
        bad = np.flatnonzero(vec <= 0) if strict else np.flatnonzero(vec < 0)
        for z in bad:
            kind = "positive" if strict else "non-negative"
            v.append(f"negative rate: {name}[{z + 1}] = {vec[z]} must be {kind}")
    if np.all(env.theta == 0):
        v.append("theta is identically zero: the orbit can never empty")

    Q = env.Q
    if not np.all(np.isfinite(Q)):
        v.append("Q has non-finite entries")
        return out
    off = Q[~np.eye(m, dtype=bool)]
    if np.any(off < 0):
        v.append("negative rate: Q has negative off-diagonal entries")
    sums = Q.sum(axis=1)
    for z in np.flatnonzero(np.abs(sums) > ROW_SUM_TOL):
        v.append(f"generator row sum nonzero: row {z + 1} sums to {sums[z]:.6g}")
    if not is_irreducible(Q):
        v.append("Q is reducible")
    return out


def _check_phase(policy: InventoryPolicy, m: int, I: int, X, Z: int) -> Status:
    if not policy.s + 1 <= I <= policy.S:
        raise IndexError(f"inventory level {I} outside [{policy.s + 1}, {policy.S}]")
    if not 1 <= Z <= m:
        raise IndexError(f"environment state {Z} outside [1, {m}]")
    try:
        return Status(X) if not isinstance(X, str) else Status[X.upper()]
    except (KeyError, ValueError):
        raise IndexError(f"unknown server status {X!r}") from None


def index_phase(policy: InventoryPolicy, m: int, I: int, X, Z: int) -> int:
    """Position of phase ``(I, X, Z)`` within a level (0-based)."""
    x = _check_phase(policy, m, I, X, Z)
    return ((I - (policy.s + 1)) * 3 + int(x)) * m + (Z - 1)


def unindex_phase(policy: InventoryPolicy, m: int, k: int) -> tuple[int, Status, int]:
    if not 0 <= k < policy.n_levels * 3 * m:
        raise IndexError(f"phase index {k} outside [0, {policy.n_levels * 3 * m})")
    block, z = divmod(k, m)
    i, x = divmod(block, 3)
    return policy.s + 1 + i, Status(x), z + 1


def phase_labels(policy: InventoryPolicy, m: int) -> list[str]:
    return [
        f"I{I}-{x.label}-z{z}"
        for I in policy.levels
        for x in Status
        for z in range(1, m + 1)
    ]
