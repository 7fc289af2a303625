"""Independent reference computations used only by the tests.

Nothing here goes through the block machinery in the package: the brute
generator is enumerated state by state from the event rules.
"""

from __future__ import annotations

import itertools

import numpy as np

IDLE, BUSY, FAILED = 0, 1, 2


def enumerate_states(spec, R_star):
    pol = spec.policy
    return list(itertools.product(range(R_star + 1), range(pol.s + 1, pol.S + 1), (IDLE, BUSY, FAILED), range(spec.m)))


def state_transitions(spec, state):
    """Yield ``(target, rate)`` for every event out of ``state`` (unbounded orbit)."""
    R, I, x, z = state
    e, pol = spec.env, spec.policy
    for z2 in range(spec.m):
        if z2 != z and e.Q[z, z2] > 0:
            yield (R, I, x, z2), e.Q[z, z2]
    if x == IDLE:
        yield (R, I, BUSY, z), e.lam[z]
        if e.xi[z] > 0:
            yield (R, I, FAILED, z), e.xi[z]
        if R > 0 and e.theta[z] > 0:
            yield (R - 1, I, BUSY, z), R * e.theta[z]
    elif x == BUSY:
        yield (R + 1, I, BUSY, z), e.lam[z]
        next_I = I - 1 if I - 1 > pol.s else pol.S
        yield (R, next_I, IDLE, z), e.mu[z]
        if e.xi[z] > 0:
            yield (R + 1, I, FAILED, z), e.xi[z]
    else:
        yield (R + 1, I, FAILED, z), e.lam[z]
        yield (R, I, IDLE, z), e.alpha[z]


def brute_generator(spec, R_star, closure="reflect"):
    """Dense generator of the orbit-truncated chain built state by state.

    With ``closure="reflect"`` a jump to level ``R*+1`` lands at level ``R*``
    in the same target phase; with ``"zero"`` it is dropped (rate leaves the
    diagonal only, giving a defective generator).
    """
    states = enumerate_states(spec, R_star)
    pos = {s: k for k, s in enumerate(states)}
    G = np.zeros((len(states), len(states)))
    for k, st in enumerate(states):
        for (R2, I2, x2, z2), rate in state_transitions(spec, st):
            G[k, k] -= rate
            if R2 > R_star:
                if closure == "zero":
                    continue
                R2 = R_star
            G[k, pos[(R2, I2, x2, z2)]] += rate
    return G, states


def direct_stationary(G):
    n = G.shape[0]
    A = G.T.copy()
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    return np.linalg.solve(A, b)


def power_stationary(Q, iters=200_000, tol=1e-15):
    """Stationary vector of ``Q`` via power iteration on the uniformized chain."""
    Q = np.asarray(Q, dtype=float)
    m = Q.shape[0]
    rate = 1.05 * np.max(-np.diag(Q))
    P = np.eye(m) + Q / rate
    p = np.full(m, 1.0 / m)
    for _ in range(iters):
        nxt = p @ P
        if np.max(np.abs(nxt - p)) < tol:
            return nxt / nxt.sum()
        p = nxt
    return p / p.sum()


def fixed_point_R(A0, A1, A2, tol=1e-14, max_iter=200_000):
    """Minimal solution of ``A0 + R A1 + R^2 A2 = 0`` by the natural iteration
    ``R <- -(A0 + R^2 A2) A1^{-1}`` started from zero."""
    A1_inv = np.linalg.inv(A1)
    R = np.zeros_like(A0)
    for _ in range(max_iter):
        nxt = -(A0 + R @ R @ A2) @ A1_inv
        if np.max(np.abs(nxt - R)) < tol:
            return nxt
        R = nxt
    raise RuntimeError("fixed point iteration did not converge")
