"""Direct stochastic simulation of the retrial inventory system.

The simulator works on the raw event rules (it does not touch the
generator blocks), so it serves as an independent check of the analytic
solution. Each state ``(R, I, X, Z)`` holds for an exponential time with
the total event rate; the next event is then chosen with probability
proportional to its rate (competing exponential clocks, sampled exactly).

Random numbers come from numpy's PCG64. Replication ``k`` uses the ``k``-th
child of ``SeedSequence(seed)``, so results depend only on ``(seed, k)``
and not on how replications are scheduled.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from numba import njit
from scipy import stats

from .model import ModelSpec

SCALAR_MEASURES = ("p_idle", "p_busy", "p_failed", "L_R", "L", "B_inv")
IDLE, BUSY, FAILED = 0, 1, 2


class SimulationDivergence(RuntimeError):
    """Orbit exceeded ``orbit_cap``: the system is probably unstable."""


@dataclass(frozen=True)
class SimConfig:
    horizon: float = 2e5
    warmup: float = 1e4
    replications: int = 20
    seed: int = 12345
    orbit_cap: int = 5000

    def __post_init__(self):
        if not 0 <= self.warmup < self.horizon:
            raise ValueError("need 0 <= warmup < horizon")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.orbit_cap < 1:
            raise ValueError("orbit_cap must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


@njit(nogil=True, cache=True)
def _run(rng, lam, mu, xi, alpha, theta, Qoff, q, n_inv, horizon, warmup, orbit_cap, Z0,
         t_status, t_inv, t_orbit):
    R = 0
    i = n_inv - 1  # start full, idle, empty orbit
    x = IDLE
    z = Z0
    t = 0.0
    events = 0
    m = lam.shape[0]
    while True:
        rate = q[z] + lam[z]
        if x == IDLE:
            rate += xi[z] + R * theta[z]
        elif x == BUSY:
            rate += mu[z] + xi[z]
        else:
            rate += alpha[z]
        dt = rng.exponential() / rate
        t_end = t + dt
        lo = t if t > warmup else warmup
        hi = t_end if t_end < horizon else horizon
        if hi > lo:
            w = hi - lo
            t_status[x] += w
            t_inv[i] += w
            t_orbit[R] += w
        if t_end >= horizon:
            return False, events
        t = t_end
        events += 1

        u = rng.random() * rate
        if u < q[z]:
            acc = 0.0
            nz = z
            for k in range(m):
                if k == z:
                    continue
                if Qoff[z, k] > 0.0:
                    acc += Qoff[z, k]
                    nz = k
                    if u < acc:
                        break
            z = nz
            continue
        u -= q[z]
        if u < lam[z]:
            if x == IDLE:
                x = BUSY
            else:
                R += 1
        else:
            u -= lam[z]
            if x == IDLE:
                # zero-rate branches must never fire, even on round-off
                if R > 0 and theta[z] > 0.0 and (u >= xi[z] or xi[z] == 0.0):
                    x = BUSY
                    R -= 1
                elif xi[z] > 0.0:
                    x = FAILED
            elif x == BUSY:
                if u < mu[z] or xi[z] == 0.0:
                    x = IDLE
                    i = i - 1 if i > 0 else n_inv - 1
                else:
                    x = FAILED
                    R += 1
            else:
                x = IDLE
        if R > orbit_cap:
            return True, events


@dataclass
class Estimate:
    mean: float
    halfwidth: float

    def covers(self, value: float) -> bool:
        return abs(self.mean - value) <= self.halfwidth


@dataclass(eq=False)
class SimEstimates:
    scalars: dict[str, Estimate]
    inventory_marginal: Estimate  # arrays in mean / halfwidth
    orbit_marginal: Estimate
    per_replication: list[dict] = field(repr=False)
    config: SimConfig | None = None
    events: int = 0

    def __getitem__(self, key: str) -> Estimate:
        return self.scalars[key]

    def to_dict(self) -> dict:
        return {
            "scalars": {k: asdict(v) for k, v in self.scalars.items()},
            "inventory_marginal": {
                "mean": [float(v) for v in self.inventory_marginal.mean],
                "halfwidth": [float(v) for v in self.inventory_marginal.halfwidth],
            },
            "orbit_marginal": {
                "mean": [float(v) for v in self.orbit_marginal.mean],
                "halfwidth": [float(v) for v in self.orbit_marginal.halfwidth],
            },
            "per_replication": self.per_replication,
            "config": None if self.config is None else asdict(self.config),
            "events": self.events,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimEstimates":
        def arr(d):
            return Estimate(np.asarray(d["mean"], dtype=float), np.asarray(d["halfwidth"], dtype=float))

        return cls(
            scalars={k: Estimate(**v) for k, v in data["scalars"].items()},
            inventory_marginal=arr(data["inventory_marginal"]),
            orbit_marginal=arr(data["orbit_marginal"]),
            per_replication=data["per_replication"],
            config=None if data.get("config") is None else SimConfig(**data["config"]),
            events=data.get("events", 0),
        )

    def __eq__(self, other):
        if not isinstance(other, SimEstimates):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def write_replications_csv(self, path) -> Path:
        path = Path(path)
        cols = ["replication", *SCALAR_MEASURES, "events"]
        with path.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
            w.writeheader()
            for row in self.per_replication:
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        return path


def _replication(spec: ModelSpec, cfg: SimConfig, seed_seq: np.random.SeedSequence):
    env = spec.env
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    Qoff = np.array(env.Q, dtype=float)
    np.fill_diagonal(Qoff, 0.0)
    n = spec.policy.n_levels
    t_status = np.zeros(3)
    t_inv = np.zeros(n)
    t_orbit = np.zeros(cfg.orbit_cap + 2)
    diverged, events = _run(
        rng,
        np.ascontiguousarray(env.lam), np.ascontiguousarray(env.mu), np.ascontiguousarray(env.xi),
        np.ascontiguousarray(env.alpha), np.ascontiguousarray(env.theta), Qoff,
        np.ascontiguousarray(env.q), n, float(cfg.horizon), float(cfg.warmup), int(cfg.orbit_cap), 0,
        t_status, t_inv, t_orbit,
    )
    return diverged, events, t_status, t_inv, t_orbit


def _mean_halfwidth(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = samples.shape[0]
    mean = samples.mean(axis=0)
    if r < 2:
        return mean, np.full_like(mean, np.inf)
    sd = samples.std(axis=0, ddof=1)
    return mean, stats.t.ppf(0.975, r - 1) * sd / np.sqrt(r)


def simulate(spec: ModelSpec, cfg: SimConfig, workers: int = 1) -> SimEstimates:
    """Run ``cfg.replications`` independent replications and summarise them.

    Raises :class:`SimulationDivergence` if any replication's orbit passes
    ``cfg.orbit_cap``.
    """
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.replications)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda ss: _replication(spec, cfg, ss), children))
    else:
        results = [_replication(spec, cfg, ss) for ss in children]

    window = cfg.horizon - cfg.warmup
    levels = np.arange(spec.policy.s + 1, spec.policy.S + 1)
    rows, inv_fracs, orbit_fracs = [], [], []
    total_events = 0
    for k, (diverged, events, t_status, t_inv, t_orbit) in enumerate(results):
        if diverged:
            raise SimulationDivergence(
                f"replication {k}: orbit exceeded cap {cfg.orbit_cap}; the system looks unstable"
            )
        total_events += int(events)
        status = t_status / window
        inv = t_inv / window
        orbit = t_orbit / window
        L_R = float(np.arange(orbit.shape[0]) @ orbit)
        rows.append(
            {
                "replication": k,
                "p_idle": float(status[IDLE]),
                "p_busy": float(status[BUSY]),
                "p_failed": float(status[FAILED]),
                "L_R": L_R,
                "L": L_R + float(status[BUSY]),
                "B_inv": float(levels @ inv),
                "events": int(events),
            }
        )
        inv_fracs.append(inv)
        orbit_fracs.append(orbit)

    orbit_arr = np.array(orbit_fracs)
    seen = np.flatnonzero(orbit_arr.max(axis=0) > 0)
    orbit_arr = orbit_arr[:, : (seen[-1] + 1 if seen.size else 1)]

    scalars = {}
    for name in SCALAR_MEASURES:
        mean, hw = _mean_halfwidth(np.array([row[name] for row in rows]))
        scalars[name] = Estimate(float(mean), float(hw))
    return SimEstimates(
        scalars=scalars,
        inventory_marginal=Estimate(*_mean_halfwidth(np.array(inv_fracs))),
        orbit_marginal=Estimate(*_mean_halfwidth(orbit_arr)),
        per_replication=rows,
        config=cfg,
        events=total_events,
    )
