"""Scenario files (YAML).

Schema::

    m: int
    s: int
    S: int
    lambda: [m floats]
    mu:     [m floats]
    xi:     [m floats]
    alpha:  [m floats]
    theta:  [m floats]
    Q:      [[m floats] x m]
    truncation: int            # optional, default 75
    sim:                       # optional
      horizon: float
      warmup: float
      replications: int
      seed: int
      orbit_cap: int           # optional

A bundled scenario can be referred to by bare name (``low_traffic``,
``high_traffic``) instead of a path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .model import EnvironmentParams, InventoryPolicy, ModelSpec
from .solver import DEFAULT_TRUNCATION

BUNDLED = ("low_traffic", "high_traffic")
RATE_KEYS = {"lambda": "lam", "mu": "mu", "xi": "xi", "alpha": "alpha", "theta": "theta"}


class ScenarioParseError(ValueError):
    pass


@dataclass
class SimSettings:
    horizon: float = 2e5
    warmup: float = 1e4
    replications: int = 20
    seed: int = 12345
    orbit_cap: int = 5000


@dataclass
class Scenario:
    spec: ModelSpec
    name: str = ""
    truncation: int = DEFAULT_TRUNCATION
    sim: SimSettings = field(default_factory=SimSettings)
    source: str | None = None


def resolve_path(ref: str | Path) -> Path:
    p = Path(ref)
    if p.exists():
        return p
    if str(ref) in BUNDLED:
        return Path(str(resources.files(__package__).joinpath("scenarios", f"{ref}.yaml")))
    return p


def _as_int(doc, key, where):
    val = doc.get(key)
    if isinstance(val, bool) or not isinstance(val, int):
        raise ScenarioParseError(f"{where}: field '{key}' must be an integer, got {val!r}")
    return val


def _as_floats(val, key, where):
    if not isinstance(val, list):
        raise ScenarioParseError(f"{where}: field '{key}' must be a list of numbers")
    try:
        return [float(x) for x in val]
    except (TypeError, ValueError):
        raise ScenarioParseError(f"{where}: field '{key}' contains a non-numeric entry") from None


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    """Parse scenario YAML. Shape mismatches (e.g. a rate vector of the
    wrong length) are left to :func:`~retrial_inventory.model.validate_spec`."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        raise ScenarioParseError(f"{where}: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(doc, dict):
        raise ScenarioParseError(f"{source}: expected a mapping at top level")

    missing = [k for k in ("m", "s", "S", *RATE_KEYS, "Q") if k not in doc]
    if missing:
        raise ScenarioParseError(f"{source}: missing field(s) {', '.join(missing)}")
    m = _as_int(doc, "m", source)
    s = _as_int(doc, "s", source)
    S = _as_int(doc, "S", source)
    rates = {RATE_KEYS[k]: _as_floats(doc[k], k, source) for k in RATE_KEYS}
    if len(rates["lam"]) != m:
        # lambda sets m for the model, so a short or long lambda is a file error
        raise ScenarioParseError(f"{source}: lambda length mismatch: m = {m} but lambda has {len(rates['lam'])} entries")
    Q = doc["Q"]
    if not isinstance(Q, list) or not all(isinstance(r, list) for r in Q):
        raise ScenarioParseError(f"{source}: field 'Q' must be a list of rows")
    rows = [_as_floats(r, "Q", source) for r in Q]
    if len({len(r) for r in rows}) > 1:
        raise ScenarioParseError(f"{source}: rows of Q have different lengths")

    spec = ModelSpec(EnvironmentParams(Q=rows, **rates), InventoryPolicy(s=s, S=S))
    truncation = doc.get("truncation", DEFAULT_TRUNCATION)
    if isinstance(truncation, bool) or not isinstance(truncation, int) or truncation < 1:
        raise ScenarioParseError(f"{source}: 'truncation' must be a positive integer")

    sim = SimSettings()
    if "sim" in doc:
        block = doc["sim"] or {}
        if not isinstance(block, dict):
            raise ScenarioParseError(f"{source}: 'sim' must be a mapping")
        unknown = set(block) - {"horizon", "warmup", "replications", "seed", "orbit_cap"}
        if unknown:
            raise ScenarioParseError(f"{source}: unknown sim field(s) {', '.join(sorted(unknown))}")
        for key in ("horizon", "warmup"):
            if key in block:
                setattr(sim, key, float(block[key]))
        for key in ("replications", "seed", "orbit_cap"):
            if key in block:
                setattr(sim, key, _as_int(block, key, f"{source} sim"))
    return Scenario(spec=spec, name=str(doc.get("name", "")), truncation=truncation, sim=sim, source=source)


def load_scenario(ref: str | Path) -> Scenario:
    path = resolve_path(ref)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario {ref}: {exc.strerror}") from None
    sc = parse_scenario(text, source=str(path))
    if not sc.name:
        sc.name = path.stem
    return sc


def dump_scenario(sc: Scenario) -> str:
    env, pol = sc.spec.env, sc.spec.policy
    doc = {
        "name": sc.name,
        "m": env.m,
        "s": pol.s,
        "S": pol.S,
        **{k: [float(x) for x in getattr(env, attr)] for k, attr in RATE_KEYS.items()},
        "Q": [[float(x) for x in row] for row in env.Q],
        "truncation": sc.truncation,
        "sim": dict(vars(sc.sim)),
    }
    return yaml.safe_dump(doc, sort_keys=False)
