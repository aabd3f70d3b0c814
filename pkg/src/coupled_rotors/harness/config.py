"""Run configuration: a versioned TOML document.

Schema 1::

    schema = 1
    t_max = 5000              # required
    seed = 0
    ensemble = 1              # >1 averages over random initial centres
    output = "runs/example"
    checkpoint_every = 0      # 0 disables checkpoints
    memory_cap_mb = 4096

    [grid]
    n = 512                   # required; power of two, both rotors
    hbar_s = 1.0

    [params]
    k1 = 9.0                  # required
    k2 = 10.0                 # required
    xi12 = 0.05               # required, >= 0

    [initial.rotor1]          # defaults: x0 = pi + 0.1, p0 = 0, sigma = sqrt(hbar_s/2)
    x0 = 3.2415926
    p0 = 0.0
    sigma = 0.7071

    [initial.rotor2]
    ...

    [schedule]
    kind = "log"              # "log" or "linear"
    count = 200

    [probes]
    svn = true
    slin = true
    energy = true
    marginals = false
    decoherence = false
    husimi = false
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import tomli
import tomli_w

from ..errors import ConfigurationError
from ..evolution import ProbeSet, SampleSchedule, SystemParams
from ..grid import CoherentStateSpec, GridSpec, default_coherent_spec, image_overlap

SCHEMA_VERSION = 1


class ConfigError(ConfigurationError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ScheduleConfig:
    kind: str = "log"
    count: int = 200

    def build(self, t_max: int) -> SampleSchedule:
        if self.kind == "log":
            return SampleSchedule.logarithmic(t_max, self.count)
        return SampleSchedule.linear(t_max, self.count)


@dataclass(frozen=True)
class RunConfig:
    n: int
    k1: float
    k2: float
    xi12: float
    t_max: int
    hbar_s: float = 1.0
    initial1: CoherentStateSpec | None = None
    initial2: CoherentStateSpec | None = None
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    probes: ProbeSet = field(default_factory=ProbeSet)
    seed: int = 0
    ensemble: int = 1
    output: str = "runs/run"
    checkpoint_every: int = 0
    memory_cap_mb: float = 4096.0
    schema: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.initial1 is None:
            object.__setattr__(self, "initial1", default_coherent_spec(self.hbar_s))
        if self.initial2 is None:
            object.__setattr__(self, "initial2", default_coherent_spec(self.hbar_s))

    @property
    def params(self) -> SystemParams:
        return SystemParams(self.k1, self.k2, self.xi12, self.hbar_s)

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.n, self.n, self.hbar_s)

    def sample_schedule(self) -> SampleSchedule:
        return self.schedule.build(self.t_max)

    def replace(self, **changes) -> "RunConfig":
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        if "hbar_s" in changes and "initial1" not in changes:
            d["initial1"] = d["initial2"] = None
        d.update(changes)
        return RunConfig(**d)

    def to_dict(self) -> dict:
        probes = asdict(self.probes)
        probes.pop("marginal_times")
        return {
            "schema": self.schema,
            "t_max": self.t_max,
            "seed": self.seed,
            "ensemble": self.ensemble,
            "output": self.output,
            "checkpoint_every": self.checkpoint_every,
            "memory_cap_mb": self.memory_cap_mb,
            "grid": {"n": self.n, "hbar_s": self.hbar_s},
            "params": {"k1": self.k1, "k2": self.k2, "xi12": self.xi12},
            "initial": {"rotor1": asdict(self.initial1), "rotor2": asdict(self.initial2)},
            "schedule": asdict(self.schedule),
            "probes": probes,
        }


_TOP = {
    "schema": int, "t_max": int, "seed": int, "ensemble": int, "output": str,
    "checkpoint_every": int, "memory_cap_mb": float,
    "grid": dict, "params": dict, "initial": dict, "schedule": dict, "probes": dict,
}
_GRID = {"n": int, "hbar_s": float}
_PARAMS = {"k1": float, "k2": float, "xi12": float}
_COHERENT = {"x0": float, "p0": float, "sigma": float}
_SCHEDULE = {"kind": str, "count": int}
_PROBES = {k: bool for k in ("svn", "slin", "energy", "marginals", "decoherence", "husimi")}


def _check(section: dict, spec: dict, prefix: str) -> dict:
    out = {}
    for key, value in section.items():
        path = f"{prefix}{key}"
        if key not in spec:
            raise ConfigError(path, "unknown key")
        want = spec[key]
        if want is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if want is int and isinstance(value, bool) or not isinstance(value, want):
            raise ConfigError(path, f"expected {want.__name__}, got {type(value).__name__}")
        out[key] = value
    return out


def _require(d: dict, key: str, path: str):
    if key not in d:
        raise ConfigError(path, "missing required key")
    return d[key]


def from_dict(raw: dict) -> RunConfig:
    top = _check(raw, _TOP, "")
    schema = top.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError("schema", f"unsupported schema version {schema}")
    grid = _check(top.get("grid", {}), _GRID, "grid.")
    params = _check(top.get("params", {}), _PARAMS, "params.")
    sched = _check(top.get("schedule", {}), _SCHEDULE, "schedule.")
    probes = _check(top.get("probes", {}), _PROBES, "probes.")
    initial = top.get("initial", {})
    for key in initial:
        if key not in ("rotor1", "rotor2"):
            raise ConfigError(f"initial.{key}", "unknown key")

    n = _require(grid, "n", "grid.n")
    hbar = grid.get("hbar_s", 1.0)
    t_max = _require(top, "t_max", "t_max")
    k1 = _require(params, "k1", "params.k1")
    k2 = _require(params, "k2", "params.k2")
    xi = _require(params, "xi12", "params.xi12")

    if n < 16 or n & (n - 1):
        raise ConfigError("grid.n", f"{n} is not a power of two >= 16")
    if not (math.isfinite(hbar) and hbar > 0):
        raise ConfigError("grid.hbar_s", "must be positive")
    if t_max < 0:
        raise ConfigError("t_max", "must be >= 0")
    for key, v in (("params.k1", k1), ("params.k2", k2), ("params.xi12", xi)):
        if not math.isfinite(v):
            raise ConfigError(key, "must be finite")
    if xi < 0:
        raise ConfigError("params.xi12", "coupling must be >= 0")
    if sched.get("kind", "log") not in ("log", "linear"):
        raise ConfigError("schedule.kind", "must be 'log' or 'linear'")
    if sched.get("count", 200) < 1:
        raise ConfigError("schedule.count", "must be >= 1")
    if top.get("ensemble", 1) < 1:
        raise ConfigError("ensemble", "must be >= 1")
    if top.get("checkpoint_every", 0) < 0:
        raise ConfigError("checkpoint_every", "must be >= 0")

    specs = []
    default = default_coherent_spec(hbar)
    for rotor in ("rotor1", "rotor2"):
        c = _check(initial.get(rotor, {}), _COHERENT, f"initial.{rotor}.")
        try:
            specs.append(CoherentStateSpec(
                c.get("x0", default.x0), c.get("p0", default.p0), c.get("sigma", default.sigma)))
        except ConfigurationError as exc:
            raise ConfigError(f"initial.{rotor}.sigma", str(exc)) from exc
        if image_overlap(specs[-1].sigma) > 1e-3:
            raise ConfigError(f"initial.{rotor}.sigma", "packet too wide for the 2*pi period")

    return RunConfig(
        n=n, k1=k1, k2=k2, xi12=xi, t_max=t_max, hbar_s=hbar,
        initial1=specs[0], initial2=specs[1],
        schedule=ScheduleConfig(**sched),
        probes=ProbeSet(**probes),
        seed=top.get("seed", 0),
        ensemble=top.get("ensemble", 1),
        output=top.get("output", "runs/run"),
        checkpoint_every=top.get("checkpoint_every", 0),
        memory_cap_mb=top.get("memory_cap_mb", 4096.0),
    )


def parse_config(text: str) -> RunConfig:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError("<document>", f"invalid TOML: {exc}") from exc
    return from_dict(raw)


def serialize_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
