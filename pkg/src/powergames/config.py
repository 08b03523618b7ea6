"""Experiment configuration: JSON schema, strict loading, canonical hashing.

Unknown keys are rejected everywhere so typos fail loudly. The resolved
configuration (all defaults filled in) is what gets hashed into output
metadata; rerunning a config byte-reproduces every numeric payload.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

from .errors import ConfigError


@dataclass(frozen=True)
class PowerSpec:
    min_db: float = -20.0
    max_db: float = 20.0
    levels: int = 25
    levels_linear: Optional[tuple[float, ...]] = None  # overrides the dB grid


@dataclass(frozen=True)
class ChannelGridSpec:
    min: float = 0.01
    max: float = 3.0
    points: int = 10


@dataclass(frozen=True)
class ChannelSweepSpec:
    mode: str = "sample"       # "sample" | "enumerate"
    count: int = 200
    seed: int = 0


@dataclass(frozen=True)
class ChannelSpec:
    matrix: Optional[tuple[tuple[float, ...], ...]] = None
    grid: Optional[ChannelGridSpec] = None
    sweep: ChannelSweepSpec = field(default_factory=ChannelSweepSpec)


@dataclass(frozen=True)
class TypesSpec:
    enabled: bool = False
    mode: str = "diagonal"     # "diagonal" | "product"
    prior: str = "uniform"     # only uniform priors come from config files
    min: float = 0.01
    max: float = 3.0
    points: int = 2


@dataclass(frozen=True)
class SolverSpec:
    formulation: str = "literal"   # "literal" | "canonical"
    directions: int = 64
    feas_tol: float = 1e-9
    opt_tol: float = 1e-9


@dataclass(frozen=True)
class LearningSpec:
    steps: int = 100_000
    seed: int = 1
    mu: Optional[float] = None
    rule: str = "conditional"      # "conditional" | "paper-literal"


@dataclass(frozen=True)
class SweepSpec:
    include_regret: bool = False
    workers: int = 0               # 0 = available parallelism
    action_levels: Optional[tuple[int, ...]] = None
    nested_grids: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    players: int = 2
    power: PowerSpec = field(default_factory=PowerSpec)
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    alpha: float = 0.01
    noise: float = 1.0
    packet_len: int = 100
    types: TypesSpec = field(default_factory=TypesSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)
    learning: LearningSpec = field(default_factory=LearningSpec)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    output_dir: str = "out"

    def resolved(self) -> dict:
        """Plain dict with every default filled in (hash/metadata source)."""
        return asdict(self)

    def sha256(self) -> str:
        payload = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()


def _section(raw: dict, name: str, allowed: set[str]) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected an object")
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"{name}: unknown key(s) {sorted(unknown)}")
    return raw


def _positive(value, name: str) -> float:
    v = float(value)
    if not (v > 0 and math.isfinite(v)):
        raise ConfigError(f"{name}: must be positive and finite, got {value}")
    return v


def _pos_int(value, name: str, minimum: int = 1) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ConfigError(f"{name}: must be an integer >= {minimum}, got {value!r}")
    return value


def _choice(value, name: str, options: tuple[str, ...]) -> str:
    if value not in options:
        raise ConfigError(f"{name}: must be one of {options}, got {value!r}")
    return value


def parse_config(raw: dict) -> ExperimentConfig:
    top = _section(raw, "config", {
        "players", "power", "channel", "alpha", "noise", "packet_len",
        "types", "solver", "learning", "sweep", "output_dir",
    })
    players = _pos_int(top.get("players", 2), "players")

    p = _section(top.get("power", {}), "power",
                 {"min_db", "max_db", "levels", "levels_linear"})
    levels_linear = p.get("levels_linear")
    if levels_linear is not None:
        values = tuple(float(v) for v in levels_linear)
        if not values or any(a >= b for a, b in zip(values, values[1:])):
            raise ConfigError("power.levels_linear: need a strictly increasing list")
        power = PowerSpec(min_db=0.0, max_db=0.0, levels=len(values), levels_linear=values)
    else:
        power = PowerSpec(
            min_db=float(p.get("min_db", -20.0)),
            max_db=float(p.get("max_db", 20.0)),
            levels=_pos_int(p.get("levels", 25), "power.levels"),
        )
        if power.min_db > power.max_db:
            raise ConfigError("power.min_db: must not exceed power.max_db")

    c = _section(top.get("channel", {}), "channel", {"matrix", "grid", "sweep"})
    matrix = None
    grid = None
    if "matrix" in c:
        m = c["matrix"]
        if (not isinstance(m, list) or len(m) != players
                or any(len(row) != players for row in m)):
            raise ConfigError("channel.matrix: must be a players x players array")
        matrix = tuple(tuple(float(v) for v in row) for row in m)
        for row in matrix:
            for v in row:
                if not (v >= 0 and math.isfinite(v)):
                    raise ConfigError("channel.matrix: gains must be finite and >= 0")
    if "grid" in c:
        g = _section(c["grid"], "channel.grid", {"min", "max", "points"})
        grid = ChannelGridSpec(
            min=_positive(g.get("min", 0.01), "channel.grid.min"),
            max=_positive(g.get("max", 3.0), "channel.grid.max"),
            points=_pos_int(g.get("points", 10), "channel.grid.points", minimum=1),
        )
        if grid.min > grid.max:
            raise ConfigError("channel.grid.min: must not exceed channel.grid.max")
    if matrix is None and grid is None:
        raise ConfigError("channel: needs either 'matrix' or 'grid'")
    sw = _section(c.get("sweep", {}), "channel.sweep", {"mode", "count", "seed"})
    sweep_spec = ChannelSweepSpec(
        mode=_choice(sw.get("mode", "sample"), "channel.sweep.mode",
                     ("sample", "enumerate")),
        count=_pos_int(sw.get("count", 200), "channel.sweep.count"),
        seed=int(sw.get("seed", 0)),
    )
    channel = ChannelSpec(matrix=matrix, grid=grid, sweep=sweep_spec)

    alpha = _positive(top.get("alpha", 0.01), "alpha")
    noise = _positive(top.get("noise", 1.0), "noise")
    packet_len = _pos_int(top.get("packet_len", 100), "packet_len")

    t_raw = top.get("types")
    if t_raw is None:
        types = TypesSpec()
    else:
        t = _section(t_raw, "types", {"mode", "prior", "min", "max", "points"})
        types = TypesSpec(
            enabled=True,
            mode=_choice(t.get("mode", "diagonal"), "types.mode",
                         ("diagonal", "product")),
            prior=_choice(t.get("prior", "uniform"), "types.prior", ("uniform",)),
            min=_positive(t.get("min", grid.min if grid else 0.01), "types.min"),
            max=_positive(t.get("max", grid.max if grid else 3.0), "types.max"),
            points=_pos_int(t.get("points", grid.points if grid else 2), "types.points"),
        )

    s = _section(top.get("solver", {}), "solver",
                 {"formulation", "directions", "feas_tol", "opt_tol"})
    solver = SolverSpec(
        formulation=_choice(s.get("formulation", "literal"), "solver.formulation",
                            ("literal", "canonical")),
        directions=_pos_int(s.get("directions", 64), "solver.directions", minimum=4),
        feas_tol=_positive(s.get("feas_tol", 1e-9), "solver.feas_tol"),
        opt_tol=_positive(s.get("opt_tol", 1e-9), "solver.opt_tol"),
    )

    le = _section(top.get("learning", {}), "learning",
                  {"steps", "seed", "mu", "rule"})
    learning = LearningSpec(
        steps=_pos_int(le.get("steps", 100_000), "learning.steps"),
        seed=int(le.get("seed", 1)),
        mu=None if le.get("mu") is None else _positive(le["mu"], "learning.mu"),
        rule=_choice(le.get("rule", "conditional"), "learning.rule",
                     ("conditional", "paper-literal")),
    )

    sv = _section(top.get("sweep", {}), "sweep",
                  {"include_regret", "workers", "action_levels", "nested_grids"})
    action_levels = sv.get("action_levels")
    if action_levels is not None:
        action_levels = tuple(
            _pos_int(v, "sweep.action_levels[]", minimum=1) for v in action_levels
        )
    workers = sv.get("workers", 0)
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 0:
        raise ConfigError(f"sweep.workers: must be an integer >= 0, got {workers!r}")
    sweep = SweepSpec(
        include_regret=bool(sv.get("include_regret", False)),
        workers=workers,
        action_levels=action_levels,
        nested_grids=bool(sv.get("nested_grids", True)),
    )

    output_dir = top.get("output_dir", "out")
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir: must be a nonempty string")

    return ExperimentConfig(players, power, channel, alpha, noise, packet_len,
                            types, solver, learning, sweep, output_dir)


def load_config(path) -> ExperimentConfig:
    """Read, parse and validate a JSON config; fully defaulted on return."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return parse_config(raw)
