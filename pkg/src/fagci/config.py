"""TOML scenario files for the command-line front end."""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .channel import FagciChannel
from .constellation import InvalidArgument, db_to_linear, from_points, make_standard, zero
from .miso import OptimizerConfig
from .rates import GaussHermite, MonteCarlo, SSearch


class ConfigError(ValueError):
    """The configuration file is missing, unreadable or inconsistent."""


def load_toml(path):
    path = Path(path)
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def parse_constellation(spec, where="constellation"):
    """``{kind, order, power_db}``, ``{kind, order, power}``, ``{points=[[re, im], ...]}`` or ``"none"``."""
    if spec is None or (isinstance(spec, str) and spec.lower() in ("none", "zero")):
        return zero()
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected a table, got {spec!r}")
    try:
        if "points" in spec:
            c = from_points(spec["points"])
            if "power_db" in spec:
                c = c.with_power(db_to_linear(spec["power_db"]))
            return c
        kind = str(spec.get("kind", "")).lower()
        if kind in ("none", "zero"):
            return zero()
        if "power_db" in spec and "power" in spec:
            raise ConfigError(f"{where}: give power or power_db, not both")
        power = db_to_linear(spec["power_db"]) if "power_db" in spec else float(spec.get("power", 1.0))
        return make_standard(kind, int(spec["order"]), power)
    except KeyError as exc:
        raise ConfigError(f"{where}: missing key {exc}") from None
    except (InvalidArgument, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_quadrature(spec, seed=None):
    spec = spec or {}
    method = str(spec.get("method", "gauss-hermite")).lower()
    try:
        if method in ("gauss-hermite", "gh"):
            return GaussHermite(int(spec.get("nodes", 40)))
        if method in ("monte-carlo", "mc"):
            s = int(spec.get("seed", 0)) if seed is None else int(seed)
            return MonteCarlo(int(spec.get("samples", 10_000)), s)
    except InvalidArgument as exc:
        raise ConfigError(f"quadrature: {exc}") from None
    raise ConfigError(f"quadrature: unknown method {method!r}")


def parse_s_search(spec):
    spec = spec or {}
    try:
        return SSearch(float(spec.get("lower", 1e-3)), float(spec.get("upper", 4.0)), float(spec.get("rtol", 1e-4)))
    except InvalidArgument as exc:
        raise ConfigError(f"s_search: {exc}") from None


def db_grid(start, stop, step):
    if not step > 0:
        raise ConfigError("grid step must be > 0")
    if stop < start:
        raise ConfigError("grid stop below start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 12) for k in range(n)]


@dataclass
class SweepConfig:
    channel: dict
    param: str
    grid: List[float]
    metrics: List[str]
    quad: object = field(default_factory=GaussHermite)
    s_search: SSearch = field(default_factory=SSearch)
    output: Optional[str] = None

    def channel_at(self, value_db):
        ch = dict(self.channel)
        if self.param in ("x", "i", "j"):
            spec = dict(ch.get(self.param) or {})
            spec.pop("power", None)
            spec["power_db"] = value_db
            ch[self.param] = spec
        elif self.param == "noise":
            ch["noise_db"] = value_db
        return build_channel(ch)


def build_channel(spec):
    noise_db = spec.get("noise_db", 0.0)
    try:
        return FagciChannel(
            parse_constellation(spec.get("x"), "channel.x"),
            parse_constellation(spec.get("i"), "channel.i"),
            parse_constellation(spec.get("j"), "channel.j"),
            db_to_linear(noise_db),
        )
    except InvalidArgument as exc:
        raise ConfigError(f"channel: {exc}") from None


def parse_sweep(data, seed=None):
    if "channel" not in data:
        raise ConfigError("missing [channel] table")
    sweep = data.get("sweep", {})
    param = str(sweep.get("param", "x")).lower()
    if param not in ("x", "i", "j", "noise"):
        raise ConfigError(f"sweep.param must be x, i, j or noise, got {param!r}")
    try:
        grid = db_grid(float(sweep["start"]), float(sweep.get("stop", sweep["start"])), float(sweep.get("step", 1.0)))
    except KeyError:
        raise ConfigError("sweep.start is required") from None
    metrics = list(sweep.get("metrics", data.get("metrics", [])))
    if not metrics:
        raise ConfigError("sweep.metrics must be non-empty")
    cfg = SweepConfig(
        channel=data["channel"], param=param, grid=grid, metrics=metrics,
        quad=parse_quadrature(data.get("quadrature"), seed), s_search=parse_s_search(data.get("s_search")),
        output=data.get("output"),
    )
    cfg.channel_at(grid[0])
    return cfg


_OPTIMIZER_KEYS = {f for f in OptimizerConfig.__dataclass_fields__}


def parse_optimizer(spec):
    spec = dict(spec or {})
    unknown = set(spec) - _OPTIMIZER_KEYS
    if unknown:
        raise ConfigError(f"optimizer: unknown keys {sorted(unknown)}")
    try:
        return OptimizerConfig(**spec)
    except (InvalidArgument, TypeError) as exc:
        raise ConfigError(f"optimizer: {exc}") from None
