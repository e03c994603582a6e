"""Flat ``key = value`` run configuration."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Dict, List, Optional, Tuple

from .background import BackgroundModel, invert_tortoise, lapse
from .evolution import CFL_CAP, InitialDataSpec
from .modes import mode_list


class ConfigError(ValueError):
    """A rejected configuration; the message is a single line naming the key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config error: {key}: {message}")
        self.key = key


def _parse_modes(text: str) -> Tuple[Tuple[int, int], ...]:
    out = []
    for item in text.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        l, sep, m = item.partition(":")
        if not sep:
            raise ValueError(f"mode {item!r} is not of the form l:m")
        out.append((int(l), int(m)))
    return tuple(out)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


@dataclass(frozen=True)
class RunConfig:
    # background
    mass: float = 1.0
    r_star_min: float = -60.0
    r_star_max: float = 200.0
    n_points: int = 1025
    # initial data
    family: str = "pulse"
    l_max: int = 2
    modes: Tuple[Tuple[int, int], ...] = ()
    q_E: float = 0.0
    q_B: float = 0.0
    center: float = 20.0
    width: float = 2.0
    amp0: complex = 1.0
    amp2: complex = 0.0
    # time stepping and output
    t_final: float = 100.0
    cfl: float = 0.25
    output_dt: float = 1.0
    out_dir: str = "out"
    threads: int = 1
    checkpoint: bool = True
    # invariant thresholds checked by ``evolve``
    drift_tol: float = 1e-4
    constraint_tol: float = 1e-3
    # certifier
    tail_radius: float = 1000.0
    certify_depth: int = 60

    def mode_pairs(self) -> List[Tuple[int, int]]:
        if self.modes:
            return list(self.modes)
        return list(mode_list(self.l_max))

    def background(self) -> BackgroundModel:
        return BackgroundModel(self.mass, self.r_star_min, self.r_star_max, self.n_points)

    def initial_data(self) -> InitialDataSpec:
        return InitialDataSpec(
            family=self.family,
            q_E=self.q_E,
            q_B=self.q_B,
            center=self.center,
            width=self.width,
            amp0=self.amp0,
            amp2=self.amp2,
            modes=tuple(self.mode_pairs()) if self.family != "coulomb" else ((1, 0),),
        )

    def scaled(self, factor: float) -> "RunConfig":
        """Same run with the number of grid intervals multiplied by ``factor``."""
        if not factor > 0:
            raise ConfigError("resolution_scale", f"must be positive, got {factor}")
        n = int(round((self.n_points - 1) * factor)) + 1
        return validate(replace(self, n_points=n))


_FIELDS = {f.name: f for f in fields(RunConfig)}
_PARSERS = {
    "float": float,
    "int": int,
    "str": str,
    "complex": lambda s: complex(s.replace(" ", "")),
    "bool": _parse_bool,
}


def _convert(key: str, text: str):
    kind = _FIELDS[key].type
    try:
        if key == "modes":
            return _parse_modes(text)
        return _PARSERS[kind](text)
    except (ValueError, TypeError):
        if key == "modes":
            raise ConfigError(key, f"expected l:m pairs, got {text!r}") from None
        raise ConfigError(key, f"expected {kind}, got {text!r}") from None


def validate(cfg: RunConfig) -> RunConfig:
    """Range checks; performed before anything is allocated."""
    positive = ("mass", "width", "t_final", "cfl", "output_dt", "tail_radius", "drift_tol", "constraint_tol")
    for key in positive:
        if not getattr(cfg, key) > 0:
            raise ConfigError(key, f"must be positive, got {getattr(cfg, key)}")
    if cfg.cfl > CFL_CAP:
        raise ConfigError("cfl", f"must be <= {CFL_CAP} for stability, got {cfg.cfl}")
    if cfg.n_points < 17:
        raise ConfigError("n_points", f"must be at least 17, got {cfg.n_points}")
    if not cfg.r_star_max > cfg.r_star_min:
        raise ConfigError("r_star_max", "must exceed r_star_min")
    # the inner edge must sit close enough to the horizon for outflow there
    f_in = lapse(invert_tortoise(cfg.r_star_min, cfg.mass), cfg.mass)
    if f_in >= BackgroundModel.max_horizon_lapse:
        raise ConfigError("r_star_min", f"lapse {f_in:.3g} at the inner edge is not below {BackgroundModel.max_horizon_lapse:g}")
    if cfg.family not in ("pulse", "coulomb", "mixed"):
        raise ConfigError("family", f"must be pulse, coulomb or mixed, got {cfg.family!r}")
    if cfg.l_max < 1:
        raise ConfigError("l_max", f"must be >= 1, got {cfg.l_max}")
    for l, m in cfg.modes:
        if l < 1 or abs(m) > l:
            raise ConfigError("modes", f"invalid mode {l}:{m}")
    if len(set(cfg.modes)) != len(cfg.modes):
        raise ConfigError("modes", "duplicate mode")
    if cfg.threads < 1:
        raise ConfigError("threads", f"must be >= 1, got {cfg.threads}")
    if cfg.certify_depth < 1:
        raise ConfigError("certify_depth", f"must be >= 1, got {cfg.certify_depth}")
    if not cfg.r_star_min < cfg.center < cfg.r_star_max:
        raise ConfigError("center", "pulse centre must lie inside the grid")
    return cfg


def parse_config(text: str, overrides: Optional[Dict[str, str]] = None) -> RunConfig:
    """Parse ``key = value`` lines (``#`` starts a comment) and validate.

    ``overrides`` are applied after the file, as if appended to it.
    """
    values: Dict[str, object] = {}
    lines = [(i + 1, line) for i, line in enumerate(text.splitlines())]
    lines += [(0, f"{k} = {v}") for k, v in (overrides or {}).items()]
    for lineno, raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(key or f"line {lineno}", "expected key = value")
        if key not in _FIELDS:
            raise ConfigError(key, "unknown key")
        values[key] = _convert(key, value.strip())
    return validate(RunConfig(**values))


def describe_defaults() -> str:
    cfg = RunConfig()
    return "\n".join(f"  {f.name} = {getattr(cfg, f.name)!r}" for f in fields(RunConfig))
