"""Flat ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored. Unknown keys, malformed values
and violated constraints raise :class:`ConfigError` naming the line.
"""
from dataclasses import dataclass, fields
import math

from .errors import ConfigError

SQRT2 = math.sqrt(2.0)

MODES = ("solve", "continue", "reduced", "probe", "verify")


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    parse.__name__ = "choice"
    return parse


# key: (parser, default, help)
SCHEMA = {
    "mode": (_choice(*MODES), None, "pipeline to run"),
    "ansatz": (_choice("catenoid", "toda"), "catenoid", "nodal-curve family of the ansatz"),
    "k": (float, 6.0, "catenoid growth rate"),
    "b": (float, 0.0, "catenoid vertical offset"),
    "eps": (float, 0.1, "Toda scaling"),
    "R": (float, 60.0, "domain extent in r"),
    "Z": (float, 60.0, "domain extent in z"),
    "h": (float, 0.1, "grid spacing"),
    "tol": (float, 1e-9, "Newton residual tolerance"),
    "max_iter": (int, 30, "Newton iteration cap"),
    "fit_fraction": (float, 0.5, "growth-rate fit uses r in [fit_fraction R, R]"),
    "direction": (_choice("both", "down", "up"), "both", "continuation direction"),
    "ds0": (float, 0.5, "initial arclength step"),
    "ds_min": (float, 0.05, "smallest arclength step"),
    "ds_max": (float, 1.0, "largest arclength step"),
    "k_floor": (float, 1.5, "stop continuing below this growth rate"),
    "k_ceiling": (float, 10.0, "stop continuing above this growth rate"),
    "max_points": (int, 12, "points per continuation direction"),
    "dump_fields": (_bool, False, "write a field dump for every branch point"),
    "p0": (float, 1.0, "reduced: initial height"),
    "slope0": (float, 0.0, "reduced: initial slope"),
    "r0": (float, 1.0, "reduced/probe: initial radius"),
    "r_end": (float, 1e6, "reduced/probe: final radius"),
    "forcing": (float, 0.0, "amplitude of the optional -C/r^2 remainder"),
    "k_target": (float, SQRT2 / 2.0, "probe: terminal growth rate aimed at"),
    "trials": (int, 50, "probe: number of shooting trials"),
    "p0_min": (float, 1.0, "probe: smallest initial height"),
    "p0_max": (float, 20.0, "probe: largest initial height"),
    "seed": (int, 0, "seed for randomised sampling"),
    "out": (str, "out", "output directory"),
}


@dataclass(frozen=True)
class RunConfig:
    mode: str
    ansatz: str = "catenoid"
    k: float = 6.0
    b: float = 0.0
    eps: float = 0.1
    R: float = 60.0
    Z: float = 60.0
    h: float = 0.1
    tol: float = 1e-9
    max_iter: int = 30
    fit_fraction: float = 0.5
    direction: str = "both"
    ds0: float = 0.5
    ds_min: float = 0.05
    ds_max: float = 1.0
    k_floor: float = 1.5
    k_ceiling: float = 10.0
    max_points: int = 12
    dump_fields: bool = False
    p0: float = 1.0
    slope0: float = 0.0
    r0: float = 1.0
    r_end: float = 1e6
    forcing: float = 0.0
    k_target: float = SQRT2 / 2.0
    trials: int = 50
    p0_min: float = 1.0
    p0_max: float = 20.0
    seed: int = 0
    out: str = "out"

    def to_text(self):
        """Effective configuration, re-parseable by :func:`validate_config`."""
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _constraints(cfg, where):
    def fail(key, msg):
        raise ConfigError(f"{key}: {msg}", where.get(key))

    for key in ("tol", "h", "R", "Z", "ds0", "ds_min", "ds_max", "r0", "r_end", "eps",
                "fit_fraction"):
        if not getattr(cfg, key) > 0:
            fail(key, "must be positive")
    for key in ("max_iter", "max_points", "trials"):
        if getattr(cfg, key) < 1:
            fail(key, "must be at least 1")
    if cfg.h > 0.25:
        fail("h", "grid spacing must be <= 0.25")
    if cfg.mode in ("solve", "continue"):
        for key in ("R", "Z"):
            n = getattr(cfg, key) / cfg.h
            if abs(n - round(n)) > 1e-9:
                fail(key, f"must be a multiple of h = {cfg.h}")
        if cfg.ansatz == "catenoid" and not cfg.k > SQRT2:
            fail("k", f"growth rate must exceed sqrt2 = {SQRT2:.6f} (existence range)")
        if cfg.tol < 1e-10:
            fail("tol", "must be >= 1e-10")
    if cfg.mode == "continue":
        if not SQRT2 < cfg.k_floor < cfg.k_ceiling:
            fail("k_floor", "need sqrt2 < k_floor < k_ceiling")
        if not cfg.ds_min <= cfg.ds0 <= cfg.ds_max:
            fail("ds0", "need ds_min <= ds0 <= ds_max")
    if cfg.mode == "probe":
        if not 0 < cfg.k_target <= SQRT2 / 2 + 1e-12:
            fail("k_target", "must lie in (0, sqrt2/2]")
        if not 0 < cfg.p0_min < cfg.p0_max:
            fail("p0_min", "need 0 < p0_min < p0_max")
    if cfg.mode == "reduced":
        if not cfg.r_end > cfg.r0:
            fail("r_end", "must exceed r0")
        if not cfg.p0 > 0:
            fail("p0", "must be positive")


def validate_config(text):
    """Parse configuration text into a :class:`RunConfig`."""
    values = {}
    where = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {raw.strip()!r}", lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        parser = SCHEMA[key][0]
        try:
            values[key] = parser(val)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", lineno) from None
        where[key] = lineno
    if "mode" not in values:
        raise ConfigError("mode required")
    cfg = RunConfig(**values)
    _constraints(cfg, where)
    return cfg


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return validate_config(fh.read())
