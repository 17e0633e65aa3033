"""Plain-text run configuration.

Files use INI-style sections parsed by configparser.  Example:

    [geometry]
    outer_radius = 1.0
    holes = -0.4 0.0 0.15 ; 0.4 0.0 0.15
    target_h = 0.08
    seed = 0

    [problem]
    h = const -1
    lambda = const -0.1
    rho = 0.5
    normalize = true
    boundary_sign = +1

    [search]
    branch = auto
    path_points = 11
    samples = 48
    max_iters = 80

    [numerics]
    tol = 1e-8
    seed = 0
    spectrum_count = all

    [sweep]
    rhos = 0.3 0.5 0.8

Every key has a default except the geometry block, and unknown keys are
rejected so typos fail loudly.  The command-line `--seed` and `--tol`
flags override the [numerics] values; the geometry seed is part of the
mesh identity and is only set here.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, replace

from .errors import InputError

_ALLOWED = {
    "geometry": {"outer_radius", "holes", "target_h", "seed"},
    "problem": {"h", "lambda", "rho", "normalize", "boundary_sign"},
    "search": {"branch", "path_points", "samples", "max_iters"},
    "numerics": {"tol", "seed", "spectrum_count"},
    "sweep": {"rhos"},
}

_BRANCHES = ("auto", "mountain_pass", "linking")


@dataclass(frozen=True)
class RunConfig:
    outer_radius: float = 1.0
    holes: tuple = ((-0.4, 0.0, 0.15), (0.4, 0.0, 0.15))
    target_h: float = 0.08
    mesh_seed: int = 0
    h_text: str = "const -1"
    lam_text: str = "const 0"
    rho: float = 0.5
    normalize: bool = True
    boundary_sign: int = 1
    branch: str = "auto"
    path_points: int = 11
    samples: int = 48
    max_iters: int = 80
    tol: float = 1e-8
    seed: int = 0
    spectrum_count: str = "all"
    rho_sweep: tuple = ()

    def __post_init__(self):
        if self.branch not in _BRANCHES:
            raise InputError(f"branch must be one of {_BRANCHES}; got {self.branch!r}")
        if self.boundary_sign not in (-1, 1):
            raise InputError("boundary_sign must be +1 or -1")
        if self.rho <= 0:
            raise InputError("rho must be positive")
        if self.target_h <= 0:
            raise InputError("target_h must be positive")
        if self.tol <= 0:
            raise InputError("tol must be positive")
        if self.spectrum_count != "all":
            try:
                k = int(self.spectrum_count)
            except ValueError:
                raise InputError("spectrum_count must be 'all' or an integer") from None
            if k <= 0:
                raise InputError("spectrum_count must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["holes"] = [list(h) for h in self.holes]
        d["rho_sweep"] = list(self.rho_sweep)
        return d


def _parse_holes(text: str) -> tuple:
    holes = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split()
        if len(parts) != 3:
            raise InputError(f"hole spec needs 'cx cy r'; got {chunk!r}")
        try:
            cx, cy, r = (float(p) for p in parts)
        except ValueError as exc:
            raise InputError(f"bad number in hole spec {chunk!r}") from exc
        holes.append((cx, cy, r))
    return tuple(holes)


def _get(parser, section, key, default, conv, path):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key).strip()
    try:
        return conv(raw)
    except InputError:
        raise
    except (ValueError, TypeError) as exc:
        raise InputError(f"{path}: bad value for [{section}] {key}: {raw!r}") from exc


def _to_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(raw)


def _to_sign(raw: str) -> int:
    val = int(raw)
    return val


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = parser.read([str(path)])
    if not read:
        raise InputError(f"config file not found: {path}")

    for section in parser.sections():
        if section not in _ALLOWED:
            raise InputError(f"{path}: unknown config section [{section}]")
        for key in parser.options(section):
            if key not in _ALLOWED[section]:
                raise InputError(f"{path}: unknown key {key!r} in [{section}]")

    kwargs = {}
    kwargs["outer_radius"] = _get(parser, "geometry", "outer_radius", 1.0, float, path)
    kwargs["holes"] = _get(parser, "geometry", "holes",
                           RunConfig.holes, _parse_holes, path)
    kwargs["target_h"] = _get(parser, "geometry", "target_h", 0.08, float, path)
    kwargs["mesh_seed"] = _get(parser, "geometry", "seed", 0, int, path)
    kwargs["h_text"] = _get(parser, "problem", "h", "const -1", str, path)
    kwargs["lam_text"] = _get(parser, "problem", "lambda", "const 0", str, path)
    kwargs["rho"] = _get(parser, "problem", "rho", 0.5, float, path)
    kwargs["normalize"] = _get(parser, "problem", "normalize", True, _to_bool, path)
    kwargs["boundary_sign"] = _get(parser, "problem", "boundary_sign", 1, _to_sign, path)
    kwargs["branch"] = _get(parser, "search", "branch", "auto", str, path)
    kwargs["path_points"] = _get(parser, "search", "path_points", 11, int, path)
    kwargs["samples"] = _get(parser, "search", "samples", 48, int, path)
    kwargs["max_iters"] = _get(parser, "search", "max_iters", 80, int, path)
    kwargs["tol"] = _get(parser, "numerics", "tol", 1e-8, float, path)
    kwargs["seed"] = _get(parser, "numerics", "seed", 0, int, path)
    kwargs["spectrum_count"] = _get(parser, "numerics", "spectrum_count", "all", str, path)
    kwargs["rho_sweep"] = _get(
        parser, "sweep", "rhos", (),
        lambda raw: tuple(float(v) for v in raw.split()), path)
    return RunConfig(**kwargs)


def apply_overrides(cfg: RunConfig, seed=None, tol=None) -> RunConfig:
    if seed is not None:
        cfg = replace(cfg, seed=int(seed))
    if tol is not None:
        if tol <= 0:
            raise InputError("tol must be positive")
        cfg = replace(cfg, tol=float(tol))
    return cfg
