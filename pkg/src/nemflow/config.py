"""Run configuration: defaults, validation, JSON files and command-line flags."""

from __future__ import annotations

import argparse
import dataclasses
import enum
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from .potential import theoretical_HF

log = logging.getLogger(__name__)

H_OVER_EPS_WARN = 2.0


class ConfigError(ValueError):
    def __init__(self, field_name: str, msg: str):
        super().__init__(f"{field_name}: {msg}")
        self.field = field_name


class Preset(str, enum.Enum):
    two_singularities = "two_singularities"
    four_singularities = "four_singularities"


@dataclass(frozen=True)
class SimConfig:
    """Physical, numerical and output parameters of one run.

    Defaults reproduce the two-defect annihilation run (rod-like molecules,
    no director stabilisation).  ``hf_value`` is the coefficient used in the
    director stabilisation term ``hf_value / (2 eps^2) (d^{n+1} - d^n)``;
    :func:`theoretical_HF` gives the value that guarantees energy decay.
    """

    preset: Preset = Preset.two_singularities
    nu: float = 1.0
    lam: float = 1.0
    gamma: float = 1.0
    beta: float = -1.0
    eps: float = 0.05
    k: float = 0.001
    t_final: float = 0.3
    S: float = 1.0
    hf_value: float = 0.0
    domain: tuple = (-1.0, 1.0, -1.0, 1.0)
    nx: int = 36
    ny: int = 36
    dim: int = 2
    snapshot_every: int = 0
    out_dir: str = "out"
    stretch_convention: str = "row_div_tgrad"
    solver_tol: float = 1e-10
    recover_w: bool = True

    def __post_init__(self):
        object.__setattr__(self, "preset", Preset(self.preset))
        object.__setattr__(self, "domain", tuple(float(v) for v in self.domain))
        validate(self)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.k))

    @property
    def mesh_h(self) -> float:
        x0, x1, y0, y1 = self.domain
        return math.hypot((x1 - x0) / self.nx, (y1 - y0) / self.ny)

    @property
    def theoretical_hf(self) -> float:
        return theoretical_HF(self.dim)

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, enum.Enum):
                v = v.value
            elif isinstance(v, tuple):
                v = list(v)
            out[_FILE_KEYS.get(f.name, f.name)] = v
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in data.items():
            name = _FIELD_FROM_KEY.get(key, key)
            if name not in known:
                raise ConfigError(key, "unknown configuration key")
            kwargs[name] = value
        return cls(**kwargs)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.dumps() + "\n")
        return path


# file keys that differ from attribute names; the rest are identical
_FILE_KEYS = {"lam": "lambda", "k": "dt", "hf_value": "hf"}
_FIELD_FROM_KEY = {v: k for k, v in _FILE_KEYS.items()}
_FIELD_FROM_KEY.update({"t-final": "t_final", "out-dir": "out_dir",
                        "snapshot-every": "snapshot_every"})


def validate(cfg: SimConfig) -> None:
    def positive(name):
        v = getattr(cfg, name)
        if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
            raise ConfigError(_FILE_KEYS.get(name, name), f"must be > 0, got {v!r}")

    for name in ("nu", "lam", "gamma", "eps", "k", "S", "solver_tol"):
        positive(name)
    if not (-1.0 <= cfg.beta <= 0.0):
        raise ConfigError("beta", f"beta out of range [-1,0]: {cfg.beta}")
    if not cfg.hf_value >= 0.0:
        raise ConfigError("hf", f"must be >= 0, got {cfg.hf_value}")
    if not cfg.t_final > 0.0:
        raise ConfigError("t_final", f"must be > 0, got {cfg.t_final}")
    for name in ("nx", "ny"):
        v = getattr(cfg, name)
        if not (isinstance(v, int) and v >= 1):
            raise ConfigError(name, f"must be an integer >= 1, got {v!r}")
    if cfg.dim not in (2, 3):
        raise ConfigError("dim", f"must be 2 or 3, got {cfg.dim}")
    if cfg.dim != 2:
        raise ConfigError("dim", "only 2D runs are supported")
    if len(cfg.domain) != 4 or not (cfg.domain[1] > cfg.domain[0] and cfg.domain[3] > cfg.domain[2]):
        raise ConfigError("domain", f"expected x0 < x1, y0 < y1, got {cfg.domain}")
    if not (isinstance(cfg.snapshot_every, int) and cfg.snapshot_every >= 0):
        raise ConfigError("snapshot_every", f"must be an integer >= 0, got {cfg.snapshot_every!r}")
    from .fem import STRETCH_CONVENTIONS

    if cfg.stretch_convention not in STRETCH_CONVENTIONS:
        raise ConfigError("stretch_convention",
                          f"expected one of {STRETCH_CONVENTIONS}, got {cfg.stretch_convention!r}")


def check_h_over_eps(cfg: SimConfig, h: float | None = None) -> float:
    """Log ``h/eps`` and warn when it exceeds :data:`H_OVER_EPS_WARN`."""
    h = cfg.mesh_h if h is None else h
    ratio = h / cfg.eps
    log.info("h = %.6g, eps = %.6g, h/eps = %.4g", h, cfg.eps, ratio)
    if ratio > H_OVER_EPS_WARN:
        log.warning("h/eps = %.3g > %g: the initial energy may not be bounded "
                    "uniformly in eps on this mesh", ratio, H_OVER_EPS_WARN)
    return ratio


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nemflow",
        description="Projection time-splitting FEM for nematic liquid crystal flow with stretching.")
    p.add_argument("--config", type=Path, help="JSON file with the same keys as the flags")
    p.add_argument("--preset", choices=[x.value for x in Preset])
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--dt", type=float, help="time step k")
    p.add_argument("--t-final", dest="t_final", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--hf", type=float, help="director stabilisation coefficient")
    p.add_argument("--S", type=float, help="pressure stabilisation constant")
    p.add_argument("--nu", type=float)
    p.add_argument("--lambda", dest="lambda_", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--domain", type=float, nargs=4, metavar=("X0", "X1", "Y0", "Y1"))
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--snapshot-every", dest="snapshot_every", type=int)
    p.add_argument("--stretch-convention", dest="stretch_convention")
    return p


_ARG_TO_KEY = {"dt": "dt", "t_final": "t_final", "eps": "eps", "beta": "beta", "hf": "hf",
               "S": "S", "nu": "nu", "lambda_": "lambda", "gamma": "gamma", "nx": "nx",
               "ny": "ny", "preset": "preset", "domain": "domain", "out_dir": "out_dir",
               "snapshot_every": "snapshot_every", "stretch_convention": "stretch_convention"}


def parse_config(argv=None, config_file=None) -> SimConfig:
    """Merge defaults, an optional JSON config file and CLI flags (highest precedence).

    Unknown flags make argparse exit; unknown file keys raise :class:`ConfigError`.
    """
    ns = build_parser().parse_args(argv)
    return config_from_namespace(ns, config_file)


def config_from_namespace(ns: argparse.Namespace, config_file=None) -> SimConfig:
    data: dict = {}
    path = config_file or getattr(ns, "config", None)
    if path is not None:
        try:
            loaded = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config", "top level of the config file must be an object")
        data.update(loaded)
    for attr, key in _ARG_TO_KEY.items():
        v = getattr(ns, attr, None)
        if v is not None:
            data[key] = v
    try:
        return SimConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError("config", str(exc)) from exc
