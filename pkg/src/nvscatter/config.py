"""Run configuration and its INI representation.

Example::

    [xgrid]
    L = 4
    n = 128
    rec_n = 64

    [kgrid]
    k_max = 6
    m = 64
    k_min_cells = 2
    ray_lo = 1e-3
    ray_hi = 1e-1
    ray_count = 24

    [potential]
    family = conductivity
    beta = 0.5

    [tolerances]
    cgo_tol = 1e-8

    [run]
    tau = 0, 0.05, 0.1
    workers = 1

Validity ranges of the underlying theory (p in (1, 2), weight rho > 1,
initial data with five weighted derivatives) are not runtime quantities;
they are noted here only.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .cgo import CGOConfig
from .dbar import DbarConfig
from .errors import ConfigurationError, PotentialSpecError
from .field import Grid2D, make_grid
from .potentials import PotentialSpec
from .scatter import KGrid, make_kgrid

__all__ = ["RunConfig", "load_config", "parse_config", "config_to_ini"]


@dataclass(frozen=True)
class XGridConfig:
    L: float = 4.0
    n: int = 128
    rec_n: int = 64


@dataclass(frozen=True)
class KGridConfig:
    k_max: float = 6.0
    m: int = 64
    k_min_cells: float = 2.0
    ray_lo: float = 1e-3
    ray_hi: float = 1e-1
    ray_count: int = 24
    ray_angle: float = 0.3


@dataclass(frozen=True)
class PotentialConfig:
    family: str = "conductivity"
    beta: float = 0.5
    center_x: float = 0.0
    center_y: float = 0.0
    radius: float = 1.0
    eps: float = 0.0
    scale: float = 1.0


@dataclass(frozen=True)
class Tolerances:
    cgo_tol: float = 1e-8
    dbar_tol: float = 1e-8
    tol_eig: float | None = None     # None: 1e-6 * max|q|
    reality_tol: float = 1e-3
    sym_tol: float = 1e-6
    blowup: float = 1e6


@dataclass(frozen=True)
class RunSection:
    tau: tuple = (0.0, 0.05, 0.1)
    dtau: float = 1e-3
    subk_model: bool = False
    workers: int = 1
    output_dir: str = "nv-out"
    allow_supercritical: bool = False


@dataclass(frozen=True)
class RunConfig:
    xgrid: XGridConfig = field(default_factory=XGridConfig)
    kgrid: KGridConfig = field(default_factory=KGridConfig)
    potential: PotentialConfig = field(default_factory=PotentialConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)
    run: RunSection = field(default_factory=RunSection)

    def __post_init__(self):
        self.validate()

    def validate(self):
        t = self.tolerances
        for name in ("cgo_tol", "dbar_tol", "reality_tol", "sym_tol", "blowup"):
            if not getattr(t, name) > 0:
                raise ConfigurationError(f"tolerance {name} must be positive")
        if t.tol_eig is not None and not t.tol_eig > 0:
            raise ConfigurationError("tolerance tol_eig must be positive")
        taus = list(self.run.tau)
        if taus != sorted(taus):
            raise ConfigurationError("tau schedule must be sorted")
        if self.kgrid.k_min_cells < 2:
            raise ConfigurationError("k_min_cells must be at least 2")
        if self.run.dtau <= 0:
            raise ConfigurationError("dtau must be positive")
        if self.run.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        # grids validate themselves
        self.x_grid(), self.rec_grid(), self.k_grid()
        self.potential_spec()

    # builders -----------------------------------------------------------
    def x_grid(self) -> Grid2D:
        return make_grid(self.xgrid.L, self.xgrid.n)

    def rec_grid(self) -> Grid2D:
        return make_grid(self.xgrid.L, self.xgrid.rec_n)

    def k_grid(self) -> KGrid:
        k = self.kgrid
        return make_kgrid(k.k_max, k.m, k.k_min_cells, ray_lo=k.ray_lo, ray_hi=k.ray_hi,
                          ray_count=k.ray_count, ray_angle=k.ray_angle)

    def potential_spec(self) -> PotentialSpec:
        p = self.potential
        if p.family not in ("conductivity", "perturbed"):
            raise ConfigurationError(f"unknown potential family {p.family!r}")
        if p.beta <= -1:
            # the bump peaks at 1, so sigma = 1 + beta * bump stays positive iff beta > -1
            raise PotentialSpecError(f"beta={p.beta} makes sigma nonpositive")
        return PotentialSpec(p.family, p.beta, complex(p.center_x, p.center_y), p.radius, p.eps, p.scale)

    def cgo_config(self) -> CGOConfig:
        return CGOConfig(tol=self.tolerances.cgo_tol, blowup=self.tolerances.blowup)

    def dbar_config(self) -> DbarConfig:
        return DbarConfig(tol=self.tolerances.dbar_tol, subk_model=self.run.subk_model)

    def to_dict(self):
        d = asdict(self)
        d["run"]["tau"] = list(self.run.tau)
        return d

    def with_run(self, **kw) -> "RunConfig":
        return replace(self, run=replace(self.run, **kw))


_SECTIONS = {
    "xgrid": XGridConfig,
    "kgrid": KGridConfig,
    "potential": PotentialConfig,
    "tolerances": Tolerances,
    "run": RunSection,
}


def _convert(cls, key, raw: str):
    f = {f.name: f for f in fields(cls)}[key]
    default = f.default
    raw = raw.strip()
    try:
        if key == "tau":
            return tuple(float(v) for v in raw.replace(",", " ").split())
        if key == "tol_eig":
            return None if raw.lower() in ("", "auto", "none") else float(raw)
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigurationError(f"bad value for {cls.__name__}.{key}: {raw!r}") from None


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"cannot parse config: {exc}") from None
    parts = {}
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigurationError(f"unknown config section [{section}]")
        cls = _SECTIONS[section]
        known = {f.name for f in fields(cls)}
        values = {}
        for key, raw in cp.items(section):
            if key not in known:
                raise ConfigurationError(f"unknown key {key!r} in [{section}]")
            values[key] = _convert(cls, key, raw)
        parts[section] = cls(**values)
    return RunConfig(**parts)


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"config file not found: {p}")
    return parse_config(p.read_text())


def config_to_ini(cfg: RunConfig) -> str:
    lines = []
    for section, obj in (("xgrid", cfg.xgrid), ("kgrid", cfg.kgrid), ("potential", cfg.potential),
                         ("tolerances", cfg.tolerances), ("run", cfg.run)):
        lines.append(f"[{section}]")
        for f in fields(obj):
            v = getattr(obj, f.name)
            if f.name == "tau":
                v = ", ".join(repr(float(t)) for t in v)
            elif v is None:
                v = "auto"
            lines.append(f"{f.name} = {v}")
        lines.append("")
    return "\n".join(lines)
