"""Experiment configuration: a flat TOML document with grid/sampler tables.

``ExperimentConfig.defaults()`` holds every tunable; configs round-trip
losslessly through ``to_toml``/``from_toml`` so a printed default file can
be edited and fed back in.
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, replace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bounds import METHODS
from .errors import ConfigError

_GRID_KEYS = {"extent": float, "points": int}
_SAMPLER_KEYS = {
    "n_het": int,
    "events_per_point": int,
    "n_theta": int,
    "per_phase_total": int,
    "n_x": int,
    "x_extent": float,
    "k_c": float,
}
_TOP_KEYS = {
    "family": str,
    "params": list,
    "methods": list,
    "orders": list,
    "eta": float,
    "replications": int,
    "seed": int,
    "threads": int,
    "include_bhom": bool,
    "out": str,
}


@dataclass(frozen=True)
class ExperimentConfig:
    family: str = "gaussian"
    params: tuple = (1.0, 1.5, 2.0, 3.0)
    methods: tuple = ("HET", "UHOM", "BHOMOPT")
    orders: tuple = (1, 2, 3, 4)
    eta: float = 1.0
    replications: int = 0
    seed: int = 20240
    threads: int = 0  # 0 = machine parallelism
    include_bhom: bool = False
    out: str = "cvtomo_out.csv"
    # grid
    extent: float = 0.0  # 0 = choose per state
    points: int = 201
    # sampler
    n_het: int = 100_000
    events_per_point: int = 1_000
    n_theta: int = 12
    per_phase_total: int = 10_000
    n_x: int = 161
    x_extent: float = 8.0
    k_c: float = 6.0

    @classmethod
    def defaults(cls):
        return cls()

    def validate(self):
        if self.family not in ("gaussian", "fock"):
            raise ConfigError(f"family must be gaussian or fock, got {self.family!r}",
                              field="family")
        if not self.params:
            raise ConfigError("params must be a non-empty list", field="params")
        for p in self.params:
            if self.family == "gaussian" and float(p) < 1.0:
                raise ConfigError(f"gaussian mu must be >= 1, got {p}", field="params")
            if self.family == "fock" and (int(p) != p or p < 0):
                raise ConfigError(f"fock n must be a non-negative integer, got {p}",
                                  field="params")
        if not self.methods:
            raise ConfigError("methods must be non-empty", field="methods")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}", field="methods")
        if not self.orders or any(m not in (1, 2, 3, 4) for m in self.orders):
            raise ConfigError("orders must be a non-empty subset of 1..4",
                              field="orders")
        if not 0.0 < self.eta <= 1.0:
            raise ConfigError(f"eta must be in (0, 1], got {self.eta}", field="eta")
        if self.replications < 0:
            raise ConfigError("replications must be >= 0", field="replications")
        if self.threads < 0:
            raise ConfigError("threads must be >= 0 (0 = auto)", field="threads")
        if self.points < 16:
            raise ConfigError("grid points must be >= 16", field="grid.points")
        if self.extent < 0:
            raise ConfigError("grid extent must be >= 0 (0 = auto)", field="grid.extent")
        for name in ("n_het", "events_per_point", "n_theta", "per_phase_total", "n_x"):
            if getattr(self, name) < 1:
                raise ConfigError(f"sampler.{name} must be >= 1", field=f"sampler.{name}")
        if self.x_extent <= 0 or self.k_c <= 0:
            raise ConfigError("sampler.x_extent and sampler.k_c must be > 0",
                              field="sampler")
        return self

    # -- serialization -------------------------------------------------------

    @classmethod
    def from_toml(cls, path):
        with open(path, "rb") as fh:
            try:
                raw = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"config is not valid TOML: {exc}") from exc
        kwargs = {}
        for key, value in raw.items():
            if key == "grid":
                for gkey, gval in value.items():
                    if gkey not in _GRID_KEYS:
                        raise ConfigError(f"unknown grid key {gkey!r}", field=f"grid.{gkey}")
                    kwargs[gkey] = _GRID_KEYS[gkey](gval)
            elif key == "sampler":
                for skey, sval in value.items():
                    if skey not in _SAMPLER_KEYS:
                        raise ConfigError(f"unknown sampler key {skey!r}",
                                          field=f"sampler.{skey}")
                    kwargs[skey] = _SAMPLER_KEYS[skey](sval)
            elif key in _TOP_KEYS:
                caster = _TOP_KEYS[key]
                kwargs[key] = tuple(value) if caster is list else caster(value)
            else:
                raise ConfigError(f"unknown config key {key!r}", field=key)
        return cls(**kwargs).validate()

    def to_toml(self):
        def fmt(value):
            if isinstance(value, bool):
                return "true" if value else "false"
            if isinstance(value, str):
                return f'"{value}"'
            if isinstance(value, float):
                return repr(value)
            if isinstance(value, (list, tuple)):
                return "[" + ", ".join(fmt(v) for v in value) + "]"
            return str(value)

        lines = []
        for key in _TOP_KEYS:
            lines.append(f"{key} = {fmt(getattr(self, key))}")
        lines.append("")
        lines.append("[grid]")
        for key in _GRID_KEYS:
            lines.append(f"{key} = {fmt(getattr(self, key))}")
        lines.append("")
        lines.append("[sampler]")
        for key in _SAMPLER_KEYS:
            lines.append(f"{key} = {fmt(getattr(self, key))}")
        return "\n".join(lines) + "\n"

    def override(self, **kwargs):
        return replace(self, **kwargs).validate()
