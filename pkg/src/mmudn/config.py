"""Scenario configuration: a sectioned key-value text file plus figure presets.

Every physical quantity carries its unit in the key name.  Example::

    [densities]
    lambda_u_per_m2 = 0.0001
    lambda_m_per_m2 = 0.0002
    lambda_mu_per_m2 = 0.0004

    [blockage]
    r_los_m = 100.0
"""

from __future__ import annotations

import configparser
import hashlib
import io
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .allocator import CP_VARIANTS, SpectrumConfig, db_to_linear
from .blockage import BuildingStats, LosModel, avg_los_distance
from .channel import ChannelConfig
from .geometry import DensityConfig, Window, default_window

DELTA_MODES = ("db", "raw")

# (section, key, attribute, type)
_SCHEMA = (
    ("densities", "lambda_u_per_m2", "lambda_u", float),
    ("densities", "lambda_m_per_m2", "lambda_m", float),
    ("densities", "lambda_mu_per_m2", "lambda_mu", float),
    ("channel", "alpha_m", "alpha_m", float),
    ("channel", "alpha_mu", "alpha_mu", float),
    ("channel", "theta_rad", "theta", float),
    ("channel", "noise_power", "noise_power", float),
    ("blockage", "r_los_m", "r_los", float),
    ("blockage", "stats_file", "stats_file", str),
    ("spectrum", "w_mu_hz", "w_mu", float),
    ("spectrum", "w_m_hz", "w_m", float),
    ("spectrum", "f_s_hz", "f_s", float),
    ("spectrum", "delta_db", "delta_db", float),
    ("spectrum", "delta_mode", "delta_mode", str),
    ("spectrum", "epsilon", "epsilon", float),
    ("spectrum", "zeta", "zeta", float),
    ("spectrum", "cp_variant", "cp_variant", str),
    ("window", "half_width_m", "half_width", float),
    ("window", "wraparound", "wraparound", bool),
    ("run", "seed", "seed", int),
    ("run", "n_realizations", "n_realizations", int),
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NetworkConfig:
    lambda_u: float = 1e-4
    lambda_m: float = 2e-4
    lambda_mu: float = 4e-4
    alpha_m: float = 4.0
    alpha_mu: float = 4.0
    theta: float = math.pi / 6
    noise_power: float = 0.0
    r_los: float | None = 100.0
    stats_file: str | None = None
    w_mu: float = 20e6
    w_m: float = 500e6
    f_s: float = 244.14e3
    delta_db: float = 7.0
    delta_mode: str = "db"
    epsilon: float = 0.7
    zeta: float = 0.2
    cp_variant: str = "inversion"
    half_width: float | None = None
    wraparound: bool = True
    seed: int = 0
    n_realizations: int = 10_000
    base_dir: str = "."

    def __post_init__(self):
        if (self.r_los is None) == (self.stats_file is None):
            raise ConfigError("give exactly one of blockage.r_los_m and blockage.stats_file")
        if self.delta_mode not in DELTA_MODES:
            raise ConfigError(f"delta_mode must be one of {DELTA_MODES}")
        if self.cp_variant not in CP_VARIANTS:
            raise ConfigError(f"cp_variant must be one of {CP_VARIANTS}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.n_realizations < 1:
            raise ConfigError("n_realizations must be >= 1")
        try:
            self.densities
            self.spectrum
            ChannelConfig(self.alpha_m, self.alpha_mu, self.theta, self.noise_power)
            if self.half_width is not None:
                Window(self.half_width, self.wraparound)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def densities(self) -> DensityConfig:
        return DensityConfig(self.lambda_m, self.lambda_mu, self.lambda_u)

    @property
    def delta(self) -> float:
        """PAPR threshold as used by the outage formula."""
        return db_to_linear(self.delta_db) if self.delta_mode == "db" else self.delta_db

    @property
    def spectrum(self) -> SpectrumConfig:
        return SpectrumConfig(self.w_mu, self.w_m, self.f_s, self.delta, self.epsilon, self.zeta)

    def building_stats(self) -> BuildingStats | None:
        if self.stats_file is None:
            return None
        path = Path(self.base_dir) / self.stats_file
        try:
            return BuildingStats.from_text(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read building stats {path}: {exc}") from None

    def los_model(self) -> LosModel:
        if self.r_los is not None:
            return LosModel(self.r_los)
        return LosModel(avg_los_distance(self.building_stats()))

    def channel(self) -> ChannelConfig:
        return ChannelConfig(self.alpha_m, self.alpha_mu, self.theta, self.noise_power, self.los_model())

    def window(self) -> Window:
        if self.half_width is None:
            return default_window(self.densities, wraparound=self.wraparound)
        return Window(self.half_width, self.wraparound)

    def to_text(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        for section, key, attr, typ in _SCHEMA:
            value = getattr(self, attr)
            if value is None:
                continue
            if not cp.has_section(section):
                cp.add_section(section)
            if typ is float:
                text = repr(float(value))
            elif typ is bool:
                text = "true" if value else "false"
            else:
                text = str(value)
            cp.set(section, key, text)
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str, base_dir: str = ".") -> "NetworkConfig":
        cp = configparser.ConfigParser(interpolation=None)
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from None
        known = {(s, k) for s, k, _, _ in _SCHEMA}
        for section in cp.sections():
            for key in cp[section]:
                if (section, key) not in known:
                    raise ConfigError(f"unknown config key [{section}] {key}")
        values = {}
        for section, key, attr, typ in _SCHEMA:
            if not cp.has_option(section, key):
                continue
            try:
                if typ is bool:
                    values[attr] = cp.getboolean(section, key)
                elif typ is int:
                    values[attr] = int(cp.get(section, key))
                else:
                    values[attr] = typ(cp.get(section, key))
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from None
        if "stats_file" in values and "r_los" not in values:
            values["r_los"] = None
        return cls(**values, base_dir=base_dir)

    @classmethod
    def load(cls, path) -> "NetworkConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_text(text, base_dir=str(path.parent))

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    def with_overrides(self, **kw) -> "NetworkConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self


def config_keys() -> list[str]:
    return [f.name for f in fields(NetworkConfig)]


@dataclass(frozen=True)
class Preset:
    name: str
    config: NetworkConfig
    command: str
    lambda_hats: tuple = ()
    w_m_list: tuple = ()
    zeta_list: tuple = ()
    links: tuple = ("mmw_dl", "mmw_ul", "muw_dl", "muw_ul")
    description: str = ""


_FIG5 = NetworkConfig(lambda_u=1e-4, lambda_m=2e-4, lambda_mu=4e-4, r_los=100.0, w_mu=20e6,
                      f_s=244.14e3, delta_db=7.0, epsilon=0.7, zeta=0.2, w_m=500e6)

PRESETS = {
    "fig2": Preset("fig2", replace(_FIG5, n_realizations=2000), "se",
                   lambda_hats=(10.0, 30.0, 100.0, 300.0, 1000.0), links=("muw_dl", "muw_ul"),
                   description="microwave DL/UL SE versus density ratio, with bounds and asymptote"),
    "fig3": Preset("fig3", replace(_FIG5, n_realizations=2000), "se",
                   lambda_hats=(10.0, 30.0, 100.0, 300.0, 1000.0), links=("mmw_dl", "mmw_ul"),
                   description="mmW DL/UL SE versus density ratio (R_L = 100 m, 30 degree beams)"),
    "fig4": Preset("fig4", _FIG5, "optimize", w_m_list=tuple(x * 1e6 for x in (100, 250, 500, 750, 1000)),
                   zeta_list=(0.2,), description="maximized DL rate versus mmW bandwidth"),
    "fig5a": Preset("fig5a", _FIG5, "optimize", w_m_list=tuple(x * 1e6 for x in (100, 250, 500, 750, 1000)),
                    zeta_list=(0.2,), description="microwave UL share versus mmW bandwidth (zeta = 0.2)"),
    "fig5b": Preset("fig5b", _FIG5, "optimize", w_m_list=(500e6,),
                    zeta_list=(0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0),
                    description="microwave UL share versus UL/DL ratio (W_m = 500 MHz)"),
}
