"""SIR at the probe user for the four links of a deployment.

Every transmitter uses unit power, fades are i.i.d. ``Exp(1)`` (Rayleigh)
and gains are 1 in the main lobe, 0 elsewhere.  mmW paths longer than the
LOS distance carry no power; microwave paths are never blocked.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_beam_width, check_nonnegative, check_path_loss_exponent
from .blockage import LosModel
from .geometry import Deployment, Window


class Link(str, enum.Enum):
    MMW_DL = "mmw_dl"
    MMW_UL = "mmw_ul"
    MUW_DL = "muw_dl"
    MUW_UL = "muw_ul"

    @property
    def tier(self) -> str:
        return self.value.split("_")[0]

    @property
    def uplink(self) -> bool:
        return self.value.endswith("ul")


ALL_LINKS = tuple(Link)


@dataclass(frozen=True)
class ChannelConfig:
    alpha_m: float = 4.0
    alpha_mu: float = 4.0
    theta: float = 2 * math.pi
    noise_power: float = 0.0
    los: LosModel = LosModel(math.inf)

    def __post_init__(self):
        check_path_loss_exponent(self.alpha_m, "alpha_m")
        check_path_loss_exponent(self.alpha_mu, "alpha_mu")
        object.__setattr__(self, "theta", check_beam_width(self.theta))
        check_nonnegative(self.noise_power, "noise_power")


@dataclass(frozen=True)
class SirSample:
    link: Link
    value: float

    @property
    def infinite(self) -> bool:
        return math.isinf(self.value)


def beam_covers(tx, target, rx, theta: float, window: Window | None = None):
    """Whether a beam of width ``theta`` from ``tx`` aimed at ``target`` covers ``rx``.

    Vectorized over leading axes.  A receiver on top of the transmitter
    counts as covered.
    """
    if theta >= 2 * math.pi:
        shape = np.broadcast_shapes(np.shape(tx), np.shape(target), np.shape(rx))[:-1]
        out = np.ones(shape, dtype=bool)
        return bool(out) if out.ndim == 0 else out
    if window is None:
        u = np.asarray(target, float) - np.asarray(tx, float)
        v = np.asarray(rx, float) - np.asarray(tx, float)
    else:
        u = window.displacement(tx, target)
        v = window.displacement(tx, rx)
    nu = np.hypot(u[..., 0], u[..., 1])
    nv = np.hypot(v[..., 0], v[..., 1])
    if np.any(nu == 0):
        raise ValueError("transmitter and beam target coincide")
    dot = u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1]
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.clip(dot / (nu * nv), -1.0, 1.0)
    angle = np.arccos(cos)
    out = (nv == 0) | (angle <= 0.5 * theta * (1 + 1e-12))
    return bool(out) if out.ndim == 0 else out


def _ratio(signal: float, interference: float) -> float:
    if signal == 0.0:
        return 0.0
    if interference == 0.0:
        return math.inf
    return signal / interference


def _fades(rng, n: int, fades) -> np.ndarray:
    if fades is None:
        return rng.exponential(1.0, size=n)
    fades = np.asarray(fades, dtype=float)
    if fades.shape != (n,):
        raise ValueError(f"expected {n} fades (serving first), got shape {fades.shape}")
    return fades


def _link_geometry(dep: Deployment, tier: str, uplink: bool):
    """Serving distance plus (distance, beam-covers args) of each interferer."""
    w = dep.window
    users, bs = dep.users, dep.bs(tier)
    sched = dep.sched(tier)
    serving = int(dep.assoc(tier)[dep.probe])
    active = np.flatnonzero(sched >= 0)
    active = active[active != serving]
    served_users = users[sched[active]]
    if uplink:
        rx = bs[serving]
        tx, target = served_users, bs[active]
    else:
        rx = users[dep.probe]
        tx, target = bs[active], served_users
    r0 = float(w.distance(users[dep.probe], bs[serving]))
    r = w.distance(tx, rx) if len(tx) else np.empty(0)
    return r0, r, tx, target, rx


def _sir(dep: Deployment, cfg: ChannelConfig, rng, link: Link, fades) -> SirSample:
    mmw = link.tier == "mmw"
    alpha = cfg.alpha_m if mmw else cfg.alpha_mu
    r0, r, tx, target, rx = _link_geometry(dep, link.tier, link.uplink)
    g = _fades(rng, len(r) + 1, fades)
    gain = np.ones(len(r))
    signal = g[0] * r0**-alpha
    if mmw:
        if r0 > cfg.los.r_los:
            signal = 0.0
        if len(r):
            gain = (r <= cfg.los.r_los) & beam_covers(tx, target, rx, cfg.theta, dep.window)
    with np.errstate(divide="ignore"):
        terms = g[1:] * np.where(gain, r, np.inf) ** -alpha
    interference = math.fsum(terms) + cfg.noise_power
    return SirSample(link, _ratio(signal, interference))


def sir_mmw_dl(dep: Deployment, cfg: ChannelConfig, rng=None, *, fades=None) -> SirSample:
    """mmW downlink SIR: interferers are the other active mmW BSs whose
    beams (aimed at their own scheduled users) cover the probe over a LOS path."""
    return _sir(dep, cfg, rng, Link.MMW_DL, fades)


def sir_mmw_ul(dep: Deployment, cfg: ChannelConfig, rng=None, *, fades=None) -> SirSample:
    """mmW uplink SIR at the probe's serving BS; interferers are the users
    scheduled at the other active mmW BSs, beaming at those BSs."""
    return _sir(dep, cfg, rng, Link.MMW_UL, fades)


def sir_muw_dl(dep: Deployment, cfg: ChannelConfig, rng=None, *, fades=None) -> SirSample:
    return _sir(dep, cfg, rng, Link.MUW_DL, fades)


def sir_muw_ul(dep: Deployment, cfg: ChannelConfig, rng=None, *, fades=None) -> SirSample:
    return _sir(dep, cfg, rng, Link.MUW_UL, fades)


SIR_FUNCTIONS = {
    Link.MMW_DL: sir_mmw_dl,
    Link.MMW_UL: sir_mmw_ul,
    Link.MUW_DL: sir_muw_dl,
    Link.MUW_UL: sir_muw_ul,
}
