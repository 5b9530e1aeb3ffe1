"""Poisson deployments, nearest-BS association and random scheduling.

Points are ``(n, 2)`` float arrays in meters.  A :class:`Window` is a square
centred at the origin; with ``wraparound`` its opposite edges are glued so
distances follow the torus metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ._validation import check_points, check_positive

PROBE = 0
"""Index of the typical (probe) user in every sampled deployment."""


@dataclass(frozen=True)
class Window:
    half_width: float
    wraparound: bool = True

    def __post_init__(self):
        check_positive(self.half_width, "half_width")

    @property
    def side(self) -> float:
        return 2.0 * self.half_width

    @property
    def area(self) -> float:
        return self.side**2

    def displacement(self, start, end) -> np.ndarray:
        """Vector(s) from ``start`` to ``end``, minimum-image on a torus."""
        d = np.asarray(end, dtype=float) - np.asarray(start, dtype=float)
        if self.wraparound:
            d = np.remainder(d + self.half_width, self.side) - self.half_width
        return d

    def distance(self, a, b) -> np.ndarray:
        d = self.displacement(a, b)
        return np.hypot(d[..., 0], d[..., 1])

    def _to_box(self, points: np.ndarray) -> np.ndarray:
        # cKDTree with boxsize wants coordinates in [0, side)
        shifted = np.remainder(points + self.half_width, self.side)
        shifted[shifted >= self.side] = 0.0
        return shifted

    def tree(self, points) -> cKDTree:
        points = np.asarray(points, dtype=float)
        # unbalanced trees build about twice as fast and query no slower here
        kw = dict(balanced_tree=False, compact_nodes=False)
        if self.wraparound:
            return cKDTree(self._to_box(points), boxsize=self.side, **kw)
        return cKDTree(points, **kw)

    def query_points(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return self._to_box(points) if self.wraparound else points

    def contains(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        h = self.half_width
        return np.all((points >= -h) & (points < h), axis=-1)


@dataclass(frozen=True)
class DensityConfig:
    """BS and user densities per square meter."""

    lambda_m: float
    lambda_mu: float
    lambda_u: float

    def __post_init__(self):
        for name in ("lambda_m", "lambda_mu", "lambda_u"):
            check_positive(getattr(self, name), name)

    @property
    def lambda_hat_m(self) -> float:
        return self.lambda_m / self.lambda_u

    @property
    def lambda_hat_mu(self) -> float:
        return self.lambda_mu / self.lambda_u

    @classmethod
    def from_ratios(cls, lambda_hat_m: float, lambda_hat_mu: float, lambda_u: float) -> "DensityConfig":
        return cls(lambda_hat_m * lambda_u, lambda_hat_mu * lambda_u, lambda_u)


@dataclass(frozen=True, eq=False)
class Deployment:
    """One sampled network realization.

    ``sched_mmw[b]`` / ``sched_muw[b]`` hold the user scheduled at BS ``b`` in
    the current slot, or ``-1`` when the BS has no associated user (turned
    off).  User :data:`PROBE` sits at the origin.
    """

    window: Window
    users: np.ndarray
    mmw_bs: np.ndarray
    muw_bs: np.ndarray
    assoc_mmw: np.ndarray
    assoc_muw: np.ndarray
    sched_mmw: np.ndarray
    sched_muw: np.ndarray
    probe: int = PROBE
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("users", "mmw_bs", "muw_bs", "assoc_mmw", "assoc_muw", "sched_mmw", "sched_muw"):
            getattr(self, name).setflags(write=False)

    def bs(self, tier: str) -> np.ndarray:
        return {"mmw": self.mmw_bs, "muw": self.muw_bs}[tier]

    def assoc(self, tier: str) -> np.ndarray:
        return {"mmw": self.assoc_mmw, "muw": self.assoc_muw}[tier]

    def sched(self, tier: str) -> np.ndarray:
        return {"mmw": self.sched_mmw, "muw": self.sched_muw}[tier]

    def active_bs(self, tier: str) -> np.ndarray:
        return np.flatnonzero(self.sched(tier) >= 0)

    def active_users(self, tier: str) -> set[int]:
        s = self.sched(tier)
        return set(s[s >= 0].tolist())


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for realization ``index`` of experiment ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def sample_ppp(density: float, window: Window, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous PPP of the given density on ``window``."""
    density = check_positive(density, "density")
    n = rng.poisson(density * window.area)
    return rng.uniform(-window.half_width, window.half_width, size=(n, 2))


def associate(users, bs, window: Window, max_distance: float = np.inf) -> np.ndarray:
    """Index of the nearest BS for every user.

    Nearest distance is equivalent to maximum average received power under
    unit gains and a common path-loss exponent.  Exact ties go to the lowest
    BS index (checked among the three nearest candidates).  Users with no BS
    within ``max_distance`` get index ``len(bs)``.
    """
    users = check_points(users, "users")
    bs = check_points(bs, "bs")
    if len(bs) == 0:
        raise ValueError("cannot associate users with an empty BS set")
    if len(users) == 0:
        return np.empty(0, dtype=np.intp)
    tree = window.tree(bs)
    k = min(3, len(bs))
    d, idx = tree.query(window.query_points(users), k=k, distance_upper_bound=max_distance)
    if k == 1:
        return np.asarray(idx, dtype=np.intp)
    tied = (d == d[:, :1]) & np.isfinite(d)
    tied[:, 0] = True
    return np.where(tied, idx, np.iinfo(np.intp).max).min(axis=1).astype(np.intp)


def schedule(assoc, n_bs: int, rng: np.random.Generator, forced: int | None = None) -> np.ndarray:
    """Pick one associated user uniformly at random per BS.

    Returns an array of length ``n_bs`` holding the scheduled user index, or
    ``-1`` for BSs without users.  ``forced`` names a user that is scheduled
    at its own BS regardless of the draw; the other BSs are unaffected.
    """
    assoc = np.asarray(assoc, dtype=np.intp)
    sched = np.full(int(n_bs), -1, dtype=np.intp)
    if assoc.size == 0:
        return sched
    keys = rng.random(assoc.size)
    if forced is not None:
        keys[forced] = -1.0
    order = np.lexsort((keys, assoc))
    bs_sorted = assoc[order]
    first = np.flatnonzero(np.r_[True, bs_sorted[1:] != bs_sorted[:-1]])
    sched[bs_sorted[first]] = order[first]
    return sched


def _disk_points(centers: np.ndarray, counts: np.ndarray, radius: float, rng) -> tuple[np.ndarray, np.ndarray]:
    owner = np.repeat(np.arange(len(centers)), counts)
    r = radius * np.sqrt(rng.random(owner.size))
    phi = 2.0 * math.pi * rng.random(owner.size)
    pts = centers[owner] + np.column_stack((r * np.cos(phi), r * np.sin(phi)))
    return pts, owner


def sample_serving_layer(users, density: float, window: Window, rng: np.random.Generator,
                         reach: float = 15.0) -> tuple[np.ndarray, np.ndarray]:
    """Sample a BS tier and associate ``users`` with it.

    Only BSs that can possibly be nearest to some user are generated: the PPP
    is drawn on the union of disks of radius ``D`` (with ``density*pi*D**2 ==
    reach``) around the users.  BSs outside that union are never associated,
    never active and so never affect any SIR.  If some user has no BS within
    ``D`` the complement of the union is filled in too, so the returned layer
    is always exact.  Falls back to the whole window when that is cheaper.

    Returns ``(bs_points, assoc)``.
    """
    users = check_points(users, "users")
    density = check_positive(density, "density")
    radius = math.sqrt(reach / (math.pi * density))
    if density * window.area <= reach * len(users) or radius >= window.half_width:
        bs = sample_ppp(density, window, rng)
        while len(bs) == 0:
            bs = sample_ppp(density, window, rng)
        return bs, associate(users, bs, window)

    counts = rng.poisson(reach, size=len(users))
    pts, owner = _disk_points(users, counts, radius, rng)
    if window.wraparound:
        pts = np.remainder(pts + window.half_width, window.side) - window.half_width
    else:
        keep = window.contains(pts)
        pts, owner = pts[keep], owner[keep]

    # a candidate is kept only by the nearest user whose disk holds it, so
    # overlapping disks are not double counted
    utree = window.tree(users)
    if len(users) > 1:
        nn_d, _ = utree.query(window.query_points(users), k=2)
        crowded = nn_d[:, 1] < 2.0 * radius
    else:
        crowded = np.zeros(1, dtype=bool)
    check = crowded[owner]
    keep = np.ones(len(pts), dtype=bool)
    if check.any():
        _, nearest = utree.query(window.query_points(pts[check]))
        keep[check] = nearest == owner[check]
    bs = pts[keep]

    if len(bs):
        assoc = associate(users, bs, window, max_distance=radius)
        if np.all(assoc < len(bs)):
            return bs, assoc

    extra = sample_ppp(density, window, rng)
    if len(extra):
        d, _ = utree.query(window.query_points(extra), distance_upper_bound=radius)
        extra = extra[~np.isfinite(d)]
    bs = np.vstack([bs, extra])
    while len(bs) == 0:
        bs = sample_ppp(density, window, rng)
    return bs, associate(users, bs, window)


def _full_layer(users, density, window, rng):
    bs = sample_ppp(density, window, rng)
    while len(bs) == 0:
        bs = sample_ppp(density, window, rng)
    return bs, associate(users, bs, window)


def sample_deployment(densities: DensityConfig, window: Window, rng: np.random.Generator,
                      *, prune: bool = True, tiers=("mmw", "muw")) -> Deployment:
    """Draw users (probe at the origin first), the BS tiers and a schedule.

    The probe takes part in its serving BS's user pool and is the scheduled
    user there: SE is evaluated on the slots in which the probe is served.
    All other BSs schedule uniformly among their users.  A tier left out of
    ``tiers`` is returned empty.
    """
    others = sample_ppp(densities.lambda_u, window, rng)
    users = np.vstack([np.zeros((1, 2)), others])
    layer = sample_serving_layer if prune else _full_layer
    out = {}
    for tier, density in (("mmw", densities.lambda_m), ("muw", densities.lambda_mu)):
        if tier in tiers:
            out[tier] = layer(users, density, window, rng)
        else:
            out[tier] = (np.empty((0, 2)), np.full(len(users), -1, dtype=np.intp))
    sched = {}
    for tier, (bs, assoc) in out.items():
        sched[tier] = schedule(assoc, len(bs), rng, forced=PROBE) if tier in tiers else np.empty(0, dtype=np.intp)
    return Deployment(window, users, out["mmw"][0], out["muw"][0], out["mmw"][1], out["muw"][1],
                      sched["mmw"], sched["muw"])


def default_window(densities: DensityConfig, *, factor: float = 20.0, wraparound: bool = True) -> Window:
    """Window with half-width ``factor / sqrt(pi * lambda_min)``."""
    lam_min = min(densities.lambda_m, densities.lambda_mu, densities.lambda_u)
    return Window(factor / math.sqrt(math.pi * lam_min), wraparound)
