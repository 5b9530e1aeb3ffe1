"""Average LOS distance from building statistics.

Buildings are reduced to a handful of aggregates (mean perimeter, mean
footprint area, ground coverage and a log-normal height law).  From those the
2D blockage density ``beta``, the height factor ``eta`` and the average LOS
distance ``r_los = 2 (1 - kappa) / (beta * eta)`` follow.  A link of length
``r`` is LOS iff ``r <= r_los``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
from scipy import integrate, stats
from shapely.geometry import Polygon, box, shape
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_nonnegative, check_open_unit, check_positive

DEFAULT_FLOOR_HEIGHT = 3.0

# Reference building statistics for three districts of Seoul: inputs
# (rho, A, kappa, mean height, log-normal mu/sigma) and reported outputs.
SEOUL_DISTRICTS = {
    "gangnam": dict(rho=59.02, area=218.60, kappa=0.3477, mean_height=14.23, mu_h=1.62, sigma_h=0.27,
                    beta=0.073, eta=0.36, r_los=49.61, region_area=4e6),
    "jongro": dict(rho=39.29, area=107.67, kappa=0.4690, mean_height=8.12, mu_h=0.69, sigma_h=0.55,
                   beta=0.014, eta=0.22, r_los=33.33, region_area=1e6),
    "yonsei": dict(rho=51.99, area=173.95, kappa=0.2548, mean_height=11.14, mu_h=1.10, sigma_h=0.34,
                   beta=0.056, eta=0.13, r_los=198.76, region_area=4e6),
}


@dataclass(frozen=True)
class LosModel:
    r_los: float

    def __post_init__(self):
        check_positive(self.r_los, "r_los", allow_inf=True)


@dataclass(frozen=True)
class BuildingStats:
    """Geographic aggregates feeding the LOS-distance computation.

    ``mu_h``/``sigma_h`` parametrize ``ln H ~ N(mu_h, sigma_h**2)`` with H in
    meters.  ``bs_height`` defaults to the mean of that law, ``E[H]``.
    """

    rho: float
    area: float
    kappa: float
    mu_h: float
    sigma_h: float
    bs_height: float | None = None

    def __post_init__(self):
        check_positive(self.rho, "rho")
        check_positive(self.area, "area")
        check_open_unit(self.kappa, "kappa")
        check_nonnegative(self.sigma_h, "sigma_h")
        if not math.isfinite(self.mu_h) and self.mu_h != -math.inf:
            raise ValueError(f"mu_h must be finite (or -inf for zero heights), got {self.mu_h!r}")
        if self.bs_height is None:
            object.__setattr__(self, "bs_height", self.mean_height)
        else:
            check_nonnegative(self.bs_height, "bs_height")

    @property
    def mean_height(self) -> float:
        return math.exp(self.mu_h + 0.5 * self.sigma_h**2)

    def height_cdf(self, h):
        """``Pr(H <= h)``; a zero ``sigma_h`` is a point mass at ``exp(mu_h)``."""
        h = np.asarray(h, dtype=float)
        if self.mu_h == -math.inf:
            return np.where(h >= 0, 1.0, 0.0)
        if self.sigma_h == 0:
            return np.where(h >= math.exp(self.mu_h), 1.0, 0.0)
        return stats.lognorm.cdf(h, self.sigma_h, scale=math.exp(self.mu_h))

    def to_text(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)!r}\n" for f in fields(self))

    @classmethod
    def from_text(cls, text: str) -> "BuildingStats":
        values = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ValueError(f"malformed line: {raw!r}")
            values[key.strip()] = float(val)
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown keys: {sorted(unknown)}")
        return cls(**values)


@dataclass(frozen=True)
class BuildingRecord:
    footprint: Polygon
    floors: int

    def __post_init__(self):
        poly = self.footprint
        if not isinstance(poly, Polygon):
            poly = Polygon(poly)
            object.__setattr__(self, "footprint", poly)
        if not poly.is_valid:
            raise ValueError("building footprint is not a simple polygon")
        if poly.area <= 0:
            raise ValueError("building footprint has zero area")
        if int(self.floors) != self.floors or self.floors < 1:
            raise ValueError(f"floors must be a positive integer, got {self.floors!r}")
        object.__setattr__(self, "floors", int(self.floors))


def district_stats(name: str, bs_height: float | None = None) -> BuildingStats:
    """:class:`BuildingStats` built from a row of :data:`SEOUL_DISTRICTS`.

    The BS height defaults to the mean of the row's log-normal law.  The
    tabulated mean height is in meters but is not the mean of that law, so
    pass it explicitly (``bs_height=row["mean_height"]``) only to study that
    reading.
    """
    row = SEOUL_DISTRICTS[name.lower()]
    return BuildingStats(row["rho"], row["area"], row["kappa"], row["mu_h"], row["sigma_h"], bs_height)


def los_indicator(model: LosModel, r):
    """1 where ``r <= r_los`` (boundary included), else 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(np.isnan(r)):
        raise ValueError("link distance must be non-negative")
    out = (r <= model.r_los).astype(int)
    return int(out) if out.ndim == 0 else out


def beta_param(stats_: BuildingStats) -> float:
    return -2.0 * stats_.rho * math.log1p(-stats_.kappa) / (math.pi * stats_.area)


def eta_param(stats_: BuildingStats) -> float:
    """Fraction of a BS-to-ground link cleared on average by building heights.

    Integral over ``s`` in [0, 1] of ``Pr(H <= (1 - s) B)``.
    """
    B = stats_.bs_height
    if B == 0:
        return float(stats_.height_cdf(0.0))
    if stats_.sigma_h == 0 or stats_.mu_h == -math.inf:
        # step CDF: Pr(H <= (1-s)B) = 1 for s <= 1 - h0/B
        h0 = 0.0 if stats_.mu_h == -math.inf else math.exp(stats_.mu_h)
        return max(0.0, 1.0 - h0 / B)
    val, _ = integrate.quad(lambda s: float(stats_.height_cdf((1.0 - s) * B)), 0.0, 1.0,
                            epsabs=1e-6, epsrel=1e-8, limit=200)
    return min(max(val, 0.0), 1.0)


def avg_los_distance(stats_: BuildingStats, *, beta: float | None = None, eta: float | None = None) -> float:
    """``2 (1 - kappa) / (beta eta)``; ``beta``/``eta`` may be overridden."""
    beta = beta_param(stats_) if beta is None else beta
    eta = eta_param(stats_) if eta is None else eta
    if beta * eta <= 0:
        raise ValueError("beta * eta == 0: no blockage, the LOS distance is unbounded")
    return 2.0 * (1.0 - stats_.kappa) / (beta * eta)


def fit_lognormal(heights) -> tuple[float, float]:
    """Maximum-likelihood ``(mu, sigma)`` of a log-normal sample."""
    logs = np.log(np.asarray(heights, dtype=float))
    return float(logs.mean()), float(logs.std())


def ingest_buildings(records, region_area: float, floor_height: float = DEFAULT_FLOOR_HEIGHT,
                     region: Polygon | None = None) -> BuildingStats:
    """Aggregate building records into :class:`BuildingStats`.

    If ``region`` is given, footprints are clipped to it before summing the
    covered area (buildings straddling the boundary count only their inside
    part); mean perimeter and area always use whole footprints.
    """
    records = list(records)
    if not records:
        raise ValueError("no building records")
    region_area = check_positive(region_area, "region_area")
    floor_height = check_positive(floor_height, "floor_height")
    polys = [r.footprint for r in records]
    perimeters = np.array([p.length for p in polys])
    areas = np.array([p.area for p in polys])
    covered = sum(p.intersection(region).area for p in polys) if region is not None else areas.sum()
    if covered >= region_area:
        raise ValueError(f"footprints cover {covered:.6g} m^2, not less than region_area {region_area:.6g} m^2")
    heights = np.array([r.floors for r in records], dtype=float) * floor_height
    mu, sigma = fit_lognormal(heights)
    return BuildingStats(float(perimeters.mean()), float(areas.mean()), covered / region_area, mu, sigma)


def ingest_table(perimeters, areas, floors, region_area: float,
                 floor_height: float = DEFAULT_FLOOR_HEIGHT) -> BuildingStats:
    """Same as :func:`ingest_buildings` from per-building scalars."""
    perimeters = np.asarray(perimeters, dtype=float)
    areas = np.asarray(areas, dtype=float)
    floors = np.asarray(floors, dtype=float)
    if perimeters.size == 0:
        raise ValueError("no building records")
    if not (perimeters.shape == areas.shape == floors.shape):
        raise ValueError("perimeter, area and floors columns differ in length")
    if np.any(areas <= 0) or np.any(perimeters <= 0):
        raise ValueError("perimeters and areas must be positive")
    if np.any(floors < 1) or np.any(floors != np.round(floors)):
        raise ValueError("floors must be positive integers")
    region_area = check_positive(region_area, "region_area")
    if areas.sum() >= region_area:
        raise ValueError("footprints cover the whole region")
    mu, sigma = fit_lognormal(floors * check_positive(floor_height, "floor_height"))
    return BuildingStats(float(perimeters.mean()), float(areas.mean()), float(areas.sum() / region_area), mu, sigma)


def read_geojson(path) -> list[BuildingRecord]:
    """Building records from a FeatureCollection with an integer ``floors`` property.

    Coordinates must already be in a projected, meter-based CRS.
    MultiPolygons contribute one record per part.
    """
    data = json.loads(Path(path).read_text())
    if data.get("type") != "FeatureCollection":
        raise ValueError(f"{path}: expected a GeoJSON FeatureCollection")
    records = []
    for i, feat in enumerate(data.get("features", [])):
        props = feat.get("properties") or {}
        if "floors" not in props:
            raise ValueError(f"{path}: feature {i} has no 'floors' property")
        geom = shape(feat["geometry"])
        parts = list(geom.geoms) if geom.geom_type == "MultiPolygon" else [geom]
        for part in parts:
            if part.geom_type != "Polygon":
                raise ValueError(f"{path}: feature {i} is a {part.geom_type}, not a polygon")
            try:
                records.append(BuildingRecord(part, props["floors"]))
            except ValueError as exc:
                raise ValueError(f"{path}: feature {i}: {exc}") from None
    return records


def read_building_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(perimeter, area, floors)`` columns from a CSV with those headers."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no rows")
    missing = {"perimeter", "area", "floors"} - set(rows[0])
    if missing:
        raise ValueError(f"{path}: missing columns {sorted(missing)}")
    cols = [np.array([float(r[k]) for r in rows]) for k in ("perimeter", "area", "floors")]
    return cols[0], cols[1], cols[2]


def square_region(half_width: float) -> Polygon:
    return box(-half_width, -half_width, half_width, half_width)


class LosDistanceEstimator(BaseEstimator):
    """Estimate the average LOS distance from building data, then classify links.

    ``fit`` accepts either a list of :class:`BuildingRecord` or an array of
    shape ``(n, 3)`` with columns perimeter, area and floors.  ``predict``
    maps link distances to the 0/1 LOS indicator.

    Parameters
    ----------
    region_area : float
        Area of the surveyed region in m^2.
    floor_height : float, default 3.0
        Height of one building floor in meters.
    region : shapely Polygon, optional
        Region outline used to clip footprints when computing coverage.
    """

    def __init__(self, region_area=None, floor_height=DEFAULT_FLOOR_HEIGHT, region=None):
        self.region_area = region_area
        self.floor_height = floor_height
        self.region = region

    def fit(self, X, y=None):
        if self.region_area is None:
            raise ValueError("region_area must be set before fitting")
        if isinstance(X, (list, tuple)) and X and isinstance(X[0], BuildingRecord):
            self.stats_ = ingest_buildings(X, self.region_area, self.floor_height, self.region)
        else:
            X = np.asarray(X, dtype=float)
            if X.ndim != 2 or X.shape[1] != 3:
                raise ValueError("expected building records or an array of shape (n, 3)")
            self.stats_ = ingest_table(X[:, 0], X[:, 1], X[:, 2], self.region_area, self.floor_height)
        self.beta_ = beta_param(self.stats_)
        self.eta_ = eta_param(self.stats_)
        self.r_los_ = avg_los_distance(self.stats_, beta=self.beta_, eta=self.eta_)
        return self

    @classmethod
    def from_stats(cls, building_stats: BuildingStats) -> "LosDistanceEstimator":
        est = cls()
        est.stats_ = building_stats
        est.beta_ = beta_param(building_stats)
        est.eta_ = eta_param(building_stats)
        est.r_los_ = avg_los_distance(building_stats, beta=est.beta_, eta=est.eta_)
        return est

    @property
    def los_model_(self) -> LosModel:
        check_is_fitted(self, "r_los_")
        return LosModel(self.r_los_)

    def predict(self, X):
        check_is_fitted(self, "r_los_")
        return los_indicator(self.los_model_, np.ravel(np.asarray(X, dtype=float)))

    def report(self) -> dict:
        check_is_fitted(self, "r_los_")
        return {**asdict(self.stats_), "beta": self.beta_, "eta": self.eta_, "r_los": self.r_los_}
