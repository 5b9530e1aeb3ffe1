import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from shapely.geometry import box

from mmudn.blockage import (
    SEOUL_DISTRICTS,
    BuildingRecord,
    BuildingStats,
    LosDistanceEstimator,
    LosModel,
    avg_los_distance,
    beta_param,
    district_stats,
    eta_param,
    fit_lognormal,
    ingest_buildings,
    ingest_table,
    los_indicator,
    read_building_csv,
    read_geojson,
    square_region,
)


def test_los_indicator_boundary():
    m = LosModel(100.0)
    assert los_indicator(m, 99.9) == 1
    assert los_indicator(m, 100.0) == 1
    assert los_indicator(m, 100.1) == 0
    assert los_indicator(LosModel(math.inf), 1e9) == 1
    with pytest.raises(ValueError):
        los_indicator(m, -1.0)


def test_beta_table_values():
    assert beta_param(district_stats("gangnam")) == pytest.approx(0.073, abs=1e-3)
    assert beta_param(district_stats("yonsei")) == pytest.approx(0.056, abs=1e-3)
    # Jongro's tabulated 0.014 is off by a factor of ten from its own inputs
    assert beta_param(district_stats("jongro")) == pytest.approx(0.1474, abs=1e-3)


def test_beta_vanishes_without_coverage():
    assert beta_param(BuildingStats(10.0, 5.0, 1e-12, 1.0, 0.2)) < 1e-10
    with pytest.raises(ValueError):
        BuildingStats(10.0, 5.0, 1.0, 1.0, 0.2)


def test_eta_degenerate_heights():
    assert eta_param(BuildingStats(4.0, 1.0, 0.2, -math.inf, 0.0, bs_height=10.0)) == 1.0
    tall = BuildingStats(4.0, 1.0, 0.2, math.log(20.0), 0.0, bs_height=10.0)
    assert eta_param(tall) == 0.0
    half = BuildingStats(4.0, 1.0, 0.2, math.log(5.0), 0.0, bs_height=10.0)
    assert eta_param(half) == pytest.approx(0.5)


def test_eta_matches_direct_integral():
    s = BuildingStats(50.0, 200.0, 0.3, 1.2, 0.4, bs_height=6.0)
    grid = np.linspace(0.0, 1.0, 200_001)
    direct = np.trapezoid(s.height_cdf((1 - grid) * 6.0), grid)
    assert eta_param(s) == pytest.approx(direct, abs=1e-6)


@given(st.floats(1.0, 40.0), st.floats(0.01, 1.0))
def test_eta_increases_with_bs_height(b, dh):
    lo = BuildingStats(50.0, 200.0, 0.3, 1.5, 0.3, bs_height=b)
    hi = BuildingStats(50.0, 200.0, 0.3, 1.5, 0.3, bs_height=b + dh)
    assert eta_param(hi) >= eta_param(lo) - 1e-6


def test_avg_los_distance_arithmetic():
    s = BuildingStats(4.0, 1.0, 0.5, 1.0, 0.1)
    assert avg_los_distance(s, beta=1.0, eta=1.0) == pytest.approx(1.0)
    g = district_stats("gangnam")
    assert avg_los_distance(g, beta=0.073, eta=0.36) == pytest.approx(49.6, abs=0.1)
    y = district_stats("yonsei")
    assert avg_los_distance(y, beta=0.056, eta=0.13) == pytest.approx(204.7, abs=0.1)
    with pytest.raises(ValueError):
        avg_los_distance(s, beta=0.0, eta=1.0)


def test_recomputed_rows():
    # heights: B taken as the mean of the fitted log-normal law
    y = LosDistanceEstimator.from_stats(district_stats("yonsei"))
    assert y.eta_ == pytest.approx(0.135, abs=1e-3)
    assert y.r_los_ == pytest.approx(198.76, rel=0.05)
    j = LosDistanceEstimator.from_stats(district_stats("jongro"))
    assert j.eta_ == pytest.approx(0.22, abs=0.005)
    assert j.r_los_ == pytest.approx(33.3, abs=2.0)


def test_pipeline_deterministic():
    a = LosDistanceEstimator.from_stats(district_stats("gangnam")).report()
    b = LosDistanceEstimator.from_stats(district_stats("gangnam")).report()
    assert a == b


def test_ingest_two_unit_squares():
    recs = [BuildingRecord(box(0, 0, 1, 1), 1), BuildingRecord(box(3, 3, 4, 4), 1)]
    s = ingest_buildings(recs, 10.0, 3.0)
    assert (s.rho, s.area, s.kappa) == pytest.approx((4.0, 1.0, 0.2))
    assert s.mu_h == pytest.approx(math.log(3.0))
    assert s.sigma_h == 0.0
    assert s.bs_height == pytest.approx(3.0)


def test_ingest_errors():
    with pytest.raises(ValueError):
        ingest_buildings([], 10.0)
    with pytest.raises(ValueError):
        ingest_buildings([BuildingRecord(box(0, 0, 2, 2), 1)], 3.0)
    with pytest.raises(ValueError):
        BuildingRecord(box(0, 0, 1, 1), 0)


def test_ingest_clips_to_region():
    recs = [BuildingRecord(box(-1, -1, 1, 1), 2), BuildingRecord(box(4, 0, 6, 2), 2)]
    s = ingest_buildings(recs, 100.0, region=square_region(5.0))
    # second building straddles x=5: only half of it counts toward coverage
    assert s.kappa == pytest.approx((4.0 + 2.0) / 100.0)
    assert s.area == pytest.approx(4.0)


def test_lognormal_fit_recovers_generator():
    rng = np.random.default_rng(0)
    h = rng.lognormal(1.62, 0.27, 10_000)
    mu, sigma = fit_lognormal(h)
    assert mu == pytest.approx(1.62, rel=0.02)
    assert sigma == pytest.approx(0.27, rel=0.02)


def test_lognormal_fit_from_floor_counts():
    rng = np.random.default_rng(1)
    floors = np.maximum(1, np.round(rng.lognormal(1.5, 0.5, 20_000)))
    s = ingest_table(np.full(floors.size, 4.0), np.ones(floors.size), floors, 1e6)
    logs = np.log(floors * 3.0)
    assert s.mu_h == pytest.approx(logs.mean())
    assert s.sigma_h == pytest.approx(logs.std())


def test_geojson_reader(tmp_path):
    fc = {
        "type": "FeatureCollection",
        "features": [
            {"type": "Feature", "properties": {"floors": 2},
             "geometry": {"type": "Polygon", "coordinates": [[[0, 0], [2, 0], [2, 2], [0, 2], [0, 0]]]}},
            {"type": "Feature", "properties": {"floors": 3},
             "geometry": {"type": "MultiPolygon", "coordinates": [
                 [[[5, 5], [6, 5], [6, 6], [5, 6], [5, 5]]],
                 [[[8, 8], [9, 8], [9, 9], [8, 9], [8, 8]]]]}},
        ],
    }
    p = tmp_path / "b.geojson"
    p.write_text(json.dumps(fc))
    recs = read_geojson(p)
    assert [r.floors for r in recs] == [2, 3, 3]
    s = ingest_buildings(recs, 100.0)
    assert s.kappa == pytest.approx(0.06)
    assert s.rho == pytest.approx(16.0 / 3.0)
    fc["features"][0]["properties"] = {}
    p.write_text(json.dumps(fc))
    with pytest.raises(ValueError, match="floors"):
        read_geojson(p)


def test_csv_reader_and_estimator(tmp_path):
    p = tmp_path / "b.csv"
    p.write_text("perimeter,area,floors\n4,1,1\n4,1,4\n")
    cols = read_building_csv(p)
    est = LosDistanceEstimator(region_area=10.0).fit(np.column_stack(cols))
    assert est.stats_.kappa == pytest.approx(0.2)
    assert est.predict([0.0, est.r_los_, est.r_los_ * 1.01]).tolist() == [1, 1, 0]
    assert est.get_params()["region_area"] == 10.0


def test_stats_text_round_trip():
    s = district_stats("gangnam")
    assert BuildingStats.from_text(s.to_text()) == s
    with pytest.raises(ValueError):
        BuildingStats.from_text("rho = 1\nbogus = 2\n")


def test_district_table_present():
    assert set(SEOUL_DISTRICTS) == {"gangnam", "jongro", "yonsei"}
