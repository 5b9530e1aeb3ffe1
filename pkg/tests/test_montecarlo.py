import math

import numpy as np
import pytest

from mmudn.blockage import LosModel
from mmudn.channel import ChannelConfig, Link
from mmudn.geometry import DensityConfig, Window
from mmudn.montecarlo import (
    SWEEP_COLUMNS,
    ExperimentPlan,
    SpectralEfficiencyModel,
    _Accumulator,
    convergence_sweep,
    estimate_se,
    rows_to_csv,
    sample_realization,
    window_warnings,
)

MUW = (Link.MUW_DL, Link.MUW_UL)
SMALL = Window(500.0)


def plan(n=200, seed=0, lh=20.0, links=MUW, window=SMALL, **kw):
    return ExperimentPlan(DensityConfig.from_ratios(lh, lh, 1e-4), ChannelConfig(**kw), n, seed, links, window)


def test_deterministic():
    a = estimate_se(plan(seed=9))
    b = estimate_se(plan(seed=9))
    assert a == b
    assert estimate_se(plan(seed=10)) != a


def test_parallel_matches_serial():
    p = plan(n=60, seed=4)
    assert estimate_se(p, n_jobs=2) == estimate_se(p, n_jobs=1)


def test_prefix_consistency():
    # realization i does not depend on how many realizations are requested
    a, b = plan(n=5, seed=2), plan(n=50, seed=2)
    assert [sample_realization(a, i) for i in range(5)] == [sample_realization(b, i) for i in range(5)]


def test_stderr_scaling():
    lo = estimate_se(plan(n=800, seed=1))[Link.MUW_DL].stderr
    hi = estimate_se(plan(n=1600, seed=1))[Link.MUW_DL].stderr
    assert hi / lo == pytest.approx(1 / math.sqrt(2), rel=0.2)


def test_accumulator_caps_and_zeros():
    acc = _Accumulator()
    for sir in (math.inf, 0.0, math.exp(60.0), 1.0):
        acc.add(sir, 50.0)
    assert acc.values == [50.0, 0.0, 50.0, math.log(2.0)]
    assert acc.capped == 2 and acc.zeros == 1


def test_mmw_zero_samples_counted():
    p = ExperimentPlan(DensityConfig(1e-4, 1e-4, 1e-4), ChannelConfig(theta=math.pi / 6, los=LosModel(60.0)), 400, 0,
                       (Link.MMW_DL,), SMALL)
    e = estimate_se(p)[Link.MMW_DL]
    p0 = math.exp(-1e-4 * math.pi * 60.0**2)
    assert abs(e.n_zero_samples / 400 - p0) < 3 * math.sqrt(p0 * (1 - p0) / 400)


def test_window_warning():
    p = ExperimentPlan(DensityConfig(1e-4, 1e-4, 1e-4), ChannelConfig(), 2, 0, MUW, Window(100.0))
    assert window_warnings(p)
    out = []
    estimate_se(p, warnings_out=out)
    assert out and "window too small" in out[0]
    assert not window_warnings(plan())


def test_plan_validation():
    with pytest.raises(ValueError):
        plan(n=0)
    with pytest.raises(ValueError):
        plan(links=())
    with pytest.raises(ValueError):
        plan(seed=-1)


def test_sweep_rows_and_order():
    rows = convergence_sweep(plan(n=20), [5.0, 10.0, 20.0])
    assert len(rows) == 3 * len(MUW)
    assert [r["lambda_hat"] for r in rows] == [5.0, 5.0, 10.0, 10.0, 20.0, 20.0]
    assert rows[-1]["asymptote"] == pytest.approx(2 * math.log(20.0))
    for bad in ([10.0, 5.0], [5.0, 5.0], [], [0.0, 1.0]):
        with pytest.raises(ValueError):
            convergence_sweep(plan(n=20), bad)


def test_csv_layout():
    rows = convergence_sweep(plan(n=10), [5.0])
    text = rows_to_csv(rows, SWEEP_COLUMNS, "tool x\nseed: 0")
    lines = text.splitlines()
    assert lines[:2] == ["# tool x", "# seed: 0"]
    assert lines[2] == ",".join(SWEEP_COLUMNS)
    assert len(lines) == 3 + len(rows)
    assert float(lines[3].split(",")[2]) == rows[0]["mean_nats"]


def test_se_model_transform():
    X = np.array([[10.0, 20.0], [100.0, 100.0]])
    asym = SpectralEfficiencyModel().fit(X).transform(X)
    assert asym.shape == (2, 4)
    assert asym[1, 2] == pytest.approx(2 * math.log(100.0))
    exact = SpectralEfficiencyModel(method="exact").fit().transform(X)
    assert exact[1, 2] == pytest.approx(8.414437, rel=1e-6)
    with pytest.raises(ValueError):
        SpectralEfficiencyModel(method="nope").fit()
    mc = SpectralEfficiencyModel(method="montecarlo", n_realizations=5).fit().transform([[5.0, 5.0]])
    assert np.all(np.isfinite(mc))
