import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmudn.blockage import LosModel
from mmudn.channel import ALL_LINKS, SIR_FUNCTIONS, ChannelConfig, Link, beam_covers
from mmudn.geometry import DensityConfig, Deployment, Window, sample_deployment, substream
from mmudn.montecarlo import ExperimentPlan, estimate_se

ONES = np.ones(2)


def two_cell(mmw=True):
    """Probe at the origin served from (10, 0); one interferer pair on the x axis.

    User 1 sits at (-10, 0) and is served by the BS at (40, 0), so both the
    interfering BS beam (DL) and the interfering user beam (UL) point along
    the axis through the probe's link.
    """
    users = np.array([[0.0, 0.0], [-10.0, 0.0]])
    bs = np.array([[10.0, 0.0], [40.0, 0.0]])
    assoc = np.array([0, 1])
    sched = np.array([0, 1])
    empty, none = np.empty((0, 2)), np.full(2, -1)
    nosched = np.empty(0, dtype=int)
    if mmw:
        return Deployment(Window(1000.0), users, bs, empty, assoc, none, sched, nosched)
    return Deployment(Window(1000.0), users, empty, bs, none, assoc, nosched, sched)


def lone_cell(mmw=True, r0=10.0):
    users = np.array([[0.0, 0.0]])
    bs = np.array([[r0, 0.0]])
    empty = np.empty((0, 2))
    a, s = np.array([0]), np.array([0])
    none, nosched = np.array([-1]), np.empty(0, dtype=int)
    if mmw:
        return Deployment(Window(1000.0), users, bs, empty, a, none, s, nosched)
    return Deployment(Window(1000.0), users, empty, bs, none, a, nosched, s)


def test_beam_examples():
    assert beam_covers([0, 0], [1, 0], [2, 0], math.pi / 6)
    assert not beam_covers([0, 0], [1, 0], [0, 1], math.pi / 2)
    assert beam_covers([0, 0], [1, 0], [0, 1], math.pi)
    assert beam_covers([0, 0], [1, 0], [-5, 3], 2 * math.pi)


def test_beam_vectorized_and_wrapped():
    w = Window(10.0)
    # target and receiver both reached through the seam
    assert beam_covers([9, 0], [-9, 0], [-8, 0], math.pi / 6, w)
    out = beam_covers(np.zeros((3, 2)), np.tile([1.0, 0.0], (3, 1)), [[1, 0], [0, 1], [1, 1]], math.pi / 2)
    assert out.tolist() == [True, False, True]


@pytest.mark.parametrize("mmw", [True, False])
def test_sir_arithmetic(mmw):
    dep = two_cell(mmw)
    cfg = ChannelConfig(theta=math.pi / 6, los=LosModel(100.0))
    dl, ul = (Link.MMW_DL, Link.MMW_UL) if mmw else (Link.MUW_DL, Link.MUW_UL)
    assert SIR_FUNCTIONS[ul](dep, cfg, fades=ONES).value == pytest.approx(16.0)
    assert SIR_FUNCTIONS[dl](dep, cfg, fades=ONES).value == pytest.approx(256.0)


def test_sir_uses_fades():
    dep = two_cell(False)
    assert SIR_FUNCTIONS[Link.MUW_UL](dep, ChannelConfig(), fades=[2.0, 0.5]).value == pytest.approx(64.0)


def test_mmw_gates():
    dep = two_cell(True)
    # interferer at 20 m is beyond a 15 m LOS range: no interference left
    assert SIR_FUNCTIONS[Link.MMW_UL](dep, ChannelConfig(los=LosModel(15.0)), fades=ONES).infinite
    # serving link beyond the LOS range: zero
    assert SIR_FUNCTIONS[Link.MMW_DL](dep, ChannelConfig(los=LosModel(9.0)), fades=ONES).value == 0.0
    # an interferer beaming away is not heard
    users = np.array([[0.0, 0.0], [-10.0, 0.0]])
    bs = np.array([[10.0, 0.0], [-40.0, 0.0]])
    away = Deployment(Window(1000.0), users, bs, np.empty((0, 2)), np.array([0, 1]), np.full(2, -1),
                      np.array([0, 1]), np.empty(0, dtype=int))
    assert SIR_FUNCTIONS[Link.MMW_UL](away, ChannelConfig(theta=math.pi / 6), fades=ONES).infinite
    assert not SIR_FUNCTIONS[Link.MMW_UL](away, ChannelConfig(), fades=ONES).infinite


@pytest.mark.parametrize("link", ALL_LINKS)
def test_no_interferers_is_infinite(link):
    dep = lone_cell(link.tier == "mmw")
    s = SIR_FUNCTIONS[link](dep, ChannelConfig(), fades=[1.0])
    assert s.infinite and s.link is link


def test_noise_only():
    dep = lone_cell(False)
    s = SIR_FUNCTIONS[Link.MUW_DL](dep, ChannelConfig(noise_power=0.5), fades=[3.0])
    assert s.value == pytest.approx(3.0 * 10.0**-4 / 0.5)


def test_fade_shape_checked():
    with pytest.raises(ValueError):
        SIR_FUNCTIONS[Link.MUW_DL](two_cell(False), ChannelConfig(), fades=[1.0])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), uplink=st.booleans())
def test_narrower_beam_never_hurts(seed, uplink):
    dep = sample_deployment(DensityConfig(3e-3, 3e-3, 1e-3), Window(150.0), substream(seed, 0), tiers=("mmw",))
    link = Link.MMW_UL if uplink else Link.MMW_DL
    n = len(dep.active_bs("mmw"))
    fades = np.random.default_rng(seed).exponential(size=n)
    vals = [SIR_FUNCTIONS[link](dep, ChannelConfig(theta=t, los=LosModel(80.0)), fades=fades).value
            for t in (2 * math.pi, math.pi, math.pi / 6)]
    assert vals[0] <= vals[1] <= vals[2]


def test_omni_unblocked_mmw_matches_microwave():
    dens = DensityConfig.from_ratios(20.0, 20.0, 1e-4)
    cfg = ChannelConfig(theta=2 * math.pi, los=LosModel(math.inf))
    est = estimate_se(ExperimentPlan(dens, cfg, 2000, 3, (Link.MMW_DL, Link.MUW_DL), Window(600.0)))
    a, b = est[Link.MMW_DL], est[Link.MUW_DL]
    assert abs(a.mean - b.mean) <= 2 * (a.stderr + b.stderr)


def test_channel_config_validation():
    with pytest.raises(ValueError):
        ChannelConfig(alpha_m=2.0)
    with pytest.raises(ValueError):
        ChannelConfig(theta=0.0)
    with pytest.raises(ValueError):
        ChannelConfig(noise_power=-1.0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), uplink=st.booleans(), r_los=st.floats(20.0, 200.0))
def test_gating_zeroes_or_removes_interference(seed, uplink, r_los):
    # identical layers: the gated mmW SIR is either 0 (blocked serving link)
    # or at least the microwave SIR, since gating only drops interferers
    d = sample_deployment(DensityConfig(3e-3, 3e-3, 1e-3), Window(150.0), substream(seed, 1), tiers=("muw",))
    dep = Deployment(d.window, d.users, d.muw_bs, d.muw_bs, d.assoc_muw, d.assoc_muw, d.sched_muw, d.sched_muw)
    cfg = ChannelConfig(los=LosModel(r_los))
    fades = np.random.default_rng(seed).exponential(size=len(dep.active_bs("muw")))
    mm = SIR_FUNCTIONS[Link.MMW_UL if uplink else Link.MMW_DL](dep, cfg, fades=fades).value
    mu = SIR_FUNCTIONS[Link.MUW_UL if uplink else Link.MUW_DL](dep, cfg, fades=fades).value
    assert mm == 0.0 or mm >= mu
