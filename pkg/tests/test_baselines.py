import math

import numpy as np
import pytest

from twolayer.allocator import COMMON_ONLY, UNICAST_ONLY, broadcast_only, optimize_mu0
from twolayer.baselines import (OmSplit, cell_edge_throughput, cell_edge_user, equal_power,
                                om_allocate, reports_to_csv, unicast_only)
from twolayer.errors import InfeasibleRateError, ScenarioError
from twolayer.roots import bisect
from twolayer.simharness import ExperimentConfig, mu_instance
from twolayer.utility import RateWeights

from conftest import random_field, static_field


def _cell_draws(K, n):
    cfg = ExperimentConfig(seed=77)
    scenario = cfg.scenario()
    return [mu_instance(cfg, scenario, K, r) for r in range(n)]


def _waterfill_reference(zb, frac, P):
    """Classic water-filling of ``sum frac_i log2(1 + p_i/zb_i)`` by bisection on the level."""
    def spent(level):
        return float(np.maximum(frac * level - zb, 0.0).sum()) - P

    level = bisect(spent, 0.0, (P + zb.sum()) / frac.min() + 1.0, xtol=1e-15)
    p = np.maximum(frac * level - zb, 0.0)
    return float((frac * np.log2(1 + p / zb)).sum())


def test_split_rounding():
    assert OmSplit(0.25).multicast_count(10) == 3
    assert OmSplit(0.5).multicast_count(10) == 5
    assert OmSplit(0.1).multicast_count(10) == 1
    assert OmSplit(0.04).multicast_count(10) == 0
    with pytest.raises(ScenarioError):
        OmSplit(1.5)
    with pytest.raises(ScenarioError):
        OmSplit(0.5, "random")
    assert OmSplit(0.1).label == "om10"


def test_dynamic_split_gives_best_channels_to_unicast():
    nf = static_field([[0.5, 0.1, 2.0, 0.9], [1.0, 1.0, 1.0, 1.0]])
    modes = OmSplit(0.5).modes(nf)
    assert modes.tolist() == [UNICAST_ONLY, UNICAST_ONLY, COMMON_ONLY, COMMON_ONLY]
    static = OmSplit(0.5, "static").modes(nf)
    assert static.tolist() == [UNICAST_ONLY, UNICAST_ONLY, COMMON_ONLY, COMMON_ONLY]
    assert OmSplit(0.25, "static").modes(nf).tolist()[-1] == COMMON_ONLY


def test_zero_fraction_is_unicast_only():
    nf = random_field(np.random.default_rng(1), 3, 5)
    w = RateWeights.uniform(3, 3.0)
    a = om_allocate(1.0, nf, OmSplit(0.0), w)[1]
    b = unicast_only(1.0, nf, w)[1]
    assert a.weighted_sum == b.weighted_sum and a.r0 == 0.0


def test_full_fraction_is_broadcast_only():
    nf = random_field(np.random.default_rng(2), 3, 5)
    w = RateWeights.uniform(3, 3.0)
    alloc, rep = om_allocate(1.0, nf, OmSplit(1.0), w)
    assert np.all(alloc.unicast == 0)
    assert rep.r0 == pytest.approx(broadcast_only(1.0, nf, w)[2].r0, rel=1e-9)


def test_demanded_rate_without_multicast_channel():
    nf = random_field(np.random.default_rng(3), 2, 4)
    with pytest.raises(InfeasibleRateError):
        om_allocate(1.0, nf, OmSplit(0.0), RateWeights.uniform(2, 2.0), r0_min=0.5)


def test_dynamic_assignment_beats_static_on_average():
    gaps = []
    for nf in _cell_draws(2, 40):
        w = RateWeights.uniform(2, 2.0)
        for f in (0.1, 0.5, 0.9):
            dyn = om_allocate(1.0, nf, OmSplit(f), w)[1].weighted_sum
            sta = om_allocate(1.0, nf, OmSplit(f, "static"), w)[1].weighted_sum
            gaps.append(dyn - sta)
    assert np.mean(gaps) > 0


def test_unicast_only_single_channel():
    nf = static_field([[0.4], [0.2]])
    alloc, rep = unicast_only(2.0, nf)
    assert alloc.unicast[1, 0] == 2.0 and alloc.unicast[0, 0] == 0.0
    assert rep.rk[1] == pytest.approx(math.log2(1 + 2.0 / 0.2), rel=1e-14)


def test_unicast_only_identical_channels():
    nf = static_field([[0.4, 0.4], [0.2, 0.2]])
    alloc, _ = unicast_only(1.0, nf)
    np.testing.assert_allclose(alloc.unicast[1], [0.5, 0.5], rtol=1e-9)


def test_unicast_only_matches_water_filling_reference():
    rng = np.random.default_rng(6)
    for _ in range(5):
        nf = random_field(rng, 3, 4)
        zb = nf.z.min(0)
        ref = _waterfill_reference(zb, nf.layout.fractions, 1.0)
        assert unicast_only(1.0, nf)[1].sum_rate == pytest.approx(ref, rel=1e-10)


def test_equal_power_layers():
    nf = random_field(np.random.default_rng(7), 3, 2)
    alloc, _ = equal_power(4.0, nf, RateWeights.uniform(3, 3.0))
    np.testing.assert_array_equal(alloc.common, [1.0, 1.0])
    np.testing.assert_array_equal(alloc.unicast[nf.best, [0, 1]], [1.0, 1.0])
    assert alloc.unicast.sum() == 2.0


def test_equal_power_never_beats_optimal():
    rng = np.random.default_rng(8)
    for _ in range(20):
        nf = random_field(rng, 4, 5)
        w = RateWeights.uniform(4, 4.0)
        eq = equal_power(1.0, nf, w)[1].weighted_sum
        opt = optimize_mu0(1.0, nf, w)[2].weighted_sum
        assert eq <= opt * (1 + 1e-9)


def test_equal_power_two_layer_gains_over_unicast_heavy_om():
    gaps = []
    for nf in _cell_draws(10, 30):
        w = RateWeights.uniform(10, 10.0)
        eq = equal_power(1.0, nf, w)[1].weighted_sum
        gaps.append(eq - om_allocate(1.0, nf, OmSplit(0.1), w, power="equal")[1].weighted_sum)
    assert np.mean(gaps) > 0


def test_unicast_only_cell_edge_near_zero():
    edge, total = [], []
    for nf in _cell_draws(10, 30):
        rep = unicast_only(1.0, nf)[1]
        edge.append(cell_edge_throughput(rep, nf))
        total.append(rep.sum_rate)
    assert np.mean(edge) < 0.01 * np.mean(total)


def test_broadcast_only_cell_edge_is_common_rate():
    nf = random_field(np.random.default_rng(11), 3, 4)
    rep = om_allocate(1.0, nf, OmSplit(1.0), RateWeights.uniform(3, 3.0))[1]
    assert cell_edge_throughput(rep, nf) == rep.r0


def test_cell_edge_hand_instance():
    nf = static_field([[0.2, 0.4], [0.5, 0.3]])
    assert cell_edge_user(nf) == 1
    rep = unicast_only(1.0, nf)[1]
    assert cell_edge_throughput(rep, nf) == rep.rk[1]


def test_reports_csv():
    nf = random_field(np.random.default_rng(12), 2, 2)
    w = RateWeights.uniform(2, 2.0)
    text = reports_to_csv({"equal": equal_power(1.0, nf, w)[1], "uni": unicast_only(1.0, nf)[1]})
    lines = text.split("\n")
    assert lines[0] == "scheme,metric,value"
    assert lines[1].startswith("equal,r0,")
