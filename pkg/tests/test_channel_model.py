import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats

from twolayer.channel_model import (CellScenario, ChannelRealization, NoiseField, OfdmLayout,
                                    attach_fading, calibrate_coverage, coverage_snr_db,
                                    effective_noise, fading_realization, rayleigh_capacity,
                                    sample_cell, sample_fading, shadowing_db, snr_db_at,
                                    snr_for_rayleigh_capacity, static_realization)
from twolayer.errors import DimensionError, ScenarioError

from conftest import static_field


def test_layout_counts():
    layout = OfdmLayout((3, 1, 4))
    assert layout.M == 3 and layout.N == 8
    assert layout.fractions.sum() == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ScenarioError):
        OfdmLayout(())
    with pytest.raises(ScenarioError):
        OfdmLayout((2, 0))


def test_effective_noise_identity():
    nf = effective_noise(OfdmLayout((1,)), ChannelRealization([1.0], gains=[[1.0]]))
    assert nf.z[0, 0] == 1.0
    assert nf.orderings.tolist() == [[0]]


def test_effective_noise_halves_with_two_channels():
    nf = effective_noise(OfdmLayout.equal(2), ChannelRealization([2.0], gains=[[1.0, 1.0]]))
    np.testing.assert_array_equal(nf.z, [[1.0, 1.0]])


def test_orderings_match_reference_sort():
    rng = np.random.default_rng(7)
    for _ in range(50):
        gains = rng.exponential(size=(3, 4))
        nf = effective_noise(OfdmLayout.equal(4), ChannelRealization(np.ones(3), gains=gains))
        for i in range(4):
            expected = sorted(range(3), key=lambda k: (nf.z[k, i], k))
            assert nf.orderings[i].tolist() == expected


@given(st.lists(st.floats(1e-3, 1e3), min_size=6, max_size=6))
def test_orderings_are_sorting_permutations(values):
    nf = static_field(np.reshape(values, (3, 2)))
    for i in range(2):
        assert sorted(nf.orderings[i].tolist()) == [0, 1, 2]
        assert np.all(np.diff(nf.z[nf.orderings[i], i]) >= 0)


def test_noise_field_validation():
    with pytest.raises(DimensionError):
        NoiseField(np.ones((2, 3)), OfdmLayout.equal(2))
    with pytest.raises(ScenarioError):
        static_field([[1.0, -1.0]])
    with pytest.raises(DimensionError):
        ChannelRealization([1.0, 1.0], gains=[[1.0]])


def test_scenario_validation_and_parsing():
    with pytest.raises(ScenarioError):
        CellScenario(radius_km=0.0)
    with pytest.raises(ScenarioError):
        CellScenario(shadowing_sigma_db=-1.0)
    sc = CellScenario.from_kv({"radius_km": "3", "environment": "car"})
    assert sc.radius_km == 3.0 and sc.environment == "car"


def test_equal_radius_without_shadowing_gives_equal_snr():
    sc = CellScenario(shadowing_sigma_db=0.0)
    a, b = snr_db_at(sc, np.array([2.0, 2.0]))
    assert a == b


def test_path_loss_is_monotone():
    sc = CellScenario(shadowing_sigma_db=0.0)
    near, far = snr_db_at(sc, np.array([1.0, 4.0]))
    assert far < near


def test_shadowing_standard_deviation():
    sc = CellScenario(shadowing_sigma_db=8.0)
    s = shadowing_db(sc, 10_000, np.random.default_rng(3))
    assert abs(s.std(ddof=1) - 8.0) <= 0.05 * 8.0


def test_sample_cell_is_seeded():
    sc = CellScenario()
    np.testing.assert_array_equal(sample_cell(sc, 5, 11), sample_cell(sc, 5, 11))
    assert np.all(sample_cell(sc, 5, 11) > 0)


def _fading_field(K=3, M=2, seed=0):
    snr = np.array([10.0, 3.0, 30.0])[:K]
    return effective_noise(OfdmLayout.equal(M), fading_realization(snr, OfdmLayout.equal(M)))


def test_fading_sample_mean():
    real = sample_fading(_fading_field(), 5, n=100_000)
    assert abs(real.phi2.mean() - 1.0) <= 0.02


def test_fading_sample_distribution():
    real = sample_fading(_fading_field(), 6, n=100_000)
    d = stats.kstest(real.phi2[:, 0], "expon").statistic
    assert d < 0.01


def test_shared_draw_keeps_ordering():
    nf = attach_fading(_fading_field(), 1, n=500)
    for j in range(0, 500, 50):
        inst = nf.z / nf.phi2[j][None, :]
        for i in range(nf.M):
            assert np.argsort(inst[:, i], kind="stable").tolist() == nf.orderings[i].tolist()


def test_fading_round_trip_reproduces_average_noise():
    nf = _fading_field()
    back = effective_noise(nf.layout, sample_fading(nf, 2, n=10))
    np.testing.assert_allclose(back.z, nf.z, rtol=1e-14)
    assert back.phi2.shape == (10, nf.M)


def test_static_realization_mean_gain():
    layout = OfdmLayout.equal(4)
    real = static_realization(np.full(2000, 5.0), layout, 9)
    assert real.gains.mean() == pytest.approx(5.0, rel=0.03)


@pytest.mark.parametrize("snr", [0.01, 0.5, 1.0, 6.3, 100.0])
def test_rayleigh_capacity_against_quadrature(snr):
    ref, _ = integrate.quad(lambda x: math.log2(1 + snr * x) * math.exp(-x), 0, math.inf)
    assert rayleigh_capacity(snr) == pytest.approx(ref, rel=1e-9)


def test_rayleigh_capacity_tiny_snr_does_not_overflow():
    assert rayleigh_capacity(1e-5) == pytest.approx(1e-5 / math.log(2), rel=1e-4)


def test_rayleigh_capacity_inverse():
    snr = snr_for_rayleigh_capacity(2.0)
    assert rayleigh_capacity(snr) == pytest.approx(2.0, rel=1e-12)
    assert 10 * math.log10(snr) == pytest.approx(6.3, abs=0.1)


def test_coverage_calibration():
    sc = calibrate_coverage(CellScenario(), 0.997, 6.0)
    assert coverage_snr_db(sc, 0.997) == pytest.approx(6.0, abs=1e-9)
