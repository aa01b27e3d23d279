import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gkp_repeater import polycode
from gkp_repeater.gkp_math import convolve_power, distribution_from_gaussian, entropy
from gkp_repeater.polycode import InadmissibleDimensionError
from gkp_repeater.protocols import (
    Protocol,
    RepeaterConfig,
    bare_rate,
    bare_rate_curve,
    encoded_rate,
    optimal_bare_dimension,
    optimal_spacing,
    rate,
    rate_vs_input_noise,
    station_count,
    station_variance,
)


@pytest.mark.parametrize("L, L0, n", [(2000, 0.5, 4000), (100, 0.1, 1000), (1, 0.3, 3), (0.5, 0.5, 1)])
def test_station_count(L, L0, n):
    assert station_count(L, L0) == n


def test_station_count_rejects_bad_lengths():
    with pytest.raises(ValueError):
        station_count(0.1, 0.5)
    with pytest.raises(ValueError):
        station_count(1.0, 0.0)


def test_config_validation_and_aliases():
    assert RepeaterConfig(protocol="two-way-teleport").protocol is Protocol.TWO_WAY
    assert RepeaterConfig(protocol="one-way-half-teleport", encoded=True, dim=5).protocol is Protocol.HALF_TELEPORT
    with pytest.raises(ValueError):
        RepeaterConfig(length_km=0.1, spacing_km=0.5)
    with pytest.raises(ValueError):
        RepeaterConfig(gamma=0.0)
    with pytest.raises(ValueError):
        RepeaterConfig(protocol="teleport")
    with pytest.raises(InadmissibleDimensionError):
        RepeaterConfig(dim=6, encoded=True)
    with pytest.raises(InadmissibleDimensionError):
        RepeaterConfig(dim=7, encoded=True)
    assert RepeaterConfig(dim=7, encoded=True, strict_code=False).code.distance == 4


def test_config_round_trip():
    cfg = RepeaterConfig(protocol="half-teleport", dim=13, encoded=True, placement="after", meas_var=0.001)
    assert RepeaterConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        RepeaterConfig.from_dict({"dimension": 3})


# -- bare -----------------------------------------------------------------------

def test_bare_rate_is_convolved_station_channel():
    cfg = RepeaterConfig(dim=3, length_km=50, spacing_km=0.5, squeezing_db=20)
    result = bare_rate(cfg)
    station = distribution_from_gaussian(3, station_variance(cfg))
    marginal = convolve_power(station, 100)
    assert result.n_stations == 100
    assert np.allclose(result.marginal.probs, marginal.probs, atol=1e-15)
    assert result.skr_bits == pytest.approx(max(0.0, math.log2(3) - 2 * entropy(marginal)), abs=1e-12)
    assert result.skr_per_station == result.skr_bits / 100


def test_single_station_edge():
    cfg = RepeaterConfig(dim=5, length_km=0.5, spacing_km=0.5, squeezing_db=20)
    station = distribution_from_gaussian(5, station_variance(cfg))
    assert bare_rate(cfg).skr_bits == pytest.approx(max(0.0, math.log2(5) - 2 * entropy(station)))


def test_bare_qubit_limits():
    ideal = RepeaterConfig(dim=2, length_km=0.001, spacing_km=0.001, squeezing_db=60, coupling=1.0)
    assert bare_rate(ideal).skr_bits == pytest.approx(1.0, abs=1e-9)
    for L in (10, 100, 1000, 1e4):
        assert bare_rate(RepeaterConfig(dim=2, squeezing_db=9, length_km=L, spacing_km=0.5)).skr_bits == 0.0


def test_qutrits_beat_qubits_at_modest_lengths():
    base = RepeaterConfig(protocol="one-way", length_km=50, spacing_km=0.5, squeezing_db=25)
    assert bare_rate(base.with_(dim=3)).skr_bits > bare_rate(base.with_(dim=2)).skr_bits


def test_bare_rejects_encoded_and_half_teleport():
    with pytest.raises(ValueError):
        bare_rate(RepeaterConfig(dim=5, encoded=True))
    with pytest.raises(ValueError):
        bare_rate(RepeaterConfig(protocol="half-teleport"))


def test_measurement_noise_lowers_the_rate():
    cfg = RepeaterConfig(dim=4, length_km=100, spacing_km=0.5, squeezing_db=20)
    assert bare_rate(cfg.with_(meas_var=0.01)).skr_bits < bare_rate(cfg).skr_bits
    assert station_variance(cfg.with_(meas_var=0.01)) == pytest.approx(station_variance(cfg) + 0.01)


@pytest.mark.parametrize("protocol", ["two-way", "one-way"])
def test_rate_curve_matches_pointwise(protocol):
    cfg = RepeaterConfig(protocol=protocol, dim=4, squeezing_db=22, spacing_km=0.5)
    lengths = [1.0, 10.0, 100.0, 1000.0]
    curve = bare_rate_curve(cfg, lengths)
    assert curve.tolist() == [bare_rate(cfg.with_(length_km=L)).skr_bits for L in lengths]


@pytest.mark.parametrize(
    "s, L, L0, expected",
    [(30, 10, 0.1, 8), (20, 500, 0.1, 2), (5, 100, 0.5, 1)],
)
def test_optimal_bare_dimension(s, L, L0, expected):
    d, skr = optimal_bare_dimension(L, L0, s)
    assert d == expected
    assert (skr > 0) == (expected > 1)


@given(
    dim=st.integers(2, 12),
    s=st.floats(10.0, 35.0),
    protocol=st.sampled_from(["two-way", "one-way"]),
)
@settings(max_examples=40, deadline=None)
def test_bare_rate_monotone_in_length_and_squeezing(dim, s, protocol):
    cfg = RepeaterConfig(protocol=protocol, dim=dim, squeezing_db=s, spacing_km=0.5)
    curve = bare_rate_curve(cfg, [1, 10, 100, 1000, 1e4])
    assert np.all(np.diff(curve) <= 1e-12)
    lower = bare_rate(cfg.with_(squeezing_db=s - 2.0, length_km=100)).skr_bits
    assert lower <= bare_rate(cfg.with_(length_km=100)).skr_bits + 1e-12


# -- encoded ----------------------------------------------------------------------

def test_encoded_noiseless_limit():
    cfg = RepeaterConfig(dim=13, encoded=True, squeezing_db=60, coupling=1.0, length_km=0.01, spacing_km=0.01)
    assert encoded_rate(cfg).skr_bits == pytest.approx(math.log2(13), abs=1e-9)


def test_encoded_uses_worst_case_station_channel():
    cfg = RepeaterConfig(dim=5, encoded=True, squeezing_db=15, length_km=100, spacing_km=0.5)
    result = encoded_rate(cfg)
    p0 = distribution_from_gaussian(5, station_variance(cfg)).p0
    p_cor = polycode.p_correctable(cfg.code, p0)
    assert result.p0_station == pytest.approx(p0)
    assert result.p_cor_station == pytest.approx(p_cor, abs=1e-12)
    station = polycode.station_error_channel(cfg.code, p_cor)
    expected = convolve_power(station, 200)
    assert np.allclose(result.marginal.probs, expected.probs, atol=1e-12)


def test_encoded_gamma_one_matches_gamma_path_exactly():
    cfg = RepeaterConfig(dim=13, encoded=True, squeezing_db=20, length_km=1000, spacing_km=0.5)
    var = station_variance(cfg)
    assert encoded_rate(cfg).p_cor_station == 1.0 - polycode.p_fail(cfg.code, var, 1.0)


def test_erasure_decoding_changes_the_rate():
    plain = rate_vs_input_noise(13, 5000, 0.5, 0.005).skr_bits
    assert rate_vs_input_noise(13, 5000, 0.5, 0.005, gamma=0.85).skr_bits > plain
    # discarding only the outermost sliver of each bin hurts
    assert rate_vs_input_noise(13, 5000, 0.5, 0.005, gamma=0.95).skr_bits < plain


def test_encoded_d5_near_maximum():
    cfg = RepeaterConfig(dim=5, encoded=True, squeezing_db=30, spacing_km=0.1)
    for L in (1, 10, 100, 1000):
        assert encoded_rate(cfg.with_(length_km=L)).skr_bits == pytest.approx(math.log2(5), abs=0.05)


def test_half_teleport_encoded():
    cfg = RepeaterConfig(protocol="half-teleport", dim=5, encoded=True, squeezing_db=30, spacing_km=0.1, length_km=100)
    result = encoded_rate(cfg)
    assert result.station_var is None
    assert 0 < result.skr_bits <= math.log2(5)
    with pytest.raises(ValueError):
        encoded_rate(cfg.with_(gamma=0.9))
    placements = {p: encoded_rate(cfg.with_(placement=p, length_km=2000, spacing_km=0.5)).skr_bits
                  for p in ("none", "after", "alternating")}
    assert placements["alternating"] >= placements["after"] >= placements["none"]


def test_rate_dispatch():
    bare = RepeaterConfig(dim=3)
    enc = RepeaterConfig(dim=5, encoded=True)
    assert rate(bare) == bare_rate(bare)
    assert rate(enc) == encoded_rate(enc)
    with pytest.raises(ValueError):
        encoded_rate(bare)


# -- input noise and spacing -----------------------------------------------------

def test_rate_vs_input_noise_cliff():
    ok = rate_vs_input_noise(5, 5000, 0.5, 0.01)
    dead = rate_vs_input_noise(5, 5000, 0.5, 0.02)
    assert ok.skr_bits >= 0.9 * math.log2(5)
    assert dead.skr_bits == 0.0
    assert ok.station_var == pytest.approx(0.01 + math.expm1(0.5 / 44))
    assert rate_vs_input_noise(5, 0.001, 0.001, 0.0).skr_bits == pytest.approx(math.log2(5), abs=1e-9)
    with pytest.raises(ValueError):
        rate_vs_input_noise(5, 100, 0.5, -0.1)


def test_input_noise_curve_is_monotone():
    values = [rate_vs_input_noise(13, 5000, 0.5, v).skr_bits for v in np.linspace(0, 0.04, 21)]
    assert np.all(np.diff(values) <= 1e-12)


def test_optimal_spacing_and_cutoff():
    cfg = RepeaterConfig(dim=5, encoded=True, squeezing_db=20, coupling=0.999, length_km=2000)
    best = optimal_spacing(cfg, np.round(np.arange(0.1, 2.001, 0.01), 2))
    assert best.spacing_km == pytest.approx(0.55, rel=0.3)
    assert best.skr_bits == pytest.approx(1.8, abs=0.3)
    assert best.skr_per_station == pytest.approx(best.skr_bits / station_count(2000, best.spacing_km))
    assert best.cutoff_km is not None and best.cutoff_km < 2.0


def test_optimal_spacing_tie_breaks_to_smaller_spacing():
    cfg = RepeaterConfig(dim=5, encoded=True, squeezing_db=5, length_km=2000)
    best = optimal_spacing(cfg, [1.5, 0.5, 1.0])
    assert best.skr_per_station == 0.0
    assert best.spacing_km == 0.5
    assert best.cutoff_km is None
    with pytest.raises(ValueError):
        optimal_spacing(cfg, [])
