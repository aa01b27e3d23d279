import warnings

import numpy as np
import pytest

from gkp_repeater import oracle
from gkp_repeater.gkp_math import convolve_power, distribution_from_gaussian
from gkp_repeater.polycode import PolynomialCode, erasure_binning, p_fail
from gkp_repeater.protocols import RepeaterConfig, station_variance
from gkp_repeater.validation import ValidationPoint, run_validation


def small(samples=200_000, workers=1, block=1 << 16, seed=2024):
    return oracle.SamplerSpec(seed=seed, samples=samples, block_size=block, workers=workers)


def test_spec_validation():
    with pytest.raises(ValueError):
        oracle.SamplerSpec(seed=-1)
    with pytest.raises(ValueError):
        oracle.SamplerSpec(samples=0)
    spec = oracle.SamplerSpec(samples=10, block_size=4)
    assert spec.blocks() == [4, 4, 2]
    assert sum(oracle.SamplerSpec(samples=1000, block_size=64).blocks(per_item=5)) == 1000


def test_uniforms_are_open_and_gaussian():
    z = oracle.standard_normals(oracle.block_rng(1, 0, 0), 200_000)
    assert np.all(np.isfinite(z))
    assert abs(z.mean()) < 0.01
    assert abs(z.var() - 1) < 0.01


@pytest.mark.parametrize("workers", [2, 4])
def test_tallies_do_not_depend_on_worker_count(workers):
    one = oracle.sample_shift_distribution(5, 0.3, small(workers=1))
    many = oracle.sample_shift_distribution(5, 0.3, small(workers=workers))
    assert np.array_equal(one.counts, many.counts)
    code = PolynomialCode(5)
    e1 = oracle.sample_erasure_trial(code, 0.15, 0.8, small(50_000, 1))
    e2 = oracle.sample_erasure_trial(code, 0.15, 0.8, small(50_000, workers))
    assert (e1.failures, e1.discards) == (e2.failures, e2.discards)


def test_tasks_and_seeds_give_independent_streams():
    a = oracle.sample_shift_distribution(3, 0.5, small(), task=0)
    b = oracle.sample_shift_distribution(3, 0.5, small(), task=1)
    c = oracle.sample_shift_distribution(3, 0.5, small(seed=99), task=0)
    assert not np.array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, c.counts)
    again = oracle.sample_shift_distribution(3, 0.5, small(), task=0)
    assert np.array_equal(a.counts, again.counts)


def test_minimum_sample_count():
    with pytest.raises(ValueError):
        oracle.sample_shift_distribution(3, 0.1, oracle.SamplerSpec(samples=1000))


def test_noiseless_samples_stay_in_bin_zero():
    emp = oracle.sample_shift_distribution(7, 0.0, small(20_000))
    assert emp.counts[0] == 20_000


def test_tallies_are_reflection_symmetric():
    emp = oracle.sample_shift_distribution(13, 0.5, small(10**6))
    for k in range(1, 13):
        diff = emp.counts[k] - emp.counts[13 - k]
        assert abs(diff) <= 5 * np.sqrt(emp.counts[k] + emp.counts[13 - k] + 1)


@pytest.mark.parametrize("dim, var", [(2, 0.25), (13, 0.25), (3, 1.0)])
def test_shift_distribution_matches_closed_form(dim, var):
    emp = oracle.sample_shift_distribution(dim, var, small(10**6))
    assert np.all(np.abs(emp.z_scores(distribution_from_gaussian(dim, var).probs)) < 5)
    dist = emp.distribution()
    assert dist.probs.sum() == pytest.approx(1.0)


def test_wilson_intervals_cover_estimates():
    emp = oracle.sample_shift_distribution(3, 0.4, small(50_000))
    lo, hi = emp.wilson()
    assert np.all(lo <= emp.probs) and np.all(emp.probs <= hi)
    assert np.all(hi - lo < 0.02)


def test_erasure_trial_matches_closed_form():
    code = PolynomialCode(5)
    est = oracle.sample_erasure_trial(code, 0.15, 1.0, small(10**6))
    assert est.discards == 0
    assert est.closed_form_p_fail == pytest.approx(p_fail(code, 0.15, 1.0))
    _, z = oracle.z_score(est.p_fail, est.closed_form_p_fail, est.trials)
    assert abs(z) < 5


def test_erasure_trial_with_discarding():
    code = PolynomialCode(13)
    est = oracle.sample_erasure_trial(code, 0.05, 0.8, small(200_000))
    assert est.closed_form_p_discard == pytest.approx(erasure_binning(13, 0.05, 0.8).p_discard)
    assert abs(oracle.z_score(est.p_fail, est.closed_form_p_fail, est.trials)[1]) < 5
    assert abs(oracle.z_score(est.p_discard, est.closed_form_p_discard, est.qudits)[1]) < 5


def test_resolvability_guard_warns():
    with pytest.warns(oracle.ResolvabilityWarning, match="cannot be resolved"):
        est = oracle.sample_erasure_trial(PolynomialCode(13), 0.01, 1.0, oracle.SamplerSpec(samples=10_000))
    assert not est.resolvable
    assert oracle.required_trials(1e-11) > 1e12


def test_z_score_conventions():
    se, z = oracle.z_score(0.51, 0.5, 10_000)
    assert se == pytest.approx(0.005)
    assert z == pytest.approx(2.0)
    assert oracle.z_score(0.0, 0.0, 100) == (0.0, 0.0)
    assert oracle.z_score(0.1, 0.0, 100)[1] == np.inf


def test_bare_chain_matches_convolution_model():
    cfg = RepeaterConfig(protocol="two-way", dim=2, length_km=5.0, spacing_km=0.5, squeezing_db=10.0)
    emp = oracle.sample_bare_chain(cfg, small(10**6))
    assert emp.extra["n_stations"] == 10
    closed = convolve_power(distribution_from_gaussian(2, station_variance(cfg)), 10).probs
    assert np.all(np.abs(emp.z_scores(closed)) < 5)
    assert abs(emp.extra["lag1_corr"]) < 0.01


def test_single_station_chain_is_a_shift_distribution():
    cfg = RepeaterConfig(protocol="one-way", dim=3, length_km=0.5, spacing_km=0.5, squeezing_db=8.0)
    emp = oracle.sample_bare_chain(cfg, small(10**6))
    closed = distribution_from_gaussian(3, station_variance(cfg)).probs
    assert np.all(np.abs(emp.z_scores(closed)) < 5)
    assert "lag1_corr" not in emp.extra


def test_ideal_chain_has_no_errors():
    cfg = RepeaterConfig(dim=3, length_km=1e-8, spacing_km=1e-9, squeezing_db=200.0, coupling=1.0)
    emp = oracle.sample_bare_chain(cfg, small(20_000))
    assert emp.counts[0] == 20_000


def test_correlated_mode_reports_station_correlation():
    cfg = RepeaterConfig(protocol="two-way", dim=3, length_km=5.0, spacing_km=0.5, squeezing_db=12.0)
    emp = oracle.sample_bare_chain(cfg, small(200_000), correlated=True)
    assert emp.extra["correlated"]
    assert emp.extra["lag1_corr"] < -0.02


def test_bare_chain_rejects_encoded_and_long_chains():
    with pytest.raises(ValueError):
        oracle.sample_bare_chain(RepeaterConfig(dim=5, encoded=True), small())
    with pytest.raises(ValueError):
        oracle.sample_bare_chain(RepeaterConfig(length_km=1e4, spacing_km=0.1), small())


# -- validation harness ------------------------------------------------------------

def test_validation_point_report_shape():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", oracle.ResolvabilityWarning)
        report = run_validation(small(100_000), ValidationPoint(5, 0.15, 0.9))
    assert report["passed"]
    assert report["metadata"]["gaussian_transform"] == oracle.GAUSSIAN_TRANSFORM
    for entry in report["entries"]:
        assert {"check", "quantity", "estimate", "stderr", "closed_form", "z_score"} <= set(entry)


def test_perturbed_closed_form_is_flagged():
    report = run_validation(small(100_000), ValidationPoint(3, 0.3), perturb=0.05)
    assert not report["passed"]
    assert report["max_abs_z"] > 5


def test_validation_is_worker_independent():
    point = ValidationPoint(13, 0.05, 0.8)
    a = run_validation(small(100_000, workers=1), point)
    b = run_validation(small(100_000, workers=3), point)
    assert [e["z_score"] for e in a["entries"]] == [e["z_score"] for e in b["entries"]]
    assert a["metadata"] == b["metadata"]
