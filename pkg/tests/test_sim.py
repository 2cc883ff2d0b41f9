from __future__ import annotations

import numpy as np
import pytest

from penlik_engine.errors import DomainError, ExperimentError, InputError, NonStationaryError
from penlik_engine.export import dumps
from penlik_engine.sim import (
    _split,
    autocovariances,
    dimension_rule,
    model_error,
    population_gram,
    report_tables,
    run_lr_null_experiment,
    run_table_experiment,
    simulate_ar,
    true_beta,
)
from penlik_engine.types import ArProcessSpec, PenaltySpec

SMALL_RUN = dict(grid_size=8)


def test_ar1_autocovariances():
    spec = ArProcessSpec(coefficients=(0.5,), noise_sd=1.0)
    np.testing.assert_allclose(autocovariances(spec, 4), [0.5**k / 0.75 for k in range(4)], rtol=1e-12)


def test_white_noise_gram_is_identity():
    spec = ArProcessSpec(coefficients=(0.0,), noise_sd=2.0)
    np.testing.assert_allclose(population_gram(spec, 3), 4.0 * np.eye(3), atol=1e-12)


def test_default_gram_is_symmetric_toeplitz_and_positive_definite():
    gram = population_gram(ArProcessSpec(), 7)
    np.testing.assert_array_equal(gram, gram.T)
    np.testing.assert_array_equal(np.diag(gram, 1), np.full(6, gram[0, 1]))
    assert np.min(np.linalg.eigvalsh(gram)) > 0


@pytest.mark.parametrize("coefficients", [(1.0,), (1.5,), (0.6, 0.6)], ids=["unit_root", "explosive", "ar2_explosive"])
def test_nonstationary_processes_are_rejected(coefficients):
    with pytest.raises(NonStationaryError):
        ArProcessSpec(coefficients=coefficients)


def test_dimension_rule_below_supported_range():
    with pytest.raises(DomainError):
        dimension_rule(99)


def test_simulation_is_deterministic_and_lagged():
    spec = ArProcessSpec(seed=7)
    first = simulate_ar(spec, 300, 7)
    second = simulate_ar(spec, 300, 7)
    np.testing.assert_array_equal(first.design, second.design)
    np.testing.assert_array_equal(first.response, second.response)
    assert first.design.shape == (300, 7)
    assert first.names == tuple(f"beta{k}" for k in range(1, 8))
    for i in range(7, 300):
        for k in range(7):
            assert first.design[i, k] == first.response[i - 1 - k]


def test_simulation_needs_p_at_least_the_order():
    with pytest.raises(InputError):
        simulate_ar(ArProcessSpec(), 100, 4)


def test_white_noise_has_no_lag_one_correlation():
    data = simulate_ar(ArProcessSpec(coefficients=(0.0,), seed=3), 10000, 1)
    x = data.response
    r1 = np.corrcoef(x[1:], x[:-1])[0, 1]
    assert abs(r1) < 3 / np.sqrt(10000)


def test_model_error_examples():
    beta = np.array([1.0, -2.0])
    assert model_error(beta, beta, np.eye(2)) == 0.0
    assert model_error([1.0, 1.0], [0.0, 3.0], np.eye(2)) == pytest.approx(5.0)
    with pytest.raises(InputError):
        model_error([1.0], [1.0, 2.0], np.eye(2))
    with pytest.raises(InputError):
        model_error([1.0, 2.0], [1.0], np.eye(2))
    with pytest.raises(InputError):
        model_error([1.0, 2.0], [1.0, 2.0], np.eye(3))


def test_true_beta_pads_with_zeros():
    beta = true_beta(ArProcessSpec(), 7)
    np.testing.assert_allclose(beta, [2.75, -23 / 6, 37 / 12, -13 / 9, 1 / 3, 0.0, 0.0])


def test_too_many_failures_abort_the_experiment():
    with pytest.raises(ExperimentError):
        _split(["replicate 0: boom", "replicate 1: boom", 1.0, 2.0], 4)
    kept, failures = _split(["replicate 0: boom"] + [1.0] * 10, 11)
    assert failures == 1
    assert kept == [1.0] * 10


def test_table_experiment_small_run():
    report = run_table_experiment(100, 4, PenaltySpec("scad"), seed=5, keep_records=True, **SMALL_RUN)
    assert report.p_n == 7
    assert report.replicates == 4
    assert report.failures == 0
    assert len(report.records) == 4
    assert 0.0 <= report.avg_correct_zeros <= 2.0
    assert 0.0 <= report.avg_incorrect_zeros <= 5.0
    assert report.mrme_oracle_vs_ls > 0 and report.mrme_pls_vs_ls > 0
    assert len(report.coefficient_medians) == 5
    assert report.penalty == "scad(a=3.7)"


def test_least_squares_relative_error_against_itself_is_one():
    report = run_table_experiment(100, 3, PenaltySpec("soft"), seed=2, keep_records=True, **SMALL_RUN)
    assert all(r.me_ls > 0 for r in report.records)
    ratios = [r.me_ls / r.me_ls for r in report.records]
    assert ratios == [1.0, 1.0, 1.0]


def test_table_experiment_is_reproducible():
    first = run_table_experiment(100, 3, PenaltySpec("hard"), seed=9, **SMALL_RUN)
    second = run_table_experiment(100, 3, PenaltySpec("hard"), seed=9, **SMALL_RUN)
    assert dumps(first) == dumps(second)


def test_parallel_replicates_match_serial():
    serial = run_table_experiment(100, 4, PenaltySpec("soft"), seed=4, **SMALL_RUN)
    parallel = run_table_experiment(100, 4, PenaltySpec("soft"), seed=4, workers=2, **SMALL_RUN)
    assert dumps(serial) == dumps(parallel)


def test_report_tables_layout():
    report = run_table_experiment(100, 3, PenaltySpec("scad"), seed=1, **SMALL_RUN)
    tables = report_tables(report)
    assert set(tables) == {"selection", "medians", "deviations"}
    assert list(tables["medians"].columns) == ["n", "beta1", "beta2", "beta3", "beta4", "beta5"]
    assert list(tables["deviations"].columns) == ["coefficient", "sd", "sd_median", "sd_mad", "coverage_95"]
    assert tables["selection"]["correct_zero_pct"].iloc[0] == pytest.approx(100 * report.avg_correct_zeros / 2)


def test_lr_null_needs_eight_columns():
    with pytest.raises(DomainError):
        run_lr_null_experiment(100, 2, PenaltySpec("scad"), **SMALL_RUN)


def test_lr_null_small_run_density_integrates_to_one():
    report = run_lr_null_experiment(200, 6, PenaltySpec("scad"), seed=3, bins=5, **SMALL_RUN)
    assert report.p_n == 10
    assert report.df == 2
    assert len(report.statistics) == 6
    assert all(s >= 0 for s in report.statistics)
    widths = np.diff(report.bin_edges)
    assert float(np.sum(np.asarray(report.density) * widths)) == pytest.approx(1.0, abs=1e-6)
    assert list(report.qq_empirical) == sorted(report.statistics)
