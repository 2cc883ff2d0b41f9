from __future__ import annotations

import numpy as np
import pytest

from penlik_engine.inference import lr_test, sandwich_covariance
from penlik_engine.model import information
from penlik_engine.optimizer import fit_penalized, penalized_objective
from penlik_engine.tuning import gcv
from penlik_engine.types import PenaltySpec

SPECS = [PenaltySpec.scad(0.05), PenaltySpec.hard(0.1), PenaltySpec.soft(0.05), PenaltySpec.lq(0.05, 0.5)]


def test_information_is_positive_semidefinite(random_model):
    for seed in range(20):
        model = random_model(n=15, p=6, seed=seed)
        info = information(model)
        assert np.max(np.abs(info - info.T)) < 1e-12
        assert np.min(np.linalg.eigvalsh(info)) >= -1e-10


@pytest.mark.parametrize("spec", SPECS, ids=str)
def test_reported_objective_matches_recomputation(spec, sparse_model):
    fit = fit_penalized(sparse_model, spec)
    assert fit.objective == pytest.approx(penalized_objective(sparse_model, spec, fit.beta), abs=1e-9)


@pytest.mark.parametrize("spec", SPECS[:3], ids=str)
def test_gcv_is_recomputable_from_its_fields(spec, sparse_model):
    result = gcv(sparse_model, spec, spec.lam)
    n = sparse_model.n
    assert result.gcv == pytest.approx((result.rss / n) / (1 - result.effective_df / n) ** 2, rel=1e-12)


@pytest.mark.parametrize("spec", [SPECS[0], SPECS[2]], ids=str)
def test_sandwich_is_symmetric_with_nonnegative_diagonal(spec, sparse_model):
    fit = fit_penalized(sparse_model, spec)
    cov = sandwich_covariance(sparse_model, fit, spec)
    assert np.max(np.abs(cov.matrix - cov.matrix.T)) < 1e-10
    assert np.all(np.diag(cov.matrix) >= 0)


@pytest.mark.parametrize("spec", [SPECS[0], SPECS[2]], ids=str)
def test_sandwich_is_positive_semidefinite(spec, random_model):
    for seed in range(10):
        model = random_model(n=120, p=6, seed=200 + seed, beta=[2.0, -1.5, 1.0, 0.0, 0.0, 0.0])
        fit = fit_penalized(model, spec)
        cov = sandwich_covariance(model, fit, spec)
        assert np.min(np.linalg.eigvalsh(cov.matrix)) >= -1e-8


def test_nested_hypotheses_give_larger_statistics(sparse_model):
    spec = PenaltySpec.soft(0.05)
    small = np.zeros((1, 8))
    small[0, 4] = 1.0
    large = np.zeros((2, 8))
    large[0, 4] = large[1, 2] = 1.0
    assert lr_test(sparse_model, spec, large).statistic >= lr_test(sparse_model, spec, small).statistic - 1e-6
