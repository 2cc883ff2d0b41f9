from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from penlik_engine.errors import DomainError, InputError, ParameterError
from penlik_engine.penalty import (
    condition_diagnostics,
    penalty_deriv,
    penalty_second_deriv,
    penalty_value,
    second_deriv_lipschitz,
    singular_at_origin,
    univariate_threshold,
)
from penlik_engine.types import PenaltySpec


def _random_spec(rng: np.random.Generator) -> PenaltySpec:
    lam = float(rng.uniform(0.1, 2.0))
    kind = ("scad", "hard", "soft", "lq")[rng.integers(4)]
    if kind == "lq":
        return PenaltySpec.lq(lam, float(rng.uniform(0.3, 2.0)))
    return PenaltySpec(kind, lam)


def _kinks(spec: PenaltySpec):
    if spec.kind == "scad":
        return (spec.lam, spec.a * spec.lam)
    if spec.kind == "hard":
        return (spec.lam,)
    return ()


def test_derivative_matches_finite_difference():
    rng = np.random.default_rng(1)
    h = 1e-6
    checked = 0
    while checked < 1000:
        spec = _random_spec(rng)
        theta = float(rng.uniform(0.05, 5.0))
        if any(abs(theta - k) < 1e-3 for k in _kinks(spec)):
            continue
        fd = (penalty_value(spec, theta + h) - penalty_value(spec, theta - h)) / (2 * h)
        assert fd == pytest.approx(penalty_deriv(spec, theta), abs=1e-6), str(spec)
        checked += 1


def _oracle_objective(spec: PenaltySpec, z: float, theta):
    theta = np.asarray(theta, dtype=float)
    pen = penalty_value(spec, np.abs(theta))
    # z I(|z| > lambda) minimizes the squared loss plus half the hard penalty.
    if spec.kind == "hard":
        pen = 0.5 * pen
    return 0.5 * (z - theta) ** 2 + pen


def test_threshold_matches_brute_force_minimizer():
    rng = np.random.default_rng(2)
    grid = np.linspace(-5.0, 5.0, 100001)
    checked = 0
    while checked < 1000:
        spec = _random_spec(rng)
        z = float(rng.uniform(-4.0, 4.0))
        if spec.kind == "hard" and abs(abs(z) - spec.lam) < 1e-3:
            continue
        values = _oracle_objective(spec, z, grid)
        centre = float(grid[np.argmin(values)])
        res = minimize_scalar(
            lambda t: float(_oracle_objective(spec, z, t)),
            bounds=(centre - 1e-4, centre + 1e-4),
            method="bounded",
            options={"xatol": 1e-12},
        )
        best = min((0.0, float(res.x)), key=lambda t: float(_oracle_objective(spec, z, t)))

        got = univariate_threshold(spec, z)
        assert float(_oracle_objective(spec, z, got)) <= float(_oracle_objective(spec, z, best)) + 1e-8, (spec, z)
        assert got == pytest.approx(best, abs=1e-4), (spec, z)
        checked += 1


def test_scad_threshold_is_continuous():
    spec = PenaltySpec.scad(1.0)
    z = np.linspace(-5.0, 5.0, 20001)
    delta = 1e-5
    jumps = np.abs(univariate_threshold(spec, z + delta) - univariate_threshold(spec, z))
    assert np.max(jumps) <= 2 * delta + 1e-12


def test_hard_threshold_jumps_by_lambda():
    spec = PenaltySpec.hard(0.7)
    below = univariate_threshold(spec, 0.7)
    above = univariate_threshold(spec, 0.7 + 1e-9)
    assert below == 0.0
    assert above - below == pytest.approx(0.7, abs=1e-8)


@pytest.mark.parametrize("kind", ["scad", "hard", "soft"])
@pytest.mark.parametrize("c", [0.5, 3.0])
def test_threshold_scale_equivariance(kind, c):
    spec = PenaltySpec(kind, 0.8)
    z = np.linspace(-6.0, 6.0, 1201) + 0.0013
    scaled = univariate_threshold(PenaltySpec(kind, c * 0.8), c * z)
    np.testing.assert_allclose(scaled, c * univariate_threshold(spec, z), atol=1e-9)


@pytest.mark.parametrize("kind", ["scad", "hard", "soft"])
def test_threshold_is_odd_and_sparse_near_zero(kind):
    spec = PenaltySpec(kind, 1.0)
    z = np.linspace(0.0, 6.0, 601)
    np.testing.assert_array_equal(univariate_threshold(spec, -z), -univariate_threshold(spec, z))
    assert np.all(univariate_threshold(spec, z[z <= 0.99]) == 0.0)


@pytest.mark.parametrize("kind", ["scad", "hard", "soft"])
def test_penalty_is_nondecreasing_from_zero(kind):
    spec = PenaltySpec(kind, 1.3)
    theta = np.linspace(0.0, 10.0, 5001)
    values = penalty_value(spec, theta)
    assert values[0] == 0.0
    assert np.all(np.diff(values) >= -1e-12)


def test_scad_value_is_continuous_at_the_knots():
    spec = PenaltySpec.scad(1.0)
    for knot in (1.0, 3.7):
        assert penalty_value(spec, knot - 1e-10) == pytest.approx(penalty_value(spec, knot + 1e-10), abs=1e-9)


def test_per_coordinate_lambda_override():
    spec = PenaltySpec.soft(1.0)
    out = penalty_value(spec, np.array([1.0, 1.0, 2.0]), lam=np.array([0.1, 0.2, 0.3]))
    np.testing.assert_allclose(out, [0.1, 0.2, 0.6])


def test_derivatives_reject_the_origin():
    with pytest.raises(DomainError):
        penalty_deriv(PenaltySpec.scad(1.0), 0.0)
    with pytest.raises(DomainError):
        penalty_second_deriv(PenaltySpec.scad(1.0), np.array([0.5, 0.0]))
    with pytest.raises(DomainError):
        penalty_value(PenaltySpec.soft(1.0), -0.1)


@pytest.mark.parametrize(
    "kwargs",
    [dict(kind="scad", lam=1.0, a=2.0), dict(kind="soft", lam=-1.0), dict(kind="lq", lam=1.0, q=0.0), dict(kind="ridge")],
    ids=["scad_a_too_small", "negative_lambda", "lq_zero_q", "unknown_kind"],
)
def test_invalid_penalty_specs(kwargs):
    with pytest.raises(ParameterError):
        PenaltySpec(**kwargs)


@pytest.mark.parametrize(
    "spec, singular",
    [
        (PenaltySpec.scad(1.0), True),
        (PenaltySpec.hard(1.0), True),
        (PenaltySpec.soft(1.0), True),
        (PenaltySpec.lq(1.0, 0.5), True),
        (PenaltySpec.lq(1.0, 2.0), False),
    ],
    ids=["scad", "hard", "soft", "lq_half", "lq_two"],
)
def test_singular_at_origin(spec, singular):
    assert singular_at_origin(spec) is singular


@pytest.mark.parametrize(
    "spec",
    [PenaltySpec.scad(1.0), PenaltySpec.hard(1.0), PenaltySpec.soft(1.0), PenaltySpec.lq(1.0, 0.5)],
    ids=["scad", "hard", "soft", "lq_half"],
)
def test_second_derivative_is_lipschitz_away_from_zero(spec):
    assert second_deriv_lipschitz(spec)


def test_diagnostics_with_no_coefficients():
    diag = condition_diagnostics(PenaltySpec.scad(0.5), [])
    assert diag.empty
    assert diag.a_n == 0.0 and diag.b_n == 0.0
    assert math.isinf(diag.separation_ratio)


def test_diagnostics_reject_zero_coefficients():
    with pytest.raises(InputError):
        condition_diagnostics(PenaltySpec.scad(0.5), [1.0, 0.0])


def test_diagnostics_in_the_concave_region():
    diag = condition_diagnostics(PenaltySpec.scad(1.0), [2.0, 10.0])
    assert diag.a_n == pytest.approx(1.7 / 2.7)
    assert diag.b_n == pytest.approx(1 / 2.7)
    assert diag.separation_ratio == pytest.approx(2.0)
