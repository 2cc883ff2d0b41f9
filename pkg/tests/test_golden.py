from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from penlik_engine.constants import AR_COEFFICIENTS
from penlik_engine.inference import chisq_sf
from penlik_engine.penalty import (
    condition_diagnostics,
    penalty_deriv,
    penalty_second_deriv,
    penalty_value,
    univariate_threshold,
)
from penlik_engine.sim import dimension_rule, verify_ar_polynomial
from penlik_engine.types import PenaltySpec

VALUE_CASES = [
    ("scad_origin", PenaltySpec.scad(1.0), 0.0, 0.0),
    ("scad_linear_piece", PenaltySpec.scad(1.0), 0.5, 0.5),
    ("scad_quadratic_piece", PenaltySpec.scad(1.0), 2.0, (2 * 3.7 * 2 - 4 - 1) / (2 * 2.7)),
    ("scad_flat", PenaltySpec.scad(1.0), 10.0, 2.35),
    ("hard_flat", PenaltySpec.hard(2.0), 3.0, 4.0),
    ("hard_below_lambda", PenaltySpec.hard(2.0), 1.0, 3.0),
    ("soft", PenaltySpec.soft(0.3), 2.0, 0.6),
    ("lq_half", PenaltySpec.lq(0.5, 0.5), 4.0, 1.0),
]

DERIV_CASES = [
    ("scad_below_lambda", PenaltySpec.scad(1.0), 0.5, 1.0),
    ("scad_middle", PenaltySpec.scad(1.0), 2.0, 0.629630),
    ("scad_beyond_a_lambda", PenaltySpec.scad(1.0), 10.0, 0.0),
    ("hard_below_lambda", PenaltySpec.hard(1.0), 0.25, 1.5),
    ("hard_beyond_lambda", PenaltySpec.hard(1.0), 1.5, 0.0),
    ("soft", PenaltySpec.soft(0.3), 7.0, 0.3),
    ("lq_square", PenaltySpec.lq(0.5, 2.0), 3.0, 3.0),
]

SECOND_DERIV_CASES = [
    ("scad_below_lambda", PenaltySpec.scad(1.0), 0.5, 0.0),
    ("scad_middle", PenaltySpec.scad(1.0), 2.0, -0.370370),
    ("scad_beyond_a_lambda", PenaltySpec.scad(1.0), 10.0, 0.0),
    ("hard_below_lambda", PenaltySpec.hard(1.0), 0.5, -2.0),
    ("soft", PenaltySpec.soft(0.3), 1.0, 0.0),
]

THRESHOLD_CASES = [
    ("scad_killed", PenaltySpec.scad(1.0), 0.8, 0.0),
    ("scad_soft_region", PenaltySpec.scad(1.0), -1.5, -0.5),
    ("scad_middle", PenaltySpec.scad(1.0), 3.0, 2.588235),
    ("scad_unbiased", PenaltySpec.scad(1.0), 5.0, 5.0),
    ("hard_kept", PenaltySpec.hard(1.0), 1.001, 1.001),
    ("hard_killed", PenaltySpec.hard(1.0), -0.999, 0.0),
    ("soft_negative", PenaltySpec.soft(0.5), -2.0, -1.5),
    ("soft_killed", PenaltySpec.soft(0.5), 0.4, 0.0),
    ("lq_one_is_soft", PenaltySpec.lq(0.5, 1.0), 2.0, 1.5),
    ("lq_square_is_ridge", PenaltySpec.lq(0.5, 2.0), 4.0, 2.0),
]

DIAGNOSTIC_COEFFS = (2.75, -3.8333, 3.0833, -1.4444, 0.3333)

DIAGNOSTIC_CASES = [
    ("scad", PenaltySpec.scad(0.05), 0.0, 0.0),
    ("soft", PenaltySpec.soft(0.05), 0.05, 0.0),
    ("hard", PenaltySpec.hard(0.05), 0.0, 0.0),
]

CHISQ_CASES = [
    ("median_df2", 1.386294, 2, 0.5),
    ("critical_df1", 3.841459, 1, 0.05),
    ("critical_df2", 5.991465, 2, 0.05),
    ("origin", 0.0, 3, 1.0),
]

DIMENSION_CASES = [
    ("n100", 100, 7),
    ("n200", 200, 10),
    ("n400", 400, 12),
    ("n800", 800, 16),
]


@pytest.mark.parametrize("name, spec, theta, exp", VALUE_CASES, ids=[c[0] for c in VALUE_CASES])
def test_penalty_value(name, spec, theta, exp):
    assert penalty_value(spec, theta) == pytest.approx(exp, abs=1e-12)


@pytest.mark.parametrize("name, spec, theta, exp", DERIV_CASES, ids=[c[0] for c in DERIV_CASES])
def test_penalty_deriv(name, spec, theta, exp):
    assert penalty_deriv(spec, theta) == pytest.approx(exp, abs=1e-6)


@pytest.mark.parametrize("name, spec, theta, exp", SECOND_DERIV_CASES, ids=[c[0] for c in SECOND_DERIV_CASES])
def test_penalty_second_deriv(name, spec, theta, exp):
    assert penalty_second_deriv(spec, theta) == pytest.approx(exp, abs=1e-6)


@pytest.mark.parametrize("name, spec, z, exp", THRESHOLD_CASES, ids=[c[0] for c in THRESHOLD_CASES])
def test_univariate_threshold(name, spec, z, exp):
    assert univariate_threshold(spec, z) == pytest.approx(exp, abs=1e-6)


@pytest.mark.parametrize("name, spec, a_n, b_n", DIAGNOSTIC_CASES, ids=[c[0] for c in DIAGNOSTIC_CASES])
def test_condition_diagnostics(name, spec, a_n, b_n):
    diag = condition_diagnostics(spec, DIAGNOSTIC_COEFFS)
    assert diag.a_n == pytest.approx(a_n, abs=1e-12)
    assert diag.b_n == pytest.approx(b_n, abs=1e-12)
    assert diag.separation_ratio == pytest.approx(0.3333 / 0.05)
    assert not diag.empty


@pytest.mark.parametrize("name, x, q, exp", CHISQ_CASES, ids=[c[0] for c in CHISQ_CASES])
def test_chisq_sf(name, x, q, exp):
    assert chisq_sf(x, q) == pytest.approx(exp, abs=1e-6)


@pytest.mark.parametrize("name, n, exp", DIMENSION_CASES, ids=[c[0] for c in DIMENSION_CASES])
def test_dimension_rule(name, n, exp):
    assert dimension_rule(n) == exp


def test_ar_polynomial_expands_to_the_simulation_coefficients():
    coefficients, modulus = verify_ar_polynomial()
    assert coefficients == AR_COEFFICIENTS
    assert coefficients == (
        Fraction(11, 4),
        Fraction(-23, 6),
        Fraction(37, 12),
        Fraction(-13, 9),
        Fraction(1, 3),
    )
    assert modulus == pytest.approx(math.sqrt(1.5), abs=1e-12)


def test_threshold_preserves_array_shape():
    z = np.array([[-3.0, 0.2], [0.8, 5.0]])
    out = univariate_threshold(PenaltySpec.scad(1.0), z)
    assert out.shape == z.shape
    np.testing.assert_allclose(out, [[-2.588235294117647, 0.0], [0.0, 5.0]], atol=1e-12)
