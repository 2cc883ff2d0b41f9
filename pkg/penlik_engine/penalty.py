"""Penalty family: values, derivatives, univariate thresholding and regularity diagnostics.

All functions accept scalars or numpy arrays of theta and an optional ``lam``
override (scalar or array broadcastable against theta) so that the optimizer
can evaluate per-coordinate penalties p_{lambda_j}. Scalars in, float out.
"""
from __future__ import annotations

import logging
import math
from typing import Optional, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike
from scipy.optimize import minimize_scalar

from .errors import DomainError, InputError
from .types import PenaltyDiagnostics, PenaltySpec

logger = logging.getLogger(__name__)

FloatOrArray = Union[float, np.ndarray]

ORIGIN_OFFSET: float = 1e-8
LQ_XTOL: float = 1e-10
LIPSCHITZ_GRID: int = 1000


def _as_theta(theta: ArrayLike, *, strictly_positive: bool) -> np.ndarray:
    t = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(t)):
        raise DomainError("theta must be finite")
    if strictly_positive and np.any(t <= 0):
        raise DomainError("theta must be > 0; the derivative at the origin is one-sided")
    if not strictly_positive and np.any(t < 0):
        raise DomainError("theta must be >= 0")
    return t


def _lam(spec: PenaltySpec, lam: Optional[ArrayLike]) -> FloatOrArray:
    if lam is None:
        return spec.lam
    return np.asarray(lam, dtype=float)


def _out(values: np.ndarray) -> FloatOrArray:
    return float(values) if np.ndim(values) == 0 else values


def penalty_value(spec: PenaltySpec, theta: ArrayLike, lam: Optional[ArrayLike] = None) -> FloatOrArray:
    """p_lambda(theta) for theta >= 0.

    SCAD uses the antiderivative of its derivative with p(0) = 0, constant
    (a+1) lambda^2 / 2 beyond a*lambda; Hard is lambda^2 - (theta - lambda)^2 below lambda.
    """
    t = _as_theta(theta, strictly_positive=False)
    lam = _lam(spec, lam)
    if spec.kind == "soft":
        out = lam * t
    elif spec.kind == "hard":
        out = lam**2 - np.where(t < lam, (t - lam) ** 2, 0.0)
    elif spec.kind == "scad":
        a = spec.a
        out = np.where(
            t <= lam,
            lam * t,
            np.where(
                t <= a * lam,
                (2 * a * lam * t - t**2 - lam**2) / (2 * (a - 1)),
                (a + 1) * lam**2 / 2,
            ),
        )
    else:
        out = lam * t**spec.q
    return _out(np.asarray(out, dtype=float))


def penalty_deriv(spec: PenaltySpec, theta: ArrayLike, lam: Optional[ArrayLike] = None) -> FloatOrArray:
    t = _as_theta(theta, strictly_positive=True)
    lam = _lam(spec, lam)
    if spec.kind == "soft":
        out = lam * np.ones_like(t)
    elif spec.kind == "hard":
        out = 2.0 * np.maximum(lam - t, 0.0)
    elif spec.kind == "scad":
        a = spec.a
        out = np.where(t <= lam, lam, np.maximum(a * lam - t, 0.0) / (a - 1))
    else:
        out = lam * spec.q * t ** (spec.q - 1)
    return _out(np.asarray(out, dtype=float))


def penalty_second_deriv(spec: PenaltySpec, theta: ArrayLike, lam: Optional[ArrayLike] = None) -> FloatOrArray:
    """p''_lambda(theta); at the kinks of p' (lambda and a*lambda) the right-hand limit is returned."""
    t = _as_theta(theta, strictly_positive=True)
    lam = _lam(spec, lam)
    if spec.kind == "soft":
        out = np.zeros_like(t) + 0.0 * lam
    elif spec.kind == "hard":
        out = np.where(t < lam, -2.0, 0.0)
    elif spec.kind == "scad":
        a = spec.a
        out = np.where((t >= lam) & (t < a * lam), -1.0 / (a - 1), 0.0)
    else:
        q = spec.q
        out = lam * q * (q - 1) * t ** (q - 2)
    return _out(np.asarray(out, dtype=float))


def _lq_threshold(spec: PenaltySpec, z: float) -> float:
    lam, q = spec.lam, spec.q
    absz = abs(z)
    if lam == 0 or absz == 0:
        return float(z)
    if q == 1:
        return math.copysign(max(absz - lam, 0.0), z)

    def objective(t: float) -> float:
        return 0.5 * (absz - t) ** 2 + lam * t**q

    # For q < 1 the objective is concave up to its inflection point and convex beyond it.
    lower = 0.0 if q > 1 else min((lam * q * (1 - q)) ** (1 / (2 - q)), absz)
    candidates = [0.0, absz]
    if lower < absz:
        res = minimize_scalar(objective, bounds=(lower, absz), method="bounded", options={"xatol": LQ_XTOL})
        candidates.append(float(res.x))
    best = min(candidates, key=lambda t: (objective(t), t))
    return math.copysign(best, z)


def univariate_threshold(spec: PenaltySpec, z: ArrayLike) -> FloatOrArray:
    """Minimizer of 0.5 (z - theta)^2 + p_lambda(|theta|).

    Closed forms for soft, hard and SCAD; Lq is solved numerically. The hard
    rule is z I(|z| > lambda). Ties at the sparsity boundary resolve to 0.
    """
    zz = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(zz)):
        raise InputError("z must be finite")
    lam = spec.lam
    absz = np.abs(zz)
    sgn = np.sign(zz)
    if spec.kind == "soft":
        out = sgn * np.maximum(absz - lam, 0.0)
    elif spec.kind == "hard":
        out = np.where(absz > lam, zz, 0.0)
    elif spec.kind == "scad":
        a = spec.a
        out = np.where(
            absz <= 2 * lam,
            sgn * np.maximum(absz - lam, 0.0),
            np.where(absz <= a * lam, ((a - 1) * zz - sgn * a * lam) / (a - 2), zz),
        )
    else:
        out = np.vectorize(lambda v: _lq_threshold(spec, float(v)), otypes=[float])(zz)
    return _out(np.asarray(out, dtype=float))


def singular_at_origin(spec: PenaltySpec) -> bool:
    """Proxy for liminf p'(theta)/lambda > 0 as theta -> 0+: positive at a small offset and not vanishing below it."""
    if spec.lam == 0:
        return False
    near = penalty_deriv(spec, ORIGIN_OFFSET)
    nearer = penalty_deriv(spec, ORIGIN_OFFSET * 1e-2)
    return bool(near / spec.lam > 0 and nearer >= near * (1 - 1e-6))


def second_deriv_lipschitz(spec: PenaltySpec) -> bool:
    """Sampled check that p'' has no jumps on [C lambda, 10 C lambda] (C = a for SCAD, else 1).

    A jump makes the steepest finite-difference slope grow with the grid
    resolution; a Lipschitz p'' keeps it bounded.
    """
    if spec.lam == 0:
        return True
    c = spec.a if spec.kind == "scad" else 1.0
    lo, hi = c * spec.lam, 10 * c * spec.lam

    def steepest(points: int) -> float:
        grid = np.linspace(lo, hi, points)
        curvature = penalty_second_deriv(spec, grid)
        return float(np.max(np.abs(np.diff(curvature)) / np.diff(grid)))

    coarse = steepest(LIPSCHITZ_GRID)
    fine = steepest(10 * LIPSCHITZ_GRID)
    return bool(fine <= 2 * coarse + 1e-12)


def condition_diagnostics(spec: PenaltySpec, nonzero_coeffs: Sequence[float]) -> PenaltyDiagnostics:
    coeffs = np.asarray(nonzero_coeffs, dtype=float).ravel()
    singular = singular_at_origin(spec)
    lipschitz = second_deriv_lipschitz(spec)
    if coeffs.size == 0:
        logger.info("condition_diagnostics called with no coefficients; a_n = b_n = 0")
        return PenaltyDiagnostics(0.0, 0.0, singular, lipschitz, math.inf, empty=True)
    if np.any(coeffs == 0):
        raise InputError("condition_diagnostics expects nonzero coefficients only")
    abs_b = np.abs(coeffs)
    a_n = float(np.max(penalty_deriv(spec, abs_b)))
    b_n = float(np.max(np.abs(penalty_second_deriv(spec, abs_b))))
    separation = math.inf if spec.lam == 0 else float(np.min(abs_b) / spec.lam)
    return PenaltyDiagnostics(
        a_n=max(a_n, 0.0),
        b_n=b_n,
        singular_at_origin=singular,
        lipschitz_ok=lipschitz,
        separation_ratio=separation,
    )
