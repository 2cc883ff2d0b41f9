"""Standard errors, asymptotic covariance and likelihood-ratio tests for penalized fits."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import gammaincc

from .errors import DegenerateDfError, DomainError, InputError, NumericError, ParameterError
from .model import GaussianModel, information, residuals, rss
from .optimizer import fit_constrained, fit_penalized, orthonormal_constraints, resolve_lambdas
from .penalty import penalty_deriv, penalty_second_deriv
from .tuning import effective_df
from .types import AsymptoticSummary, CovarianceEstimate, FitConfig, FitResult, LrTestResult, PenaltySpec

logger = logging.getLogger(__name__)

LR_TOLERANCE: float = 1e-9
MAX_BRACKET_CONDITION: float = 1e12


def chisq_sf(x: float, q: int) -> float:
    """Upper tail of the chi-square distribution with q degrees of freedom."""
    if not np.isfinite(x) or x < 0:
        raise DomainError(f"chi-square statistic must be finite and >= 0, got {x}")
    if int(q) != q or q < 1:
        raise ParameterError(f"degrees of freedom must be a positive integer, got {q}")
    if x == 0:
        return 1.0
    return float(gammaincc(q / 2.0, x / 2.0))


def profile_sigma2(model: GaussianModel, fit: FitResult, penalty: PenaltySpec) -> float:
    """RSS / (n - e(lambda))."""
    dof = model.n - effective_df(model, fit, penalty)
    if dof <= 0:
        raise DegenerateDfError(f"n - e(lambda) = {dof:.6g} <= 0; cannot profile sigma2")
    value = rss(model, fit.beta) / dof
    if value <= 0:
        raise NumericError("Residual sum of squares is zero; sigma2 is not identifiable")
    return value


def sandwich_covariance(
    model: GaussianModel,
    fit: FitResult,
    penalty: PenaltySpec,
    sigma2: Optional[float] = None,
) -> CovarianceEstimate:
    """Sandwich covariance of the nonzero coefficients.

    n {H - n S}^-1 C {H - n S}^-1 with H the Hessian of the log-likelihood on
    the active set, S = diag p''(|b_j|) and C the mean-centred empirical
    covariance of the per-observation scores. The noise variance defaults to
    the profiled RSS / (n - e(lambda)).
    """
    active = list(fit.active_set)
    if not active:
        raise InputError("Sandwich covariance needs a nonempty active set")
    n = model.n
    s2 = profile_sigma2(model, fit, penalty) if sigma2 is None else float(sigma2)

    xa = model.X[:, active]
    scores = xa * (residuals(model, fit.beta) / s2)[:, None]
    mean = scores.mean(axis=0)
    meat = scores.T @ scores / n - np.outer(mean, mean)

    b = fit.beta[active]
    curvature = penalty_second_deriv(penalty, np.abs(b), lam=fit.lambda_used[active])
    bracket = -(xa.T @ xa) / s2 - n * np.diag(np.atleast_1d(curvature))
    cond = float(np.linalg.cond(bracket))
    if not np.isfinite(cond) or cond > MAX_BRACKET_CONDITION:
        raise NumericError("Sandwich bracket matrix is singular", condition_number=cond)
    inv = np.linalg.inv(bracket)
    cov = n * inv @ meat @ inv
    cov = (cov + cov.T) / 2.0
    return CovarianceEstimate(
        active_indices=tuple(active),
        matrix=cov,
        standard_errors=np.sqrt(np.clip(np.diag(cov), 0.0, None)),
        sigma2=s2,
        condition_number=cond,
    )


def asymptotic_covariance(information_matrix: ArrayLike, sigma_lambda: ArrayLike) -> np.ndarray:
    """{I + S}^-1 I {I + S}^-1; ``sigma_lambda`` may be the diagonal as a vector."""
    info = np.atleast_2d(np.asarray(information_matrix, dtype=float))
    sl = np.asarray(sigma_lambda, dtype=float)
    sl = np.diag(np.atleast_1d(sl)) if sl.ndim <= 1 else sl
    if info.shape[0] != info.shape[1] or sl.shape != info.shape:
        raise InputError(f"Shape mismatch: information {info.shape}, sigma_lambda {sl.shape}")
    m = info + sl
    cond = float(np.linalg.cond(m))
    if not np.isfinite(cond) or cond > 1e14:
        raise NumericError("I + Sigma_lambda is singular", condition_number=cond)
    inv = np.linalg.inv(m)
    out = inv @ info @ inv
    return (out + out.T) / 2.0


def asymptotic_summary(model: GaussianModel, fit: FitResult, penalty: PenaltySpec) -> AsymptoticSummary:
    """Sigma_lambda, bias vector and asymptotic covariance on the active set."""
    active = list(fit.active_set)
    if not active:
        raise InputError("Asymptotic summary needs a nonempty active set")
    b = fit.beta[active]
    lams = fit.lambda_used[active]
    sigma_lambda = np.diag(np.atleast_1d(penalty_second_deriv(penalty, np.abs(b), lam=lams)))
    bias = np.atleast_1d(penalty_deriv(penalty, np.abs(b), lam=lams)) * np.sign(b)
    info = information(model)[np.ix_(active, active)]
    return AsymptoticSummary(
        active_indices=tuple(active),
        sigma_lambda=sigma_lambda,
        bias_vector=bias,
        asymptotic_cov=asymptotic_covariance(info, sigma_lambda),
    )


def _nested_start(model: GaussianModel, null: FitResult, constraints: np.ndarray) -> np.ndarray:
    """Constrained solution plus a least-squares step in the row space of A."""
    step, *_ = np.linalg.lstsq(model.X @ constraints.T, residuals(model, null.beta), rcond=None)
    return null.beta + constraints.T @ step


def _better(first: FitResult, second: FitResult) -> FitResult:
    return second if second.objective > first.objective else first


def lr_test(
    model: GaussianModel,
    penalty: PenaltySpec,
    constraint_rows: ArrayLike,
    config: FitConfig = FitConfig(),
    *,
    penalized: bool = True,
    exempt_tested: bool = False,
    parallel: bool = False,
) -> LrTestResult:
    """T = 2 {Q(unconstrained) - Q(constrained)} for H0: A beta = 0, chi-square(q) calibrated.

    The unconstrained fit is also started from the constrained solution moved
    by least squares along the rows of A, so both fits share the zeros of the
    untested coordinates. With ``exempt_tested`` the coordinates the
    constraint touches carry no penalty and only that nested fit is used,
    which makes T >= 0. Otherwise each fit keeps the better of two starts:
    the configured one and the other fit's solution. ``penalized=False``
    gives the ordinary likelihood-ratio test.
    """
    rows = np.atleast_2d(np.asarray(constraint_rows, dtype=float))
    constraints = orthonormal_constraints(rows, model.p)
    df = constraints.shape[0]
    if df == 0:
        raise InputError("The likelihood-ratio test needs at least one constraint row")

    spec = penalty if penalized else penalty.with_lambda(0.0)
    lambdas = resolve_lambdas(model, spec, config).copy() if penalized else np.zeros(model.p)
    if exempt_tested:
        lambdas[np.any(rows != 0, axis=0)] = 0.0
    cfg = config.with_lambdas(lambdas)

    if exempt_tested:
        null = fit_constrained(model, spec, rows, cfg)
        full = fit_penalized(model, spec, cfg.warm_started(_nested_start(model, null, constraints)))
    else:
        if parallel:
            with ThreadPoolExecutor(max_workers=2) as pool:
                full_future = pool.submit(fit_penalized, model, spec, cfg)
                null_future = pool.submit(fit_constrained, model, spec, rows, cfg)
                full, null = full_future.result(), null_future.result()
        else:
            full = fit_penalized(model, spec, cfg)
            null = fit_constrained(model, spec, rows, cfg)
        null = _better(null, fit_constrained(model, spec, rows, cfg.warm_started(full.beta)))
        full = _better(full, fit_penalized(model, spec, cfg.warm_started(_nested_start(model, null, constraints))))

    raw = 2.0 * (full.objective - null.objective)
    flagged = raw < -LR_TOLERANCE
    if flagged:
        logger.warning(
            "Negative likelihood-ratio statistic %.3e: the constrained fit found a better local optimum", raw
        )
    statistic = max(raw, 0.0)
    return LrTestResult(
        statistic=statistic,
        df=df,
        p_value=chisq_sf(statistic, df),
        unconstrained_objective=full.objective,
        constrained_objective=null.objective,
        unconstrained_active=full.active_set,
        constrained_active=null.active_set,
        raw_statistic=raw,
        flagged=flagged,
        penalized=penalized,
    )

