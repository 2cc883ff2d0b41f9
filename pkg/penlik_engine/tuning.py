"""GCV selection of lambda and the effective number of parameters."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike

from .errors import DegenerateDfError, InputError, NumericError, ParameterError, ScanError
from .model import GaussianModel, per_covariate_lambdas, rss
from .optimizer import fit_penalized
from .penalty import penalty_deriv
from .types import FitConfig, FitResult, GcvResult, PenaltySpec

logger = logging.getLogger(__name__)

PROFILE_COLUMNS: Tuple[str, ...] = ("lambda", "gcv", "effective_df", "rss")


def effective_df(model: GaussianModel, fit: FitResult, penalty: PenaltySpec) -> float:
    """e(lambda) = tr{X_A (X_A'X_A / sigma2 + n D)^-1 X_A' / sigma2} on the active set A."""
    active = list(fit.active_set)
    if not active:
        return 0.0
    b = fit.beta[active]
    d = penalty_deriv(penalty, np.abs(b), lam=fit.lambda_used[active]) / np.abs(b)
    if not np.any(d):
        return float(len(active))
    xa = model.X[:, active]
    g = xa.T @ xa / model.sigma2
    inner = g + model.n * np.diag(d)
    cond = float(np.linalg.cond(inner))
    if not np.isfinite(cond) or cond > 1e14:
        raise NumericError("Singular matrix in effective degrees of freedom", condition_number=cond)
    return float(np.trace(np.linalg.solve(inner, g)))


def _check_gamma(gamma: float) -> float:
    if not (np.isfinite(gamma) and gamma > 0):
        raise ParameterError(f"gamma must be positive, got {gamma}")
    return float(gamma)


def _evaluate(
    model: GaussianModel,
    penalty: PenaltySpec,
    lam: float,
    gamma: float,
    config: FitConfig,
    weights: Optional[np.ndarray],
) -> GcvResult:
    spec = penalty.with_lambda(lam)
    lambdas = None if weights is None else per_covariate_lambdas(lam, weights)
    fit = fit_penalized(model, spec, config.with_lambdas(lambdas))
    residual = rss(model, fit.beta)
    e = effective_df(model, fit, spec)
    denom = 1.0 - gamma * e / model.n
    if denom <= 0:
        return GcvResult(float(lam), float("inf"), e, residual, gamma, degenerate=True, fit=fit)
    value = (residual / model.n) / denom**2
    return GcvResult(float(lam), value, e, residual, gamma, fit=fit)


def gcv(
    model: GaussianModel,
    penalty: PenaltySpec,
    lam: float,
    gamma: float = 1.0,
    config: FitConfig = FitConfig(),
    weights: Optional[ArrayLike] = None,
) -> GcvResult:
    """(RSS/n) / (1 - gamma e(lambda)/n)^2 for the fit at ``lam``; the lambda in ``penalty`` is ignored.

    ``weights`` multiplies lambda per coordinate (OLS standard errors in the usual workflow).
    """
    gamma = _check_gamma(gamma)
    w = None if weights is None else np.asarray(weights, dtype=float)
    result = _evaluate(model, penalty, lam, gamma, config, w)
    if result.degenerate:
        raise DegenerateDfError(
            f"1 - gamma*e/n <= 0 at lambda={lam:g} (e={result.effective_df:.6g}, n={model.n}, gamma={gamma:g})"
        )
    return result


def gcv_scan(
    model: GaussianModel,
    penalty: PenaltySpec,
    lambda_grid: Sequence[float],
    gamma: float = 1.0,
    config: FitConfig = FitConfig(),
    weights: Optional[ArrayLike] = None,
    *,
    warm_start: bool = True,
    workers: int = 1,
) -> Tuple[GcvResult, List[GcvResult]]:
    """Evaluate GCV over an ascending grid; ties resolve to the smaller lambda.

    Unconverged fits are only selected when no grid point converged.

    With ``warm_start`` each fit starts from the previous solution and the
    scan is sequential. Cold scans may run on ``workers`` threads.
    """
    gamma = _check_gamma(gamma)
    grid = np.asarray(lambda_grid, dtype=float).ravel()
    if grid.size == 0:
        raise InputError("lambda grid is empty")
    if not np.all(np.isfinite(grid)) or np.any(grid < 0):
        raise InputError("lambda grid must hold finite nonnegative values")
    if np.any(np.diff(grid) < 0):
        raise InputError("lambda grid must be sorted ascending")
    w = None if weights is None else np.asarray(weights, dtype=float)

    if warm_start or workers <= 1:
        profile: List[GcvResult] = []
        current = config
        for lam in grid:
            point = _evaluate(model, penalty, lam, gamma, current, w)
            profile.append(point)
            if warm_start:
                current = config.warm_started(point.fit.beta)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            profile = list(pool.map(lambda lam: _evaluate(model, penalty, lam, gamma, config, w), grid))

    degenerate = [r.lam for r in profile if r.degenerate]
    if degenerate:
        logger.info("GCV denominator nonpositive at %d of %d grid points", len(degenerate), grid.size)
    usable = [r for r in profile if not r.degenerate]
    if not usable:
        raise ScanError(f"All {grid.size} grid points have 1 - gamma*e/n <= 0")
    converged = [r for r in usable if r.fit.converged]
    if converged:
        usable = converged
    else:
        logger.warning("No fit on the lambda grid converged; selecting among unconverged fits")
    best = usable[0]
    for point in usable[1:]:
        if point.gcv < best.gcv:
            best = point
    logger.debug("GCV selected lambda=%g (gcv=%.6g, e=%.3f)", best.lam, best.gcv, best.effective_df)
    return best, profile


def lambda_max(model: GaussianModel, penalty: PenaltySpec, weights: Optional[ArrayLike] = None) -> float:
    """Smallest lambda for which beta = 0 satisfies the first-order conditions of every coordinate."""
    w = np.ones(model.p) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (model.p,) or np.any(w <= 0):
        raise InputError("weights must be positive with one entry per coefficient")
    # p'(0+) is 2 lambda for the hard penalty and lambda for the others.
    slope = 2.0 if penalty.kind == "hard" else 1.0
    top = float(np.max(np.abs(model.X.T @ model.y) / (model.n * model.sigma2 * w * slope)))
    return top if top > 0 else 1.0


def default_lambda_grid(
    model: GaussianModel,
    penalty: PenaltySpec,
    weights: Optional[ArrayLike] = None,
    num: int = 50,
    lower: float = 1e-4,
) -> np.ndarray:
    if num < 1:
        raise ParameterError(f"grid size must be positive, got {num}")
    return lambda_max(model, penalty, weights) * np.geomspace(lower, 1.0, num)


def profile_frame(profile: Sequence[GcvResult]) -> pd.DataFrame:
    return pd.DataFrame(
        [(r.lam, r.gcv, r.effective_df, r.rss) for r in profile],
        columns=list(PROFILE_COLUMNS),
    )
