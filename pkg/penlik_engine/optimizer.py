"""Penalized least squares by local quadratic approximation (iterative ridge).

Each step replaces p_lambda(|b|) by its tangent quadratic in b at the current
iterate, a majorant for penalties concave in |b|, and solves the resulting
ridge system. Coordinates that fall below ``drop_threshold`` are frozen at
zero and leave the system for good, as do coordinates near zero whose
removal raises the objective. Linear constraints A beta = 0 are
handled by fitting in the coordinates of an orthonormal basis of the
feasible subspace.
"""
from __future__ import annotations

import logging
from typing import Iterable, List, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.linalg import null_space

from .errors import InputError, NumericError
from .model import GaussianModel, check_beta, log_likelihood, score
from .penalty import penalty_deriv, penalty_value
from .types import FitConfig, FitResult, PenaltySpec

logger = logging.getLogger(__name__)

MAX_CONDITION: float = 1e14


def resolve_lambdas(model: GaussianModel, penalty: PenaltySpec, config: FitConfig) -> np.ndarray:
    if config.per_coordinate_lambdas is None:
        return np.full(model.p, penalty.lam)
    lambdas = np.asarray(config.per_coordinate_lambdas, dtype=float)
    if lambdas.shape != (model.p,):
        raise InputError(f"Expected {model.p} per-coordinate lambdas, got {lambdas.size}")
    return lambdas


def drop_threshold(model: GaussianModel, config: FitConfig) -> float:
    if config.drop_threshold is not None:
        return config.drop_threshold
    scale = float(np.std(model.y))
    return 1e-8 * (scale if scale > 0 else 1.0)


def penalized_objective(
    model: GaussianModel,
    penalty: PenaltySpec,
    beta: ArrayLike,
    lambdas: Optional[ArrayLike] = None,
) -> float:
    """Q(beta) = L(beta) - n * sum_j p_{lambda_j}(|beta_j|)."""
    b = check_beta(model, beta)
    lams = np.full(model.p, penalty.lam) if lambdas is None else np.asarray(lambdas, dtype=float)
    pen = float(np.sum(penalty_value(penalty, np.abs(b), lam=lams)))
    return log_likelihood(model, b) - model.n * pen


def orthonormal_constraints(constraint_rows: Optional[ArrayLike], p: int) -> np.ndarray:
    """Orthonormalized rows spanning the same space as ``constraint_rows`` (q x p)."""
    if constraint_rows is None or np.size(constraint_rows) == 0:
        return np.zeros((0, p))
    rows = np.atleast_2d(np.asarray(constraint_rows, dtype=float))
    if rows.shape[1] != p:
        raise InputError(f"Constraint rows must have {p} columns, got {rows.shape[1]}")
    if not np.all(np.isfinite(rows)):
        raise InputError("Constraint rows must be finite")
    q = rows.shape[0]
    if q >= p:
        raise InputError(f"Need fewer constraints than coefficients, got q={q}, p={p}")
    if np.linalg.matrix_rank(rows) < q:
        raise InputError("Constraint rows are linearly dependent")
    basis, _ = np.linalg.qr(rows.T)
    return basis.T


def feasible_basis(constraints: np.ndarray, free: np.ndarray) -> np.ndarray:
    """Rows B with B B' = I spanning {b : A b = 0, b_j = 0 for frozen j}."""
    p = free.size
    if constraints.shape[0] == 0:
        return np.eye(p)[free]
    stacked = np.vstack([constraints, np.eye(p)[~free]])
    return null_space(stacked).T


def _initial_beta(model: GaussianModel, config: FitConfig, constraints: np.ndarray) -> np.ndarray:
    n, p = model.n, model.p
    if config.init == "custom":
        return check_beta(model, config.init_beta).copy()
    if config.init == "zeros":
        return np.zeros(p)
    if config.init == "ols" and p >= n:
        raise InputError(f"OLS start needs n > p (n={n}, p={p}); use init='ridge' or 'zeros'")

    basis = feasible_basis(constraints, np.ones(p, dtype=bool))
    z = model.X @ basis.T
    if config.init == "ols":
        gamma, *_ = np.linalg.lstsq(z, model.y, rcond=None)
    else:
        lhs = z.T @ z + n * config.ridge_epsilon * np.eye(basis.shape[0])
        gamma = np.linalg.solve(lhs, z.T @ model.y)
    return basis.T @ gamma


def _stationarity_residual(
    model: GaussianModel,
    penalty: PenaltySpec,
    beta: np.ndarray,
    lambdas: np.ndarray,
    constraints: np.ndarray,
) -> float:
    active = beta != 0
    if not active.any():
        return 0.0
    grad = np.zeros(model.p)
    b = beta[active]
    grad[active] = score(model, beta)[active] - model.n * penalty_deriv(
        penalty, np.abs(b), lam=lambdas[active]
    ) * np.sign(b)
    basis = feasible_basis(constraints, active)
    if basis.shape[0] == 0:
        return 0.0
    return float(np.max(np.abs(basis @ grad)))


def _project(beta: np.ndarray, basis: np.ndarray, free: np.ndarray, constraints: np.ndarray) -> np.ndarray:
    if not constraints.shape[0]:
        return beta
    projected = basis.T @ (basis @ beta)
    projected[~free] = 0.0
    return projected


def _zero_small(
    model: GaussianModel,
    penalty: PenaltySpec,
    beta: np.ndarray,
    free: np.ndarray,
    objective: float,
    lambdas: np.ndarray,
    constraints: np.ndarray,
    window: float,
) -> Tuple[np.ndarray, np.ndarray, float, List[int]]:
    """Set coordinates inside the window to zero whenever that raises Q.

    The ridge step only shrinks such coordinates geometrically; the exact
    zero is reached here instead of by running out of iterations.
    """
    zeroed: List[int] = []
    for j in np.argsort(np.abs(beta), kind="stable"):
        if not (free[j] and 0.0 < abs(beta[j]) < window):
            continue
        trial_free = free.copy()
        trial_free[j] = False
        trial = beta.copy()
        trial[j] = 0.0
        trial = _project(trial, feasible_basis(constraints, trial_free), trial_free, constraints)
        value = penalized_objective(model, penalty, trial, lambdas)
        if value > objective:
            beta, free, objective = trial, trial_free, value
            zeroed.append(int(j))
    return beta, free, objective, zeroed


def _lqa(
    model: GaussianModel,
    penalty: PenaltySpec,
    lambdas: np.ndarray,
    constraints: np.ndarray,
    config: FitConfig,
) -> FitResult:
    n, s2 = model.n, model.sigma2
    X, y = model.X, model.y
    threshold = drop_threshold(model, config)

    beta = _initial_beta(model, config, constraints)
    window = config.zero_window * float(np.max(np.abs(beta), initial=0.0))
    free = np.abs(beta) >= threshold
    beta[~free] = 0.0
    basis = feasible_basis(constraints, free)
    beta = _project(beta, basis, free, constraints)

    path = [penalized_objective(model, penalty, beta, lambdas)]
    converged = False
    iterations = 0
    step = np.inf
    z = X @ basis.T
    zz, zy = z.T @ z / s2, z.T @ y / s2
    for iterations in range(1, config.max_iterations + 1):
        if basis.shape[0] == 0:
            converged = True
            break
        weights = np.zeros(model.p)
        active = free & (beta != 0)
        weights[active] = penalty_deriv(penalty, np.abs(beta[active]), lam=lambdas[active]) / np.abs(beta[active])
        lhs = zz + n * (basis * weights) @ basis.T
        cond = float(np.linalg.cond(lhs))
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            raise NumericError("Ridge system is singular", iteration=iterations, condition_number=cond)
        try:
            gamma = np.linalg.solve(lhs, zy)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"Ridge solve failed: {exc}", iteration=iterations, condition_number=cond) from None

        new = basis.T @ gamma
        dropped = free & (np.abs(new) < threshold)
        new[~free | dropped] = 0.0
        step = float(np.max(np.abs(new - beta)))
        beta = new
        if dropped.any():
            free &= ~dropped
            basis = feasible_basis(constraints, free)
            beta = _project(beta, basis, free, constraints)
            logger.debug("iteration %d: dropped %s", iterations, np.flatnonzero(dropped).tolist())

        objective = penalized_objective(model, penalty, beta, lambdas)
        before = beta
        beta, free, objective, zeroed = _zero_small(model, penalty, beta, free, objective, lambdas, constraints, window)
        if zeroed:
            step = max(step, float(np.max(np.abs(beta - before))))
            basis = feasible_basis(constraints, free)
            logger.debug("iteration %d: zeroed %s", iterations, zeroed)
        if dropped.any() or zeroed:
            z = X @ basis.T
            zz, zy = z.T @ z / s2, z.T @ y / s2

        path.append(objective)
        logger.debug("iteration %d: step=%.3e objective=%.10g", iterations, step, path[-1])
        if step < config.convergence_tol:
            converged = True
            break

    if not converged:
        logger.warning(
            "LQA stopped after %d iterations without converging (last step %.3e, %s)",
            iterations,
            step,
            penalty,
        )
    return FitResult(
        beta=beta,
        active_set=tuple(np.flatnonzero(beta != 0)),
        objective=path[-1],
        iterations=iterations,
        converged=converged,
        lambda_used=lambdas,
        sigma2=s2,
        objective_path=tuple(path),
        stationarity_residual=_stationarity_residual(model, penalty, beta, lambdas, constraints),
    )


def fit_penalized(model: GaussianModel, penalty: PenaltySpec, config: FitConfig = FitConfig()) -> FitResult:
    """Local maximizer of the penalized likelihood from the configured start."""
    lambdas = resolve_lambdas(model, penalty, config)
    return _lqa(model, penalty, lambdas, np.zeros((0, model.p)), config)


def fit_constrained(
    model: GaussianModel,
    penalty: PenaltySpec,
    constraint_rows: Optional[ArrayLike],
    config: FitConfig = FitConfig(),
) -> FitResult:
    """Maximize the penalized likelihood over {beta : A beta = 0}."""
    constraints = orthonormal_constraints(constraint_rows, model.p)
    lambdas = resolve_lambdas(model, penalty, config)
    return _lqa(model, penalty, lambdas, constraints, config)


def fit_oracle(model: GaussianModel, true_support: Iterable[int]) -> FitResult:
    """OLS on the given 0-based support columns, zeros elsewhere."""
    support = sorted({int(j) for j in true_support})
    if any(j < 0 or j >= model.p for j in support):
        raise InputError(f"Support indices must lie in 0..{model.p - 1}, got {support}")
    beta = np.zeros(model.p)
    if support:
        sub = model.X[:, support]
        if np.linalg.matrix_rank(sub) < len(support):
            raise NumericError(
                f"Support columns {support} are rank-deficient",
                condition_number=float(np.linalg.cond(sub)),
            )
        coef, *_ = np.linalg.lstsq(sub, model.y, rcond=None)
        beta[support] = coef
    lambdas = np.zeros(model.p)
    objective = penalized_objective(model, PenaltySpec.soft(0.0), beta, lambdas)
    return FitResult(
        beta=beta,
        active_set=tuple(j for j in support if beta[j] != 0),
        objective=objective,
        iterations=1,
        converged=True,
        lambda_used=lambdas,
        sigma2=model.sigma2,
        objective_path=(objective,),
    )
