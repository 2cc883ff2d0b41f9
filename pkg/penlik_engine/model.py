"""Gaussian linear model: likelihood pieces, spline bases and data loading.

The log-likelihood drops its additive constant: L(beta) = -||y - X beta||^2 / (2 sigma2).
Everything downstream (LR statistics, GCV, sandwich variances) depends on
differences or residuals only.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike

from .constants import KNOT_LEVELS
from .errors import CsvParseError, InputError, NumericError, ParameterError
from .types import Dataset, SplineSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GaussianModel:
    dataset: Dataset
    sigma2: float = 1.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ParameterError(f"sigma2 must be positive and finite, got {self.sigma2}")
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @classmethod
    def from_arrays(
        cls,
        design: ArrayLike,
        response: ArrayLike,
        sigma2: float = 1.0,
        column_names: Optional[Sequence[str]] = None,
    ) -> GaussianModel:
        names = None if column_names is None else tuple(column_names)
        return cls(Dataset(np.asarray(design), np.asarray(response), names), sigma2)

    @property
    def X(self) -> np.ndarray:
        return self.dataset.design

    @property
    def y(self) -> np.ndarray:
        return self.dataset.response

    @property
    def n(self) -> int:
        return self.dataset.n

    @property
    def p(self) -> int:
        return self.dataset.p

    def with_sigma2(self, sigma2: float) -> GaussianModel:
        return replace(self, sigma2=sigma2)


def check_beta(model: GaussianModel, beta: ArrayLike) -> np.ndarray:
    b = np.asarray(beta, dtype=float)
    if b.shape != (model.p,):
        raise InputError(f"beta must have length {model.p}, got shape {b.shape}")
    return b


def residuals(model: GaussianModel, beta: ArrayLike) -> np.ndarray:
    return model.y - model.X @ check_beta(model, beta)


def rss(model: GaussianModel, beta: ArrayLike) -> float:
    r = residuals(model, beta)
    return float(r @ r)


def log_likelihood(model: GaussianModel, beta: ArrayLike) -> float:
    return -rss(model, beta) / (2.0 * model.sigma2)


def score(model: GaussianModel, beta: ArrayLike) -> np.ndarray:
    return model.X.T @ residuals(model, beta) / model.sigma2


def score_contributions(model: GaussianModel, beta: ArrayLike) -> np.ndarray:
    """Per-observation scores, shape (n, p); rows sum to ``score``."""
    return model.X * (residuals(model, beta) / model.sigma2)[:, None]


def gram(model: GaussianModel) -> np.ndarray:
    g = model.X.T @ model.X
    return (g + g.T) / 2.0


def hessian(model: GaussianModel, beta: Optional[ArrayLike] = None) -> np.ndarray:
    """-X'X / sigma2; constant in beta, which is only checked for shape."""
    if beta is not None:
        check_beta(model, beta)
    return -gram(model) / model.sigma2


def information(model: GaussianModel) -> np.ndarray:
    return -hessian(model) / model.n


def ols_fit(model: GaussianModel) -> np.ndarray:
    beta, *_ = np.linalg.lstsq(model.X, model.y, rcond=None)
    return beta


def ols_standard_errors(model: GaussianModel) -> np.ndarray:
    """OLS standard errors with sigma2 estimated as RSS / (n - p)."""
    n, p = model.n, model.p
    if n <= p:
        raise InputError(f"OLS standard errors need n > p, got n={n}, p={p}")
    g = gram(model)
    cond = float(np.linalg.cond(g))
    if not np.isfinite(cond) or cond > 1e14:
        raise NumericError("Design matrix is rank-deficient; OLS standard errors undefined", condition_number=cond)
    beta = np.linalg.solve(g, model.X.T @ model.y)
    sigma2_hat = rss(model, beta) / (n - p)
    return np.sqrt(sigma2_hat * np.diag(np.linalg.inv(g)))


def r_squared(model: GaussianModel, beta: ArrayLike) -> float:
    centered = model.y - model.y.mean()
    total = float(centered @ centered)
    if total == 0:
        return float("nan")
    return 1.0 - rss(model, beta) / total


def per_covariate_lambdas(base_lambda: float, ols_standard_errors: ArrayLike) -> np.ndarray:
    """lambda_j = base_lambda * SE_j."""
    se = np.asarray(ols_standard_errors, dtype=float)
    if not (np.isfinite(base_lambda) and base_lambda >= 0):
        raise ParameterError(f"base lambda must be finite and >= 0, got {base_lambda}")
    if se.ndim != 1 or not np.all(np.isfinite(se)) or np.any(se <= 0):
        raise InputError("Standard errors must be a vector of positive finite values")
    return base_lambda * se


def spline_basis(x: ArrayLike, spec: SplineSpec) -> np.ndarray:
    """Columns x, x^2 and (x - k)_+^2 for each knot k."""
    xs = np.asarray(x, dtype=float)
    if xs.ndim != 1 or not np.all(np.isfinite(xs)):
        raise InputError("Spline input must be a finite vector")
    knots = np.asarray(spec.knots, dtype=float)
    truncated = np.maximum(xs[:, None] - knots[None, :], 0.0) ** 2
    return np.column_stack([xs, xs**2, truncated])


def spline_names(name: str, spec: SplineSpec) -> List[str]:
    return [name, f"{name}^2"] + [f"({name}-{k:.6g})+^2" for k in spec.knots]


def expand_splines(
    dataset: Dataset,
    columns: Sequence[Union[str, int]],
    levels: Sequence[float] = KNOT_LEVELS,
) -> Tuple[Dataset, dict]:
    """Replace each listed covariate by its quadratic spline block with quantile knots.

    Returns the expanded dataset and the SplineSpec used for every column name.
    Other covariates keep their position order after the spline blocks.
    """
    targets = [dataset.names[c] if isinstance(c, int) else c for c in columns]
    for name in targets:
        dataset.index_of(name)
    if len(set(targets)) != len(targets):
        raise InputError("Spline columns listed twice")

    blocks, names, specs = [], [], {}
    for name in targets:
        x = dataset.design[:, dataset.index_of(name)]
        spec = SplineSpec.from_quantiles(x, levels)
        specs[name] = spec
        blocks.append(spline_basis(x, spec))
        names.extend(spline_names(name, spec))
    for j, name in enumerate(dataset.names):
        if name not in specs:
            blocks.append(dataset.design[:, [j]])
            names.append(name)
    return Dataset(np.hstack(blocks), dataset.response, tuple(names)), specs


def load_csv(
    path: Union[str, Path],
    response: Union[str, int] = 0,
    *,
    header: bool = True,
) -> Dataset:
    """Read a numeric CSV; ``response`` picks the response column by name or 0-based index.

    Rows in error messages are 1-based data rows (the header is not counted).
    """
    try:
        frame = pd.read_csv(path, header=0 if header else None, dtype=str, skipinitialspace=True)
    except FileNotFoundError:
        raise InputError(f"Input file not found: {path}") from None
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as exc:
        raise CsvParseError(f"Cannot parse CSV {path}: {exc}") from None
    if frame.empty:
        raise CsvParseError(f"CSV {path} has no data rows")
    if not header:
        frame.columns = [str(c) for c in frame.columns]

    numeric = frame.apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    bad = ~np.isfinite(numeric.to_numpy(dtype=float))
    if bad.any():
        row_pos, col_pos = np.argwhere(bad)[0]
        raise CsvParseError(
            f"Non-numeric value {frame.iat[row_pos, col_pos]!r}",
            row=int(row_pos) + 1,
            column=str(frame.columns[col_pos]),
        )

    columns = [str(c) for c in numeric.columns]
    if isinstance(response, int):
        if not 0 <= response < len(columns):
            raise InputError(f"Response index {response} out of range for {len(columns)} columns")
        target = columns[response]
    else:
        if response not in columns:
            raise InputError(f"Response column {response!r} not found; columns: {', '.join(columns)}")
        target = response
    if len(columns) < 2:
        raise InputError("CSV needs a response column and at least one covariate")

    covariates = [c for c in columns if c != target]
    numeric.columns = columns
    names = tuple(covariates) if header else None
    logger.info("Loaded %s: n=%d, p=%d, response=%s", path, len(numeric), len(covariates), target)
    return Dataset(numeric[covariates].to_numpy(dtype=float), numeric[target].to_numpy(dtype=float), names)
