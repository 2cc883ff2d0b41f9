"""AR(5) Monte Carlo harness: data generation, model errors, selection and LR-null studies."""
from __future__ import annotations

import logging
import math
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike
from scipy import stats
from scipy.linalg import toeplitz
from scipy.signal import lfilter

from .constants import AR_FACTORS, AR_SIGNALS, RNG_ALGORITHM
from .errors import DomainError, ExperimentError, InputError, NumericError, PenlikError
from .inference import lr_test, profile_sigma2, sandwich_covariance
from .model import GaussianModel, ols_standard_errors, per_covariate_lambdas
from .optimizer import fit_oracle
from .tuning import default_lambda_grid, gcv_scan
from .types import (
    ArProcessSpec,
    Dataset,
    FitConfig,
    GcvResult,
    LrNullReport,
    PenaltySpec,
    ReplicateRecord,
    SimulationReport,
)

logger = logging.getLogger(__name__)

MIN_N: int = 100
MAX_FAILURE_RATE: float = 0.10
Z_95: float = 1.959963984540054
IQR_TO_SD: float = 1.349
SCALE: float = 1000.0
LR_NULL_ROWS: Tuple[int, int] = (5, 6)


def _poly_mul(a: Sequence[Fraction], b: Sequence[Fraction]) -> List[Fraction]:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def verify_ar_polynomial() -> Tuple[Tuple[Fraction, ...], float]:
    """Expand the factored characteristic polynomial exactly.

    Returns the negated B^1..B^5 coefficients and the smallest modulus among
    the polynomial's zeros, computed factor by factor.
    """
    poly: List[Fraction] = [Fraction(1)]
    for factor, power in AR_FACTORS:
        for _ in range(power):
            poly = _poly_mul(poly, factor)
    coefficients = tuple(-c for c in poly[1:])
    modulus = min(
        float(np.min(np.abs(np.polynomial.polynomial.polyroots([float(c) for c in factor]))))
        for factor, _ in AR_FACTORS
    )
    return coefficients, modulus


def dimension_rule(n: int) -> int:
    """floor(4 n^(1/4)) - 5 in exact integer arithmetic."""
    if int(n) != n or n < MIN_N:
        raise DomainError(f"The dimension rule needs an integer n >= {MIN_N}, got {n}")
    fourth_root = math.isqrt(math.isqrt(256 * int(n)))
    p_n = fourth_root - 5
    if p_n <= AR_SIGNALS:
        raise DomainError(f"p_n = {p_n} does not exceed the {AR_SIGNALS} true signals")
    return p_n


def _generator(seed: Union[int, np.random.SeedSequence]) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def simulate_ar(
    spec: ArProcessSpec,
    n: int,
    p: int,
    *,
    rng: Optional[np.random.Generator] = None,
) -> Dataset:
    """Lagged design from one AR path: row i holds (X_{i-1}, ..., X_{i-p}), response X_i."""
    if n < 1:
        raise InputError(f"n must be positive, got {n}")
    if p < spec.order:
        raise InputError(f"p must be at least the AR order {spec.order}, got {p}")
    rng = _generator(spec.seed) if rng is None else rng
    noise = spec.noise_sd * rng.standard_normal(spec.burn_in + n + p)
    path = lfilter([1.0], np.concatenate(([1.0], -np.asarray(spec.coefficients))), noise)[spec.burn_in :]
    lags = np.lib.stride_tricks.sliding_window_view(path[:-1], p)[:, ::-1]
    names = tuple(f"beta{k + 1}" for k in range(p))
    return Dataset(np.ascontiguousarray(lags), path[p:].copy(), names)


def autocovariances(spec: ArProcessSpec, lags: int) -> np.ndarray:
    """gamma(0..lags-1) from the Yule-Walker system, extended by the AR recursion."""
    phi = np.asarray(spec.coefficients)
    r = phi.size
    system = np.eye(r + 1)
    for k in range(r + 1):
        for i in range(1, r + 1):
            system[k, abs(k - i)] -= phi[i - 1]
    rhs = np.zeros(r + 1)
    rhs[0] = spec.noise_sd**2
    cond = float(np.linalg.cond(system))
    if not np.isfinite(cond) or cond > 1e12:
        raise NumericError("Yule-Walker system is singular", condition_number=cond)
    gamma = list(np.linalg.solve(system, rhs))
    while len(gamma) < lags:
        k = len(gamma)
        gamma.append(float(sum(phi[i - 1] * gamma[k - i] for i in range(1, r + 1))))
    return np.asarray(gamma[:lags])


def population_gram(spec: ArProcessSpec, p: int) -> np.ndarray:
    """E[x x'] for a row of the lag design: Toeplitz in the autocovariances."""
    if p < 1:
        raise InputError(f"p must be positive, got {p}")
    return toeplitz(autocovariances(spec, p))


def model_error(beta_hat: ArrayLike, beta_true: ArrayLike, gram: ArrayLike) -> float:
    b_hat = np.asarray(beta_hat, dtype=float)
    b_true = np.asarray(beta_true, dtype=float)
    g = np.asarray(gram, dtype=float)
    if b_hat.ndim != 1 or b_hat.shape != b_true.shape or g.shape != (b_hat.size, b_hat.size):
        raise InputError(f"Dimension mismatch: estimate {b_hat.shape}, truth {b_true.shape}, gram {g.shape}")
    d = b_hat - b_true
    return max(float(d @ g @ d), 0.0)


def true_beta(spec: ArProcessSpec, p: int) -> np.ndarray:
    beta = np.zeros(p)
    beta[: spec.order] = spec.coefficients
    return beta


def _signal_weights(model: GaussianModel, scale_by_se: bool) -> Optional[np.ndarray]:
    return ols_standard_errors(model) if scale_by_se else None


def _select(
    model: GaussianModel,
    penalty: PenaltySpec,
    gamma: float,
    grid_size: int,
    config: FitConfig,
    weights: Optional[np.ndarray],
) -> GcvResult:
    grid = default_lambda_grid(model, penalty, weights, num=grid_size)
    best, _ = gcv_scan(model, penalty, grid, gamma, config, weights)
    return best


def _table_replicate(task: tuple) -> Union[ReplicateRecord, str]:
    index, seed_seq, process, n, p, penalty, gamma, grid_size, scale_by_se, config, gram = task
    try:
        data = simulate_ar(process, n, p, rng=_generator(seed_seq))
        model = GaussianModel(data)
        beta0 = true_beta(process, p)
        weights = _signal_weights(model, scale_by_se)

        ls = fit_oracle(model, range(p))
        best = _select(model, penalty, gamma, grid_size, config, weights)
        pls = best.fit
        oracle = fit_oracle(model, range(process.order))

        spec = penalty.with_lambda(best.lam)
        se = np.full(process.order, np.nan)
        signals = [j for j in pls.active_set if j < process.order]
        if signals:
            try:
                cov = sandwich_covariance(model, pls, spec)
            except NumericError as exc:
                logger.debug("replicate %d: no standard errors (%s)", index, exc)
            else:
                for pos, j in enumerate(cov.active_indices):
                    if j < process.order:
                        se[j] = cov.standard_errors[pos]

        zeros = pls.beta == 0
        return ReplicateRecord(
            index=index,
            lam=best.lam,
            me_ls=model_error(ls.beta, beta0, gram),
            me_pls=model_error(pls.beta, beta0, gram),
            me_oracle=model_error(oracle.beta, beta0, gram),
            correct_zeros=int(np.sum(zeros[process.order :])),
            incorrect_zeros=int(np.sum(zeros[: process.order])),
            beta=tuple(float(b) for b in pls.beta[: process.order]),
            standard_errors=tuple(float(s) for s in se),
        )
    except (PenlikError, np.linalg.LinAlgError) as exc:
        return f"replicate {index}: {exc}"


def _lr_null_replicate(task: tuple) -> Union[Tuple[float, bool], str]:
    index, seed_seq, process, n, p, penalty, gamma, grid_size, scale_by_se, config = task
    try:
        model = GaussianModel(simulate_ar(process, n, p, rng=_generator(seed_seq)))
        weights = _signal_weights(model, scale_by_se)
        best = _select(model, penalty, gamma, grid_size, config, weights)
        spec = penalty.with_lambda(best.lam)
        sigma2 = profile_sigma2(model, best.fit, spec)
        rows = np.zeros((len(LR_NULL_ROWS), p))
        for r, j in enumerate(LR_NULL_ROWS):
            rows[r, j] = 1.0
        lambdas = None if weights is None else per_covariate_lambdas(best.lam, weights)
        result = lr_test(
            model.with_sigma2(sigma2),
            spec,
            rows,
            config.with_lambdas(lambdas),
            exempt_tested=True,
        )
        return result.statistic, result.flagged
    except (PenlikError, np.linalg.LinAlgError) as exc:
        return f"replicate {index}: {exc}"


def _run_replicates(worker: Callable[[tuple], object], tasks: List[tuple], workers: int) -> list:
    if workers <= 1:
        return [worker(t) for t in tasks]
    ctx = mp.get_context("spawn")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        return list(pool.map(worker, tasks))


def _split(outcomes: list, replicates: int) -> Tuple[list, int]:
    failed = [o for o in outcomes if isinstance(o, str)]
    for message in failed:
        logger.warning("Skipping failed %s", message)
    if len(failed) > MAX_FAILURE_RATE * replicates:
        raise ExperimentError(f"{len(failed)} of {replicates} replicates failed; first: {failed[0]}")
    return [o for o in outcomes if not isinstance(o, str)], len(failed)


def _check_run(n: int, replicates: int, gamma: float, workers: int) -> int:
    if replicates < 1:
        raise InputError(f"replicates must be >= 1, got {replicates}")
    if not gamma > 0:
        raise InputError(f"gamma must be positive, got {gamma}")
    if workers < 1:
        raise InputError(f"workers must be >= 1, got {workers}")
    return dimension_rule(n)


def run_table_experiment(
    n: int,
    replicates: int,
    penalty: PenaltySpec,
    gamma: float = 1.0,
    seed: int = 0,
    *,
    process: Optional[ArProcessSpec] = None,
    workers: int = 1,
    grid_size: int = 50,
    scale_by_se: bool = True,
    fit_config: FitConfig = FitConfig(),
    keep_records: bool = False,
) -> SimulationReport:
    """LS, GCV-tuned penalized and oracle fits on replicated AR designs."""
    p = _check_run(n, replicates, gamma, workers)
    process = process or ArProcessSpec(seed=seed)
    gram = population_gram(process, p)
    children = np.random.SeedSequence(seed).spawn(replicates)
    tasks = [
        (i, child, process, n, p, penalty, gamma, grid_size, scale_by_se, fit_config, gram)
        for i, child in enumerate(children)
    ]
    logger.info("Table experiment: n=%d p=%d replicates=%d penalty=%s gamma=%g", n, p, replicates, penalty, gamma)
    records, failures = _split(_run_replicates(_table_replicate, tasks, workers), replicates)

    me_ls = np.array([r.me_ls for r in records])
    me_pls = np.array([r.me_pls for r in records])
    me_oracle = np.array([r.me_oracle for r in records])
    betas = np.array([r.beta for r in records])
    ses = np.array([r.standard_errors for r in records])
    beta0 = np.asarray(process.coefficients)

    with np.errstate(invalid="ignore"):
        covered = np.abs(betas - beta0) <= Z_95 * ses
    sd_true = np.std(betas, axis=0, ddof=1) if len(records) > 1 else np.full(process.order, np.nan)

    return SimulationReport(
        n=n,
        p_n=p,
        replicates=replicates,
        mrme_oracle_vs_ls=100.0 * float(np.median(me_oracle / me_ls)),
        mrme_pls_vs_ls=100.0 * float(np.median(me_pls / me_ls)),
        mrme_oracle_vs_pls=100.0 * float(np.median(me_oracle / me_pls)),
        avg_correct_zeros=float(np.mean([r.correct_zeros for r in records])),
        avg_incorrect_zeros=float(np.mean([r.incorrect_zeros for r in records])),
        coefficient_medians=tuple(float(v) for v in np.median(betas, axis=0)),
        sd_true=tuple(float(v) for v in SCALE * sd_true),
        sd_median_estimated=tuple(float(v) for v in SCALE * _finite_columns(ses, np.median)),
        sd_mad=tuple(float(v) for v in SCALE * _finite_columns(ses, _iqr_sd)),
        coverage_95=tuple(float(v) for v in covered.mean(axis=0)),
        lambda_median=float(np.median([r.lam for r in records])),
        failures=failures,
        penalty=penalty.family,
        gamma=float(gamma),
        seed=int(seed),
        noise_sd=process.noise_sd,
        rng_algorithm=RNG_ALGORITHM,
        records=tuple(records) if keep_records else (),
    )


def _iqr_sd(values: np.ndarray) -> float:
    q75, q25 = np.percentile(values, [75, 25])
    return (q75 - q25) / IQR_TO_SD


def _finite_columns(values: np.ndarray, summary: Callable[[np.ndarray], float]) -> np.ndarray:
    """Column summaries over finite entries; NaN where a column has none."""
    out = np.full(values.shape[1], np.nan)
    for j in range(values.shape[1]):
        column = values[:, j][np.isfinite(values[:, j])]
        if column.size:
            out[j] = summary(column)
    return out


def run_lr_null_experiment(
    n: int,
    replicates: int,
    penalty: PenaltySpec,
    seed: int = 0,
    gamma: float = 1.0,
    *,
    process: Optional[ArProcessSpec] = None,
    workers: int = 1,
    grid_size: int = 50,
    scale_by_se: bool = True,
    fit_config: FitConfig = FitConfig(),
    bins: int = 20,
) -> LrNullReport:
    """Null distribution of the LR statistic for H0: beta6 = beta7 = 0 against chi-square(2)."""
    p = _check_run(n, replicates, gamma, workers)
    if p < 8:
        raise DomainError(f"The LR null study needs p_n >= 8, got p_n={p} at n={n}")
    process = process or ArProcessSpec(seed=seed)
    if process.order > min(LR_NULL_ROWS):
        raise InputError("Tested coordinates must lie beyond the AR order")
    children = np.random.SeedSequence(seed).spawn(replicates)
    tasks = [
        (i, child, process, n, p, penalty, gamma, grid_size, scale_by_se, fit_config)
        for i, child in enumerate(children)
    ]
    logger.info("LR null experiment: n=%d p=%d replicates=%d penalty=%s", n, p, replicates, penalty)
    outcomes, failures = _split(_run_replicates(_lr_null_replicate, tasks, workers), replicates)

    df = len(LR_NULL_ROWS)
    statistics = np.array([s for s, _ in outcomes])
    reference = stats.chi2(df)
    top = max(float(statistics.max()), float(reference.ppf(0.999)))
    edges = np.linspace(0.0, top, bins + 1)
    density, _ = np.histogram(statistics, bins=edges, density=True)
    centers = (edges[:-1] + edges[1:]) / 2.0
    m = statistics.size
    return LrNullReport(
        n=n,
        p_n=p,
        replicates=replicates,
        df=df,
        statistics=tuple(float(s) for s in statistics),
        mean=float(statistics.mean()),
        variance=float(statistics.var(ddof=1)) if m > 1 else float("nan"),
        ks_distance=float(stats.kstest(statistics, reference.cdf).statistic),
        bin_edges=tuple(float(e) for e in edges),
        density=tuple(float(d) for d in density),
        reference_density=tuple(float(d) for d in reference.pdf(centers)),
        qq_theoretical=tuple(float(v) for v in reference.ppf((np.arange(1, m + 1) - 0.5) / m)),
        qq_empirical=tuple(float(v) for v in np.sort(statistics)),
        flagged=int(sum(1 for _, f in outcomes if f)),
        failures=failures,
        penalty=penalty.family,
        gamma=float(gamma),
        seed=int(seed),
        rng_algorithm=RNG_ALGORITHM,
    )


def report_tables(report: SimulationReport) -> Dict[str, pd.DataFrame]:
    """Selection, median and standard-deviation tables for one report."""
    true_zeros = report.p_n - AR_SIGNALS
    selection = pd.DataFrame(
        [
            {
                "n": report.n,
                "p_n": report.p_n,
                "mrme_oracle_vs_ls": report.mrme_oracle_vs_ls,
                "mrme_pls_vs_ls": report.mrme_pls_vs_ls,
                "mrme_oracle_vs_pls": report.mrme_oracle_vs_pls,
                "avg_correct_zeros": report.avg_correct_zeros,
                "correct_zero_pct": 100.0 * report.avg_correct_zeros / true_zeros,
                "avg_incorrect_zeros": report.avg_incorrect_zeros,
            }
        ]
    )
    medians = pd.DataFrame(
        [{"n": report.n, **{f"beta{j + 1}": v for j, v in enumerate(report.coefficient_medians)}}]
    )
    deviations = pd.DataFrame(
        {
            "coefficient": [f"beta{j + 1}" for j in range(len(report.sd_true))],
            "sd": report.sd_true,
            "sd_median": report.sd_median_estimated,
            "sd_mad": report.sd_mad,
            "coverage_95": report.coverage_95,
        }
    )
    return {"selection": selection, "medians": medians, "deviations": deviations}


def density_frame(report: LrNullReport) -> pd.DataFrame:
    edges = np.asarray(report.bin_edges)
    return pd.DataFrame(
        {"x": (edges[:-1] + edges[1:]) / 2.0, "density": report.density, "chi2_density": report.reference_density}
    )


def qq_frame(report: LrNullReport) -> pd.DataFrame:
    return pd.DataFrame({"theoretical": report.qq_theoretical, "empirical": report.qq_empirical})
