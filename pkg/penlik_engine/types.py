from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal, Optional, Sequence, Tuple

import numpy as np

from .constants import AR_COEFFICIENTS, DEFAULT_SCAD_A, KNOT_LEVELS
from .errors import InputError, NonStationaryError, ParameterError

PenaltyKind = Literal["scad", "hard", "soft", "lq"]
InitKind = Literal["ols", "ridge", "zeros", "custom"]

PENALTY_KINDS: Tuple[str, ...] = ("scad", "hard", "soft", "lq")


def _frozen_array(values, *, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise InputError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PenaltySpec:
    kind: PenaltyKind
    lam: float = 0.0
    a: float = DEFAULT_SCAD_A
    q: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in PENALTY_KINDS:
            raise ParameterError(f"Unknown penalty kind {self.kind!r}; expected one of {PENALTY_KINDS}")
        if not math.isfinite(self.lam) or self.lam < 0:
            raise ParameterError(f"lambda must be finite and >= 0, got {self.lam}")
        if self.kind == "scad" and not self.a > 2:
            raise ParameterError(f"SCAD requires a > 2, got a={self.a}")
        if self.kind == "lq" and not self.q > 0:
            raise ParameterError(f"Lq requires q > 0, got q={self.q}")

    @classmethod
    def scad(cls, lam: float, a: float = DEFAULT_SCAD_A) -> PenaltySpec:
        return cls("scad", float(lam), a=float(a))

    @classmethod
    def hard(cls, lam: float) -> PenaltySpec:
        return cls("hard", float(lam))

    @classmethod
    def soft(cls, lam: float) -> PenaltySpec:
        return cls("soft", float(lam))

    @classmethod
    def lq(cls, lam: float, q: float) -> PenaltySpec:
        return cls("lq", float(lam), q=float(q))

    def with_lambda(self, lam: float) -> PenaltySpec:
        return replace(self, lam=float(lam))

    @property
    def family(self) -> str:
        """The penalty without its lambda, e.g. ``scad(a=3.7)``."""
        if self.kind == "scad":
            return f"scad(a={self.a:g})"
        if self.kind == "lq":
            return f"lq(q={self.q:g})"
        return self.kind

    def __str__(self) -> str:
        if self.kind == "scad":
            return f"scad(a={self.a:g}, lambda={self.lam:g})"
        if self.kind == "lq":
            return f"lq(q={self.q:g}, lambda={self.lam:g})"
        return f"{self.kind}(lambda={self.lam:g})"


@dataclass(frozen=True)
class PenaltyDiagnostics:
    a_n: float
    b_n: float
    singular_at_origin: bool
    lipschitz_ok: bool
    separation_ratio: float
    empty: bool = False


@dataclass(frozen=True, eq=False)
class Dataset:
    design: np.ndarray
    response: np.ndarray
    column_names: Optional[Tuple[str, ...]] = None

    def __post_init__(self) -> None:
        design = _frozen_array(self.design, ndim=2, name="design")
        response = _frozen_array(self.response, ndim=1, name="response")
        n, p = design.shape
        if n < 1 or p < 1:
            raise InputError(f"Dataset needs n >= 1 and p >= 1, got n={n}, p={p}")
        if response.shape[0] != n:
            raise InputError(f"design has {n} rows but response has length {response.shape[0]}")
        if not (np.all(np.isfinite(design)) and np.all(np.isfinite(response))):
            raise InputError("Dataset entries must be finite")
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "response", response)
        if self.column_names is not None:
            names = tuple(str(c) for c in self.column_names)
            if len(names) != p:
                raise InputError(f"{len(names)} column names for {p} design columns")
            if len(set(names)) != p:
                raise InputError("Column names must be unique")
            object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def p(self) -> int:
        return self.design.shape[1]

    @property
    def names(self) -> Tuple[str, ...]:
        if self.column_names is not None:
            return self.column_names
        return tuple(f"beta{j + 1}" for j in range(self.p))

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InputError(f"Unknown coefficient name {name!r}; known: {', '.join(self.names)}") from None


@dataclass(frozen=True)
class SplineSpec:
    knots: Tuple[float, ...]
    degree: int = 2

    def __post_init__(self) -> None:
        if self.degree != 2:
            raise InputError(f"Only quadratic splines are supported, got degree {self.degree}")
        knots = tuple(float(k) for k in self.knots)
        if not all(math.isfinite(k) for k in knots):
            raise InputError("Knots must be finite")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise InputError(f"Knots must be strictly increasing, got {knots}")
        object.__setattr__(self, "knots", knots)

    @classmethod
    def from_quantiles(cls, sample: Sequence[float], levels: Sequence[float] = KNOT_LEVELS) -> SplineSpec:
        """Knots at sample quantiles, linear interpolation between order statistics (type 7)."""
        values = np.asarray(sample, dtype=float).ravel()
        if values.size == 0 or not np.all(np.isfinite(values)):
            raise InputError("Knot sample must be non-empty and finite")
        probs = np.asarray(levels, dtype=float)
        if np.any((probs < 0) | (probs > 1)):
            raise InputError("Quantile levels must lie in [0, 1]")
        return cls(tuple(np.quantile(values, probs, method="linear")))

    @property
    def dimension(self) -> int:
        return 2 + len(self.knots)


@dataclass(frozen=True)
class FitConfig:
    max_iterations: int = 200
    convergence_tol: float = 1e-8
    # None scales 1e-8 by the response standard deviation.
    drop_threshold: Optional[float] = None
    # Coordinates below zero_window * max|start| are tried at zero after every step.
    zero_window: float = 1e-3
    init: InitKind = "ols"
    ridge_epsilon: float = 1e-6
    init_beta: Optional[Tuple[float, ...]] = None
    per_coordinate_lambdas: Optional[Tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ParameterError(f"max_iterations must be positive, got {self.max_iterations}")
        if not self.convergence_tol > 0:
            raise ParameterError(f"convergence_tol must be positive, got {self.convergence_tol}")
        if self.drop_threshold is not None and not self.drop_threshold > 0:
            raise ParameterError(f"drop_threshold must be positive, got {self.drop_threshold}")
        if not (math.isfinite(self.zero_window) and self.zero_window >= 0):
            raise ParameterError(f"zero_window must be finite and >= 0, got {self.zero_window}")
        if self.init not in ("ols", "ridge", "zeros", "custom"):
            raise ParameterError(f"Unknown init {self.init!r}")
        if not self.ridge_epsilon > 0:
            raise ParameterError(f"ridge_epsilon must be positive, got {self.ridge_epsilon}")
        if self.init == "custom" and self.init_beta is None:
            raise ParameterError("init='custom' requires init_beta")
        if self.init_beta is not None:
            object.__setattr__(self, "init_beta", tuple(float(b) for b in self.init_beta))
        if self.per_coordinate_lambdas is not None:
            lams = tuple(float(v) for v in self.per_coordinate_lambdas)
            if any(not math.isfinite(v) or v < 0 for v in lams):
                raise ParameterError("per-coordinate lambdas must be finite and >= 0")
            object.__setattr__(self, "per_coordinate_lambdas", lams)

    def with_lambdas(self, lambdas: Optional[Sequence[float]]) -> FitConfig:
        return replace(self, per_coordinate_lambdas=None if lambdas is None else tuple(lambdas))

    def warm_started(self, beta: Sequence[float]) -> FitConfig:
        return replace(self, init="custom", init_beta=tuple(beta))


@dataclass(frozen=True, eq=False)
class FitResult:
    beta: np.ndarray
    active_set: Tuple[int, ...]
    objective: float
    iterations: int
    converged: bool
    lambda_used: np.ndarray
    sigma2: float = 1.0
    objective_path: Tuple[float, ...] = ()
    stationarity_residual: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", _frozen_array(self.beta, ndim=1, name="beta"))
        object.__setattr__(self, "lambda_used", _frozen_array(self.lambda_used, ndim=1, name="lambda_used"))
        object.__setattr__(self, "active_set", tuple(int(j) for j in self.active_set))


@dataclass(frozen=True, eq=False)
class CovarianceEstimate:
    active_indices: Tuple[int, ...]
    matrix: np.ndarray
    standard_errors: np.ndarray
    sigma2: float
    condition_number: float


@dataclass(frozen=True)
class LrTestResult:
    statistic: float
    df: int
    p_value: float
    unconstrained_objective: float
    constrained_objective: float
    unconstrained_active: Tuple[int, ...] = ()
    constrained_active: Tuple[int, ...] = ()
    raw_statistic: float = 0.0
    flagged: bool = False
    penalized: bool = True


@dataclass(frozen=True, eq=False)
class AsymptoticSummary:
    active_indices: Tuple[int, ...]
    sigma_lambda: np.ndarray
    bias_vector: np.ndarray
    asymptotic_cov: np.ndarray


@dataclass(frozen=True, eq=False)
class GcvResult:
    lam: float
    gcv: float
    effective_df: float
    rss: float
    gamma: float
    degenerate: bool = False
    fit: Optional[FitResult] = field(default=None, repr=False)


def characteristic_root_modulus(coefficients: Sequence[float]) -> float:
    """Smallest modulus among zeros of 1 - c1 B - ... - cr B^r (inf when constant)."""
    poly = np.concatenate(([1.0], -np.asarray(coefficients, dtype=float)))
    poly = np.trim_zeros(poly, "b")
    if poly.size <= 1:
        return math.inf
    roots = np.polynomial.polynomial.polyroots(poly)
    return float(np.min(np.abs(roots)))


@dataclass(frozen=True)
class ArProcessSpec:
    coefficients: Tuple[float, ...] = tuple(float(c) for c in AR_COEFFICIENTS)
    noise_sd: float = 1.0
    burn_in: int = 500
    seed: int = 0

    def __post_init__(self) -> None:
        coefficients = tuple(float(c) for c in self.coefficients)
        if not coefficients:
            raise InputError("AR process needs at least one coefficient")
        object.__setattr__(self, "coefficients", coefficients)
        if not self.noise_sd > 0:
            raise ParameterError(f"noise_sd must be positive, got {self.noise_sd}")
        if self.burn_in < 0:
            raise ParameterError(f"burn_in must be >= 0, got {self.burn_in}")
        if not 0 <= self.seed < 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        modulus = characteristic_root_modulus(coefficients)
        if not modulus > 1.0:
            raise NonStationaryError(
                f"AR polynomial has a zero of modulus {modulus:.6g} <= 1; the process is not stationary"
            )

    @property
    def order(self) -> int:
        return len(self.coefficients)


@dataclass(frozen=True)
class ReplicateRecord:
    index: int
    lam: float
    me_ls: float
    me_pls: float
    me_oracle: float
    correct_zeros: int
    incorrect_zeros: int
    beta: Tuple[float, ...]
    standard_errors: Tuple[float, ...]


@dataclass(frozen=True)
class SimulationReport:
    n: int
    p_n: int
    replicates: int
    mrme_oracle_vs_ls: float
    mrme_pls_vs_ls: float
    mrme_oracle_vs_pls: float
    avg_correct_zeros: float
    avg_incorrect_zeros: float
    coefficient_medians: Tuple[float, ...]
    sd_true: Tuple[float, ...]
    sd_median_estimated: Tuple[float, ...]
    sd_mad: Tuple[float, ...]
    coverage_95: Tuple[float, ...]
    lambda_median: float
    failures: int
    penalty: str
    gamma: float
    seed: int
    noise_sd: float
    rng_algorithm: str
    records: Tuple[ReplicateRecord, ...] = ()


@dataclass(frozen=True)
class LrNullReport:
    n: int
    p_n: int
    replicates: int
    df: int
    statistics: Tuple[float, ...]
    mean: float
    variance: float
    ks_distance: float
    bin_edges: Tuple[float, ...]
    density: Tuple[float, ...]
    reference_density: Tuple[float, ...]
    qq_theoretical: Tuple[float, ...]
    qq_empirical: Tuple[float, ...]
    flagged: int
    failures: int
    penalty: str
    gamma: float
    seed: int
    rng_algorithm: str
