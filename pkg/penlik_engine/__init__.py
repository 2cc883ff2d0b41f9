"""penlik_engine: nonconcave penalized likelihood for linear models.

- SCAD, hard, soft (L1) and Lq penalties with their thresholding rules
- Iterative-ridge (LQA) fits with exact zeros, oracle and constrained fits
- Sandwich standard errors and penalized likelihood-ratio tests
- GCV tuning of lambda
- AR(5) Monte Carlo harness for selection and LR-null studies

Deterministic given a seed; every number a command prints can be rerun bit for bit.
"""

from .errors import InputError, NumericError, PenlikError
from .inference import chisq_sf, lr_test, sandwich_covariance
from .model import GaussianModel, load_csv
from .optimizer import fit_constrained, fit_oracle, fit_penalized
from .penalty import univariate_threshold
from .tuning import gcv, gcv_scan
from .types import Dataset, FitConfig, FitResult, PenaltySpec

__all__ = [
    "Dataset",
    "FitConfig",
    "FitResult",
    "GaussianModel",
    "InputError",
    "NumericError",
    "PenaltySpec",
    "PenlikError",
    "chisq_sf",
    "fit_constrained",
    "fit_oracle",
    "fit_penalized",
    "gcv",
    "gcv_scan",
    "load_csv",
    "lr_test",
    "sandwich_covariance",
    "univariate_threshold",
]
