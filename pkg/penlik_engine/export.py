"""JSON and CSV rendering of results.

Floats carry 9 significant digits; non-finite values become the strings
"inf", "-inf" and "nan" so the JSON stays standard.
"""
from __future__ import annotations

import dataclasses
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .constants import SIGNIFICANT_DIGITS
from .model import GaussianModel, r_squared
from .types import CovarianceEstimate, FitResult, LrTestResult, PenaltyDiagnostics

CSV_FLOAT_FORMAT = f"%.{SIGNIFICANT_DIGITS}g"


def round_float(value: float) -> Union[float, str]:
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return float(f"{value:.{SIGNIFICANT_DIGITS}g}")


def to_jsonable(value: Any) -> Any:
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating, Fraction)):
        return round_float(float(value))
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return value


def dumps(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), indent=2)


def fit_payload(
    model: GaussianModel,
    fit: FitResult,
    penalty: str,
    covariance: Optional[CovarianceEstimate] = None,
) -> Dict[str, Any]:
    names = model.dataset.names
    se = {names[j]: s for j, s in zip(covariance.active_indices, covariance.standard_errors)} if covariance else {}
    return {
        "penalty": penalty,
        "coefficients": {name: float(b) for name, b in zip(names, fit.beta)},
        "standard_errors": se,
        "active_set": [names[j] for j in fit.active_set],
        "objective": fit.objective,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "lambda_used": fit.lambda_used,
        "sigma2": fit.sigma2,
        "profiled_sigma2": covariance.sigma2 if covariance else None,
        "r_squared": r_squared(model, fit.beta),
        "stationarity_residual": fit.stationarity_residual,
    }


def lr_payload(model: GaussianModel, result: LrTestResult, tested: Sequence[str]) -> Dict[str, Any]:
    names = model.dataset.names
    payload = to_jsonable(result)
    payload["tested"] = list(tested)
    payload["unconstrained_active"] = [names[j] for j in result.unconstrained_active]
    payload["constrained_active"] = [names[j] for j in result.constrained_active]
    return payload


def diagnostics_payload(diag: PenaltyDiagnostics, coefficients: Mapping[str, float]) -> Dict[str, Any]:
    payload = to_jsonable(diag)
    payload["coefficients"] = dict(coefficients)
    return payload


def frame_to_csv(frame: pd.DataFrame, path: Optional[Union[str, Path]] = None) -> str:
    text = frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def write_text(text: str, path: Optional[Union[str, Path]]) -> None:
    if path is None:
        print(text, end="" if text.endswith("\n") else "\n")
        return
    Path(path).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
