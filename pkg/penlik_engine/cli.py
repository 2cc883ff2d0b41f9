from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, ValidationError, model_validator

from .constants import DEFAULT_SCAD_A, EXIT_OK, SEED_ENV_VAR
from .errors import InputError, NumericError, ParameterError, PenlikError
from .export import diagnostics_payload, dumps, fit_payload, frame_to_csv, lr_payload, write_text
from .inference import lr_test, profile_sigma2, sandwich_covariance
from .model import GaussianModel, expand_splines, load_csv, ols_standard_errors, per_covariate_lambdas
from .optimizer import fit_penalized
from .penalty import condition_diagnostics
from .sim import density_frame, qq_frame, report_tables, run_lr_null_experiment, run_table_experiment
from .tuning import default_lambda_grid, gcv_scan, profile_frame
from .types import FitConfig, FitResult, PenaltySpec

logger = logging.getLogger(__name__)

Subcommand = Literal["fit", "gcv", "test", "diag", "simulate"]


class CommandConfig(BaseModel):
    subcommand: Subcommand
    input_path: Optional[str] = Field(None, description="CSV file with response and covariates")
    response_column: Union[int, str] = Field(0, description="Response column name or 0-based index")
    header: bool = True
    penalty: Literal["scad", "hard", "soft", "lq"] = "scad"
    lam: Optional[float] = Field(None, ge=0, description="Fixed lambda; GCV selects one when omitted")
    a: float = Field(DEFAULT_SCAD_A, gt=2)
    q: float = Field(1.0, gt=0)
    gamma: float = Field(1.0, gt=0)
    scale_by_se: Optional[bool] = Field(None, description="Scale lambda by OLS standard errors")
    zero: List[str] = Field(default_factory=list, description="Coefficients set to zero under H0")
    spline: List[str] = Field(default_factory=list, description="Covariates replaced by quadratic spline blocks")
    penalized: bool = True
    exempt_tested: bool = False
    seed: int = Field(0, ge=0, lt=2**64)
    n: int = Field(400, ge=1)
    replicates: int = Field(100, ge=1)
    experiment: Literal["table", "lr-null", "all"] = "table"
    workers: int = Field(1, ge=1)
    grid_size: int = Field(50, ge=1)
    output_path: Optional[str] = None
    format: Literal["json", "csv"] = "json"

    @model_validator(mode="after")
    def _check_combination(self) -> "CommandConfig":
        if self.subcommand == "simulate":
            if self.input_path is not None:
                raise ValueError("simulate does not read an input file")
        elif self.input_path is None:
            raise ValueError(f"{self.subcommand} requires --input")
        if self.subcommand == "test" and not self.zero:
            raise ValueError("test requires --zero with at least one coefficient name")
        if self.subcommand != "test" and self.zero:
            raise ValueError("--zero only applies to the test subcommand")
        return self

    def penalty_spec(self, lam: float = 0.0) -> PenaltySpec:
        return PenaltySpec(self.penalty, lam, a=self.a, q=self.q)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise ParameterError(f"{self.prog}: {message}")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ParameterError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--penalty", choices=["scad", "hard", "soft", "lq"], default="scad", help="Penalty family (default: scad)")
    common.add_argument("--lambda", dest="lam", type=float, default=None, help="Regularization parameter; GCV when omitted")
    common.add_argument("--a", type=float, default=DEFAULT_SCAD_A, help="SCAD shape parameter (default: 3.7)")
    common.add_argument("--q", type=float, default=1.0, help="Exponent of the Lq penalty (default: 1)")
    common.add_argument("--gamma", type=float, default=1.0, help="GCV inflation factor (default: 1)")
    common.add_argument("--scale-by-se", dest="scale_by_se", action="store_true", default=None, help="Scale lambda by OLS standard errors")
    common.add_argument("--no-scale-by-se", dest="scale_by_se", action="store_false")
    common.add_argument("--grid-size", type=int, default=50, help="Number of lambda grid points for GCV (default: 50)")
    common.add_argument("--output", dest="output_path", default=None, help="Output file (stdout when omitted)")
    common.add_argument("--format", choices=["json", "csv"], default="json", help="Output format (default: json)")
    common.add_argument("-v", "--verbose", action="count", default=0, help="Log INFO (-v) or DEBUG (-vv) to stderr")

    data = _Parser(add_help=False)
    data.add_argument("--input", dest="input_path", required=True, help="CSV file")
    data.add_argument("--response", default="0", help="Response column name or 0-based index (default: 0)")
    data.add_argument("--no-header", dest="header", action="store_false", help="CSV has no header row")
    data.add_argument(
        "--spline",
        action="append",
        default=[],
        help="Replace a covariate by x, x^2 and truncated squares at quantile knots (comma-separated, repeatable)",
    )

    parser = _Parser(prog="penlik", description="Nonconcave penalized least squares: fit, tune, test, simulate.")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    sub.add_parser("fit", parents=[common, data], help="Fit and report coefficients with sandwich standard errors")
    sub.add_parser("gcv", parents=[common, data], help="GCV profile over a lambda grid")
    test = sub.add_parser("test", parents=[common, data], help="Penalized likelihood-ratio test")
    test.add_argument("--zero", action="append", default=[], help="Coefficient names set to zero under H0 (comma-separated)")
    test.add_argument("--unpenalized", dest="penalized", action="store_false", help="Ordinary likelihood-ratio test")
    test.add_argument("--exempt-tested", action="store_true", help="Do not penalize the tested coefficients")
    sub.add_parser("diag", parents=[common, data], help="Penalty regularity diagnostics at the fitted coefficients")
    simulate = sub.add_parser("simulate", parents=[common], help="AR Monte Carlo study")
    simulate.add_argument("--n", type=int, default=400, help="Sample size (default: 400)")
    simulate.add_argument("--replicates", type=int, default=100, help="Number of replicates (default: 100)")
    simulate.add_argument("--seed", type=int, default=None, help=f"Seed (default: ${SEED_ENV_VAR} or 0)")
    simulate.add_argument("--experiment", choices=["table", "lr-null", "all"], default="table")
    simulate.add_argument("--workers", type=int, default=1, help="Worker processes for replicates (default: 1)")
    return parser


def parse_config(argv: Optional[Sequence[str]] = None) -> Tuple[CommandConfig, int]:
    args = build_parser().parse_args(argv)
    values: Dict[str, Any] = {k: v for k, v in vars(args).items() if k not in ("verbose", "response")}
    if "response" in vars(args):
        values["response_column"] = int(args.response) if args.response.isdigit() else args.response
    if args.subcommand == "simulate" and args.seed is None:
        values["seed"] = _default_seed()
    for key in ("zero", "spline"):
        values[key] = [name.strip() for item in values.get(key, []) for name in item.split(",") if name.strip()]
    try:
        config = CommandConfig(**values)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in exc.errors()
        )
        raise ParameterError(problems) from None
    return config, args.verbose


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)


def _weights(config: CommandConfig, model: GaussianModel, default: bool) -> Optional[np.ndarray]:
    enabled = default if config.scale_by_se is None else config.scale_by_se
    return ols_standard_errors(model) if enabled else None


def _fit_config(model: GaussianModel, lambdas: Optional[np.ndarray] = None) -> FitConfig:
    init = "ols" if model.n > model.p else "ridge"
    return FitConfig(init=init, per_coordinate_lambdas=None if lambdas is None else tuple(lambdas))


def _fit(config: CommandConfig, model: GaussianModel) -> Tuple[PenaltySpec, FitResult, Optional[np.ndarray], list]:
    """Fit at --lambda, or at the GCV choice when it is omitted; returns the profile too."""
    weights = _weights(config, model, default=False)
    if config.lam is not None:
        spec = config.penalty_spec(config.lam)
        lambdas = None if weights is None else per_covariate_lambdas(config.lam, weights)
        return spec, fit_penalized(model, spec, _fit_config(model, lambdas)), lambdas, []
    family = config.penalty_spec()
    grid = default_lambda_grid(model, family, weights, num=config.grid_size)
    best, profile = gcv_scan(model, family, grid, config.gamma, _fit_config(model), weights)
    logger.info("GCV selected lambda=%g", best.lam)
    lambdas = None if weights is None else per_covariate_lambdas(best.lam, weights)
    return family.with_lambda(best.lam), best.fit, lambdas, profile


def _run_fit(config: CommandConfig, model: GaussianModel) -> str:
    spec, fit, _, _ = _fit(config, model)
    covariance = None
    if fit.active_set:
        try:
            covariance = sandwich_covariance(model, fit, spec)
        except NumericError as exc:
            logger.warning("Standard errors unavailable: %s", exc)
    payload = fit_payload(model, fit, str(spec), covariance)
    if config.format == "csv":
        names = model.dataset.names
        se = payload["standard_errors"]
        frame = pd.DataFrame(
            {
                "coefficient": names,
                "estimate": fit.beta,
                "std_error": [se.get(name, np.nan) for name in names],
            }
        )
        return frame_to_csv(frame)
    return dumps(payload)


def _run_gcv(config: CommandConfig, model: GaussianModel) -> str:
    if config.lam is not None:
        raise InputError("gcv selects lambda itself; drop --lambda")
    spec, fit, _, profile = _fit(config, model)
    print(f"Selected lambda: {spec.lam:.9g}", file=sys.stderr)
    frame = profile_frame(profile)
    if config.format == "csv":
        return frame_to_csv(frame)
    return dumps({"lambda": spec.lam, "penalty": spec.family, "gamma": config.gamma, "profile": frame.to_dict("list")})


def _run_test(config: CommandConfig, model: GaussianModel) -> str:
    indices = [model.dataset.index_of(name) for name in config.zero]
    if len(set(indices)) != len(indices):
        raise InputError("--zero lists a coefficient twice")
    rows = np.zeros((len(indices), model.p))
    for r, j in enumerate(indices):
        rows[r, j] = 1.0

    spec, fit, lambdas, _ = _fit(config, model)
    sigma2 = profile_sigma2(model, fit, spec)
    result = lr_test(
        model.with_sigma2(sigma2),
        spec,
        rows,
        _fit_config(model, lambdas),
        penalized=config.penalized,
        exempt_tested=config.exempt_tested,
    )
    payload = lr_payload(model, result, config.zero)
    payload["lambda"] = spec.lam
    payload["sigma2"] = sigma2
    if config.format == "csv":
        flat = {k: v for k, v in payload.items() if not isinstance(v, list)}
        return frame_to_csv(pd.DataFrame([flat]))
    return dumps(payload)


def _run_diag(config: CommandConfig, model: GaussianModel) -> str:
    spec, fit, _, _ = _fit(config, model)
    names = model.dataset.names
    nonzero = {names[j]: float(fit.beta[j]) for j in fit.active_set}
    payload = diagnostics_payload(condition_diagnostics(spec, list(nonzero.values())), nonzero)
    payload["penalty"] = str(spec)
    if config.format == "csv":
        flat = {k: v for k, v in payload.items() if not isinstance(v, dict)}
        return frame_to_csv(pd.DataFrame([flat]))
    return dumps(payload)


def _run_simulate(config: CommandConfig) -> Optional[str]:
    family = config.penalty_spec()
    scale = True if config.scale_by_se is None else config.scale_by_se
    kwargs = dict(workers=config.workers, grid_size=config.grid_size, scale_by_se=scale)
    results: Dict[str, Any] = {}
    frames: Dict[str, pd.DataFrame] = {}
    if config.experiment in ("table", "all"):
        report = run_table_experiment(config.n, config.replicates, family, config.gamma, config.seed, **kwargs)
        results["table"] = report
        frames.update(report_tables(report))
    if config.experiment in ("lr-null", "all"):
        null = run_lr_null_experiment(config.n, config.replicates, family, config.seed, config.gamma, **kwargs)
        results["lr_null"] = null
        frames["lr_density"] = density_frame(null)
        frames["lr_qq"] = qq_frame(null)

    if config.format == "json":
        return dumps(results)
    if config.output_path is None:
        return "\n".join(f"# {name}\n{frame_to_csv(frame)}" for name, frame in frames.items())
    # CSV output is one file per table inside the output directory.
    target = Path(config.output_path)
    target.mkdir(parents=True, exist_ok=True)
    for name, frame in frames.items():
        frame_to_csv(frame, target / f"{name}.csv")
    return None


def dispatch(config: CommandConfig) -> int:
    if config.subcommand == "simulate":
        text = _run_simulate(config)
        if text is not None:
            write_text(text, config.output_path)
        return EXIT_OK

    dataset = load_csv(config.input_path, config.response_column, header=config.header)
    if config.spline:
        dataset, knots = expand_splines(dataset, config.spline)
        for name, spec in knots.items():
            logger.info("Spline basis for %s with knots %s", name, ", ".join(f"{k:.6g}" for k in spec.knots))
    model = GaussianModel(dataset)
    runners = {"fit": _run_fit, "gcv": _run_gcv, "test": _run_test, "diag": _run_diag}
    write_text(runners[config.subcommand](config, model), config.output_path)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config, verbosity = parse_config(argv)
        _configure_logging(verbosity)
        return dispatch(config)
    except PenlikError as exc:
        print(f"Error [{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_status
    except np.linalg.LinAlgError as exc:
        error = NumericError(f"Linear algebra failure: {exc}")
        print(f"Error [{error.code}]: {error}", file=sys.stderr)
        return error.exit_status


if __name__ == "__main__":
    sys.exit(main())
