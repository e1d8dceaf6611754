"""
Click command group: `python main.py <command> [options]`.

Every command builds a RunConfig, runs it and writes one JSON report (stdout or --out).
Exit status: 0 success, 2 validation error, 3 numeric failure (the report is still written).
"""

from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import click

from scorelab import __version__
from scorelab.bootstrap import build_app
from scorelab.cli.config import STUDIES, RunConfig
from scorelab.cli.report import RunReport, plain, write_report
from scorelab.errors import SpecificationError
from scorelab.scores.rules import RULE_NAMES


def _floats(ctx: click.Context, param: click.Parameter, value: Optional[str]) -> Optional[List[float]]:
    if value is None:
        return None
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}")


def _options(*decorators: Callable) -> Callable:
    def apply(fn: Callable) -> Callable:
        for d in reversed(decorators):
            fn = d(fn)
        return fn

    return apply


rule_option = click.option("--rule", help=f"Scoring rule: {', '.join(RULE_NAMES)}.")
gamma_option = click.option("--gamma", type=float, help="Tsallis exponent (> 1).")
psi_option = click.option("--psi", help="Convex function: tlogt, brier, quadratic or power:<gamma>.")
family_option = click.option("--family", help="Parametric family (normal-location, logistic, cauchy, gumbel, normal2, bernoulli, ...).")
theta_option = click.option("--theta", callback=_floats, help="Parameter vector, comma-separated.")
data_option = click.option("--data", type=click.Path(path_type=Path), help="Input CSV.")
out_option = click.option("--out", type=click.Path(path_type=Path), help="Report path (default: stdout).")
seed_option = click.option("--seed", type=int, help="Master seed (falls back to SCORELAB_SEED).")
jobs_option = click.option("--jobs", type=int, help="Parallel workers (default: SCORELAB_JOBS or CPU count).")
sigma2_option = click.option("--sigma2", type=float, default=1.0, show_default=True, help="Known noise variance.")
models_option = click.option("--models", type=click.Path(path_type=Path), help="Model-set JSON file.")

grid_options = _options(
    click.option("--grid-lo", type=float, help="Integration grid lower end."),
    click.option("--grid-hi", type=float, help="Integration grid upper end."),
    click.option("--grid-points", type=int, help="Integration grid points."),
)
rule_options = _options(rule_option, gamma_option, psi_option, grid_options)


def _execute(ctx: click.Context, command: str, values: Dict[str, Any]) -> None:
    app = ctx.obj
    settings = app["settings"]
    values = {k: v for k, v in values.items() if v is not None}
    if values.get("seed") is None and settings.seed is not None:
        values["seed"] = settings.seed
    try:
        config = RunConfig.build(command=command, **values)
    except SpecificationError as e:
        report = RunReport(
            command=command,
            config=plain(values),
            status="invalid",
            error={"type": type(e).__name__, "message": str(e)},
        )
        write_report(report, values.get("out"))
        ctx.exit(2)
    report, code = app["runner"].execute(config)
    write_report(report, config.out)
    ctx.exit(code)


@click.group()
@click.option("--log-level", help="Override SCORELAB_LOG_LEVEL.")
@click.version_option(version=__version__, prog_name="scorelab")
@click.pass_context
def cli(ctx: click.Context, log_level: Optional[str]) -> None:
    """Proper scoring rules: evaluation, estimation, GMRF fits and model comparison."""
    app = build_app(log_level=log_level)
    ctx.obj = app
    ctx.call_on_close(app["runner"].close)


@cli.command()
@rule_options
@click.option("--family", help="Parametric family, or exponential/weibull hazard for survival rules.")
@theta_option
@data_option
@click.option("--distribution", type=click.Path(path_type=Path), help="Quoted distribution CSV (label,probability).")
@out_option
@click.pass_context
def score(ctx: click.Context, **values: Any) -> None:
    """Score observations against a quoted distribution."""
    _execute(ctx, "score", values)


@cli.command()
@rule_options
@family_option
@data_option
@click.option("--start", callback=_floats, help="Optimizer start, comma-separated.")
@out_option
@click.pass_context
def estimate(ctx: click.Context, **values: Any) -> None:
    """Minimum-score estimate with sandwich covariance."""
    _execute(ctx, "estimate", values)


@cli.command("gmrf-fit")
@data_option
@click.option("--constrain", is_flag=True, help="Refit onto the boundary of alpha > 2|beta| when outside.")
@click.option("--oracles", is_flag=True, help="Also report numeric Hyvarinen, pseudo-likelihood and ML estimates.")
@out_option
@click.pass_context
def gmrf_fit(ctx: click.Context, **values: Any) -> None:
    """Closed-form Hyvarinen fit of the tridiagonal Gaussian chain."""
    _execute(ctx, "gmrf-fit", values)


@cli.command("wishart-fit")
@data_option
@click.option("--nu", type=int, help="Degrees of freedom of S.")
@click.option("--from-chain", is_flag=True, help="Data are chain vectors; S = sum y y'.")
@click.option("--restrict-tridiagonal", is_flag=True, help="Fit the two-parameter tridiagonal precision.")
@out_option
@click.pass_context
def wishart_fit(ctx: click.Context, **values: Any) -> None:
    """Hyvarinen estimate of a precision matrix from a Wishart-distributed S."""
    _execute(ctx, "wishart-fit", values)


@cli.command()
@rule_options
@models_option
@data_option
@sigma2_option
@jobs_option
@out_option
@click.pass_context
def compare(ctx: click.Context, **values: Any) -> None:
    """Marginal scores and pairwise score differences for normal linear models."""
    _execute(ctx, "compare", values)


@cli.command()
@models_option
@data_option
@sigma2_option
@out_option
@click.pass_context
def preq(ctx: click.Context, **values: Any) -> None:
    """Prequential Hyvarinen scores for normal linear models."""
    _execute(ctx, "preq", values)


@cli.command()
@click.option("--study", type=click.Choice(STUDIES), help="Simulation study.")
@rule_options
@family_option
@theta_option
@click.option("--nu", type=int, help="Vectors per chain data set (gmrf-equivalence).")
@sigma2_option
@click.option("--size", type=int, default=100, show_default=True, help="Sample size, draws or chain length.")
@click.option("--replicates", type=int, default=1, show_default=True)
@seed_option
@jobs_option
@out_option
@click.pass_context
def simulate(ctx: click.Context, **values: Any) -> None:
    """Seeded simulation studies fanned out over replicate streams."""
    _execute(ctx, "simulate", values)


@cli.command("check-propriety")
@rule_option
@gamma_option
@psi_option
@click.option("--support-size", type=int, default=2, show_default=True)
@click.option("--grid-step", type=float, default=0.01, show_default=True)
@out_option
@click.pass_context
def check_propriety(ctx: click.Context, **values: Any) -> None:
    """Brute-force propriety check on a simplex lattice."""
    _execute(ctx, "check-propriety", values)
