"""
Run orchestration: RunConfig -> RunReport plus an exit status.

Every handler parses its input files first and only then computes. A failure keeps whatever the
handler had already put into the report and records the error: status "invalid" / exit 2 for
validation errors, status "failed" / exit 3 for numeric ones.
"""

import time
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from scorelab.cli.config import ModelSetFile, RunConfig
from scorelab.cli.ingest import ingest_labels, read_chain, read_matrix, read_square, read_survival, read_vector
from scorelab.cli.report import RunReport
from scorelab.cli.studies import gmrf_equivalence_study, prequential_study, sandwich_study, unbiased_study
from scorelab.config.settings import Settings
from scorelab.errors import SpecificationError, exit_code_for
from scorelab.estimation.estimator import data_start, minimum_score_estimate
from scorelab.estimation.families import ParametricFamily, family_by_name
from scorelab.gmrf.hyvarinen import (
    hyvarinen_closed_form,
    hyvarinen_numeric_estimate,
    maximum_likelihood_estimate,
    pseudo_likelihood_estimate,
)
from scorelab.gmrf.model import chain_statistics
from scorelab.gmrf.wishart import WishartData, wishart_hyvarinen_estimate
from scorelab.modelsel.bayes import compare_models
from scorelab.modelsel.linear import (
    NormalLinearModel,
    aic,
    linear_bayes_model,
    nlm_improper_hyvarinen,
    prequential_hyvarinen,
)
from scorelab.modelsel.priors import FlatPrior, NormalPrior, prior_from_spec
from scorelab.scores.distributions import DensityModel, load_discrete_csv
from scorelab.scores.evaluate import entropy, score_vector
from scorelab.scores.propriety import check_propriety, zero_one_rule
from scorelab.scores.rules import RULE_NAMES, RuleFamily, RuleSpec, rule_by_name
from scorelab.scores.survival import SurvivalObservation, exponential_hazard, survival_score, weibull_hazard
from scorelab.workers.replicate_worker import ReplicatePool

HAZARD_NAMES = ("exponential", "weibull")

Handler = Callable[[RunConfig, Settings, RunReport, ReplicatePool], Optional[int]]


def build_rule(config: RunConfig, settings: Settings) -> RuleSpec:
    name = str(config.rule or "").strip().lower()
    if name == "from-loss":
        return zero_one_rule(config.support_size)
    if name not in RULE_NAMES:
        raise SpecificationError(f"Unknown rule '{config.rule}'. Known: {', '.join(RULE_NAMES)}")
    return rule_by_name(name, gamma=config.gamma, psi=config.psi, grid=config.grid(settings.grid_points))


def _start(config: RunConfig, family: ParametricFamily, xs: np.ndarray) -> np.ndarray:
    if config.start is not None:
        return family.theta(config.start)
    return data_start(family, xs)


def _hazard(config: RunConfig):
    name = str(config.family or "").strip().lower()
    theta = list(config.theta or [])
    if name == "exponential" and len(theta) == 1:
        return exponential_hazard(theta[0])
    if name == "weibull" and len(theta) == 2:
        return weibull_hazard(theta[0], theta[1])
    raise SpecificationError(
        f"Survival scoring needs --family one of {', '.join(HAZARD_NAMES)} "
        f"with --theta rate (exponential) or shape,scale (weibull)"
    )


def _handle_score(config: RunConfig, settings: Settings, report: RunReport, pool: ReplicatePool) -> None:
    rule = build_rule(config, settings)
    if rule.family == RuleFamily.SURVIVAL:
        table = read_survival(config.data)
        report.inputs["data"] = table.summary()
        hazard = _hazard(config)
        observations = [SurvivalObservation(m, int(d)) for m, d in zip(table.column("time"), table.column("event"))]
        values = np.array([survival_score(obs, hazard, rule.psi, rule.grid) for obs in observations])
    elif config.distribution is not None:
        labels, summary = ingest_labels(config.data)
        quote = load_discrete_csv(config.distribution)
        report.inputs["data"] = summary
        report.inputs["distribution"] = {"path": str(config.distribution), "support_size": quote.size}
        values = score_vector(rule, labels, quote)
        report.results["entropy"] = entropy(rule, quote)
    else:
        table = read_vector(config.data)
        report.inputs["data"] = table.summary()
        family = family_by_name(config.family)
        quote = family.distribution(config.theta)
        if isinstance(quote, DensityModel):
            quote.validate()
        values = score_vector(rule, table.column("x").tolist() if family.discrete else table.column("x"), quote)

    values = np.asarray(values, dtype=float)
    report.results.update({
        "rule": rule.family.value,
        "scores": values,
        "total": float(np.sum(values)),
        "mean": float(np.mean(values)),
        "n": int(values.size),
    })
    report.diagnostics["infinite_scores"] = int(np.count_nonzero(np.isinf(values)))


def _handle_estimate(config: RunConfig, settings: Settings, report: RunReport, pool: ReplicatePool) -> None:
    table = read_vector(config.data)
    report.inputs["data"] = table.summary()
    rule = build_rule(config, settings)
    family = family_by_name(config.family)
    xs = table.column("x")
    fit = minimum_score_estimate(
        rule,
        family,
        xs.tolist() if family.discrete else xs,
        start=_start(config, family, xs),
        tolerance=settings.tolerance,
        max_iterations=settings.max_iterations,
    )
    report.results.update({"rule": rule.family.value, "family": family.name, "estimate": fit})
    report.diagnostics.update({"converged": fit.converged, "asymptotics_available": fit.has_asymptotics})


def _handle_gmrf(config: RunConfig, settings: Settings, report: RunReport, pool: ReplicatePool) -> None:
    data, table = read_chain(config.data)
    report.inputs["data"] = table.summary()
    stats = chain_statistics(data)
    report.results["statistics"] = {
        "c_yz": stats.c_yz,
        "c_zz": stats.c_zz,
        "c_yy": stats.c_yy,
        "c_yy_dot_z": stats.c_yy_dot_z,
        "nu": stats.nu,
        "N": stats.N,
    }
    fit = hyvarinen_closed_form(data, constrain=config.constrain)
    report.results["hyvarinen"] = fit
    report.diagnostics.update({
        "in_omega": fit.in_omega,
        "degenerate": fit.degenerate,
        "constrained": fit.constrained,
    })
    if not fit.in_omega:
        report.diagnostics["note"] = "estimate lies outside alpha > 2|beta|; the precision is not positive definite"
    if config.oracles:
        report.results["oracles"] = [
            hyvarinen_numeric_estimate(data),
            pseudo_likelihood_estimate(data),
            maximum_likelihood_estimate(data),
        ]


def _handle_wishart(config: RunConfig, settings: Settings, report: RunReport, pool: ReplicatePool) -> None:
    if config.from_chain:
        chain, table = read_chain(config.data)
        data = WishartData.from_chain(chain)
    else:
        table = read_square(config.data)
        data = WishartData(table.values, config.nu)
    report.inputs["data"] = table.summary()
    fit = wishart_hyvarinen_estimate(data, restrict_tridiagonal=config.restrict_tridiagonal)
    report.results.update({"N": data.N, "nu": data.nu, "wishart": fit})
    report.diagnostics["in_omega"] = fit.in_omega


def _load_linear_models(config: RunConfig, report: RunReport) -> Tuple[np.ndarray, List[Tuple[str, NormalLinearModel, object]]]:
    y_table = read_vector(config.data, column="y")
    report.inputs["data"] = y_table.summary()
    model_set = ModelSetFile.load(config.models)
    models, designs = [], {}
    for entry in model_set.models:
        X = read_matrix(entry.design)
        designs[entry.id] = {**X.summary(), "family": entry.family}
        sigma2 = entry.sigma2 if entry.sigma2 is not None else config.sigma2
        prior = prior_from_spec(entry.prior, X.cols)
        if isinstance(prior, NormalPrior):
            model = NormalLinearModel(X.values, sigma2, prior.mean, prior.cov, label=entry.id)
        else:
            model = NormalLinearModel(X.values, sigma2, label=entry.id)
        models.append((entry.id, model, prior))
    report.inputs["designs"] = designs
    return y_table.column("y"), models


def _handle_compare(config: RunConfig, settings: Settings, report: RunReport, pool: ReplicatePool) -> Optional[int]:
    y, models = _load_linear_models(config, report)
    rule = build_rule(config, settings)
    specs = [
        (model_id, linear_bayes_model(model, y, prior, points=settings.posterior_points, halfwidth=settings.grid_halfwidth))
        for model_id, model, prior in models
    ]
    comparison = compare_models(rule, specs, y, pool=pool)
    report.results["comparison"] = comparison
    if rule.family == RuleFamily.HYVARINEN:
        # the closed form is on the doubled scale; halve it to sit next to the quadrature scores
        report.results["closed_form"] = {
            model_id: 0.5 * nlm_improper_hyvarinen(model, y)
            for model_id, model, prior in models
            if isinstance(prior, FlatPrior) and model.nu > 0
        }
    failed = [e.model_id for e in comparison.entries if e.errors]
    report.diagnostics.update({
        "scale_arbitrary": {e.model_id: e.scale_arbitrary for e in comparison.entries},
        "failed_models": failed,
    })
    if failed:
        report.status = "partial"
        return 3
    return None


def _handle_preq(config: RunConfig, settings: Settings, report: RunReport, pool: ReplicatePool) -> None:
    y, models = _load_linear_models(config, report)
    scores = {}
    for model_id, model, prior in models:
        scores[model_id] = {
            "prequential": prequential_hyvarinen(model, y),
            "batch": nlm_improper_hyvarinen(model, y) if model.nu > 0 else None,
            "aic": aic(model, y),
            "p": model.p,
        }
    report.results["models"] = scores
    ranking = sorted(scores, key=lambda k: (scores[k]["prequential"], k))
    report.results["ranking"] = ranking


def _handle_simulate(config: RunConfig, settings: Settings, report: RunReport, pool: ReplicatePool) -> None:
    seed = config.seed_spec()
    study = config.study
    report.results["study"] = study
    if study in ("sandwich", "unbiased"):
        rule = build_rule(config, settings)
        family = family_by_name(config.family)
        run = sandwich_study if study == "sandwich" else unbiased_study
        results, diagnostics = run(rule, family, config.theta, config.size, config.replicates, seed, pool)
    elif study == "gmrf-equivalence":
        if len(config.theta) != 2:
            raise SpecificationError("gmrf-equivalence needs --theta alpha,beta")
        alpha, beta = config.theta
        results, diagnostics = gmrf_equivalence_study(
            alpha, beta, config.size, config.nu or 1, config.replicates, seed, pool
        )
    else:
        intercept = config.theta[0] if config.theta else 0.0
        results, diagnostics = prequential_study(intercept, config.sigma2, config.size, config.replicates, seed, pool)
    report.results.update(results)
    report.diagnostics.update(diagnostics)


def _handle_propriety(config: RunConfig, settings: Settings, report: RunReport, pool: ReplicatePool) -> None:
    rule = build_rule(config, settings)
    result = check_propriety(rule, config.support_size, grid_step=config.grid_step)
    report.results["propriety"] = result
    report.diagnostics["strict_on_grid"] = result.strict_on_grid


HANDLERS: Dict[str, Handler] = {
    "score": _handle_score,
    "estimate": _handle_estimate,
    "gmrf-fit": _handle_gmrf,
    "wishart-fit": _handle_wishart,
    "compare": _handle_compare,
    "preq": _handle_preq,
    "simulate": _handle_simulate,
    "check-propriety": _handle_propriety,
}


def _error_payload(e: BaseException) -> dict:
    payload = {"type": type(e).__name__, "message": str(e)}
    for attr in ("row", "column", "token", "pivot", "index"):
        value = getattr(e, attr, None)
        if value is not None:
            payload[attr] = value
    return payload


def run(config: RunConfig, settings: Settings, pool: Optional[ReplicatePool] = None) -> Tuple[RunReport, int]:
    started = time.perf_counter()
    report = RunReport(command=config.command, config=config.echo())
    own_pool = pool is None
    pool = pool or ReplicatePool(config.jobs or settings.jobs)
    logger.info("Run {} started (jobs={})", config.command, pool.jobs)
    try:
        code = HANDLERS[config.command](config, settings, report, pool) or 0
    except Exception as e:
        code = exit_code_for(e)
        report.status = "invalid" if code == 2 else "failed"
        report.error = _error_payload(e)
        logger.error("Run {} failed: {}", config.command, e)
    finally:
        if own_pool:
            pool.stop()
    report.wall_clock_seconds = time.perf_counter() - started
    logger.info("Run {} finished with status {} (exit {})", config.command, report.status, code)
    return report, code
