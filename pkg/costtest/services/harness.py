"""Monte Carlo driver: empirical size and power of the studentized test.

Replication r of a study draws everything from its own generator, keyed by
(seed, r) through numpy's SeedSequence spawn keys, so a replication's data,
split and start points do not depend on which other replications run or on
how joblib schedules them. Results are aggregated in replication order.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field

import numpy as np
import structlog
from joblib import Parallel, delayed

from costtest.config import settings
from costtest.errors import ConfigurationError, HarnessError, NumericError, UnderdeterminedError
from costtest.log import configure_logging
from costtest.schemas.study import StudyConfig
from costtest.services.scenarios import default_fit_options, generate_scenario
from costtest.services.statistic import cost_statistic

logger = structlog.get_logger()

_SEED_BOUND = 2**63


@dataclass(frozen=True)
class ReplicationOutcome:
    rep: int
    statistic: float | None = None
    rejected: bool = False
    converged: bool = True
    error: str | None = None


@dataclass(frozen=True)
class SimResult:
    config: StudyConfig
    p: int
    rejection_rate: float
    mc_standard_error: float
    reps_completed: int
    failures: int
    mean_statistic: float
    sd_statistic: float
    nonconverged: int = 0
    statistics: tuple[float, ...] = field(default=(), repr=False)

    def as_row(self) -> dict[str, object]:
        """One row of the results table."""
        cfg = self.config
        return {
            "study": cfg.study,
            "n": cfg.n,
            "q": cfg.q,
            "p": self.p,
            "a": cfg.a,
            "sigma": cfg.sigma_kind,
            "reps": cfg.reps,
            "completed": self.reps_completed,
            "failures": self.failures,
            "rejection_rate": self.rejection_rate,
            "mc_se": self.mc_standard_error,
            "mean_stat": self.mean_statistic,
            "sd_stat": self.sd_statistic,
        }


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep,)))


def run_replication(cfg: StudyConfig, rep: int) -> ReplicationOutcome:
    """Generate, split and test one dataset. Numeric failures are returned, not raised."""
    # joblib worker processes start with structlog unconfigured.
    if not structlog.is_configured():
        configure_logging()
    rng = replication_rng(cfg.seed, rep)
    data, model = generate_scenario(cfg, rng)
    split = cfg.split.model_copy(update={"seed": int(rng.integers(_SEED_BOUND))})
    fit_options = default_fit_options(cfg).model_copy(
        update={"start_seed": int(rng.integers(_SEED_BOUND))}
    )
    try:
        result = cost_statistic(model, data, cfg.weight, split, fit_options)
    except (NumericError, UnderdeterminedError) as exc:
        return ReplicationOutcome(rep=rep, error=f"{type(exc).__name__}: {exc}")
    return ReplicationOutcome(
        rep=rep,
        statistic=result.statistic,
        rejected=result.p_value(cfg.sided) < cfg.alpha,
        converged=result.converged,
    )


def summarize(cfg: StudyConfig, p: int, outcomes: list[ReplicationOutcome]) -> SimResult:
    """Aggregate replication outcomes, ordered by rep index."""
    outcomes = sorted(outcomes, key=lambda o: o.rep)
    completed = [o for o in outcomes if o.error is None]
    failures = len(outcomes) - len(completed)

    if failures > settings.MAX_FAILURE_FRACTION * len(outcomes):
        first = next(o.error for o in outcomes if o.error is not None)
        raise HarnessError(
            f"{cfg.study}: {failures}/{len(outcomes)} replications failed "
            f"(limit {settings.MAX_FAILURE_FRACTION:.0%}); first error: {first}"
        )

    statistics = np.array([o.statistic for o in completed], dtype=np.float64)
    k = statistics.size
    rate = sum(o.rejected for o in completed) / k
    return SimResult(
        config=cfg,
        p=p,
        rejection_rate=rate,
        mc_standard_error=math.sqrt(rate * (1.0 - rate) / k),
        reps_completed=k,
        failures=failures,
        mean_statistic=float(statistics.mean()),
        sd_statistic=float(statistics.std(ddof=1)) if k > 1 else 0.0,
        nonconverged=sum(not o.converged for o in completed),
        statistics=tuple(statistics.tolist()),
    )


def run_study(cfg: StudyConfig, n_jobs: int | None = None) -> SimResult:
    """Run cfg.reps replications and report the rejection rate at cfg.alpha."""
    if cfg.reps < 1:
        raise ConfigurationError(f"reps must be >= 1, got {cfg.reps}")
    n_jobs = settings.N_JOBS if n_jobs is None else n_jobs

    logger.info(
        "study_started", study=cfg.study, n=cfg.n, q=cfg.q, a=cfg.a, reps=cfg.reps, n_jobs=n_jobs
    )
    outcomes = Parallel(n_jobs=n_jobs)(
        delayed(run_replication)(cfg, rep) for rep in range(cfg.reps)
    )
    for outcome in outcomes:
        if outcome.error is not None:
            logger.warning(
                "replication_failed", study=cfg.study, rep=outcome.rep, error=outcome.error
            )

    result = summarize(cfg, cfg.resolved_p, list(outcomes))
    logger.info(
        "study_finished",
        study=cfg.study,
        a=cfg.a,
        rejection_rate=result.rejection_rate,
        failures=result.failures,
        nonconverged=result.nonconverged,
    )
    return result


def run_grid(configs: Iterable[StudyConfig], n_jobs: int | None = None) -> Iterator[SimResult]:
    """Yield one SimResult per config, in input order, as each study finishes."""
    configs = list(configs)
    if not configs:
        raise ConfigurationError("study grid is empty")
    return (run_study(cfg, n_jobs) for cfg in configs)
