"""Conditionally studentized specification test.

Pipeline (cost_statistic):
1. Split the n rows into disjoint parts N1 (n1 rows) and N2 (n2 rows).
2. Fit θ̂₁ on N1, θ̂₂ on N2 and θ̂ on all rows.
3. Residuals ê from θ̂₁ on N1 and from θ̂₂ on N2.
4. Weights W (n1×n2) between N1 and N2 predictors at h = c·n^(−0.2).
5. Numerator U = ê₁ᵀ W ê₂ / √(n1·n2).
6. For each j in N2: aⱼ = (1/n1) Σ_{i∈N1} ġ(θ̂, Xᵢ) Wᵢⱼ, then
   w̃̃ᵢ = (1/√n2) Σⱼ êⱼ [Wᵢⱼ − ġ(θ̂, Xᵢ)ᵀ Σ̂⁻¹ aⱼ],
   with Σ̂ = (1/n) Σ ġġᵀ over all rows at θ̂.
7. Conditional sd = population sd of (êᵢ w̃̃ᵢ)_{i∈N1}; statistic V = U / sd.

Under the null V is asymptotically standard normal; under alternatives it
drifts to +∞, so the one-sided p-value is offered alongside the default
two-sided one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np
import scipy.linalg
import structlog
from numpy.typing import NDArray
from scipy.stats import norm

from costtest.errors import (
    ConfigurationError,
    DegenerateVarianceError,
    DimensionError,
    NumericError,
    SingularMatrixError,
    UnderdeterminedError,
)
from costtest.schemas.options import FitOptions, Sided, SplitMode, SplitOptions, WeightSpec
from costtest.services.models import Dataset, ParametricModel, residual_vector
from costtest.services.nls import FitResult, fit
from costtest.services.weights import bandwidth, weight_matrix

logger = structlog.get_logger()

DEGENERATE_SD = 1e-12
CONDITION_LIMIT = 1e12
# Ridge on Σ̂, as multiples of trace(Σ̂)/p, tried in order.
RIDGE_FACTORS = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2)


@dataclass(frozen=True)
class SplitPlan:
    n1: int
    n2: int
    mode: SplitMode
    seed: int
    fraction_n2: float
    indices_1: NDArray[np.intp] = field(repr=False)
    indices_2: NDArray[np.intp] = field(repr=False)


@dataclass(frozen=True)
class TestResult:
    __test__: ClassVar[bool] = False

    statistic: float
    numerator: float
    conditional_sd: float
    p_value_two_sided: float
    p_value_one_sided: float
    theta_hat_1: NDArray[np.float64]
    theta_hat_2: NDArray[np.float64]
    theta_hat_full: NDArray[np.float64]
    split: SplitPlan
    bandwidth_used: float
    fit_converged: tuple[bool, bool, bool] = (True, True, True)

    def p_value(self, sided: Sided = "two") -> float:
        return self.p_value_two_sided if sided == "two" else self.p_value_one_sided

    @property
    def converged(self) -> bool:
        return all(self.fit_converged)


# --- Building blocks ---


def split_sample(
    data: Dataset, options: SplitOptions | None = None, p: int = 1
) -> tuple[Dataset, Dataset, SplitPlan]:
    """Partition rows into N1 and N2 with n2 = round(fraction_n2 · n).

    seeded_shuffle permutes the row indices with a generator seeded from
    options.seed and takes the first n1 as N1; as_ordered takes the first n1
    rows. Index sets are returned sorted.
    """
    options = options or SplitOptions()
    n = data.n
    if n < 4:
        raise ConfigurationError(f"sample splitting needs n >= 4, got n={n}")

    n2 = int(math.floor(options.fraction_n2 * n + 0.5))
    n1 = n - n2
    if min(n1, n2) < p:
        raise UnderdeterminedError(
            f"split n1={n1}, n2={n2} leaves a subsample smaller than p={p}"
        )
    if min(n1, n2) < 2:
        raise ConfigurationError(f"split n1={n1}, n2={n2}: both parts need at least 2 rows")

    if options.mode == "seeded_shuffle":
        order = np.random.default_rng(options.seed).permutation(n)
    else:
        order = np.arange(n)
    indices_1 = np.sort(order[:n1])
    indices_2 = np.sort(order[n1:])

    plan = SplitPlan(
        n1=n1,
        n2=n2,
        mode=options.mode,
        seed=options.seed,
        fraction_n2=options.fraction_n2,
        indices_1=indices_1,
        indices_2=indices_2,
    )
    return data.subset(indices_1), data.subset(indices_2), plan


def sigma_hat(model: ParametricModel, theta, data: Dataset) -> NDArray[np.float64]:
    """Gram matrix (1/n) Σ ġ(θ, Xᵢ) ġ(θ, Xᵢ)ᵀ."""
    G = model.jacobian(theta, data.predictors)
    S = G.T @ G / data.n
    # Symmetrize away BLAS rounding.
    return 0.5 * (S + S.T)


def solve_gram(sigma: NDArray[np.float64], rhs: NDArray[np.float64]) -> NDArray[np.float64]:
    """Σ̂⁻¹ rhs, adding an escalating ridge while Σ̂ is ill-conditioned."""
    p = sigma.shape[0]
    scale = float(np.trace(sigma)) / p
    if not np.isfinite(scale) or scale <= 0:
        raise SingularMatrixError(f"gradient Gram matrix has trace {scale * p}")

    matrix = sigma
    for factor in (0.0, *RIDGE_FACTORS):
        if factor:
            matrix = sigma + factor * scale * np.eye(p)
            logger.debug("gram_ridge", ridge=factor * scale, p=p)
        if np.linalg.cond(matrix) > CONDITION_LIMIT:
            continue
        try:
            return scipy.linalg.solve(matrix, rhs, assume_a="sym")
        except np.linalg.LinAlgError:
            continue
    raise SingularMatrixError(
        f"gradient Gram matrix singular after ridge {RIDGE_FACTORS[-1]:g}·trace/p"
    )


def numerator_stat(e1, e2, W) -> float:
    """U = ê₁ᵀ W ê₂ / √(n1·n2)."""
    e1 = np.asarray(e1, dtype=np.float64)
    e2 = np.asarray(e2, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    if W.shape != (e1.size, e2.size):
        raise DimensionError(f"W has shape {W.shape}, residuals have sizes {e1.size}, {e2.size}")
    return float(e1 @ W @ e2) / math.sqrt(e1.size * e2.size)


def p_value(statistic: float, sided: Sided = "two") -> float:
    """Standard normal p-value: 2(1 − Φ(|v|)) two-sided, 1 − Φ(v) one-sided."""
    if not math.isfinite(statistic):
        raise NumericError(f"p-value of a non-finite statistic {statistic}")
    if sided == "two":
        return float(min(1.0, 2.0 * norm.sf(abs(statistic))))
    if sided == "one":
        return float(norm.sf(statistic))
    raise ConfigurationError(f"sided must be 'one' or 'two', got {sided!r}")


def assemble_result(
    numerator: float,
    conditional_sd: float,
    fits: tuple[FitResult, FitResult, FitResult],
    plan: SplitPlan,
    h: float,
) -> TestResult:
    """Package a numerator and conditional sd as a TestResult."""
    if not math.isfinite(conditional_sd) or conditional_sd < DEGENERATE_SD:
        raise DegenerateVarianceError(f"conditional sd {conditional_sd:.3e} is degenerate")
    statistic = numerator / conditional_sd
    fit1, fit2, fit_full = fits
    return TestResult(
        statistic=statistic,
        numerator=numerator,
        conditional_sd=conditional_sd,
        p_value_two_sided=p_value(statistic, "two"),
        p_value_one_sided=p_value(statistic, "one"),
        theta_hat_1=fit1.theta_hat,
        theta_hat_2=fit2.theta_hat,
        theta_hat_full=fit_full.theta_hat,
        split=plan,
        bandwidth_used=h,
        fit_converged=(fit1.converged, fit2.converged, fit_full.converged),
    )


# --- The test ---


def cost_statistic(
    model: ParametricModel,
    data: Dataset,
    weight: WeightSpec | None = None,
    split: SplitOptions | None = None,
    fit_options: FitOptions | None = None,
) -> TestResult:
    """Run the full split / fit / studentize pipeline on data."""
    weight = weight or WeightSpec()
    fit_options = fit_options or FitOptions()
    if data.q != model.q:
        raise DimensionError(f"{model.label}: data has q={data.q}, model expects q={model.q}")

    part1, part2, plan = split_sample(data, split, p=model.p)
    fit1 = fit(model, part1, fit_options)
    fit2 = fit(model, part2, fit_options)
    fit_full = fit(model, data, fit_options)

    e1 = residual_vector(model, fit1.theta_hat, part1)
    e2 = residual_vector(model, fit2.theta_hat, part2)

    h = bandwidth(weight.c, data.n)
    W = weight_matrix(weight, part1.predictors, part2.predictors, h)
    numerator = numerator_stat(e1, e2, W)

    G1 = model.jacobian(fit_full.theta_hat, part1.predictors)
    A = G1.T @ W / plan.n1
    projected = W - G1 @ solve_gram(sigma_hat(model, fit_full.theta_hat, data), A)
    w_tilde = projected @ e2 / math.sqrt(plan.n2)

    products = e1 * w_tilde
    conditional_sd = float(np.sqrt(np.mean((products - products.mean()) ** 2)))

    result = assemble_result(numerator, conditional_sd, (fit1, fit2, fit_full), plan, h)
    logger.debug(
        "cost_statistic",
        model=model.label,
        n1=plan.n1,
        n2=plan.n2,
        statistic=result.statistic,
        converged=result.converged,
    )
    return result


def un_statistic(
    model: ParametricModel,
    data: Dataset,
    weight: WeightSpec | None = None,
    fit_options: FitOptions | None = None,
) -> float:
    """Non-standardized U_n = Σᵢ Σ_{j≠i} êᵢêⱼwᵢⱼ / √(n(n−1)), full-sample fit.

    A diagnostic only: its null distribution has no tractable limit.
    """
    weight = weight or WeightSpec()
    n = data.n
    if n < 2:
        raise ConfigurationError(f"U_n needs n >= 2, got n={n}")
    theta = fit(model, data, fit_options).theta_hat
    e = residual_vector(model, theta, data)
    W = weight_matrix(weight, data.predictors, data.predictors, bandwidth(weight.c, n))
    off_diagonal = float(e @ W @ e) - float(np.sum(e * e * np.diag(W)))
    return off_diagonal / math.sqrt(n * (n - 1))
