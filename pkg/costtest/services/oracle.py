"""Loop-based reference implementation of the studentized statistic.

Every quantity is rebuilt row by row with scalar arithmetic: residuals through
eval_mean, weights through math, gradients through eval_gradient. Only the
parameter fits and the ridge-regularized Gram solve are shared with the
vectorized path. Quadratic in n with pure-Python inner loops, so guarded by
settings.BRUTE_FORCE_MAX_N.
"""

from __future__ import annotations

import math

import numpy as np

from costtest.config import settings
from costtest.errors import ConfigurationError, DimensionError
from costtest.schemas.options import FitOptions, SplitOptions, WeightSpec
from costtest.services.models import Dataset, ParametricModel, eval_gradient, eval_mean
from costtest.services.nls import fit
from costtest.services.statistic import TestResult, assemble_result, solve_gram, split_sample
from costtest.services.weights import BANDWIDTH_EXPONENT

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _phi(u: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * u * u)


def _scalar_weight(spec: WeightSpec, xi, xj, h: float) -> float:
    q = len(xi)
    squared = 0.0
    for k in range(q):
        d = float(xi[k]) - float(xj[k])
        squared += d * d

    kernel = 0.0
    if spec.kind in ("kernel_sum", "hybrid"):
        for k in range(q):
            kernel += _phi((float(xi[k]) - float(xj[k])) / h) / h
        if spec.normalized:
            kernel /= q

    if spec.kind == "inverse_sqrt":
        value = 1.0 / math.sqrt(squared + 1.0)
    elif spec.kind == "gaussian":
        value = math.exp(-0.5 * squared)
    elif spec.kind == "kernel_sum":
        value = kernel
    else:
        value = 0.5 * (1.0 / math.sqrt(squared + 1.0) + kernel)
    return value * spec.scale


def brute_force_statistic(
    model: ParametricModel,
    data: Dataset,
    weight: WeightSpec | None = None,
    split: SplitOptions | None = None,
    fit_options: FitOptions | None = None,
) -> TestResult:
    """Same contract as cost_statistic, evaluated with explicit loops."""
    weight = weight or WeightSpec()
    fit_options = fit_options or FitOptions()
    if data.n > settings.BRUTE_FORCE_MAX_N:
        raise ConfigurationError(
            f"brute_force_statistic is limited to n <= {settings.BRUTE_FORCE_MAX_N}, got n={data.n}"
        )
    if data.q != model.q:
        raise DimensionError(f"{model.label}: data has q={data.q}, model expects q={model.q}")

    part1, part2, plan = split_sample(data, split, p=model.p)
    fit1 = fit(model, part1, fit_options)
    fit2 = fit(model, part2, fit_options)
    fit_full = fit(model, data, fit_options)
    theta1, theta2, theta = fit1.theta_hat, fit2.theta_hat, fit_full.theta_hat

    n, n1, n2, p = data.n, plan.n1, plan.n2, model.p
    X1, y1 = part1.predictors, part1.responses
    X2, y2 = part2.predictors, part2.responses

    e1 = [float(y1[i]) - eval_mean(model, theta1, X1[i]) for i in range(n1)]
    e2 = [float(y2[j]) - eval_mean(model, theta2, X2[j]) for j in range(n2)]

    h = weight.c * n**BANDWIDTH_EXPONENT
    W = [[_scalar_weight(weight, X1[i], X2[j], h) for j in range(n2)] for i in range(n1)]

    numerator = 0.0
    for i in range(n1):
        for j in range(n2):
            numerator += e1[i] * e2[j] * W[i][j]
    numerator /= math.sqrt(n1 * n2)

    sigma = np.zeros((p, p))
    for x in data.predictors:
        g = eval_gradient(model, theta, x)
        for a in range(p):
            for b in range(p):
                sigma[a, b] += float(g[a]) * float(g[b])
    sigma /= n

    grads_1 = [eval_gradient(model, theta, X1[i]) for i in range(n1)]

    # Σ̂⁻¹ aⱼ for every j in N2.
    projections = []
    for j in range(n2):
        a_j = np.zeros(p)
        for i in range(n1):
            for k in range(p):
                a_j[k] += float(grads_1[i][k]) * W[i][j]
        a_j /= n1
        projections.append(solve_gram(sigma, a_j))

    products = []
    for i in range(n1):
        total = 0.0
        for j in range(n2):
            correction = 0.0
            for k in range(p):
                correction += float(grads_1[i][k]) * float(projections[j][k])
            total += e2[j] * (W[i][j] - correction)
        products.append(e1[i] * total / math.sqrt(n2))

    mean = sum(products) / n1
    variance = sum((z - mean) ** 2 for z in products) / n1
    conditional_sd = math.sqrt(variance)

    return assemble_result(numerator, conditional_sd, (fit1, fit2, fit_full), plan, h)
