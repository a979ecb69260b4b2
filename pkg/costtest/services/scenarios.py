"""Data generators for the four simulation studies.

Each study pairs a data-generating regression with the null model it is
tested against. The departure magnitude a scales the misspecification term;
a = 0 generates data from the null model itself:

  H11  β₁ᵀX + a(β₂ᵀX)²                     vs linear
  H12  X₁ + cos(2X₂) + a·exp(3X₂)           vs single_index_cosine
  H21  β₀ᵀX + a·exp(β₀ᵀX)                   vs linear
  H22  β₁ᵀX + exp(β₂ᵀX) + a·exp(−β₀ᵀX)      vs linear_plus_exp_index
  H31  X₁ + cos(2X₂) + a·Σ exp(3Xᵢ)         vs single_index_cosine
  H32  Σ sin(β₀ᵢXᵢ) + a·Σ exp(3Xᵢ)          vs sine_coordinates
  H33  Σ XᵢX_{i+1} + a·cos(β₀ᵀX)            vs pairwise_interaction
  H34  Σ XᵢX_{i+1}sin(πX_{i+2}) + a(β₀ᵀX)³  vs triple_interaction_sine
  H41  Σ sin(β₁ᵢ Π_{Bᵢ} X) + a(β₁ᵀX)²       vs block_product_sine
  H42  Σ sin(β₁ᵢ Σ_{Bᵢ'} X + Σ_{Bᵢ''} X) + a(β₁ᵀX)²  vs block_sum_sine

Directions: β₀ = 1/√q everywhere; β₁ (β₂) puts 1/√q₁ on the first (last)
q₁ = ⌊q/2⌋ coordinates. For H41/H42, β₁ is a q-vector with 1/√p₁ on the
first p₁ = ⌊p/2⌋ coordinates and the true block parameter is its first p
entries.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from costtest.errors import ConfigurationError, NumericError
from costtest.schemas.options import FitOptions
from costtest.schemas.study import SigmaKind, StudyConfig
from costtest.services.models import Dataset, ParametricModel, make_model

AR_COEFFICIENT = 0.5

# The zero start is a stationary point of cos(θ₂x₂) in θ₂.
_COSINE_FIT = FitOptions(n_starts=8, start_scale=3.0)
# Block products of many coordinates make the sine fits highly oscillatory in θ.
_BLOCK_FIT = FitOptions(n_starts=5, start_scale=0.5, max_iterations=1000, loss_tolerance=1e-8)
DEFAULT_FIT: dict[str, FitOptions] = {
    "H12": _COSINE_FIT,
    "H31": _COSINE_FIT,
    "H41": _BLOCK_FIT,
    "H42": _BLOCK_FIT,
}


def default_fit_options(cfg: StudyConfig) -> FitOptions:
    if cfg.fit is not None:
        return cfg.fit
    return DEFAULT_FIT.get(cfg.study, FitOptions())


def covariance_matrix(kind: SigmaKind, q: int) -> NDArray[np.float64]:
    """Identity, or the AR(0.5) matrix with entries 0.5^|i−j|."""
    if q < 1:
        raise ConfigurationError(f"covariance dimension must be positive, got q={q}")
    if kind == "identity":
        return np.eye(q)
    if kind == "ar_half":
        return scipy.linalg.toeplitz(AR_COEFFICIENT ** np.arange(q))
    raise ConfigurationError(f"unknown covariance kind {kind!r}")


def sample_predictors(
    n: int, sigma: NDArray[np.float64], rng: np.random.Generator
) -> NDArray[np.float64]:
    """n rows i.i.d. N(0, Σ): standard normals times the lower Cholesky factor."""
    try:
        L = scipy.linalg.cholesky(sigma, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"covariance is not positive definite: {exc}") from exc
    Z = rng.standard_normal((n, sigma.shape[0]))
    return Z @ L.T


def index_directions(q: int) -> tuple[NDArray[np.float64], ...]:
    """(β₀, β₁, β₂) for Studies 1 to 3."""
    beta0 = np.full(q, 1.0 / math.sqrt(q))
    q1 = q // 2
    beta1 = np.zeros(q)
    beta2 = np.zeros(q)
    if q1 > 0:
        beta1[:q1] = 1.0 / math.sqrt(q1)
        beta2[q - q1 :] = 1.0 / math.sqrt(q1)
    return beta0, beta1, beta2


def block_direction(q: int, p: int) -> NDArray[np.float64]:
    """β₁ for Study 4: 1/√p₁ on the first p₁ = ⌊p/2⌋ coordinates of a q-vector."""
    p1 = p // 2
    if p1 < 1:
        raise ConfigurationError(f"block studies need p >= 2, got p={p}")
    beta1 = np.zeros(q)
    beta1[:p1] = 1.0 / math.sqrt(p1)
    return beta1


def true_parameter(cfg: StudyConfig) -> NDArray[np.float64]:
    """θ₀ at which the null model reproduces the study's null regression."""
    q = cfg.q
    beta0, beta1, beta2 = index_directions(q)
    match cfg.study:
        case "H11":
            return beta1
        case "H21":
            return beta0
        case "H12" | "H31":
            return np.array([1.0, 2.0])
        case "H22":
            return np.concatenate([beta1, beta2])
        case "H32":
            return beta0
        case "H33":
            return np.ones(q - 1)
        case "H34":
            return np.ones(q - 2)
        case "H41" | "H42":
            return block_direction(q, cfg.resolved_p)[: cfg.resolved_p]
    raise ConfigurationError(f"unknown study {cfg.study!r}")


def departure(cfg: StudyConfig, X: NDArray[np.float64]) -> NDArray[np.float64]:
    """The misspecification term l(X), before scaling by a."""
    beta0, beta1, beta2 = index_directions(cfg.q)
    match cfg.study:
        case "H11":
            return (X @ beta2) ** 2
        case "H12":
            return np.exp(3.0 * X[:, 1])
        case "H21":
            return np.exp(X @ beta0)
        case "H22":
            return np.exp(-(X @ beta0))
        case "H31" | "H32":
            return np.exp(3.0 * X).sum(axis=1)
        case "H33":
            return np.cos(X @ beta0)
        case "H34":
            return (X @ beta0) ** 3
        case "H41" | "H42":
            return (X @ block_direction(cfg.q, cfg.resolved_p)) ** 2
    raise ConfigurationError(f"unknown study {cfg.study!r}")


def generate_scenario(
    cfg: StudyConfig, rng: np.random.Generator
) -> tuple[Dataset, ParametricModel]:
    """Draw one dataset from the study and return it with its null model.

    Draw order: predictors, then noise. Noise is N(0,1) scaled by
    cfg.noise_scale (0 gives noise-free responses).
    """
    model = make_model(cfg.null_model_spec())
    X = sample_predictors(cfg.n, covariance_matrix(cfg.sigma_kind, cfg.q), rng)
    eps = rng.standard_normal(cfg.n)

    y = model.mean(true_parameter(cfg), X)
    if cfg.a != 0.0:
        y = y + cfg.a * departure(cfg, X)
    if cfg.noise_scale != 0.0:
        y = y + cfg.noise_scale * eps
    return Dataset(X, y), model
