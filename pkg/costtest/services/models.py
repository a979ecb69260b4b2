"""Parametric regression models and the builtin null families.

A ParametricModel carries a batched mean function g(θ, X) and its Jacobian
∂g/∂θ, both evaluated over all rows of an n×q predictor matrix at once.
Single-point evaluation (eval_mean, eval_gradient) is the one-row case.

Builtin families (p is the parameter dimension):
  linear                      θᵀx                                  p = q
  single_index_cosine         θ₁x₁ + cos(θ₂x₂)                     p = 2
  linear_plus_exp_index       θ₍₁₎ᵀx + exp(θ₍₂₎ᵀx)                 p = 2q
  sine_coordinates            Σ sin(θᵢxᵢ)                          p = q
  pairwise_interaction        Σ θᵢxᵢx_{i+1}                        p = q − 1
  triple_interaction_sine     Σ θᵢxᵢx_{i+1}sin(πx_{i+2})           p = q − 2
  block_product_sine          Σ sin(θᵢ Π_{j∈Bᵢ} xⱼ)                p blocks
  block_sum_sine              Σ sin(θᵢ Σ_{j∈Bᵢ'} xⱼ + Σ_{j∈Bᵢ''} xⱼ) p blocks
  fixed_direction_polynomial  θ₁ + θ₂(βᵀx) + θ₃(βᵀx)²              p = 3

Blocks Bᵢ are contiguous ranges of width r = ⌈q/p⌉, the last truncated at q.
For block_sum_sine, Bᵢ' is the first ⌊r/2⌋ coordinates of Bᵢ and Bᵢ'' the rest.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from costtest.errors import ConfigurationError, DataError, DimensionError
from costtest.schemas.options import ModelSpec

MeanFn = Callable[[NDArray[np.float64], NDArray[np.float64]], NDArray[np.float64]]


@dataclass(frozen=True)
class Dataset:
    """n×q predictors and n responses."""

    predictors: NDArray[np.float64]
    responses: NDArray[np.float64]

    def __post_init__(self) -> None:
        X = np.array(self.predictors, dtype=np.float64)
        y = np.array(self.responses, dtype=np.float64)
        if X.ndim != 2:
            raise DataError(f"predictors must be a 2-d matrix, got shape {X.shape}")
        if y.ndim != 1:
            raise DataError(f"responses must be a vector, got shape {y.shape}")
        if X.shape[0] != y.shape[0]:
            raise DataError(f"{X.shape[0]} predictor rows but {y.shape[0]} responses")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DataError("dataset contains NaN or infinite entries")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "predictors", X)
        object.__setattr__(self, "responses", y)

    @property
    def n(self) -> int:
        return self.predictors.shape[0]

    @property
    def q(self) -> int:
        return self.predictors.shape[1]

    def subset(self, indices: NDArray[np.intp]) -> Dataset:
        return Dataset(self.predictors[indices], self.responses[indices])


@dataclass(frozen=True)
class ParametricModel:
    """Mean function g(θ, X) and its Jacobian, batched over rows of X."""

    p: int
    q: int
    mean_fn: MeanFn
    jacobian_fn: MeanFn
    label: str

    def _check(self, theta: NDArray[np.float64], X: NDArray[np.float64]) -> None:
        if theta.shape != (self.p,):
            raise DimensionError(f"{self.label}: θ has shape {theta.shape}, expected ({self.p},)")
        if X.ndim != 2 or X.shape[1] != self.q:
            raise DimensionError(
                f"{self.label}: predictors have shape {X.shape}, expected (n, {self.q})"
            )

    def mean(self, theta: NDArray[np.float64], X: NDArray[np.float64]) -> NDArray[np.float64]:
        theta = np.asarray(theta, dtype=np.float64)
        X = np.asarray(X, dtype=np.float64)
        self._check(theta, X)
        return self.mean_fn(theta, X)

    def jacobian(self, theta: NDArray[np.float64], X: NDArray[np.float64]) -> NDArray[np.float64]:
        """n×p matrix whose row i is ġ(θ, Xᵢ)."""
        theta = np.asarray(theta, dtype=np.float64)
        X = np.asarray(X, dtype=np.float64)
        self._check(theta, X)
        return self.jacobian_fn(theta, X)


def eval_mean(model: ParametricModel, theta, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.q,):
        raise DimensionError(f"{model.label}: x has shape {x.shape}, expected ({model.q},)")
    return float(model.mean(theta, x[None, :])[0])


def eval_gradient(model: ParametricModel, theta, x) -> NDArray[np.float64]:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.q,):
        raise DimensionError(f"{model.label}: x has shape {x.shape}, expected ({model.q},)")
    return model.jacobian(theta, x[None, :])[0]


def residual_vector(model: ParametricModel, theta, data: Dataset) -> NDArray[np.float64]:
    """Yᵢ − g(θ, Xᵢ) for every row."""
    if data.q != model.q:
        raise DimensionError(f"{model.label}: data has q={data.q}, model expects q={model.q}")
    return data.responses - model.mean(theta, data.predictors)


# --- Block partition ---


def block_ranges(q: int, p: int) -> list[tuple[int, int]]:
    """Half-open 0-based coordinate ranges of the p blocks of width ⌈q/p⌉.

    Trailing blocks can be empty when p does not divide q evenly enough;
    every coordinate still belongs to exactly one block.
    """
    r = math.ceil(q / p)
    return [(min(i * r, q), min((i + 1) * r, q)) for i in range(p)]


def _block_products(X: NDArray[np.float64], blocks: list[tuple[int, int]]) -> NDArray[np.float64]:
    # Empty product is 1.
    return np.column_stack([np.prod(X[:, lo:hi], axis=1) for lo, hi in blocks])


def _block_sums(
    X: NDArray[np.float64], blocks: list[tuple[int, int]], r1: int
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    heads = []
    tails = []
    for lo, hi in blocks:
        mid = min(lo + r1, hi)
        heads.append(X[:, lo:mid].sum(axis=1))
        tails.append(X[:, mid:hi].sum(axis=1))
    return np.column_stack(heads), np.column_stack(tails)


# --- Family constructors ---


def _linear(q: int) -> ParametricModel:
    return ParametricModel(
        p=q,
        q=q,
        mean_fn=lambda t, X: X @ t,
        jacobian_fn=lambda t, X: X.copy(),
        label=f"linear(q={q})",
    )


def _single_index_cosine(q: int) -> ParametricModel:
    if q < 2:
        raise ConfigurationError("single_index_cosine needs q >= 2")

    def mean(t, X):
        return t[0] * X[:, 0] + np.cos(t[1] * X[:, 1])

    def jac(t, X):
        return np.column_stack([X[:, 0], -X[:, 1] * np.sin(t[1] * X[:, 1])])

    return ParametricModel(
        p=2, q=q, mean_fn=mean, jacobian_fn=jac, label=f"single_index_cosine(q={q})"
    )


def _linear_plus_exp_index(q: int) -> ParametricModel:
    def mean(t, X):
        return X @ t[:q] + np.exp(X @ t[q:])

    def jac(t, X):
        return np.hstack([X, X * np.exp(X @ t[q:])[:, None]])

    return ParametricModel(
        p=2 * q, q=q, mean_fn=mean, jacobian_fn=jac, label=f"linear_plus_exp_index(q={q})"
    )


def _sine_coordinates(q: int) -> ParametricModel:
    return ParametricModel(
        p=q,
        q=q,
        mean_fn=lambda t, X: np.sin(X * t).sum(axis=1),
        jacobian_fn=lambda t, X: X * np.cos(X * t),
        label=f"sine_coordinates(q={q})",
    )


def _pairwise_interaction(q: int) -> ParametricModel:
    if q < 2:
        raise ConfigurationError("pairwise_interaction needs q >= 2")

    def features(X):
        return X[:, :-1] * X[:, 1:]

    return ParametricModel(
        p=q - 1,
        q=q,
        mean_fn=lambda t, X: features(X) @ t,
        jacobian_fn=lambda t, X: features(X),
        label=f"pairwise_interaction(q={q})",
    )


def _triple_interaction_sine(q: int) -> ParametricModel:
    if q < 3:
        raise ConfigurationError("triple_interaction_sine needs q >= 3")

    def features(X):
        return X[:, :-2] * X[:, 1:-1] * np.sin(np.pi * X[:, 2:])

    return ParametricModel(
        p=q - 2,
        q=q,
        mean_fn=lambda t, X: features(X) @ t,
        jacobian_fn=lambda t, X: features(X),
        label=f"triple_interaction_sine(q={q})",
    )


def _block_product_sine(q: int, p: int) -> ParametricModel:
    blocks = block_ranges(q, p)

    def mean(t, X):
        return np.sin(_block_products(X, blocks) * t).sum(axis=1)

    def jac(t, X):
        P = _block_products(X, blocks)
        return P * np.cos(P * t)

    return ParametricModel(
        p=p, q=q, mean_fn=mean, jacobian_fn=jac, label=f"block_product_sine(q={q}, p={p})"
    )


def _block_sum_sine(q: int, p: int) -> ParametricModel:
    blocks = block_ranges(q, p)
    r1 = math.ceil(q / p) // 2

    def mean(t, X):
        S1, S2 = _block_sums(X, blocks, r1)
        return np.sin(S1 * t + S2).sum(axis=1)

    def jac(t, X):
        S1, S2 = _block_sums(X, blocks, r1)
        return S1 * np.cos(S1 * t + S2)

    return ParametricModel(
        p=p, q=q, mean_fn=mean, jacobian_fn=jac, label=f"block_sum_sine(q={q}, p={p})"
    )


def _fixed_direction_polynomial(q: int, beta: tuple[float, ...] | None) -> ParametricModel:
    if beta is None:
        raise ConfigurationError("fixed_direction_polynomial needs a direction beta")
    direction = np.asarray(beta, dtype=np.float64)
    if direction.shape != (q,):
        raise ConfigurationError(
            f"fixed_direction_polynomial: beta has length {direction.size}, expected q={q}"
        )
    if not np.all(np.isfinite(direction)):
        raise ConfigurationError("fixed_direction_polynomial: beta must be finite")

    def features(X):
        index = X @ direction
        return np.column_stack([np.ones_like(index), index, index**2])

    return ParametricModel(
        p=3,
        q=q,
        mean_fn=lambda t, X: features(X) @ t,
        jacobian_fn=lambda t, X: features(X),
        label=f"fixed_direction_polynomial(q={q})",
    )


def implied_p(spec: ModelSpec) -> int:
    """Parameter dimension implied by family and q."""
    q = spec.q
    match spec.family:
        case "linear" | "sine_coordinates":
            return q
        case "single_index_cosine":
            return 2
        case "linear_plus_exp_index":
            return 2 * q
        case "pairwise_interaction":
            return q - 1
        case "triple_interaction_sine":
            return q - 2
        case "fixed_direction_polynomial":
            return 3
        case "block_product_sine" | "block_sum_sine":
            if spec.p is None:
                raise ConfigurationError(f"{spec.family} needs p (number of blocks)")
            return spec.p
    raise ConfigurationError(f"unknown model family {spec.family!r}")


def make_model(spec: ModelSpec) -> ParametricModel:
    """Instantiate the builtin family named by spec."""
    p = implied_p(spec)
    if p < 1:
        raise ConfigurationError(f"{spec.family} with q={spec.q} leaves no parameters")
    if spec.p is not None and spec.p != p:
        raise ConfigurationError(f"{spec.family} with q={spec.q} has p={p}, got p={spec.p}")
    if spec.beta is not None and spec.family != "fixed_direction_polynomial":
        raise ConfigurationError(f"{spec.family} takes no fixed direction beta")

    q = spec.q
    match spec.family:
        case "linear":
            return _linear(q)
        case "single_index_cosine":
            return _single_index_cosine(q)
        case "linear_plus_exp_index":
            return _linear_plus_exp_index(q)
        case "sine_coordinates":
            return _sine_coordinates(q)
        case "pairwise_interaction":
            return _pairwise_interaction(q)
        case "triple_interaction_sine":
            return _triple_interaction_sine(q)
        case "block_product_sine":
            if p > q:
                raise ConfigurationError(f"block_product_sine needs q >= p, got q={q}, p={p}")
            return _block_product_sine(q, p)
        case "block_sum_sine":
            if p > q:
                raise ConfigurationError(f"block_sum_sine needs q >= p, got q={q}, p={p}")
            return _block_sum_sine(q, p)
        case "fixed_direction_polynomial":
            return _fixed_direction_polynomial(q, spec.beta)
    raise ConfigurationError(f"unknown model family {spec.family!r}")
