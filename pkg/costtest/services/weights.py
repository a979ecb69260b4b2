"""Weight functions W_n(x, x′) linking residual pairs, and the bandwidth rule.

Kinds:
  inverse_sqrt  1/√(‖x − x′‖² + 1)
  gaussian      exp(−‖x − x′‖²/2)
  kernel_sum    Σₖ φ((xₖ − x′ₖ)/h)/h, divided by q when normalized
  hybrid        ½(inverse_sqrt + kernel_sum)

φ is the standard normal density. Every kind is multiplied by spec.scale.
The classical 1/h^q factor is left out: the studentized statistic is
invariant to a constant rescaling of the weights.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray
from scipy.stats import norm
from sklearn.metrics import pairwise_distances

from costtest.errors import ConfigurationError, DimensionError
from costtest.schemas.options import WeightSpec

BANDWIDTH_EXPONENT = -0.2

# Bound on the n1×n2×q difference tensor built per chunk of rows.
_CHUNK_ELEMENTS = 4_000_000


def bandwidth(c: float, n: int) -> float:
    """h = c·n^(−0.2)."""
    if c <= 0:
        raise ConfigurationError(f"bandwidth constant must be positive, got {c}")
    if n < 1:
        raise ConfigurationError(f"sample size must be positive, got {n}")
    return c * float(n) ** BANDWIDTH_EXPONENT


def _kernel_sum(
    A: NDArray[np.float64], B: NDArray[np.float64], h: float, normalize: bool
) -> NDArray[np.float64]:
    n1, q = A.shape
    rows_per_chunk = max(1, _CHUNK_ELEMENTS // max(1, B.shape[0] * q))
    out = np.empty((n1, B.shape[0]))
    for lo in range(0, n1, rows_per_chunk):
        hi = min(lo + rows_per_chunk, n1)
        diffs = (A[lo:hi, None, :] - B[None, :, :]) / h
        out[lo:hi] = norm.pdf(diffs).sum(axis=2) / h
    if normalize:
        out /= q
    return out


def weight_matrix(
    spec: WeightSpec, A: NDArray[np.float64], B: NDArray[np.float64], h: float
) -> NDArray[np.float64]:
    """Entry (i, j) is the weight between row i of A and row j of B."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise DimensionError(f"weight_matrix: A has {A.shape[1]} columns, B has {B.shape[1]}")
    if h <= 0:
        raise ConfigurationError(f"bandwidth must be positive, got {h}")

    match spec.kind:
        case "inverse_sqrt":
            W = 1.0 / np.sqrt(pairwise_distances(A, B, metric="sqeuclidean") + 1.0)
        case "gaussian":
            W = np.exp(-0.5 * pairwise_distances(A, B, metric="sqeuclidean"))
        case "kernel_sum":
            W = _kernel_sum(A, B, h, spec.normalized)
        case "hybrid":
            inverse_sqrt = 1.0 / np.sqrt(pairwise_distances(A, B, metric="sqeuclidean") + 1.0)
            W = 0.5 * (inverse_sqrt + _kernel_sum(A, B, h, spec.normalized))
        case _:
            raise ConfigurationError(f"unknown weight kind {spec.kind!r}")

    if spec.scale != 1.0:
        W = W * spec.scale
    return W


def eval_weight(spec: WeightSpec, xi, xj, h: float) -> float:
    """Weight between two predictor vectors of equal length."""
    xi = np.asarray(xi, dtype=np.float64)
    xj = np.asarray(xj, dtype=np.float64)
    if xi.ndim != 1 or xi.shape != xj.shape:
        raise DimensionError(f"eval_weight: shapes {xi.shape} and {xj.shape} differ")
    return float(weight_matrix(spec, xi[None, :], xj[None, :], h)[0, 0])
