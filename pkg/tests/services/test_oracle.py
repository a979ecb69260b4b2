"""Tests for the loop-based reference statistic."""

import math

import numpy as np
import pytest

from costtest.config import settings
from costtest.errors import ConfigurationError, DegenerateVarianceError
from costtest.schemas.options import ModelSpec, SplitOptions, WeightSpec
from costtest.services.models import Dataset, make_model
from costtest.services.oracle import brute_force_statistic
from costtest.services.statistic import cost_statistic

WEIGHT_KINDS = ["inverse_sqrt", "gaussian", "kernel_sum", "hybrid"]


def _random_instance(seed: int):
    """A small dataset with a mildly misspecified response for one of several families."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(20, 61))
    choice = seed % 5
    if choice == 0:
        spec = ModelSpec(family="linear", q=int(rng.integers(1, 4)))
    elif choice == 1:
        spec = ModelSpec(family="sine_coordinates", q=2)
    elif choice == 2:
        spec = ModelSpec(family="pairwise_interaction", q=3)
    elif choice == 3:
        spec = ModelSpec(family="fixed_direction_polynomial", q=2, beta=(0.6, 0.8))
    else:
        spec = ModelSpec(family="block_product_sine", q=4, p=2)
    model = make_model(spec)

    X = rng.standard_normal((n, spec.q))
    theta = rng.uniform(0.5, 1.0, size=model.p)
    y = model.mean(theta, X) + 0.3 * X[:, 0] ** 2 + 0.5 * rng.standard_normal(n)
    weight = WeightSpec(kind=WEIGHT_KINDS[seed % 4], c=float(rng.uniform(0.5, 1.5)))
    mode = "as_ordered" if seed % 3 == 0 else "seeded_shuffle"
    split = SplitOptions(mode=mode, seed=seed, fraction_n2=float(rng.choice([0.25, 0.4])))
    return model, Dataset(X, y), weight, split


class TestOracleEquivalence:
    @pytest.mark.parametrize("seed", range(50))
    def test_matches_vectorized(self, seed):
        model, data, weight, split = _random_instance(seed)
        fast = cost_statistic(model, data, weight, split)
        slow = brute_force_statistic(model, data, weight, split)
        assert slow.statistic == pytest.approx(fast.statistic, rel=1e-10, abs=1e-12)
        assert slow.numerator == pytest.approx(fast.numerator, rel=1e-10, abs=1e-12)
        assert slow.conditional_sd == pytest.approx(fast.conditional_sd, rel=1e-10)
        np.testing.assert_array_equal(slow.split.indices_1, fast.split.indices_1)


class TestOracleByHand:
    def test_closed_form_instance(self, hand_checked_data):
        model = make_model(ModelSpec(family="linear", q=1))
        result = brute_force_statistic(
            model, hand_checked_data, WeightSpec(kind="gaussian"), SplitOptions(mode="as_ordered")
        )
        g = math.exp(-2.0)
        assert result.numerator == pytest.approx(2 * math.sqrt(2) * (1 + g), rel=1e-8)
        assert result.statistic == pytest.approx(4.0, rel=1e-8)
        assert result.split.n1 == 4

    def test_identical_products_degenerate(self):
        # n1 = n2 = 2 with mirrored rows: both residual products coincide.
        model = make_model(ModelSpec(family="linear", q=1))
        data = Dataset(np.array([[1.0], [-1.0], [1.0], [-1.0]]), np.array([2.0, 0.0, 2.0, 0.0]))
        split = SplitOptions(mode="as_ordered", fraction_n2=0.5)
        with pytest.raises(DegenerateVarianceError):
            brute_force_statistic(model, data, WeightSpec(kind="gaussian"), split)

    def test_size_guard(self, monkeypatch, linear_model, linear_data):
        monkeypatch.setattr(settings, "BRUTE_FORCE_MAX_N", 10)
        with pytest.raises(ConfigurationError):
            brute_force_statistic(linear_model, linear_data)
