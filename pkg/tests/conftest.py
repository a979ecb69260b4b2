"""Shared test fixtures for all test modules."""

from __future__ import annotations

import numpy as np
import pytest

from costtest.log import configure_logging
from costtest.schemas.options import ModelSpec
from costtest.services.models import Dataset, ParametricModel, make_model


@pytest.fixture(autouse=True, scope="session")
def quiet_logging():
    configure_logging(level="ERROR")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240101)


@pytest.fixture
def linear_model() -> ParametricModel:
    """Linear null model in two predictors."""
    return make_model(ModelSpec(family="linear", q=2))


@pytest.fixture
def linear_data(rng) -> Dataset:
    """60 rows from Y = X₁ − 0.5X₂ + 0.3ε."""
    X = rng.standard_normal((60, 2))
    y = X @ np.array([1.0, -0.5]) + 0.3 * rng.standard_normal(60)
    return Dataset(X, y)


@pytest.fixture
def quadratic_data(rng) -> Dataset:
    """200 rows with a strong quadratic departure from linearity."""
    X = rng.standard_normal((200, 2))
    y = X @ np.array([1.0, -0.5]) + 1.5 * X[:, 0] ** 2 + 0.3 * rng.standard_normal(200)
    return Dataset(X, y)


@pytest.fixture
def hand_checked_data() -> Dataset:
    """Six rows whose split fits and residuals are known in closed form.

    Ordered split at n2 = 2: N1 has x = (1, −1, 1, −1), y = (2, 0, 4, 2); N2 has
    x = (1, −1), y = (2, 0). Every fit of Y = θx gives θ̂ = 1, so the residuals
    are (1, 1, 3, 3) on N1 and (1, 1) on N2.
    """
    X = np.array([[1.0], [-1.0], [1.0], [-1.0], [1.0], [-1.0]])
    y = np.array([2.0, 0.0, 4.0, 2.0, 2.0, 0.0])
    return Dataset(X, y)
