"""Tests for the simulation data generators and study configs."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from costtest.schemas.study import StudyConfig, StudyGrid
from costtest.services.models import implied_p
from costtest.services.scenarios import (
    block_direction,
    covariance_matrix,
    default_fit_options,
    departure,
    generate_scenario,
    index_directions,
    sample_predictors,
    true_parameter,
)


class TestCovariance:
    def test_identity(self):
        np.testing.assert_array_equal(covariance_matrix("identity", 3), np.eye(3))

    def test_ar_half_entries(self):
        S = covariance_matrix("ar_half", 4)
        assert S[0, 2] == 0.25
        assert S[3, 0] == 0.125
        np.testing.assert_array_equal(S, S.T)
        np.testing.assert_array_equal(np.diag(S), np.ones(4))

    def test_ar_half_positive_definite(self):
        L = np.linalg.cholesky(covariance_matrix("ar_half", 20))
        assert np.all(np.diag(L) > 0)


class TestSamplePredictors:
    def test_deterministic(self):
        S = covariance_matrix("ar_half", 3)
        first = sample_predictors(50, S, np.random.default_rng(1))
        second = sample_predictors(50, S, np.random.default_rng(1))
        np.testing.assert_array_equal(first, second)

    def test_moments(self):
        S = covariance_matrix("ar_half", 3)
        X = sample_predictors(200_000, S, np.random.default_rng(2))
        np.testing.assert_allclose(np.cov(X, rowvar=False), S, atol=0.02)
        np.testing.assert_allclose(X.mean(axis=0), 0.0, atol=0.01)


class TestDirections:
    def test_index_directions_q5(self):
        beta0, beta1, beta2 = index_directions(5)
        np.testing.assert_allclose(beta0, np.full(5, 1 / math.sqrt(5)))
        np.testing.assert_allclose(beta1, np.array([1, 1, 0, 0, 0]) / math.sqrt(2))
        np.testing.assert_allclose(beta2, np.array([0, 0, 0, 1, 1]) / math.sqrt(2))

    def test_block_direction(self):
        beta1 = block_direction(9, 5)
        np.testing.assert_allclose(beta1[:2], 1 / math.sqrt(2))
        assert np.all(beta1[2:] == 0)
        assert beta1.shape == (9,)


def _noise_free(**kwargs) -> StudyConfig:
    return StudyConfig(noise_scale=0.0, a=0.0, reps=1, **kwargs)


class TestGenerateScenario:
    def test_h11_null_is_linear_index(self):
        cfg = _noise_free(study="H11", n=30, q=5)
        data, model = generate_scenario(cfg, np.random.default_rng(0))
        _, beta1, _ = index_directions(5)
        np.testing.assert_allclose(data.responses, data.predictors @ beta1, rtol=1e-15)
        assert model.p == 5

    def test_h33_null_model_value(self):
        cfg = _noise_free(study="H33", n=10, q=3)
        _, model = generate_scenario(cfg, np.random.default_rng(0))
        value = model.mean(true_parameter(cfg), np.array([[1.0, 2.0, 3.0]]))[0]
        assert value == 8.0

    def test_h33_null_responses(self):
        cfg = _noise_free(study="H33", n=25, q=4)
        data, _ = generate_scenario(cfg, np.random.default_rng(3))
        X = data.predictors
        expected = X[:, 0] * X[:, 1] + X[:, 1] * X[:, 2] + X[:, 2] * X[:, 3]
        np.testing.assert_allclose(data.responses, expected, rtol=1e-12, atol=1e-12)

    def test_h41_block_products(self):
        cfg = _noise_free(study="H41", n=20, q=9, p=4)
        data, model = generate_scenario(cfg, np.random.default_rng(5))
        X = data.predictors
        beta1 = block_direction(9, 4)
        # Blocks of width 3: (0..2), (3..5), (6..8), and an empty fourth block.
        expected = (
            np.sin(beta1[0] * X[:, 0] * X[:, 1] * X[:, 2])
            + np.sin(beta1[1] * X[:, 3] * X[:, 4] * X[:, 5])
            + np.sin(beta1[2] * X[:, 6] * X[:, 7] * X[:, 8])
            + np.sin(beta1[3])
        )
        np.testing.assert_allclose(data.responses, expected, rtol=1e-12, atol=1e-12)
        assert model.p == 4

    def test_departure_added(self):
        cfg0 = _noise_free(study="H21", n=40, q=3)
        cfg1 = cfg0.model_copy(update={"a": 0.5})
        data0, _ = generate_scenario(cfg0, np.random.default_rng(9))
        data1, _ = generate_scenario(cfg1, np.random.default_rng(9))
        np.testing.assert_array_equal(data0.predictors, data1.predictors)
        np.testing.assert_allclose(
            data1.responses - data0.responses, 0.5 * departure(cfg1, data1.predictors), atol=1e-12
        )

    def test_noise_scale(self):
        cfg = StudyConfig(study="H11", n=40, q=2, noise_scale=2.0)
        quiet = cfg.model_copy(update={"noise_scale": 0.0})
        noisy, _ = generate_scenario(cfg, np.random.default_rng(4))
        clean, _ = generate_scenario(quiet, np.random.default_rng(4))
        residual = noisy.responses - clean.responses
        assert residual.std() == pytest.approx(2.0, rel=0.3)

    @pytest.mark.parametrize(
        "kwargs, family, p",
        [
            ({"study": "H11", "q": 4}, "linear", 4),
            ({"study": "H12", "q": 6}, "single_index_cosine", 2),
            ({"study": "H21", "q": 5}, "linear", 5),
            ({"study": "H22", "q": 3}, "linear_plus_exp_index", 6),
            ({"study": "H31", "q": 8}, "single_index_cosine", 2),
            ({"study": "H32", "q": 4}, "sine_coordinates", 4),
            ({"study": "H33", "q": 4}, "pairwise_interaction", 3),
            ({"study": "H34", "q": 5}, "triple_interaction_sine", 3),
            ({"study": "H41", "q": 16, "p": 4}, "block_product_sine", 4),
            ({"study": "H42", "q": 16, "p": 4}, "block_sum_sine", 4),
        ],
    )
    def test_null_model_per_study(self, kwargs, family, p):
        cfg = StudyConfig(n=30, a=0.3, **kwargs)
        data, model = generate_scenario(cfg, np.random.default_rng(1))
        assert cfg.null_family == family
        assert model.p == p == cfg.resolved_p
        assert data.n == 30
        assert true_parameter(cfg).shape == (p,)


class TestStudyConfig:
    def test_cosine_studies_use_multi_start(self):
        assert default_fit_options(StudyConfig(study="H12", n=50, q=2)).n_starts == 8
        assert default_fit_options(StudyConfig(study="H11", n=50, q=2)).n_starts == 1

    def test_block_studies_use_multi_start(self):
        opts = default_fit_options(StudyConfig(study="H41", n=50, q=9, p=3))
        assert opts.n_starts == 5
        assert opts.max_iterations == 1000
        assert default_fit_options(StudyConfig(study="H42", n=50, q=9, p=3)) == opts

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"study": "H12", "q": 6},
            {"study": "H22", "q": 3},
            {"study": "H33", "q": 4},
            {"study": "H34", "q": 5},
            {"study": "H42", "q": 16, "p": 4},
        ],
    )
    def test_resolved_p_matches_model_family(self, kwargs):
        cfg = StudyConfig(n=50, **kwargs)
        assert cfg.resolved_p == implied_p(cfg.null_model_spec())
        explicit = {**kwargs, "p": cfg.resolved_p}
        assert StudyConfig(n=50, **explicit).resolved_p == cfg.resolved_p

    def test_unknown_study(self):
        with pytest.raises(ValidationError, match="study"):
            StudyConfig(study="H99", n=50, q=2)

    def test_q_too_small(self):
        with pytest.raises(ValidationError):
            StudyConfig(study="H34", n=50, q=2)

    def test_block_study_needs_p(self):
        with pytest.raises(ValidationError):
            StudyConfig(study="H41", n=50, q=9)

    def test_inconsistent_p(self):
        with pytest.raises(ValidationError):
            StudyConfig(study="H11", n=50, q=3, p=2)

    def test_negative_departure(self):
        with pytest.raises(ValidationError):
            StudyConfig(study="H11", n=50, q=3, a=-0.1)

    def test_grid_expands_in_order(self):
        grid = StudyGrid(study="H11", n=50, q=2, a=[0.0, 0.25])
        assert [cfg.a for cfg in grid.expand()] == [0.0, 0.25]

    def test_grid_accepts_scalar(self):
        assert StudyGrid(study="H11", n=50, q=2, a=0.1).a == [0.1]
