"""Pydantic schemas for the report file written by `costtest test`."""

from __future__ import annotations

from datetime import datetime
from typing import ClassVar

from pydantic import BaseModel, ConfigDict, Field

from costtest.schemas.options import FitOptions, ModelSpec, Sided, SplitOptions, WeightSpec


class TestRunConfig(BaseModel):
    """Everything needed to re-run one test invocation."""

    __test__: ClassVar[bool] = False
    model_config = ConfigDict(frozen=True, extra="forbid")

    data: str
    response: str
    model: ModelSpec
    weight: WeightSpec = WeightSpec()
    split: SplitOptions = SplitOptions()
    fit: FitOptions = FitOptions()
    sided: Sided = "two"


class DataProvenance(BaseModel):
    path: str
    n: int
    q: int
    response: str
    predictors: list[str]


class TestSummary(BaseModel):
    __test__: ClassVar[bool] = False

    statistic: float
    numerator: float
    conditional_sd: float
    p_value: float
    p_value_two_sided: float
    p_value_one_sided: float
    n1: int
    n2: int
    split_mode: str
    split_seed: int
    bandwidth: float
    theta_hat_1: list[float]
    theta_hat_2: list[float]
    theta_hat_full: list[float]
    fit_converged: list[bool]


class RunRecord(BaseModel):
    created_at: datetime
    model_label: str
    config: TestRunConfig
    data: DataProvenance
    result: TestSummary
    residuals_csv: str
    residual_count: int


class RunReport(BaseModel):
    runs: list[RunRecord] = Field(default_factory=list)
