"""Pydantic schemas for Monte Carlo study configurations and simulate files."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from costtest.schemas.options import (
    FitOptions,
    ModelFamily,
    ModelSpec,
    Sided,
    SplitOptions,
    WeightSpec,
)
from costtest.services.models import implied_p

StudyId = Literal["H11", "H12", "H21", "H22", "H31", "H32", "H33", "H34", "H41", "H42"]
SigmaKind = Literal["identity", "ar_half"]

# Null model fitted for each data-generating study.
NULL_FAMILY: dict[str, ModelFamily] = {
    "H11": "linear",
    "H12": "single_index_cosine",
    "H21": "linear",
    "H22": "linear_plus_exp_index",
    "H31": "single_index_cosine",
    "H32": "sine_coordinates",
    "H33": "pairwise_interaction",
    "H34": "triple_interaction_sine",
    "H41": "block_product_sine",
    "H42": "block_sum_sine",
}

MIN_Q: dict[str, int] = {"H11": 2, "H12": 2, "H31": 2, "H33": 2, "H34": 3}

BLOCK_STUDIES = ("H41", "H42")


class _StudyFields(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    study: StudyId
    n: int = Field(ge=4)
    q: int = Field(ge=1)
    p: int | None = Field(default=None, ge=1, description="Blocks for H41/H42; else derived")
    sigma_kind: SigmaKind = "identity"
    reps: int = Field(default=1000, ge=1)
    alpha: float = Field(default=0.05, gt=0, lt=1)
    seed: int = Field(default=0, ge=0, lt=2**63)
    split: SplitOptions = SplitOptions()
    weight: WeightSpec = WeightSpec()
    fit: FitOptions | None = Field(default=None, description="None selects the study default")
    sided: Sided = "two"
    noise_scale: float = Field(default=1.0, ge=0)

    @model_validator(mode="after")
    def _check_dimensions(self):
        if self.q < MIN_Q.get(self.study, 1):
            raise ValueError(f"{self.study} needs q >= {MIN_Q[self.study]}, got q={self.q}")
        if self.study in BLOCK_STUDIES:
            if self.p is None:
                raise ValueError(f"{self.study} needs p (number of blocks)")
            if self.p < 2:
                raise ValueError(f"{self.study} needs p >= 2, got p={self.p}")
            if self.p > self.q:
                raise ValueError(f"{self.study} needs q >= p, got q={self.q}, p={self.p}")
        elif self.p is not None and self.p != self.resolved_p:
            raise ValueError(
                f"{self.study} with q={self.q} fixes p={self.resolved_p}, got p={self.p}"
            )
        return self

    @property
    def null_family(self) -> ModelFamily:
        return NULL_FAMILY[self.study]

    def null_model_spec(self) -> ModelSpec:
        p = self.p if self.study in BLOCK_STUDIES else None
        return ModelSpec(family=self.null_family, q=self.q, p=p)

    @property
    def resolved_p(self) -> int:
        return implied_p(self.null_model_spec())


class StudyConfig(_StudyFields):
    """One Monte Carlo cell: a study, its dimensions and a single departure a."""

    a: float = Field(default=0.0, ge=0)


class StudyGrid(_StudyFields):
    """One entry of a simulate file; expands to one StudyConfig per value of a."""

    a: list[float] = Field(min_length=1)

    @field_validator("a", mode="before")
    @classmethod
    def _wrap_scalar(cls, value):
        if isinstance(value, int | float):
            return [value]
        return value

    @field_validator("a")
    @classmethod
    def _non_negative(cls, value: list[float]) -> list[float]:
        if any(v < 0 for v in value):
            raise ValueError("departure magnitudes a must be >= 0")
        return value

    def expand(self) -> list[StudyConfig]:
        fields = self.model_dump(exclude={"a"})
        return [StudyConfig(**fields, a=a) for a in self.a]
