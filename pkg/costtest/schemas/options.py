"""Pydantic schemas for the option blocks shared by the CLI, config files and the harness."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

ModelFamily = Literal[
    "linear",
    "single_index_cosine",
    "linear_plus_exp_index",
    "sine_coordinates",
    "pairwise_interaction",
    "triple_interaction_sine",
    "block_product_sine",
    "block_sum_sine",
    "fixed_direction_polynomial",
]
WeightKind = Literal["inverse_sqrt", "gaussian", "kernel_sum", "hybrid"]
SplitMode = Literal["seeded_shuffle", "as_ordered"]
Sided = Literal["one", "two"]


class ModelSpec(BaseModel):
    """Identifies a builtin null model.

    `p` is derived from the family for every family except the two block
    families, where it sets the number of blocks. `beta` is the fixed direction
    of fixed_direction_polynomial.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: ModelFamily
    q: int = Field(ge=1)
    p: int | None = Field(default=None, ge=1)
    beta: tuple[float, ...] | None = None


class WeightSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: WeightKind = "hybrid"
    c: float = Field(default=1.0, gt=0, description="Bandwidth constant in h = c * n^-0.2")
    normalize_by_q: bool | None = Field(
        default=None,
        description="Divide the coordinate kernel sum by q; None means on for kernel_sum/hybrid",
    )
    scale: float = Field(default=1.0, gt=0, description="Constant multiplier of every weight")

    @property
    def normalized(self) -> bool:
        if self.normalize_by_q is None:
            return self.kind in ("kernel_sum", "hybrid")
        return self.normalize_by_q


class FitOptions(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    max_iterations: int = Field(default=200, ge=1)
    loss_tolerance: float = Field(default=1e-10, gt=0)
    step_tolerance: float = Field(default=1e-10, gt=0)
    initial_point: tuple[float, ...] | None = None
    damping_initial: float = Field(default=1e-3, gt=0)
    n_starts: int = Field(default=1, ge=1, description="Total starts; extras are random")
    start_scale: float = Field(default=1.0, gt=0)
    start_seed: int = Field(default=0, ge=0)


class SplitOptions(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    fraction_n2: float = Field(default=0.25, gt=0, lt=1)
    mode: SplitMode = "seeded_shuffle"
    seed: int = Field(default=0, ge=0, lt=2**64)
