from enum import StrEnum
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from phfit.utils.documents import Matrix, Vector

MIN_RATE_ROOT = 1e-30


class StructureChoices(StrEnum):
    GENERAL = "general"
    COXIAN = "coxian"
    HYPER_ERLANG = "hyper-erlang"


def _check_nonzero(values: np.ndarray, name: str) -> np.ndarray:
    small = np.flatnonzero(np.abs(values) < MIN_RATE_ROOT)
    if small.size:
        raise ValueError(f"{name}[{int(small[0])}] must be nonzero (|{name}| >= {MIN_RATE_ROOT})")
    return values


class GeneralParams(BaseModel):
    """Unconstrained parameters (a, gamma, Z) of a general PH of order n."""

    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    structure: Literal["general"] = "general"
    a: Vector = Field(..., description="Logits of the initial vector")
    gamma: Vector = Field(..., description="Square roots of the total outflow rates")
    Z: Matrix = Field(..., description="Row logits of the jump proportions")

    @field_validator("gamma")
    @classmethod
    def gamma_nonzero(cls, value):
        return _check_nonzero(value, "gamma")

    @model_validator(mode="after")
    def check_shapes(self):
        n = self.a.shape[0]
        if self.gamma.shape != (n,) or self.Z.shape != (n, n):
            raise ValueError("a, gamma and Z must have shapes (n,), (n,), (n, n)")
        return self

    @property
    def n(self) -> int:
        return self.a.shape[0]


class CoxianParams(BaseModel):
    """Unconstrained parameters (gamma, u) of a Coxian PH of order n."""

    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    structure: Literal["coxian"] = "coxian"
    gamma: Vector = Field(..., description="Square roots of the phase rates")
    u: Vector = Field(..., description="Logits of the continuation probabilities")

    @field_validator("gamma")
    @classmethod
    def gamma_nonzero(cls, value):
        return _check_nonzero(value, "gamma")

    @model_validator(mode="after")
    def check_shapes(self):
        if self.u.shape != (self.gamma.shape[0] - 1,):
            raise ValueError("u must have exactly n - 1 entries")
        return self

    @property
    def n(self) -> int:
        return self.gamma.shape[0]


class HyperErlangParams(BaseModel):
    """Unconstrained parameters (beta, delta) of a Hyper-Erlang with fixed block sizes."""

    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    structure: Literal["hyper-erlang"] = "hyper-erlang"
    beta: Vector = Field(..., description="Logits of the branch probabilities")
    delta: Vector = Field(..., description="Square roots of the branch rates")
    blocks: tuple[int, ...] = Field(..., min_length=1, description="Erlang block sizes d_j")

    @field_validator("delta")
    @classmethod
    def delta_nonzero(cls, value):
        return _check_nonzero(value, "delta")

    @field_validator("blocks")
    @classmethod
    def blocks_positive(cls, value):
        if any(size < 1 for size in value):
            raise ValueError("every block size must be at least 1")
        return value

    @model_validator(mode="after")
    def check_shapes(self):
        k = len(self.blocks)
        if self.beta.shape != (k,) or self.delta.shape != (k,):
            raise ValueError("beta and delta need one entry per block")
        return self

    @property
    def n(self) -> int:
        return sum(self.blocks)


FamilyParams = Annotated[
    Union[GeneralParams, CoxianParams, HyperErlangParams],
    Field(discriminator="structure"),
]


class ParamsDocument(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    params: FamilyParams
