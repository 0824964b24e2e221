from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from phfit.utils.documents import Matrix, Vector

VALIDATION_TOLERANCE = 1e-12

ViolationKind = Literal[
    "alpha-negative",
    "alpha-sum",
    "off-diagonal-negative",
    "diagonal-nonnegative",
    "row-sum-positive",
]


class MarkovianPH(BaseModel):
    """
    Phase-type distribution in Markovian form: initial vector alpha and
    subgenerator T. Only shapes are enforced here; use validate() for the
    probabilistic constraints.
    """

    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    n: int = Field(..., ge=1, description="Number of transient phases")
    alpha: Vector = Field(..., description="Initial probability vector")
    T: Matrix = Field(..., description="Subgenerator (transition rates, 1/time)")

    @model_validator(mode="before")
    @classmethod
    def fill_order(cls, data):
        if isinstance(data, dict) and "n" not in data and "alpha" in data:
            data = {**data, "n": len(np.atleast_1d(data["alpha"]))}
        return data

    @model_validator(mode="after")
    def check_shapes(self):
        if self.alpha.shape != (self.n,):
            raise ValueError(f"alpha has shape {self.alpha.shape}, expected ({self.n},)")
        if self.T.shape != (self.n, self.n):
            raise ValueError(f"T has shape {self.T.shape}, expected ({self.n}, {self.n})")
        return self

    @property
    def exit_vector(self) -> np.ndarray:
        """Absorption rates t = -T 1."""
        return -self.T.sum(axis=1)


class Violation(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: ViolationKind
    index: tuple[int, ...] = Field(default=(), description="Offending entry; empty for sums")
    magnitude: float = Field(..., description="Amount by which the constraint is exceeded")

    def __str__(self):
        where = f" at {self.index}" if self.index else ""
        return f"{self.kind}{where}: excess {self.magnitude:.3g}"


class MomentStatistics(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    scv: float
    skewness: float
    kurtosis: float
