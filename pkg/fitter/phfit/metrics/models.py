import math

from pydantic import BaseModel, ConfigDict, Field

from phfit.reparam.models import StructureChoices
from phfit.utils.documents import Vector

# CDF level whose quantile bounds the KL integration range
DEFAULT_KL_LEVEL = 1.0 - 1e-8


class EvalRecord(BaseModel):
    """Outcome of fitting one test instance in one grid cell."""

    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    instance_id: str
    family: str = ""
    structure: str = ""
    n: int = 0
    l: int = 0  # noqa: E741
    target: Vector
    fitted: Vector | None = None
    per_moment_mape: Vector | None = None
    max_mape: float = Field(default=math.inf, ge=0)
    wall_time: float = 0.0
    error: str | None = Field(default=None, description="Failure message when the fit did not run")


class QuadratureSpec(BaseModel):
    """Composite Simpson grid used for numeric KL divergence."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    panels: int = Field(default=10000, ge=2, description="Number of panels, rounded up to even")
    x_max: float | None = Field(default=None, gt=0, description="Upper limit; chosen when omitted")
    level: float = Field(default=DEFAULT_KL_LEVEL, gt=0, lt=1, description="CDF level for x_max")
    floor: float = Field(default=1e-300, gt=0, description="Density floor inside the log")


class GridCell(BaseModel):
    """One (structure, order, moment count) combination of an evaluation run."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    structure: StructureChoices
    n: int | None = Field(default=None, ge=1)
    blocks: tuple[int, ...] | None = None
    l: int = Field(..., ge=1, description="Number of leading moments fitted")  # noqa: E741


class EvalGrid(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    cells: list[GridCell] = Field(..., min_length=1)
