from pydantic import BaseModel, ConfigDict, Field, field_validator

from phfit import settings
from phfit.core.models import MarkovianPH
from phfit.reparam.models import StructureChoices
from phfit.utils.documents import Vector

MAX_SIZE = 200


class SampleSpec(BaseModel):
    """What to sample: family, order range, instance count and seed."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    family: StructureChoices
    size_range: tuple[int, int] = Field(default=(1, MAX_SIZE), description="Inclusive order range")
    count: int = Field(default=500, ge=1)
    seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED)
    moment_count: int = Field(default=20, ge=4)

    @field_validator("size_range")
    @classmethod
    def range_ordered(cls, value):
        low, high = value
        if low < 1 or high < low:
            raise ValueError("size_range must satisfy 1 <= low <= high")
        return value


class SampledInstance(BaseModel):
    """One mean-normalized PH of a test set with its moment signature."""

    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    id: str
    family: StructureChoices
    n: int
    ph: MarkovianPH
    moments: Vector


class Manifest(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    spec: SampleSpec
    seed: int
    instances: list[str]
