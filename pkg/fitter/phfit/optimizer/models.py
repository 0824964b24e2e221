from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from phfit import settings
from phfit.core.models import MarkovianPH
from phfit.reparam.models import FamilyParams, StructureChoices
from phfit.utils.documents import Vector

# (epoch, keep-count) pairs for a population of this size
REFERENCE_POPULATION = 10000
REFERENCE_SCHEDULE = ((1, 10000), (500, 2000), (5000, 200), (15000, 20))


def scaled_schedule(population: int, max_epochs: int) -> list[tuple[int, int]]:
    """
    The reference culling schedule scaled to `population` candidates.

    Keep-counts are floored at 1, steps whose keep-count would not shrink the
    population are dropped, and steps after max_epochs are ignored.
    """
    schedule = []
    previous = None
    for step, keep in REFERENCE_SCHEDULE:
        if step > max_epochs:
            break
        count = max(1, min(population, keep * population // REFERENCE_POPULATION))
        if step == 1:
            count = population
        if previous is not None and count >= previous:
            continue
        schedule.append((step, count))
        previous = count
    return schedule


class FitConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    structure: StructureChoices = StructureChoices.HYPER_ERLANG
    n: int | None = Field(default=None, ge=1, description="Phase count")
    blocks: tuple[int, ...] | None = Field(default=None, description="Hyper-Erlang block sizes")
    population: int = Field(default=REFERENCE_POPULATION, ge=1, description="Initial population s")
    max_epochs: int = Field(default=125000, ge=1)
    epsilon: float = Field(default=1e-9, gt=0, description="Stop once the best loss is below")
    schedule: list[tuple[int, int]] | None = Field(
        default=None, description="(epoch, keep-count) pairs; scaled reference when omitted"
    )
    step_size: float = Field(default=0.01, gt=0)
    step_decay: float = Field(
        default=0.5, gt=0, le=1, description="Step-size factor on a loss plateau; 1 disables"
    )
    plateau_patience: int = Field(default=1000, ge=1, description="Epochs without 1% progress")
    min_step_size: float = Field(default=1e-9, gt=0)
    batch_size: int = Field(default=512, ge=1, description="Most candidates per objective call")
    seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED)
    workers: int = Field(default_factory=lambda: settings.WORKERS, ge=1)
    log_every: int = Field(default_factory=lambda: settings.LOG_EVERY, ge=1)

    @field_validator("blocks")
    @classmethod
    def blocks_positive(cls, value):
        if value is not None and (not value or any(size < 1 for size in value)):
            raise ValueError("blocks must be a nonempty list of sizes >= 1")
        return value

    @model_validator(mode="after")
    def check_structure(self):
        if self.structure == StructureChoices.HYPER_ERLANG:
            if self.blocks is None and self.n is None:
                raise ValueError("hyper-erlang needs blocks or n")
            if self.blocks is not None and self.n is not None and sum(self.blocks) != self.n:
                raise ValueError(f"blocks sum to {sum(self.blocks)}, expected n={self.n}")
        elif self.n is None:
            raise ValueError(f"{self.structure} needs n")
        return self

    @model_validator(mode="after")
    def check_schedule(self):
        if self.schedule is None:
            return self
        steps = [step for step, _ in self.schedule]
        keeps = [keep for _, keep in self.schedule]
        if steps != sorted(steps) or len(set(steps)) != len(steps):
            raise ValueError("schedule steps must be strictly increasing")
        if any(step < 1 for step in steps):
            raise ValueError("schedule steps start at epoch 1")
        if any(later >= earlier for earlier, later in zip(keeps, keeps[1:])):
            raise ValueError("schedule keep-counts must be strictly decreasing")
        if any(keep < 1 or keep > self.population for keep in keeps):
            raise ValueError(f"schedule keep-counts must lie in [1, {self.population}]")
        if steps and steps[-1] > self.max_epochs:
            raise ValueError("max_epochs must be at least the last schedule step")
        return self

    def resolved_schedule(self) -> list[tuple[int, int]]:
        if self.schedule is not None:
            return list(self.schedule)
        return scaled_schedule(self.population, self.max_epochs)


class EpochRecord(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    epoch: int
    best_loss: float
    live: int
    step_size: float


class FitResult(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    ph: MarkovianPH
    params: FamilyParams
    final_loss: float
    per_moment_mape: Vector
    epochs_run: int
    candidates_evaluated: int
    evaluated_per_epoch: list[int] = Field(default_factory=list)
    wall_time: float
    stop_reason: Literal["epsilon", "max_epochs"]
    selected_index: int = Field(..., description="Index of the winning start point")
    history: list[EpochRecord] = Field(default_factory=list)

    @property
    def max_mape(self) -> float:
        return float(np.max(self.per_moment_mape))
