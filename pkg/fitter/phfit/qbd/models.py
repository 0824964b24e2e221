from functools import cached_property

import numpy as np
from pydantic import BaseModel, ConfigDict

from phfit.core.distribution import moments
from phfit.core.models import MarkovianPH
from phfit.utils.documents import Matrix


class QbdModel(BaseModel):
    """PH/PH/1 queue: inter-arrival and service time distributions."""

    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    arrival: MarkovianPH
    service: MarkovianPH

    @cached_property
    def rho(self) -> float:
        """Utilization: mean service time over mean inter-arrival time."""
        return float(moments(self.service, 1)[0] / moments(self.arrival, 1)[0])


class QbdBlocks(BaseModel):
    """
    Generator blocks of the level process. Levels k >= 1 live on the product space
    arrival phase x service phase (arrival index major); level 0 on arrival phases only.
    """

    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    A0: Matrix
    A1: Matrix
    A2: Matrix
    B00: Matrix
    B01: Matrix
    B10: Matrix

    @property
    def level_size(self) -> int:
        return self.A1.shape[0]

    def residual(self, R: np.ndarray) -> float:
        """Max-norm of A0 + R A1 + R^2 A2."""
        return float(np.max(np.abs(self.A0 + R @ self.A1 + R @ R @ self.A2)))
