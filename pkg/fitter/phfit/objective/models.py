import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from phfit.common.exceptions import InvalidTargetError
from phfit.utils.documents import Matrix, Vector

DEFAULT_Q = 0.05


def default_weights(values) -> np.ndarray:
    """Relative-error weights w_i = m_i^-2."""
    values = np.asarray(values, dtype=float)
    if np.any(values <= 0):
        raise InvalidTargetError("default weights need positive moments")
    return values**-2.0


def _check_points(points: np.ndarray, name: str, probabilities: bool) -> np.ndarray:
    if points.shape == (0,):
        return points.reshape(0, 2)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError(f"{name} must be a list of [x, y] pairs")
    if np.any(points[:, 0] <= 0):
        raise ValueError(f"{name}: every x must be positive")
    if probabilities and np.any((points[:, 1] <= 0) | (points[:, 1] >= 1)):
        raise ValueError(f"{name}: every y must lie strictly between 0 and 1")
    if not probabilities and np.any(points[:, 1] < 0):
        raise ValueError(f"{name}: densities must be nonnegative")
    return points


def _empty_points():
    return np.zeros((0, 2))


class FitTarget(BaseModel):
    """
    Target moments m_1..m_l with regression weights, plus optional CDF and PDF points.

    When `weights` is omitted the relative-error weights m_i^-2 are used.
    """

    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    moments: Vector = Field(..., description="Raw moments m_1..m_l")
    weights: Vector | None = Field(default=None, description="Per-moment weights w_i > 0")
    cdf_points: Matrix = Field(default_factory=_empty_points, description="[x, F(x)] pairs")
    cdf_weights: Vector | None = Field(default=None, description="Per-point weights (default 1)")
    Q: float = Field(default=DEFAULT_Q, ge=0, description="Trade-off for the CDF term")
    pdf_points: Matrix = Field(default_factory=_empty_points, description="[x, f(x)] pairs")
    Q_pdf: float = Field(default=0.0, ge=0, description="Trade-off for the PDF term")

    @field_validator("moments")
    @classmethod
    def moments_positive(cls, value):
        if value.shape[0] < 1:
            raise ValueError("at least one moment is required")
        if np.any(value <= 0):
            raise ValueError("moments must be positive")
        return value

    @field_validator("weights", "cdf_weights")
    @classmethod
    def weights_positive(cls, value):
        if value is not None and np.any(value <= 0):
            raise ValueError("weights must be positive")
        return value

    @field_validator("cdf_points", mode="before")
    @classmethod
    def cdf_points_shape(cls, value):
        return _check_points(np.array(value, dtype=float), "cdf_points", probabilities=True)

    @field_validator("pdf_points", mode="before")
    @classmethod
    def pdf_points_shape(cls, value):
        return _check_points(np.array(value, dtype=float), "pdf_points", probabilities=False)

    @model_validator(mode="after")
    def check_lengths(self):
        if self.weights is not None and self.weights.shape != self.moments.shape:
            raise ValueError("weights must have one entry per moment")
        if self.cdf_weights is not None and self.cdf_weights.shape[0] != self.cdf_points.shape[0]:
            raise ValueError("cdf_weights must have one entry per CDF point")
        return self

    @property
    def count(self) -> int:
        return self.moments.shape[0]

    @property
    def moment_weights(self) -> np.ndarray:
        if self.weights is not None:
            return self.weights
        return default_weights(self.moments)

    @property
    def point_weights(self) -> np.ndarray:
        if self.cdf_weights is not None:
            return self.cdf_weights
        return np.ones(self.cdf_points.shape[0])
