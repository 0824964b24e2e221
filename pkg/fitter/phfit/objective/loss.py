"""
Weighted moment regression with optional CDF and PDF shape terms.

    loss = sum_i w_i (mu_i - m_i)^2
         + Q     sum_j c_j (F(x_j) - y_j)^2
         + Q_pdf sum_j     (f(x_j) - z_j)^2

Losses and gradients are evaluated for a whole population at once. Gradients with
respect to (alpha, T) are hand-derived adjoints: moment terms pull back through the
sequential solves, shape terms use the Frechet derivative of the matrix exponential
read off the upper-right block of expm([[A^T, E], [0, A^T]]). The family's Structure
then maps them onto the unconstrained parameters.
"""

import logging

import numpy as np
from scipy import linalg

from phfit.common.exceptions import InvalidTargetError
from phfit.core.distribution import factorize, moments, quantile
from phfit.core.models import MarkovianPH
from phfit.reparam.models import HyperErlangParams
from phfit.reparam.structures import Structure, structure_of
from phfit.utils.numerics import batched_solve

from .models import DEFAULT_Q, FitTarget

logger = logging.getLogger(__name__)


def moment_coefficients(count: int) -> np.ndarray:
    """(-1)^k k! for k = 1..count."""
    return np.cumprod(-np.arange(1.0, count + 1))


class Objective:
    """Batched loss and gradient of a FitTarget for one parameter family."""

    def __init__(self, target: FitTarget, structure: Structure):
        self.target = target
        self.structure = structure
        self.moments = target.moments
        self.weights = target.moment_weights
        self.coefficients = moment_coefficients(target.count)
        self.cdf_points = target.cdf_points if target.Q > 0 else np.zeros((0, 2))
        self.cdf_weights = target.point_weights
        self.pdf_points = target.pdf_points if target.Q_pdf > 0 else np.zeros((0, 2))

    def __call__(self, theta: np.ndarray, with_gradient: bool = True):
        """
        Loss of every row of theta (B, P). Returns (loss (B,), gradient (B, P) or None).
        Rows whose evaluation fails numerically come back with a NaN loss.
        """
        alpha, T = self.structure.forward(theta)
        loss, grad_alpha, grad_T = self.evaluate(alpha, T, with_gradient)
        if not with_gradient:
            return loss, None
        return loss, self.structure.backward(theta, alpha, T, grad_alpha, grad_T)

    def evaluate(self, alpha: np.ndarray, T: np.ndarray, with_gradient: bool = True):
        batch, n = alpha.shape
        loss = np.full(batch, np.nan)
        grad_alpha = np.full((batch, n), np.nan) if with_gradient else None
        grad_T = np.full((batch, n, n), np.nan) if with_gradient else None

        finite = np.isfinite(alpha).all(axis=-1) & np.isfinite(T).all(axis=(-2, -1))
        if not finite.any():
            return loss, grad_alpha, grad_T

        rows = np.flatnonzero(finite)
        a, t = alpha[rows], T[rows]
        values, partial = self._moment_term(a, t, with_gradient)
        usable = np.isfinite(values)
        rows, a, t, values = rows[usable], a[usable], t[usable], values[usable]
        if with_gradient:
            partial = (partial[0][usable], partial[1][usable])

        if rows.size and (self.cdf_points.size or self.pdf_points.size):
            shape_values, shape_partial = self._shape_terms(a, t, with_gradient)
            values = values + shape_values
            if with_gradient:
                partial = (partial[0] + shape_partial[0], partial[1] + shape_partial[1])

        loss[rows] = values
        if with_gradient:
            grad_alpha[rows], grad_T[rows] = partial
        return loss, grad_alpha, grad_T

    def _moment_term(self, alpha, T, with_gradient):
        batch, n = alpha.shape
        count = self.moments.shape[0]

        # U[:, k] = T^-(k+1) 1
        U = np.empty((batch, count, n))
        column = np.ones((batch, n, 1))
        for k in range(count):
            column = batched_solve(T, column)
            U[:, k] = column[..., 0]

        mu = self.coefficients * np.einsum("bn,bkn->bk", alpha, U)
        residual = mu - self.moments
        values = np.sum(self.weights * residual**2, axis=-1)
        if not with_gradient:
            return values, None

        h = 2.0 * self.weights * residual * self.coefficients
        grad_alpha = np.einsum("bk,bkn->bn", h, U)

        # V[:, j] = alpha T^-(j+1)
        V = np.empty((batch, count, n))
        row = alpha[..., None]
        transposed = np.swapaxes(T, -1, -2)
        for j in range(count):
            row = batched_solve(transposed, row)
            V[:, j] = row[..., 0]

        # d(alpha T^-k 1)/dT = -sum_{j=1..k} v_j u_{k-j+1}^T, regrouped by j
        W = np.empty((batch, count, n))
        for j in range(count):
            W[:, j] = np.einsum("bi,bin->bn", h[:, j:], U[:, : count - j])
        grad_T = -np.einsum("bjm,bjn->bmn", V, W)
        return values, (grad_alpha, grad_T)

    def _shape_terms(self, alpha, T, with_gradient):
        batch, n = alpha.shape
        values = np.zeros(batch)
        grad_alpha = np.zeros((batch, n)) if with_gradient else None
        grad_T = np.zeros((batch, n, n)) if with_gradient else None
        exit_vector = -T.sum(axis=-1)

        for (x, y), weight in zip(self.cdf_points, self.cdf_weights):
            if with_gradient:
                exponential, frechet = _exponential_with_frechet(x * T, alpha[:, :, None])
            else:
                exponential = linalg.expm(x * T)
            survival = exponential.sum(axis=-1)
            residual = 1.0 - np.einsum("bn,bn->b", alpha, survival) - y
            values += self.target.Q * weight * residual**2
            if with_gradient:
                scale = 2.0 * self.target.Q * weight * residual
                grad_alpha -= scale[:, None] * survival
                grad_T -= (scale * x)[:, None, None] * frechet

        for x, z in self.pdf_points:
            if with_gradient:
                direction = alpha[:, :, None] * exit_vector[:, None, :]
                exponential, frechet = _exponential_with_frechet(x * T, direction)
            else:
                exponential = linalg.expm(x * T)
            forward = np.einsum("bn,bnm->bm", alpha, exponential)
            residual = np.einsum("bm,bm->b", forward, exit_vector) - z
            values += self.target.Q_pdf * residual**2
            if with_gradient:
                scale = 2.0 * self.target.Q_pdf * residual
                grad_alpha += scale[:, None] * np.einsum("bnm,bm->bn", exponential, exit_vector)
                # exit_vector = -T 1 also depends on T
                grad_T += scale[:, None, None] * (x * frechet - forward[:, :, None])

        return values, (grad_alpha, grad_T)


def _exponential_with_frechet(A: np.ndarray, direction: np.ndarray):
    """
    exp(A) and the Frechet derivative L(A^T, E) for a batch, from one block exponential.
    `direction` broadcasts against (B, n, n).
    """
    batch, n, _ = A.shape
    transposed = np.swapaxes(A, -1, -2)
    block = np.zeros((batch, 2 * n, 2 * n))
    block[:, :n, :n] = transposed
    block[:, n:, n:] = transposed
    block[:, :n, n:] = direction
    expo = linalg.expm(block)
    return np.swapaxes(expo[:, :n, :n], -1, -2), expo[:, :n, n:]


def _packed(params):
    """Structure and one-row theta of params; raises SingularMatrixError like moments."""
    structure = structure_of(params)
    theta = structure.pack(params)[None]
    _, T = structure.forward(theta)
    factorize(T[0])
    return structure, theta


def loss(params, target: FitTarget) -> float:
    structure, theta = _packed(params)
    value, _ = Objective(target, structure)(theta, with_gradient=False)
    return float(value[0])


def gradient(params, target: FitTarget):
    """Gradient of loss with respect to every entry of params, in the same shape."""
    structure, theta = _packed(params)
    _, grad = Objective(target, structure)(theta)
    return structure.unpack(grad[0], validate=False)


def rescale_target(target: FitTarget) -> tuple[FitTarget, float]:
    """
    Express the target in time units of its own mean, so m_1 becomes 1.

    Weights are scaled so the rescaled loss equals the original loss for the
    correspondingly rescaled candidate. Returns the new target and the mean.
    """
    scale = float(target.moments[0])
    powers = scale ** np.arange(1, target.count + 1)
    weights = None if target.weights is None else target.weights * powers**2

    cdf_points = target.cdf_points.copy()
    cdf_points[:, 0] /= scale
    pdf_points = target.pdf_points.copy()
    pdf_points[:, 0] /= scale
    pdf_points[:, 1] *= scale

    scaled = FitTarget(
        moments=target.moments / powers,
        weights=weights,
        cdf_points=cdf_points,
        cdf_weights=target.cdf_weights,
        Q=target.Q,
        pdf_points=pdf_points,
        Q_pdf=target.Q_pdf / scale**2,
    )
    return scaled, scale


def restore_scale(params, scale: float):
    """
    Undo rescale_target on fitted parameters: the same PH with every rate divided
    by `scale`, so the i-th moment grows by scale^i.
    """
    data = params.model_dump()
    root = np.sqrt(scale)
    if isinstance(params, HyperErlangParams):
        data["delta"] = params.delta / root
    else:
        data["gamma"] = params.gamma / root
    return type(params).model_validate(data)


def shape_percentiles(count: int) -> list[float]:
    """Percentile levels used to place CDF points for a joint moment and shape fit."""
    if count < 0:
        raise InvalidTargetError("percentile count must be nonnegative")
    if count == 0:
        return []
    if count == 3:
        return [30.0, 50.0, 70.0]
    if count == 5:
        return [10.0, 30.0, 50.0, 70.0, 90.0]
    if count == 20:
        return np.linspace(1.0, 25.0, 16).tolist() + [30.0, 40.0, 50.0, 60.0]
    return np.linspace(0.0, 100.0, count + 2)[1:-1].tolist()


def target_from_ph(
    ph: MarkovianPH,
    moment_count: int,
    percentiles=(),
    Q: float = DEFAULT_Q,
    weights=None,
) -> FitTarget:
    """Moments of a reference PH plus CDF points at the given percentile levels."""
    levels = np.asarray(percentiles, dtype=float) / 100.0
    points = [[quantile(ph, level), level] for level in levels]
    return FitTarget(
        moments=moments(ph, moment_count),
        weights=weights,
        cdf_points=points,
        Q=Q,
    )
