"""
Stationary queue-length distribution of the PH/PH/1 queue by the matrix-geometric
method: level probabilities pi_{k+1} = pi_k R for k >= 1, with R the minimal
nonnegative solution of A0 + R A1 + R^2 A2 = 0.
"""

import logging

import numpy as np
from scipy import linalg

from phfit.common.exceptions import (
    QbdConvergenceError,
    SingularBoundaryError,
    UnstableQueueError,
)
from phfit.core.models import MarkovianPH

from .models import QbdBlocks, QbdModel

logger = logging.getLogger(__name__)

R_TOLERANCE = 1e-12
MAX_ITERATIONS = 10**6


def utilization(arrival: MarkovianPH, service: MarkovianPH) -> float:
    return QbdModel(arrival=arrival, service=service).rho


def build_blocks(arrival: MarkovianPH, service: MarkovianPH) -> QbdBlocks:
    S, alpha = arrival.T, arrival.alpha
    V, beta = service.T, service.alpha
    s0 = arrival.exit_vector[:, None]
    v0 = service.exit_vector[:, None]
    identity_a = np.eye(arrival.n)
    identity_s = np.eye(service.n)

    return QbdBlocks(
        A0=np.kron(s0 @ alpha[None, :], identity_s),
        A1=np.kron(S, identity_s) + np.kron(identity_a, V),
        A2=np.kron(identity_a, v0 @ beta[None, :]),
        B00=S,
        B01=np.kron(s0 @ alpha[None, :], beta[None, :]),
        B10=np.kron(identity_a, v0),
    )


def solve_R(
    blocks: QbdBlocks, tol: float = R_TOLERANCE, max_iterations: int = MAX_ITERATIONS
) -> np.ndarray:
    """Fixed-point iteration R <- -(A0 + R^2 A2) A1^-1 starting from R = 0."""
    factors = linalg.lu_factor(blocks.A1)
    R = np.zeros_like(blocks.A0)
    for iteration in range(1, max_iterations + 1):
        right = -(blocks.A0 + R @ R @ blocks.A2)
        # X A1 = right  <=>  A1^T X^T = right^T
        updated = linalg.lu_solve(factors, right.T, trans=1).T
        change = float(np.max(np.abs(updated - R)))
        R = updated
        if change < tol:
            logger.debug(f"R converged after {iteration} iterations (change {change:.2e})")
            return R
    raise QbdConvergenceError(
        f"R iteration did not converge in {max_iterations} iterations (last change {change:.3e})"
    )


def solve_boundary(blocks: QbdBlocks, R: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Level 0 and level 1 probability vectors from the boundary balance equations and
    the normalization pi_0 1 + pi_1 (I - R)^-1 1 = 1.
    """
    size_0 = blocks.B00.shape[0]
    size = blocks.level_size
    generator = np.block([[blocks.B00, blocks.B01], [blocks.B10, blocks.A1 + R @ blocks.A2]])
    tail = np.linalg.solve(np.eye(size) - R, np.ones(size))

    # one balance equation is redundant; replace it by the normalization
    system = generator.copy()
    system[:, -1] = np.concatenate([np.ones(size_0), tail])
    rhs = np.zeros(size_0 + size)
    rhs[-1] = 1.0
    try:
        solution = linalg.solve(system.T, rhs)
    except (linalg.LinAlgError, ValueError) as e:
        raise SingularBoundaryError(f"Boundary system is singular: {e}")
    if not np.all(np.isfinite(solution)):
        raise SingularBoundaryError("Boundary system produced non-finite probabilities")
    return solution[:size_0], solution[size_0:]


def stationary_pmf(model: QbdModel, k_max: int, tol: float = R_TOLERANCE) -> np.ndarray:
    """p_0..p_k_max of the stationary number of customers in the system."""
    if model.rho >= 1:
        raise UnstableQueueError(model.rho)

    blocks = build_blocks(model.arrival, model.service)
    R = solve_R(blocks, tol)
    pi_0, level = solve_boundary(blocks, R)

    pmf = np.empty(k_max + 1)
    pmf[0] = pi_0.sum()
    for k in range(1, k_max + 1):
        pmf[k] = level.sum()
        level = level @ R
    return np.maximum(pmf, 0.0)
