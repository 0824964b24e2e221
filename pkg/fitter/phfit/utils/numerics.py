"""
Small numeric building blocks shared by the reparameterizations and the objective.

All functions accept a leading batch dimension; vectors live on the last axis and
matrices on the last two.
"""

import logging

import numpy as np
from scipy import special

logger = logging.getLogger(__name__)


def softmax(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax along the last axis (max-subtracted)."""
    return special.softmax(x, axis=-1)


def softmax_backward(probs: np.ndarray, grad_probs: np.ndarray) -> np.ndarray:
    """Pull a gradient with respect to softmax outputs back to its logits."""
    inner = np.sum(probs * grad_probs, axis=-1, keepdims=True)
    return probs * (grad_probs - inner)


def sigmoid(x: np.ndarray) -> np.ndarray:
    return special.expit(x)


def logit(p: np.ndarray) -> np.ndarray:
    return special.logit(p)


def batched_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Solve a[i] @ x[i] = b[i] for a stack of systems.

    A singular member does not poison the batch: its solution is returned as NaN so
    the caller can drop that candidate.
    """
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        pass

    out = np.full(np.broadcast_shapes(a.shape[:-2], b.shape[:-2]) + b.shape[-2:], np.nan)
    for index in np.ndindex(out.shape[:-2]):
        try:
            out[index] = np.linalg.solve(a[index], b[index])
        except np.linalg.LinAlgError:
            logger.debug(f"Singular system at batch index {index}")
    return out
