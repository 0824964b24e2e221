import numpy as np


class Adam:
    """Per-candidate adaptive moment estimates with bias correction, one row per candidate."""

    def __init__(
        self,
        shape: tuple[int, int],
        step_size: float = 0.01,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.step_size = step_size
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.first = np.zeros(shape)
        self.second = np.zeros(shape)
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.first = self.beta1 * self.first + (1 - self.beta1) * grad
        self.second = self.beta2 * self.second + (1 - self.beta2) * grad**2
        first = self.first / (1 - self.beta1**self.t)
        second = self.second / (1 - self.beta2**self.t)
        return theta - self.step_size * first / (np.sqrt(second) + self.eps)

    def select(self, rows: np.ndarray) -> None:
        """Keep the state of the surviving candidates only."""
        self.first = self.first[rows]
        self.second = self.second[rows]

    def decay(self, factor: float, floor: float) -> None:
        self.step_size = max(floor, self.step_size * factor)


class PlateauDecay:
    """
    Signals a step-size cut once the best loss has not improved by a relative
    `tolerance` for `patience` epochs. The reference restarts after every cut.
    """

    def __init__(self, patience: int, tolerance: float = 1e-2):
        self.patience = patience
        self.tolerance = tolerance
        self.reference = np.inf
        self.since = 0

    def update(self, epoch: int, best_loss: float) -> bool:
        if best_loss < self.reference * (1 - self.tolerance):
            self.reference = best_loss
            self.since = epoch
            return False
        if epoch - self.since >= self.patience:
            self.reference = best_loss
            self.since = epoch
            return True
        return False
