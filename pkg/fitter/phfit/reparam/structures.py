"""
Flat-vector view of each reparameterization, used by the optimizer.

A Structure packs a family's parameters into one vector theta of length `size`, so a
population is a (B, size) array. `forward` maps a population onto Markovian form
(alpha: (B, n), T: (B, n, n)) and `backward` pulls gradients with respect to alpha
and T back onto theta.
"""

import logging
from abc import ABC, abstractmethod

import numpy as np

from phfit.common.exceptions import InvalidConfigError
from phfit.utils.numerics import sigmoid, softmax, softmax_backward

from .maps import block_heads
from .models import CoxianParams, GeneralParams, HyperErlangParams, StructureChoices

logger = logging.getLogger(__name__)

# gamma and delta start uniform on this range, so rates gamma^2 span [0.01, 10]
RATE_ROOT_RANGE = (0.1, np.sqrt(10.0))


class Structure(ABC):
    name: StructureChoices

    @property
    @abstractmethod
    def n(self) -> int: ...

    @property
    @abstractmethod
    def size(self) -> int: ...

    @abstractmethod
    def pack(self, params) -> np.ndarray: ...

    @abstractmethod
    def unpack(self, theta: np.ndarray, validate: bool = True): ...

    @abstractmethod
    def forward(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...

    @abstractmethod
    def backward(
        self,
        theta: np.ndarray,
        alpha: np.ndarray,
        T: np.ndarray,
        grad_alpha: np.ndarray,
        grad_T: np.ndarray,
    ) -> np.ndarray: ...

    @abstractmethod
    def initial(self, rng: np.random.Generator) -> np.ndarray:
        """Draw one starting point."""

    def describe(self) -> str:
        return f"{self.name} (n={self.n}, {self.size} parameters)"


def _build(model, validate: bool, **fields):
    if validate:
        return model(**fields)
    return model.model_construct(**fields)


class GeneralStructure(Structure):
    name = StructureChoices.GENERAL

    def __init__(self, n: int):
        self._n = n

    @property
    def n(self) -> int:
        return self._n

    @property
    def size(self) -> int:
        return 2 * self._n + self._n**2

    def _split(self, theta):
        n = self._n
        a = theta[..., :n]
        gamma = theta[..., n : 2 * n]
        Z = theta[..., 2 * n :].reshape(theta.shape[:-1] + (n, n))
        return a, gamma, Z

    def pack(self, params: GeneralParams) -> np.ndarray:
        return np.concatenate([params.a, params.gamma, params.Z.ravel()])

    def unpack(self, theta, validate=True) -> GeneralParams:
        a, gamma, Z = self._split(np.asarray(theta, dtype=float))
        return _build(GeneralParams, validate, a=a, gamma=gamma, Z=Z)

    def forward(self, theta):
        a, gamma, Z = self._split(theta)
        rates = gamma**2
        T = rates[..., :, None] * softmax(Z)
        diagonal = np.arange(self._n)
        T[..., diagonal, diagonal] = -rates
        return softmax(a), T

    def backward(self, theta, alpha, T, grad_alpha, grad_T):
        a, gamma, Z = self._split(theta)
        diagonal = np.arange(self._n)
        rates = gamma**2
        jumps = softmax(Z)

        # T_ij = gamma_i^2 S_ij off the diagonal and -gamma_i^2 on it
        weighted = grad_T * jumps
        weighted[..., diagonal, diagonal] = -grad_T[..., diagonal, diagonal]
        grad_gamma = 2.0 * gamma * weighted.sum(axis=-1)

        grad_jumps = rates[..., :, None] * grad_T
        grad_jumps[..., diagonal, diagonal] = 0.0
        grad_Z = softmax_backward(jumps, grad_jumps)

        grad_a = softmax_backward(alpha, grad_alpha)
        return np.concatenate(
            [grad_a, grad_gamma, grad_Z.reshape(grad_Z.shape[:-2] + (-1,))], axis=-1
        )

    def initial(self, rng):
        n = self._n
        a = rng.standard_normal(n)
        gamma = rng.uniform(*RATE_ROOT_RANGE, size=n)
        Z = rng.standard_normal(n * n)
        return np.concatenate([a, gamma, Z])


class CoxianStructure(Structure):
    name = StructureChoices.COXIAN

    def __init__(self, n: int):
        self._n = n

    @property
    def n(self) -> int:
        return self._n

    @property
    def size(self) -> int:
        return 2 * self._n - 1

    def pack(self, params: CoxianParams) -> np.ndarray:
        return np.concatenate([params.gamma, params.u])

    def unpack(self, theta, validate=True) -> CoxianParams:
        theta = np.asarray(theta, dtype=float)
        return _build(CoxianParams, validate, gamma=theta[: self._n], u=theta[self._n :])

    def forward(self, theta):
        n = self._n
        gamma, u = theta[..., :n], theta[..., n:]
        rates = gamma**2
        batch = theta.shape[:-1]

        T = np.zeros(batch + (n, n))
        diagonal = np.arange(n)
        T[..., diagonal, diagonal] = -rates
        T[..., diagonal[:-1], diagonal[1:]] = sigmoid(u) * rates[..., :-1]

        alpha = np.zeros(batch + (n,))
        alpha[..., 0] = 1.0
        return alpha, T

    def backward(self, theta, alpha, T, grad_alpha, grad_T):
        n = self._n
        gamma, u = theta[..., :n], theta[..., n:]
        rates = gamma**2
        proceed = sigmoid(u)
        diagonal = np.arange(n)
        grad_diagonal = grad_T[..., diagonal, diagonal]
        grad_super = grad_T[..., diagonal[:-1], diagonal[1:]]

        grad_rates = -grad_diagonal
        grad_rates[..., :-1] += proceed * grad_super
        grad_gamma = 2.0 * gamma * grad_rates
        grad_u = proceed * (1.0 - proceed) * rates[..., :-1] * grad_super
        return np.concatenate([grad_gamma, grad_u], axis=-1)

    def initial(self, rng):
        gamma = rng.uniform(*RATE_ROOT_RANGE, size=self._n)
        u = rng.standard_normal(self._n - 1)
        return np.concatenate([gamma, u])


class HyperErlangStructure(Structure):
    name = StructureChoices.HYPER_ERLANG

    def __init__(self, blocks):
        self.blocks = tuple(int(size) for size in blocks)
        if not self.blocks or any(size < 1 for size in self.blocks):
            raise InvalidConfigError("Hyper-Erlang blocks must be a nonempty list of sizes >= 1")
        self.k = len(self.blocks)
        self.heads = block_heads(self.blocks)
        self.phase_block = np.repeat(np.arange(self.k), self.blocks)
        continues = np.ones(self.n - 1, dtype=bool)
        continues[self.heads[1:] - 1] = False
        self.continues = continues

    @property
    def n(self) -> int:
        return sum(self.blocks)

    @property
    def size(self) -> int:
        return 2 * self.k

    def pack(self, params: HyperErlangParams) -> np.ndarray:
        return np.concatenate([params.beta, params.delta])

    def unpack(self, theta, validate=True) -> HyperErlangParams:
        theta = np.asarray(theta, dtype=float)
        return _build(
            HyperErlangParams,
            validate,
            beta=theta[: self.k],
            delta=theta[self.k :],
            blocks=self.blocks,
        )

    def forward(self, theta):
        beta, delta = theta[..., : self.k], theta[..., self.k :]
        batch = theta.shape[:-1]
        n = self.n
        phase_rates = (delta**2)[..., self.phase_block]

        T = np.zeros(batch + (n, n))
        diagonal = np.arange(n)
        T[..., diagonal, diagonal] = -phase_rates
        T[..., diagonal[:-1], diagonal[1:]] = phase_rates[..., :-1] * self.continues

        alpha = np.zeros(batch + (n,))
        alpha[..., self.heads] = softmax(beta)
        return alpha, T

    def backward(self, theta, alpha, T, grad_alpha, grad_T):
        beta, delta = theta[..., : self.k], theta[..., self.k :]
        n = self.n
        diagonal = np.arange(n)

        grad_phase = -grad_T[..., diagonal, diagonal]
        grad_phase[..., :-1] += grad_T[..., diagonal[:-1], diagonal[1:]] * self.continues
        membership = np.eye(self.k)[self.phase_block]
        grad_rates = grad_phase @ membership

        grad_delta = 2.0 * delta * grad_rates
        grad_beta = softmax_backward(softmax(beta), grad_alpha[..., self.heads])
        return np.concatenate([grad_beta, grad_delta], axis=-1)

    def initial(self, rng):
        beta = rng.standard_normal(self.k)
        delta = rng.uniform(*RATE_ROOT_RANGE, size=self.k)
        return np.concatenate([beta, delta])


# Block sets used when only the total order is given for a Hyper-Erlang fit
DEFAULT_BLOCKS = {
    20: (3, 4, 6, 7),
    50: (3, 4, 6, 7, 8, 10, 12),
    100: (3, 4, 6, 7, 8, 10, 10, 10, 10, 12, 20),
}


def default_blocks(n: int) -> tuple[int, ...]:
    if n in DEFAULT_BLOCKS:
        return DEFAULT_BLOCKS[n]
    raise InvalidConfigError(
        f"No default Hyper-Erlang blocks for n={n}; pass blocks explicitly "
        f"(defaults exist for n in {sorted(DEFAULT_BLOCKS)})"
    )


def structure_for(name: str, n: int | None = None, blocks=None) -> Structure:
    name = StructureChoices(name)
    if name == StructureChoices.HYPER_ERLANG:
        if blocks is None:
            if n is None:
                raise InvalidConfigError("hyper-erlang needs blocks or n")
            blocks = default_blocks(n)
        return HyperErlangStructure(blocks)
    if n is None or n < 1:
        raise InvalidConfigError(f"{name} needs a phase count n >= 1")
    if name == StructureChoices.GENERAL:
        return GeneralStructure(n)
    return CoxianStructure(n)


def structure_of(params) -> Structure:
    if isinstance(params, GeneralParams):
        return GeneralStructure(params.n)
    if isinstance(params, CoxianParams):
        return CoxianStructure(params.n)
    return HyperErlangStructure(params.blocks)
