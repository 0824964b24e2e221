import logging
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from phfit.common.exceptions import FitFailedError
from phfit.core.distribution import moments
from phfit.metrics.scores import mape
from phfit.objective.loss import Objective, rescale_target, restore_scale
from phfit.objective.models import FitTarget
from phfit.reparam.maps import to_markovian

from ..models import EpochRecord, FitConfig, FitResult
from .adam import Adam, PlateauDecay
from .population import init_population, structure_from_config

logger = logging.getLogger(__name__)
progress_logger = logging.getLogger("phfit.progress")


class FitManager:
    """Multi-start gradient descent over one parameter family."""

    def __init__(self, target: FitTarget, config: FitConfig):
        self.target = target
        self.config = config
        self.structure = structure_from_config(config)
        self.scaled_target, self.scale = rescale_target(target)
        self.objective = Objective(self.scaled_target, self.structure)
        self.schedule = dict(config.resolved_schedule())
        self.workers = min(config.workers, config.population)

    def run(self) -> FitResult:
        """
        Run the population until the best loss drops below epsilon or the epoch
        budget is spent, culling at the scheduled epochs.
        """
        config = self.config
        start_time = time.perf_counter()
        logger.info(
            f"Fitting {self.target.count} moments with {self.structure.describe()}, "
            f"population {config.population}, seed {config.seed}"
        )

        theta = init_population(config, self.structure)
        ids = np.arange(config.population)
        adam = Adam(theta.shape, step_size=config.step_size)
        plateau = PlateauDecay(config.plateau_patience)

        best_loss = np.inf
        best_theta = None
        best_id = -1
        history = []
        evaluated_per_epoch = []
        stop_reason = "max_epochs"
        epoch = 0

        with self._executor() as executor:
            for epoch in range(1, config.max_epochs + 1):
                keep = self.schedule.get(epoch)
                if keep is not None and keep < ids.size:
                    survivors = self._cull(executor, theta, keep)
                    theta, ids = theta[survivors], ids[survivors]
                    adam.select(survivors)

                losses, grads = self._evaluate(executor, theta, with_gradient=True)
                evaluated_per_epoch.append(int(ids.size))

                healthy = np.isfinite(losses) & np.isfinite(grads).all(axis=-1)
                if not healthy.any():
                    raise FitFailedError(
                        f"All {ids.size} candidates failed numerically at epoch {epoch}"
                    )
                if not healthy.all():
                    logger.debug(f"Epoch {epoch}: dropping {int((~healthy).sum())} candidates")
                    rows = np.flatnonzero(healthy)
                    theta, ids, losses, grads = theta[rows], ids[rows], losses[rows], grads[rows]
                    adam.select(rows)

                leader = int(np.argmin(losses))
                if losses[leader] < best_loss:
                    best_loss = float(losses[leader])
                    best_theta = theta[leader].copy()
                    best_id = int(ids[leader])
                history.append(
                    EpochRecord(
                        epoch=epoch,
                        best_loss=best_loss,
                        live=int(ids.size),
                        step_size=adam.step_size,
                    )
                )

                if best_loss < config.epsilon:
                    stop_reason = "epsilon"
                    break
                if epoch % config.log_every == 0 and epoch < config.max_epochs:
                    self._log_progress(epoch, best_loss, ids.size)
                if plateau.update(epoch, best_loss) and config.step_decay < 1:
                    adam.decay(config.step_decay, config.min_step_size)
                    logger.debug(f"Epoch {epoch}: step size now {adam.step_size:.3e}")

                theta = adam.step(theta, grads)

        self._log_progress(epoch, best_loss, ids.size)
        return self._build_result(
            best_theta,
            best_loss,
            best_id,
            epoch,
            evaluated_per_epoch,
            history,
            stop_reason,
            time.perf_counter() - start_time,
        )

    def _executor(self):
        return ThreadPoolExecutor(max_workers=self.workers, thread_name_prefix="phfit-fit")

    def _evaluate(self, executor, theta: np.ndarray, with_gradient: bool):
        """
        Evaluate the population in contiguous chunks of at most batch_size rows,
        spread over the workers and reassembled in chunk order.
        """
        size = theta.shape[0]
        count = max(self.workers, -(-size // self.config.batch_size))
        chunks = [chunk for chunk in np.array_split(np.arange(size), count) if chunk.size]
        if len(chunks) == 1:
            return self.objective(theta, with_gradient=with_gradient)

        if self.workers == 1:
            results = [self.objective(theta[chunk], with_gradient) for chunk in chunks]
        else:
            futures = [
                executor.submit(self.objective, theta[chunk], with_gradient) for chunk in chunks
            ]
            results = [future.result() for future in futures]
        losses = np.concatenate([loss for loss, _ in results])
        if not with_gradient:
            return losses, None
        return losses, np.concatenate([grad for _, grad in results])

    def _cull(self, executor, theta: np.ndarray, keep: int) -> np.ndarray:
        """Rows of the `keep` candidates with the lowest current loss, in population order."""
        losses, _ = self._evaluate(executor, theta, with_gradient=False)
        ranked = np.argsort(np.where(np.isfinite(losses), losses, np.inf), kind="stable")
        return np.sort(ranked[:keep])

    def _log_progress(self, epoch: int, best_loss: float, live: int) -> None:
        progress_logger.info(f"{epoch},{format_loss(best_loss)},{live}")

    def _build_result(
        self,
        theta,
        best_loss,
        best_id,
        epochs_run,
        evaluated_per_epoch,
        history,
        stop_reason,
        wall_time,
    ) -> FitResult:
        params = restore_scale(self.structure.unpack(theta), self.scale)
        ph = to_markovian(params)
        fitted = moments(ph, self.target.count)
        per_moment_mape = mape(self.target.moments, fitted)

        logger.info(
            f"Fit finished after {epochs_run} epochs ({stop_reason}): loss {best_loss:.3e}, "
            f"max MAPE {np.max(per_moment_mape):.4g}%, candidate {best_id}, "
            f"{wall_time:.2f} seconds"
        )
        return FitResult(
            ph=ph,
            params=params,
            final_loss=best_loss,
            per_moment_mape=per_moment_mape,
            epochs_run=epochs_run,
            candidates_evaluated=int(sum(evaluated_per_epoch)),
            evaluated_per_epoch=evaluated_per_epoch,
            wall_time=wall_time,
            stop_reason=stop_reason,
            selected_index=best_id,
            history=history,
        )


def fit(target: FitTarget, config: FitConfig) -> FitResult:
    return FitManager(target, config).run()


def format_loss(value: float) -> str:
    if np.isnan(value):
        return "NaN"
    if np.isinf(value):
        return "Infinity" if value > 0 else "-Infinity"
    return f"{value:.6e}"
