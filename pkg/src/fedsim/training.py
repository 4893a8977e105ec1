"""Client-side local training: plain minibatch SGD with an optional proximal pull.

One call to :func:`train` is one client's work for one round: ``epochs``
passes over its training split, reshuffled every epoch. With ``prox_mu > 0``
each step also pulls the weights back toward the round's incoming global
vector, which is the only difference between the FedAvg and FedProx client.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabeledSet
from .errors import ConfigError, DivergenceError, EmptyInputError
from .models import TaskModel
from .params import ParamVector


@dataclass(frozen=True)
class TrainerConfig:
    epochs: int
    batch_size: int = 32
    learning_rate: float = 0.1
    seed: int = 0
    prox_mu: float = 0.0

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not (np.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not (np.isfinite(self.prox_mu) and self.prox_mu >= 0):
            raise ConfigError(f"prox_mu must be >= 0, got {self.prox_mu}")


@dataclass(frozen=True)
class ClientUpdate:
    """What a client sends back: trained weights plus bookkeeping."""

    client_id: int
    weights: ParamVector
    sample_count: int
    loss_trace: tuple[float, ...]


def train(model: TaskModel, initial: ParamVector, data: LabeledSet,
          cfg: TrainerConfig, *, round_index: int = 0,
          client_id: int = 0) -> ClientUpdate:
    """Run ``cfg.epochs`` epochs of SGD from ``initial`` and report the result.

    The shuffle order for epoch e is drawn from a generator seeded with
    (cfg.seed, round_index, e), so a given round's batch order does not depend
    on how many rounds ran before it. The final short batch is kept. The loss
    trace holds one entry per epoch: the sample-weighted mean of the plain
    data loss (the proximal term is never included), measured on the batches
    as they were visited.

    Raises DivergenceError, tagged with the 0-based epoch, as soon as the loss
    or any weight stops being finite.
    """
    if len(data) == 0:
        raise EmptyInputError("cannot train on an empty split")

    n = len(data)
    w = initial.values.copy()
    anchor = initial.values
    trace = []
    for epoch in range(cfg.epochs):
        order = np.random.default_rng((cfg.seed, round_index, epoch)).permutation(n)
        loss_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            # overflow here is handled below as divergence; keep numpy quiet
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grad = model.loss_and_gradient_flat(
                    w, data.features[idx], data.labels[idx])
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"loss became non-finite at epoch {epoch}",
                    epoch=epoch, round_index=round_index, client_id=client_id)
            loss_sum += loss * idx.size
            with np.errstate(over="ignore", invalid="ignore"):
                if cfg.prox_mu > 0.0:
                    grad = grad + cfg.prox_mu * (w - anchor)
                w = w - cfg.learning_rate * grad
            if not np.all(np.isfinite(w)):
                raise DivergenceError(
                    f"weights became non-finite at epoch {epoch}",
                    epoch=epoch, round_index=round_index, client_id=client_id)
        trace.append(loss_sum / n)

    return ClientUpdate(
        client_id=client_id,
        weights=ParamVector(w, initial.manifest),
        sample_count=n,
        loss_trace=tuple(trace),
    )
