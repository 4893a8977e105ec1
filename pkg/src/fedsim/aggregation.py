"""Server-side aggregation of client updates.

Four strategies share one entry point. ``fedavg`` and ``fedprox`` average the
returned weight vectors in proportion to client sample counts (the proximal
term lives entirely on the client, so the server side is identical).
``fedmedian`` takes an unweighted coordinate-wise median. ``fedopt`` treats
the weighted mean client displacement as a pseudo-gradient and feeds it to an
adaptive optimizer living on the server; its slots are carried between rounds
in an :class:`AggregatorState` that is never mutated in place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EmptyInputError, NumericError, ValidationError
from .params import (ParamVector, coordinate_median, sqrt_div_offset,
                     weighted_sum, zeros_like)
from .training import ClientUpdate

FEDAVG = "fedavg"
FEDPROX = "fedprox"
FEDMEDIAN = "fedmedian"
FEDOPT = "fedopt"
STRATEGIES = (FEDAVG, FEDPROX, FEDMEDIAN, FEDOPT)

FEDOPT_VARIANTS = ("adam", "adagrad", "yogi")

# A second-moment entry may dip this far below zero before it is treated as a
# numerical fault rather than roundoff (only the yogi update can go negative).
_SECOND_MOMENT_TOLERANCE = -1e-12


@dataclass(frozen=True)
class FedOptConfig:
    variant: str = "adam"
    server_learning_rate: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.99
    tau: float = 1e-3

    def __post_init__(self):
        if self.variant not in FEDOPT_VARIANTS:
            raise ConfigError(f"unknown fedopt variant {self.variant!r}")
        if not (np.isfinite(self.server_learning_rate) and self.server_learning_rate > 0):
            raise ConfigError("server_learning_rate must be positive")
        if not (0.0 <= self.beta1 < 1.0) or not (0.0 <= self.beta2 < 1.0):
            raise ConfigError("beta1 and beta2 must lie in [0, 1)")
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ConfigError("tau must be positive")


@dataclass(frozen=True)
class AggregatorState:
    """Optimizer slots carried across rounds; unused by the averaging strategies."""

    momentum: ParamVector | None = None
    second_moment: ParamVector | None = None


def _check_updates(updates: list[ClientUpdate]):
    if not updates:
        raise EmptyInputError("no client updates to aggregate")
    ids = [u.client_id for u in updates]
    if any(b <= a for a, b in zip(ids, ids[1:])):
        raise ValidationError(
            f"updates must be sorted by strictly increasing client_id, got {ids}")
    for u in updates:
        if u.sample_count < 1:
            raise ValidationError(
                f"client {u.client_id} reports sample_count {u.sample_count}")


def _counts(updates: list[ClientUpdate], uniform: bool) -> np.ndarray:
    if uniform:
        return np.ones(len(updates))
    return np.array([float(u.sample_count) for u in updates])


def aggregate(
    strategy: str,
    global_weights: ParamVector,
    updates: list[ClientUpdate],
    state: AggregatorState | None = None,
    *,
    fedopt: FedOptConfig = FedOptConfig(),
    uniform_weighting: bool = False,
) -> tuple[ParamVector, AggregatorState]:
    """Combine one round of updates into the next global vector.

    Returns ``(new_global, new_state)``; the incoming state is left untouched.
    ``updates`` must already be sorted by client_id, which keeps the reduction
    order fixed no matter how the clients were scheduled.
    """
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown aggregation strategy {strategy!r}")
    _check_updates(updates)
    state = state or AggregatorState()

    if strategy in (FEDAVG, FEDPROX):
        new_global = weighted_sum([u.weights for u in updates],
                                  _counts(updates, uniform_weighting))
        return new_global, state

    if strategy == FEDMEDIAN:
        return coordinate_median([u.weights for u in updates]), state

    # fedopt: adaptive step along the mean client displacement.
    displacements = [u.weights.with_values(u.weights.values - global_weights.values)
                     for u in updates]
    delta = weighted_sum(displacements, _counts(updates, uniform_weighting))

    momentum = state.momentum if state.momentum is not None else zeros_like(global_weights)
    second = state.second_moment if state.second_moment is not None \
        else zeros_like(global_weights)

    b1, b2 = fedopt.beta1, fedopt.beta2
    new_momentum = momentum.values * b1 + delta.values * (1.0 - b1)
    delta_sq = delta.values * delta.values
    if fedopt.variant == "adam":
        new_second = second.values * b2 + delta_sq * (1.0 - b2)
    elif fedopt.variant == "adagrad":
        new_second = second.values + delta_sq
    else:  # yogi
        new_second = second.values - (1.0 - b2) * delta_sq * np.sign(second.values - delta_sq)
        low = new_second.min()
        if low < _SECOND_MOMENT_TOLERANCE:
            raise NumericError(
                f"yogi second moment fell to {low}, below tolerance")
        new_second = np.maximum(new_second, 0.0)

    momentum_vec = global_weights.with_values(new_momentum)
    second_vec = global_weights.with_values(new_second)
    step = sqrt_div_offset(momentum_vec, second_vec, fedopt.tau)
    new_global = global_weights.with_values(
        global_weights.values + fedopt.server_learning_rate * step.values)
    return new_global, AggregatorState(momentum=momentum_vec, second_moment=second_vec)
