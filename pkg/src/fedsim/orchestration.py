"""Round-based federated training and the two non-federated reference runs.

The driver loop is deliberately plain: broadcast the global vector, let every
client train locally for the round's epoch budget, aggregate, evaluate on the
pooled validation split, repeat. Baselines reuse the same trainer so that a
comparison between federated, purely local, and pooled training differs only
in who sees which data.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .aggregation import (FEDPROX, AggregatorState, FedOptConfig, aggregate)
from .data import ClientDataset
from .errors import ConfigError, ValidationError
from .models import TaskModel
from .params import ParamVector, save_checkpoint
from .training import ClientUpdate, TrainerConfig, train


@dataclass(frozen=True)
class RoundSchedule:
    """How a fixed local-epoch budget is spent: ``rounds`` server rounds of
    ``epochs_per_round`` local epochs each."""

    rounds: int
    epochs_per_round: int

    def __post_init__(self):
        if self.rounds < 1 or self.epochs_per_round < 1:
            raise ConfigError(
                f"rounds and epochs_per_round must be >= 1, got {self}")

    @property
    def total_epochs(self) -> int:
        return self.rounds * self.epochs_per_round


def schedule_presets() -> dict[str, RoundSchedule]:
    """Named (rounds, epochs_per_round) pairs, all spending 150 local epochs."""
    return {
        "opt1": RoundSchedule(3, 50),
        "opt2": RoundSchedule(5, 30),
        "opt3": RoundSchedule(10, 15),
        "opt4": RoundSchedule(15, 10),
    }


@dataclass(frozen=True)
class RoundRecord:
    round_number: int  # 1-based
    val_accuracy: float
    client_val_accuracies: tuple[float, ...]
    cumulative_epochs: int
    duration_s: float


@dataclass(frozen=True)
class FederatedResult:
    strategy: str
    seed: int
    final_weights: ParamVector
    rounds: tuple[RoundRecord, ...]
    test_accuracy: float
    client_test_accuracies: tuple[float, ...]
    client_ids: tuple[int, ...]
    client_loss_traces: tuple[tuple[float, ...], ...]
    total_duration_s: float

    @property
    def client_epoch_counts(self) -> tuple[int, ...]:
        return tuple(len(trace) for trace in self.client_loss_traces)


@dataclass(frozen=True)
class LocalBaselineResult:
    seed: int
    client_ids: tuple[int, ...]
    final_weights: tuple[ParamVector, ...]
    client_test_accuracies: tuple[float, ...]  # each model on the pooled test split
    mean_test_accuracy: float
    client_loss_traces: tuple[tuple[float, ...], ...]
    total_duration_s: float


@dataclass(frozen=True)
class GlobalBaselineResult:
    seed: int
    final_weights: ParamVector
    test_accuracy: float
    client_test_accuracies: tuple[float, ...]
    loss_trace: tuple[float, ...]
    total_duration_s: float


def _checked_clients(clients: list[ClientDataset]) -> list[ClientDataset]:
    if not clients:
        raise ConfigError("need at least one client")
    ordered = sorted(clients, key=lambda c: c.client_id)
    ids = [c.client_id for c in ordered]
    if len(set(ids)) != len(ids):
        raise ValidationError(f"duplicate client ids: {ids}")
    return ordered


def run_federated(
    model: TaskModel,
    clients: list[ClientDataset],
    group_all: ClientDataset,
    schedule: RoundSchedule,
    strategy: str = "fedavg",
    *,
    seed: int = 0,
    batch_size: int = 32,
    learning_rate: float = 0.1,
    prox_mu: float | None = None,
    fedopt: FedOptConfig = FedOptConfig(),
    uniform_weighting: bool = False,
    parallel: bool = False,
    max_workers: int | None = None,
    patience: int | None = None,
    checkpoint_dir: str | Path | None = None,
) -> FederatedResult:
    """Drive ``schedule.rounds`` rounds of local training plus aggregation.

    ``prox_mu=None`` means 0 except under the fedprox strategy, which gets a
    mild default pull of 0.01. With ``parallel=True`` clients train in a
    thread pool; results are identical to the sequential path because each
    client call is a pure function and updates are aggregated in client-id
    order either way. ``patience`` (rounds without pooled-validation
    improvement) turns on early stopping; it is off by default.
    """
    clients = _checked_clients(clients)
    if prox_mu is None:
        prox_mu = 0.01 if strategy == FEDPROX else 0.0

    started = time.perf_counter()
    global_weights = model.init_weights(seed)
    state = AggregatorState()
    records: list[RoundRecord] = []
    traces: dict[int, list[float]] = {c.client_id: [] for c in clients}

    cfg = TrainerConfig(epochs=schedule.epochs_per_round, batch_size=batch_size,
                        learning_rate=learning_rate, seed=seed, prox_mu=prox_mu)

    def run_client(client: ClientDataset, round_index: int,
                   weights: ParamVector) -> ClientUpdate:
        return train(model, weights, client.train, cfg,
                     round_index=round_index, client_id=client.client_id)

    best_val = -1.0
    stale_rounds = 0
    for round_index in range(schedule.rounds):
        round_started = time.perf_counter()
        if parallel:
            with ThreadPoolExecutor(max_workers=max_workers) as pool:
                futures = [pool.submit(run_client, c, round_index, global_weights)
                           for c in clients]
                updates = [f.result() for f in futures]
        else:
            updates = [run_client(c, round_index, global_weights) for c in clients]

        updates.sort(key=lambda u: u.client_id)
        for update in updates:
            traces[update.client_id].extend(update.loss_trace)

        global_weights, state = aggregate(
            strategy, global_weights, updates, state,
            fedopt=fedopt, uniform_weighting=uniform_weighting)

        val_accuracy = model.evaluate_accuracy(
            global_weights, group_all.val.features, group_all.val.labels)
        client_val = tuple(
            model.evaluate_accuracy(global_weights, c.val.features, c.val.labels)
            for c in clients)
        records.append(RoundRecord(
            round_number=round_index + 1,
            val_accuracy=val_accuracy,
            client_val_accuracies=client_val,
            cumulative_epochs=(round_index + 1) * schedule.epochs_per_round,
            duration_s=time.perf_counter() - round_started,
        ))
        if checkpoint_dir is not None:
            save_checkpoint(global_weights,
                            Path(checkpoint_dir) / f"round_{round_index + 1:03d}.ckpt")

        if patience is not None:
            if val_accuracy > best_val:
                best_val = val_accuracy
                stale_rounds = 0
            else:
                stale_rounds += 1
                if stale_rounds >= patience:
                    break

    test_accuracy = model.evaluate_accuracy(
        global_weights, group_all.test.features, group_all.test.labels)
    client_test = tuple(
        model.evaluate_accuracy(global_weights, c.test.features, c.test.labels)
        for c in clients)

    return FederatedResult(
        strategy=strategy,
        seed=seed,
        final_weights=global_weights,
        rounds=tuple(records),
        test_accuracy=test_accuracy,
        client_test_accuracies=client_test,
        client_ids=tuple(c.client_id for c in clients),
        client_loss_traces=tuple(tuple(traces[c.client_id]) for c in clients),
        total_duration_s=time.perf_counter() - started,
    )


def run_local_baseline(
    model: TaskModel,
    clients: list[ClientDataset],
    group_all: ClientDataset,
    total_epochs: int,
    *,
    seed: int = 0,
    batch_size: int = 32,
    learning_rate: float = 0.1,
) -> LocalBaselineResult:
    """Train one isolated model per client (no communication at all).

    Every model starts from the same initial vector and spends the same
    ``total_epochs`` budget as a federated run, then is scored on the pooled
    test split, so the average shows what siloed training gives up.
    """
    clients = _checked_clients(clients)
    if total_epochs < 1:
        raise ConfigError(f"total_epochs must be >= 1, got {total_epochs}")
    started = time.perf_counter()
    initial = model.init_weights(seed)
    cfg = TrainerConfig(epochs=total_epochs, batch_size=batch_size,
                        learning_rate=learning_rate, seed=seed)

    updates = [train(model, initial, c.train, cfg, client_id=c.client_id)
               for c in clients]
    accuracies = tuple(
        model.evaluate_accuracy(u.weights, group_all.test.features,
                                group_all.test.labels)
        for u in updates)
    return LocalBaselineResult(
        seed=seed,
        client_ids=tuple(c.client_id for c in clients),
        final_weights=tuple(u.weights for u in updates),
        client_test_accuracies=accuracies,
        mean_test_accuracy=float(sum(accuracies) / len(accuracies)),
        client_loss_traces=tuple(u.loss_trace for u in updates),
        total_duration_s=time.perf_counter() - started,
    )


def run_global_baseline(
    model: TaskModel,
    clients: list[ClientDataset],
    group_all: ClientDataset,
    total_epochs: int,
    *,
    seed: int = 0,
    batch_size: int = 32,
    learning_rate: float = 0.1,
) -> GlobalBaselineResult:
    """Train a single model on the pooled training data (the privacy-free
    upper reference) for the same epoch budget."""
    clients = _checked_clients(clients)
    if total_epochs < 1:
        raise ConfigError(f"total_epochs must be >= 1, got {total_epochs}")
    started = time.perf_counter()
    initial = model.init_weights(seed)
    cfg = TrainerConfig(epochs=total_epochs, batch_size=batch_size,
                        learning_rate=learning_rate, seed=seed)
    update = train(model, initial, group_all.train, cfg,
                   client_id=group_all.client_id)
    client_test = tuple(
        model.evaluate_accuracy(update.weights, c.test.features, c.test.labels)
        for c in clients)
    return GlobalBaselineResult(
        seed=seed,
        final_weights=update.weights,
        test_accuracy=model.evaluate_accuracy(
            update.weights, group_all.test.features, group_all.test.labels),
        client_test_accuracies=client_test,
        loss_trace=update.loss_trace,
        total_duration_s=time.perf_counter() - started,
    )
