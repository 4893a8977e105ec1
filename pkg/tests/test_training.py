from __future__ import annotations

import numpy as np
import pytest

from fedsim.data import LabeledSet
from fedsim.errors import ConfigError, DivergenceError, EmptyInputError
from fedsim.models import TaskModel
from fedsim.training import TrainerConfig, train


@pytest.fixture
def setup():
    model = TaskModel(input_dim=6, num_classes=3)
    rng = np.random.default_rng(17)
    x = rng.normal(size=(25, 6)) + rng.integers(0, 3, size=25)[:, None]
    y = ((x.mean(axis=1) > 1.0).astype(int) + (x.mean(axis=1) > 2.0)).astype(int)
    return model, model.init_weights(17), LabeledSet(x, y)


def manual_sgd(model, initial, data, cfg, round_index=0):
    """Reference loop written straight from the documented contract."""
    w = initial.values.copy()
    anchor = initial.values
    trace = []
    n = len(data)
    for epoch in range(cfg.epochs):
        order = np.random.default_rng(
            (cfg.seed, round_index, epoch)).permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grad = model.loss_and_gradient_flat(
                w, data.features[idx], data.labels[idx])
            total += loss * idx.size
            if cfg.prox_mu > 0:
                grad = grad + cfg.prox_mu * (w - anchor)
            w = w - cfg.learning_rate * grad
        trace.append(total / n)
    return w, trace


class TestTrainerConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            TrainerConfig(epochs=-1)
        with pytest.raises(ConfigError):
            TrainerConfig(epochs=1, batch_size=0)
        with pytest.raises(ConfigError):
            TrainerConfig(epochs=1, learning_rate=0.0)
        with pytest.raises(ConfigError):
            TrainerConfig(epochs=1, prox_mu=-0.1)


class TestTrain:
    def test_zero_epochs_returns_initial_bitwise(self, setup):
        model, w0, data = setup
        update = train(model, w0, data, TrainerConfig(epochs=0))
        assert np.array_equal(update.weights.values, w0.values)
        assert update.loss_trace == ()
        assert update.sample_count == len(data)

    def test_matches_reference_loop_exactly(self, setup):
        model, w0, data = setup
        cfg = TrainerConfig(epochs=3, batch_size=7, learning_rate=0.1, seed=5)
        update = train(model, w0, data, cfg, round_index=2)
        expected_w, expected_trace = manual_sgd(model, w0, data, cfg,
                                                round_index=2)
        assert np.array_equal(update.weights.values, expected_w)
        assert update.loss_trace == tuple(expected_trace)

    def test_short_final_batch_is_kept(self, setup):
        # 25 samples at batch size 10 -> batches of 10, 10, 5; the reference
        # loop keeps the tail, so exact agreement proves train does too.
        model, w0, data = setup
        cfg = TrainerConfig(epochs=2, batch_size=10, learning_rate=0.05, seed=3)
        update = train(model, w0, data, cfg)
        expected_w, _ = manual_sgd(model, w0, data, cfg)
        assert np.array_equal(update.weights.values, expected_w)

    def test_full_batch_is_plain_gradient_descent(self, setup):
        # even a full batch is visited in that epoch's shuffle order, so the
        # reference applies the same permutation before the gradient step
        model, w0, data = setup
        cfg = TrainerConfig(epochs=2, batch_size=len(data), learning_rate=0.1)
        update = train(model, w0, data, cfg)
        w = w0.values.copy()
        for epoch in range(2):
            order = np.random.default_rng((0, 0, epoch)).permutation(len(data))
            _, g = model.loss_and_gradient_flat(
                w, data.features[order], data.labels[order])
            w = w - 0.1 * g
        assert np.array_equal(update.weights.values, w)

    def test_trace_length_and_descent(self, setup):
        model, w0, data = setup
        update = train(model, w0, data,
                       TrainerConfig(epochs=20, batch_size=8,
                                     learning_rate=0.1, seed=1))
        assert len(update.loss_trace) == 20
        assert update.loss_trace[-1] < update.loss_trace[0]

    def test_deterministic_per_seed_and_round(self, setup):
        model, w0, data = setup
        cfg = TrainerConfig(epochs=2, batch_size=4, learning_rate=0.1, seed=9)
        a = train(model, w0, data, cfg, round_index=0)
        b = train(model, w0, data, cfg, round_index=0)
        c = train(model, w0, data, cfg, round_index=1)
        d = train(model, w0, data, TrainerConfig(epochs=2, batch_size=4,
                                                 learning_rate=0.1, seed=10))
        assert np.array_equal(a.weights.values, b.weights.values)
        assert not np.array_equal(a.weights.values, c.weights.values)
        assert not np.array_equal(a.weights.values, d.weights.values)


class TestProximalTerm:
    def test_mu_zero_identical_to_plain_sgd(self, setup):
        model, w0, data = setup
        base = TrainerConfig(epochs=4, batch_size=6, learning_rate=0.1, seed=2)
        with_mu = TrainerConfig(epochs=4, batch_size=6, learning_rate=0.1,
                                seed=2, prox_mu=0.0)
        a = train(model, w0, data, base)
        b = train(model, w0, data, with_mu)
        assert np.array_equal(a.weights.values, b.weights.values)

    def test_large_mu_pins_weights_to_anchor(self, setup):
        model, w0, data = setup

        def distance(mu):
            # keep lr * mu below the stability bound of 2 so the proximal
            # pull contracts instead of oscillating
            cfg = TrainerConfig(epochs=4, batch_size=6, learning_rate=0.01,
                                seed=2, prox_mu=mu)
            update = train(model, w0, data, cfg)
            return float(np.linalg.norm(update.weights.values - w0.values))

        d_free, d_mild, d_hard = distance(0.0), distance(1.0), distance(50.0)
        assert d_hard < d_mild < d_free

    def test_trace_records_plain_data_loss(self, setup):
        # One batch per epoch: the epoch-2 entry must equal the plain
        # cross-entropy at the weights reached after step 1, with no
        # proximal contribution mixed in.
        model, w0, data = setup
        cfg = TrainerConfig(epochs=2, batch_size=len(data), learning_rate=0.1,
                            prox_mu=5.0)
        update = train(model, w0, data, cfg)

        def shuffled(epoch):
            order = np.random.default_rng((0, 0, epoch)).permutation(len(data))
            return data.features[order], data.labels[order]

        loss0, g0 = model.loss_and_gradient_flat(w0.values, *shuffled(0))
        w1 = w0.values - 0.1 * g0  # prox gradient is zero at the anchor
        loss1, _ = model.loss_and_gradient_flat(w1, *shuffled(1))
        assert update.loss_trace[0] == loss0
        assert update.loss_trace[1] == loss1


class TestFailureModes:
    def test_empty_split_rejected(self, setup):
        model, w0, _ = setup
        empty = LabeledSet(np.zeros((0, 6)), np.zeros(0, dtype=int))
        with pytest.raises(EmptyInputError):
            train(model, w0, empty, TrainerConfig(epochs=1))

    def test_huge_learning_rate_diverges_with_context(self, setup):
        # cross-entropy gradients are bounded by the feature scale, so the
        # step itself must overflow: lr near the float64 ceiling does it
        model, w0, data = setup
        cfg = TrainerConfig(epochs=50, batch_size=len(data),
                            learning_rate=1e308, seed=0)
        with pytest.raises(DivergenceError) as info:
            train(model, w0, data, cfg, round_index=4, client_id=7)
        assert info.value.epoch >= 0
        assert info.value.round_index == 4
        assert info.value.client_id == 7
