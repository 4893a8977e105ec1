from __future__ import annotations

import numpy as np
import pytest

from fedsim.data import generate_federation
from fedsim.errors import ConfigError, ValidationError
from fedsim.models import TaskModel
from fedsim.orchestration import (RoundSchedule, run_federated,
                                  run_global_baseline, run_local_baseline,
                                  schedule_presets)
from fedsim.params import load_checkpoint


@pytest.fixture(scope="module")
def federation():
    return generate_federation(num_clients=3, split=(40, 15, 15), seed=31)


@pytest.fixture(scope="module")
def model():
    return TaskModel()


class TestSchedules:
    def test_presets_cover_the_fixed_budget(self):
        presets = schedule_presets()
        assert [(s.rounds, s.epochs_per_round) for s in presets.values()] == [
            (3, 50), (5, 30), (10, 15), (15, 10)]
        assert all(s.total_epochs == 150 for s in presets.values())
        assert list(presets) == ["opt1", "opt2", "opt3", "opt4"]

    def test_schedule_validation(self):
        with pytest.raises(ConfigError):
            RoundSchedule(0, 10)
        with pytest.raises(ConfigError):
            RoundSchedule(3, 0)


class TestRunFederated:
    def test_round_records_and_epoch_accounting(self, federation, model):
        clients, group = federation
        result = run_federated(model, clients, group, RoundSchedule(4, 3),
                               seed=1)
        assert len(result.rounds) == 4
        assert [r.round_number for r in result.rounds] == [1, 2, 3, 4]
        assert [r.cumulative_epochs for r in result.rounds] == [3, 6, 9, 12]
        assert result.client_ids == (1, 2, 3)
        assert result.client_epoch_counts == (12, 12, 12)
        assert 0.0 <= result.test_accuracy <= 1.0
        for rec in result.rounds:
            assert len(rec.client_val_accuracies) == 3

    def test_same_seed_is_bitwise_reproducible(self, federation, model):
        clients, group = federation
        a = run_federated(model, clients, group, RoundSchedule(3, 2), seed=7)
        b = run_federated(model, clients, group, RoundSchedule(3, 2), seed=7)
        assert np.array_equal(a.final_weights.values, b.final_weights.values)
        assert [r.val_accuracy for r in a.rounds] == \
               [r.val_accuracy for r in b.rounds]

    def test_parallel_matches_sequential_bitwise(self, federation, model):
        clients, group = federation
        seq = run_federated(model, clients, group, RoundSchedule(3, 2), seed=7)
        par = run_federated(model, clients, group, RoundSchedule(3, 2), seed=7,
                            parallel=True, max_workers=3)
        assert np.array_equal(seq.final_weights.values, par.final_weights.values)
        assert seq.test_accuracy == par.test_accuracy

    def test_client_order_does_not_matter(self, federation, model):
        clients, group = federation
        forward = run_federated(model, clients, group, RoundSchedule(2, 2), seed=3)
        reversed_ = run_federated(model, list(reversed(clients)), group,
                                  RoundSchedule(2, 2), seed=3)
        assert np.array_equal(forward.final_weights.values,
                              reversed_.final_weights.values)
        assert reversed_.client_ids == (1, 2, 3)

    def test_fedprox_default_mu_kicks_in(self, federation, model):
        clients, group = federation
        avg = run_federated(model, clients, group, RoundSchedule(2, 3),
                            "fedavg", seed=5)
        prox = run_federated(model, clients, group, RoundSchedule(2, 3),
                             "fedprox", seed=5)
        prox_mu0 = run_federated(model, clients, group, RoundSchedule(2, 3),
                                 "fedprox", seed=5, prox_mu=0.0)
        # an explicit mu of zero collapses fedprox onto fedavg exactly,
        # while the 0.01 default moves the trajectory
        assert np.array_equal(avg.final_weights.values,
                              prox_mu0.final_weights.values)
        assert not np.array_equal(avg.final_weights.values,
                                  prox.final_weights.values)

    def test_strategies_disagree_on_heterogeneous_clients(self, federation, model):
        clients, group = federation
        outs = {}
        for strategy in ("fedavg", "fedmedian", "fedopt"):
            outs[strategy] = run_federated(
                model, clients, group, RoundSchedule(2, 2), strategy, seed=2)
        assert not np.array_equal(outs["fedavg"].final_weights.values,
                                  outs["fedmedian"].final_weights.values)
        assert not np.array_equal(outs["fedavg"].final_weights.values,
                                  outs["fedopt"].final_weights.values)

    def test_patience_stops_early_on_a_plateau(self, federation, model):
        clients, group = federation
        result = run_federated(model, clients, group, RoundSchedule(8, 1),
                               seed=1, learning_rate=1e-9, patience=2)
        # round 1 sets the best; two stale rounds then trip the stop
        assert len(result.rounds) == 3

    def test_checkpoints_written_per_round(self, federation, model, tmp_path):
        clients, group = federation
        result = run_federated(model, clients, group, RoundSchedule(3, 1),
                               seed=4, checkpoint_dir=tmp_path)
        files = sorted(p.name for p in tmp_path.glob("*.ckpt"))
        assert files == ["round_001.ckpt", "round_002.ckpt", "round_003.ckpt"]
        final = load_checkpoint(tmp_path / "round_003.ckpt")
        assert np.array_equal(final.values, result.final_weights.values)

    def test_client_validation(self, federation, model):
        clients, group = federation
        with pytest.raises(ConfigError):
            run_federated(model, [], group, RoundSchedule(1, 1))
        with pytest.raises(ValidationError):
            run_federated(model, [clients[0], clients[0]], group,
                          RoundSchedule(1, 1))


class TestBaselines:
    def test_local_trains_one_model_per_client(self, federation, model):
        clients, group = federation
        result = run_local_baseline(model, clients, group, total_epochs=6,
                                    seed=2)
        assert result.client_ids == (1, 2, 3)
        assert len(result.final_weights) == 3
        assert all(len(t) == 6 for t in result.client_loss_traces)
        assert result.mean_test_accuracy == pytest.approx(
            sum(result.client_test_accuracies) / 3)
        # siloed models see different data, so they must differ
        assert not np.array_equal(result.final_weights[0].values,
                                  result.final_weights[1].values)

    def test_global_trains_on_the_pool(self, federation, model):
        clients, group = federation
        result = run_global_baseline(model, clients, group, total_epochs=6,
                                     seed=2)
        assert len(result.loss_trace) == 6
        assert len(result.client_test_accuracies) == 3
        assert 0.0 <= result.test_accuracy <= 1.0

    def test_budget_validation(self, federation, model):
        clients, group = federation
        with pytest.raises(ConfigError):
            run_local_baseline(model, clients, group, total_epochs=0)
        with pytest.raises(ConfigError):
            run_global_baseline(model, clients, group, total_epochs=0)
