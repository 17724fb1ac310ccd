"""
Tests for round execution, episodes and ensembles
"""
import numpy as np
import pytest

from network_formation.core import (
    AgentType,
    GameName,
    GameSpec,
    RandomSource,
    Rule,
    StrategyProfile,
    new_uniform_state,
)
from network_formation.dynamics import linear_probabilities
from network_formation.engine import (
    TrajectoryRecord,
    expected_next_probabilities,
    run_ensemble,
    run_episode,
    run_round,
)
from network_formation.exceptions import (
    ConfigurationError,
    DegenerateRowError,
    GameSpecError,
    InvalidStateError,
    RoundExecutionError,
    SignViolationError,
)


class TestRunRound:
    def test_friends1_adds_one_per_row(self, friends1, dynamics_factory, rng):
        w = new_uniform_state(4)
        updated, profile, ledger = run_round(w, StrategyProfile.trivial(4), friends1,
                                             dynamics_factory(), rng)
        assert np.allclose(updated.w.sum(axis=1), 4.0)
        assert profile == StrategyProfile.trivial(4)
        assert ledger.payoffs == (1.0, 1.0, 1.0, 1.0)

    def test_friends2_adds_two_per_visit(self, friends2, dynamics_factory, rng):
        w = new_uniform_state(3)
        updated, _, ledger = run_round(w, StrategyProfile.trivial(3), friends2,
                                       dynamics_factory(), rng)
        assert updated.w.sum() == pytest.approx(6.0 + 6.0)
        assert sum(ledger.payoffs) == pytest.approx(6.0)

    def test_enemies_resistance_grows(self, dynamics_factory, rng):
        spec = GameSpec.of(GameName.ENEMIES_I)
        w = new_uniform_state(3)
        updated, _, _ = run_round(w, StrategyProfile.trivial(3), spec,
                                  dynamics_factory(rule=Rule.RESISTANCE), rng)
        assert updated.w.sum() == pytest.approx(9.0)

    def test_linear_rule_rejects_punishment(self, dynamics_factory, rng):
        spec = GameSpec.of(GameName.ENEMIES_I)
        w = new_uniform_state(3, 0.5)
        with pytest.raises(SignViolationError):
            run_round(w, StrategyProfile.trivial(3), spec, dynamics_factory(), rng)

    def test_wrong_types(self, friends1, dynamics_factory, rng):
        with pytest.raises(GameSpecError):
            run_round(new_uniform_state(4), StrategyProfile.split(4), friends1,
                      dynamics_factory(), rng)

    def test_size_mismatch(self, friends1, dynamics_factory, rng):
        with pytest.raises(InvalidStateError):
            run_round(new_uniform_state(4), StrategyProfile.trivial(3), friends1,
                      dynamics_factory(), rng)


class TestRunEpisode:
    def test_deterministic(self, friends2, dynamics_factory):
        cfg = dynamics_factory()
        first = run_episode(4, friends2, cfg, 200, seed=11, snapshot_stride=50)
        second = run_episode(4, friends2, cfg, 200, seed=11, snapshot_stride=50)
        assert first == second

    def test_snapshots(self, friends1, dynamics_factory):
        record = run_episode(3, friends1, dynamics_factory(), 25, seed=1, snapshot_stride=10)
        assert record.rounds == (0, 10, 20, 25)
        assert record.matrices.shape == (4, 3, 3)
        assert np.allclose(record.matrices[0], linear_probabilities(new_uniform_state(3)).p)
        assert np.array_equal(record.matrices[-1], record.final_probabilities)
        assert record.final_weights.w.sum() == pytest.approx(6.0 + 3 * 25)

    def test_probabilities_match_weights(self, friends2, dynamics_factory):
        record = run_episode(5, friends2, dynamics_factory(discount=0.9), 100, seed=3)
        expected = linear_probabilities(record.final_weights).p
        assert np.allclose(record.final_probabilities, expected)
        assert np.allclose(record.final_probabilities.sum(axis=1), 1.0)

    def test_zero_rounds(self, friends1, dynamics_factory):
        record = run_episode(3, friends1, dynamics_factory(), 0, seed=1)
        assert record.rounds == (0,)
        assert record.final_weights == new_uniform_state(3)

    def test_initial_state(self, staghunt, dynamics_factory):
        profile = StrategyProfile.split(4, 4)
        record = run_episode(4, staghunt, dynamics_factory(), 10, seed=2,
                             initial_profile=profile, initial_weights=new_uniform_state(4, 3.0))
        assert record.final_profile.types == (AgentType.STAG,) * 4
        # every stag visit pays both sides 1
        assert record.final_weights.w.sum() == pytest.approx(36.0 + 80.0)

    def test_noise_keeps_every_entry_positive(self, friends1, dynamics_factory):
        record = run_episode(4, friends1, dynamics_factory(noise=0.2), 300, seed=5)
        off = record.final_probabilities[~np.eye(4, dtype=bool)]
        assert np.all(off >= 0.2 / 3 - 1e-12)

    def test_loglik_model_runs(self, friends1, dynamics_factory):
        record = run_episode(3, friends1, dynamics_factory(rule=Rule.LOGLIK), 50, seed=5)
        assert np.allclose(record.final_probabilities.sum(axis=1), 1.0)

    def test_transfer_conserves_balls(self, dynamics_factory):
        spec = GameSpec.of(GameName.ENEMIES_I)
        record = run_episode(3, spec, dynamics_factory(rule=Rule.TRANSFER, init_weight=2.0),
                             100, seed=8)
        assert np.allclose(record.final_weights.w.sum(axis=1), 4.0)
        assert np.all(record.final_weights.w == np.round(record.final_weights.w))

    def test_transfer_only_for_punishing_games(self, friends1, dynamics_factory):
        with pytest.raises(SignViolationError):
            run_episode(3, friends1, dynamics_factory(rule=Rule.TRANSFER), 5, seed=1)

    def test_round_failure_reports_round(self, dynamics_factory):
        spec = GameSpec.of(GameName.ENEMIES_I)
        # punishment under the linear rule drains each row of 4 by one per round
        with pytest.raises(RoundExecutionError) as excinfo:
            run_episode(3, spec, dynamics_factory(init_weight=2.0), 10, seed=1)
        assert excinfo.value.round_index == 4
        assert isinstance(excinfo.value.cause, DegenerateRowError)

    def test_rejects_bad_stride(self, friends1, dynamics_factory):
        with pytest.raises(ConfigurationError, match="stride"):
            run_episode(3, friends1, dynamics_factory(), 5, seed=1, snapshot_stride=0)


class TestRunEnsemble:
    def test_matches_episodes(self, staghunt, dynamics_factory):
        cfg = dynamics_factory(revision_prob=0.2, discount=0.95)
        records = run_ensemble(6, staghunt, cfg, 60, runs=5, seed=42, snapshot_stride=20)
        root = RandomSource(42)
        for k, record in enumerate(records):
            assert record == run_episode(6, staghunt, cfg, 60, root.child(k), snapshot_stride=20)

    def test_batching_and_workers_do_not_change_results(self, friends2, dynamics_factory):
        cfg = dynamics_factory(noise=0.01)
        baseline = run_ensemble(4, friends2, cfg, 100, runs=7, seed=9, batch_size=7)
        split = run_ensemble(4, friends2, cfg, 100, runs=7, seed=9, batch_size=2, workers=3)
        assert baseline == split

    def test_distinct_replicas(self, friends1, dynamics_factory):
        records = run_ensemble(3, friends1, dynamics_factory(), 50, runs=3, seed=1)
        assert records[0] != records[1]

    def test_rejects_zero_runs(self, friends1, dynamics_factory):
        with pytest.raises(ConfigurationError, match="runs"):
            run_ensemble(3, friends1, dynamics_factory(), 5, runs=0, seed=1)

    def test_uses_thread_pool_for_many_batches(self, friends1, dynamics_factory, mocker):
        pool = mocker.patch('network_formation.engine.ThreadPoolExecutor')
        pool.return_value.__enter__.return_value.map.side_effect = lambda f, items: map(f, items)
        records = run_ensemble(3, friends1, dynamics_factory(), 5, runs=4, seed=1,
                               batch_size=2, workers=2)
        pool.assert_called_once_with(max_workers=2)
        assert len(records) == 4


class TestExpectedNextProbabilities:
    def test_friends1_is_a_martingale(self, friends1, dynamics_factory, weights_3):
        expected = expected_next_probabilities(weights_3, friends1, dynamics_factory())
        assert np.allclose(expected, linear_probabilities(weights_3).p)

    def test_friends2_drifts(self, friends2, dynamics_factory, weights_3):
        expected = expected_next_probabilities(weights_3, friends2, dynamics_factory())
        assert not np.allclose(expected, linear_probabilities(weights_3).p)
        assert np.allclose(expected.sum(axis=1), 1.0)

    def test_rejects_large_populations(self, friends1, dynamics_factory):
        with pytest.raises(InvalidStateError):
            expected_next_probabilities(new_uniform_state(7), friends1, dynamics_factory())


def test_record_rejects_unordered_rounds():
    w = new_uniform_state(2)
    with pytest.raises(InvalidStateError):
        TrajectoryRecord(
            rounds=(0, 5, 3), matrices=np.zeros((3, 2, 2)), profiles=np.zeros((3, 2)),
            stride=1, total_rounds=3, final_weights=w,
            final_profile=StrategyProfile.trivial(2), final_probabilities=np.zeros((2, 2)),
        )

    def test_two_friends_reinforce_each_other(self, friends2, dynamics_factory, rng):
        updated, _, ledger = run_round(new_uniform_state(2), StrategyProfile.trivial(2), friends2,
                                       dynamics_factory(), rng)
        assert updated.w.tolist() == [[0.0, 3.0], [3.0, 0.0]]
        assert ledger.payoffs == (2.0, 2.0)

    def test_two_enemies_resist_each_other(self, dynamics_factory, rng):
        spec = GameSpec.of(GameName.ENEMIES_I)
        updated, _, _ = run_round(new_uniform_state(2), StrategyProfile.trivial(2), spec,
                                  dynamics_factory(rule=Rule.RESISTANCE), rng)
        assert updated.w.tolist() == [[0.0, 2.0], [2.0, 0.0]]

    def test_one_round_hosts_follow_probabilities(self, friends1, dynamics_factory, weights_3):
        runs = 4000
        records = run_ensemble(3, friends1, dynamics_factory(), 1, runs, seed=17,
                               initial_weights=weights_3)
        # Friends I adds one unit to the visitor's weight on its host
        visits = np.mean([r.final_weights.w - weights_3.w for r in records], axis=0)
        p = linear_probabilities(weights_3).p
        se = np.sqrt(p * (1 - p) / runs)
        assert np.all(np.abs(visits - p) <= 3 * se)

    def test_friends2_drift_matches_simulation(self, friends2, dynamics_factory, weights_3):
        runs = 4000
        cfg = dynamics_factory()
        records = run_ensemble(3, friends2, cfg, 1, runs, seed=18, initial_weights=weights_3)
        samples = np.stack([r.final_probabilities for r in records])
        se = samples.std(axis=0, ddof=1) / np.sqrt(runs)
        expected = expected_next_probabilities(weights_3, friends2, cfg)
        assert np.all(np.abs(samples.mean(axis=0) - expected) <= 3 * se + 1e-12)
