"""
Desk-scale checks of the limit behaviour of every model

These run full presets and take minutes; run them with ``pytest -m slow``.
"""
import numpy as np
import pytest

from network_formation.analysis import StateLabel
from network_formation.cli import build_config, run_preset
from network_formation.markov import binomial_law, ehrenfest_transition_matrix, stationary_distribution
from network_formation.presets import execute


def _execute(name, **overrides):
    return execute(build_config(preset=name, overrides=overrides))


@pytest.mark.slow
class TestFriends:
    def test_visitor_only_rows_are_dirichlet(self):
        summary, _ = _execute('friends1-n3')
        assert summary.statistics['ks_pvalue'] > 0.001
        assert summary.statistics['oracle_ks_pvalue'] > 0.001
        assert abs(summary.statistics['row_correlation_p01_p10']) < 0.07

    def test_ten_agent_marginals_are_beta(self):
        summary, _ = _execute('friends1-n10')
        assert summary.statistics['ks_pvalue'] > 0.001

    def test_symmetric_reinforcement_limit(self):
        summary, _ = _execute('friends2-n3')
        assert summary.statistics['max_abs_mean_entry_minus_half'] < 0.05
        defects = summary.statistics['mean_symmetry_defect_by_checkpoint']
        assert len(defects) == 3
        assert defects[0] > defects[1] > defects[2]

    def test_trap_fraction_scaling(self):
        # lingering near a hub decays like t^(-1/3): a ratio of 2 between t = 1000 and 8000
        summary, _ = _execute('friends2-n3', rounds=8_000, runs=20_000)
        assert summary.statistics['trap_fraction_t1000'] > 0
        assert 1.3 <= summary.statistics['trap_fraction_ratio'] <= 3.1


@pytest.mark.slow
class TestEnemies:
    @pytest.mark.parametrize('name,rank', [
        ('enemies1-resistance', 15),
        ('enemies2-resistance', 9),
    ])
    def test_uniform_limit_and_deviation_rank(self, name, rank):
        summary, _ = _execute(name)
        assert summary.statistics['fraction_within_0.05_of_uniform'] >= 0.99
        assert summary.statistics['expected_deviation_rank'] == rank
        assert summary.statistics['deviation_rank'] == rank


class TestEhrenfest:
    def test_exact_vectors(self):
        vector = stationary_distribution(ehrenfest_transition_matrix(2))
        assert np.max(np.abs(vector - [0.25, 0.5, 0.25])) < 1e-12
        ten = stationary_distribution(ehrenfest_transition_matrix(10))
        assert np.max(np.abs(ten - binomial_law(10))) < 1e-8

    def test_preset_prints_stationary_vector(self, tmp_path):
        summary, _ = run_preset('ehrenfest-2ball', {'rounds': 1_000, 'runs': 2,
                                                    'out': str(tmp_path)})
        assert summary.statistics['stationary_vector'] == pytest.approx([0.25, 0.5, 0.25])

    @pytest.mark.slow
    def test_simulated_occupancy(self):
        summary, _ = _execute('ehrenfest-2ball')
        assert summary.statistics['occupancy_total_variation'] < 0.02

    @pytest.mark.slow
    def test_mixing(self):
        summary, _ = _execute('ehrenfest-mixing')
        assert summary.statistics['max_error_vs_binomial'] < 1e-8
        assert summary.statistics['empirical_tv_at_mixing_steps'] < (
            summary.statistics['exact_tv_at_mixing_steps'] + 0.05)


@pytest.mark.slow
class TestDiscounting:
    def test_symmetric_reinforcement_settles_into_pairs_and_stars(self):
        summary, _ = _execute('discounted-friends2')
        assert summary.statistics['pairs_and_stars_fraction'] >= 0.95

    def test_visitor_only_reinforcement_fixates(self):
        summary, _ = _execute('discounted-friends1')
        assert summary.fraction(StateLabel.FIXATION) >= 0.95

    def test_loglik_rule_fixates(self):
        summary, _ = _execute('loglik-friends1')
        assert summary.fraction(StateLabel.FIXATION) >= 0.95

    def test_discounted_loglik_settles_on_partners(self):
        summary, _ = _execute('discounted-loglik-friends2')
        assert summary.statistics['settled_fraction'] >= 0.95

    def test_pairings_are_stochastically_stable(self):
        summary, _ = _execute('noisy-discounted-friends2')
        assert summary.statistics['all_pairs_share_of_classified'] > 0.8


@pytest.mark.slow
class TestStagHunt:
    def test_segregation_without_discount(self):
        summary, _ = _execute('staghunt-frozen')
        medians = summary.statistics['median_cross_type_visit_by_checkpoint']
        assert len(medians) == 3
        assert medians[0] > medians[1] > medians[2]
        assert medians[2] < 0.02

    def test_discount_sends_rabbit_hunters_to_rabbit_hunters(self):
        summary, _ = _execute('staghunt-discounted')
        # a rabbit hunter visited by a stag hunter early can still lock onto that stag hunter
        assert summary.statistics['rabbit_to_rabbit_visit_share'] >= 0.75

    def test_frequent_revision_favours_rabbit(self):
        summary, _ = _execute('staghunt-coevolve-q1')
        assert 0.12 <= summary.statistics['all_stag_fraction'] <= 0.32
        assert summary.statistics['absorbed_fraction'] == 1.0

    def test_rare_revision_favours_stag(self):
        summary, _ = _execute('staghunt-coevolve-q01')
        assert 0.55 <= summary.statistics['all_stag_fraction'] <= 0.85
        # a last holdout revises with chance 0.01 per round, so a few runs are still mixed
        assert summary.statistics['absorbed_fraction'] >= 0.98

    @pytest.mark.parametrize('q', [0.1, 0.01])
    def test_heavy_initial_weights(self, q):
        summary, _ = _execute('staghunt-heavy-weights', revision_prob=q)
        assert summary.statistics['all_stag_fraction'] <= 0.03


@pytest.mark.slow
def test_noise_pulls_towards_uniform():
    noisy, _ = _execute('noisy-friends2')
    plain, _ = _execute('noisy-friends2', noise=0.0)
    assert (noisy.statistics['median_distance_to_uniform']
            < plain.statistics['median_distance_to_uniform'])
