"""
Named experiment presets

Each preset pins the defaults of one experiment and may add statistics of
its own on top of the generic ensemble summary.
"""
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .analysis import (
    EnsembleSummary,
    StateLabel,
    Statistic,
    beta_marginal_test,
    covariance_rank,
    cross_type_visit_probability,
    deviation_rank_expected,
    dirichlet_marginal_shapes,
    distance_to_uniform,
    ks_uniformity_test,
    occupancy,
    row_correlation,
    scaled_deviations,
    summarize_ensemble,
    symmetry_defect,
    trap_fraction,
)
from .core import AgentType, GameName, GameSpec, RandomSource, Rule
from .engine import TrajectoryRecord, run_ensemble
from .exceptions import UnknownPresetError
from .markov import (
    binomial_law,
    ehrenfest_transition_matrix,
    empirical_law,
    mixing_distance,
    mixing_steps,
    simulate_counts,
    stationary_distribution,
    total_variation,
)

if TYPE_CHECKING:
    from .cli import ExperimentConfig

logger = logging.getLogger(__name__)

ReportFn = Callable[[List[TrajectoryRecord], 'ExperimentConfig'], Dict[str, Statistic]]
RunnerFn = Callable[['ExperimentConfig'], EnsembleSummary]

MODELS: Dict[str, Tuple[GameName, Rule]] = {
    'friends1': (GameName.FRIENDS_I, Rule.LINEAR),
    'friends2': (GameName.FRIENDS_II, Rule.LINEAR),
    'enemies1': (GameName.ENEMIES_I, Rule.RESISTANCE),
    'enemies2': (GameName.ENEMIES_II, Rule.RESISTANCE),
    'enemies1-transfer': (GameName.ENEMIES_I, Rule.TRANSFER),
    'friends1-loglik': (GameName.FRIENDS_I, Rule.LOGLIK),
    'friends2-loglik': (GameName.FRIENDS_II, Rule.LOGLIK),
    'staghunt': (GameName.STAG_HUNT, Rule.LINEAR),
}

CHECKPOINTS = (1_000, 10_000, 100_000)


@dataclass(frozen=True)
class Preset:
    """One reproducible experiment"""
    name: str
    claim: str
    defaults: Dict[str, Any] = field(default_factory=dict)
    report: Optional[ReportFn] = None
    runner: Optional[RunnerFn] = None


_registry: Dict[str, Preset] = {}


def register_preset(name: str, claim: str, runner: bool = False, **defaults: Any):
    """Register the decorated function as the report (or runner) of a preset"""
    def decorator(func: Callable) -> Callable:
        if name in _registry:
            raise ValueError(f"preset '{name}' is already registered")
        _registry[name] = Preset(
            name=name,
            claim=claim,
            defaults=defaults,
            report=None if runner else func,
            runner=func if runner else None,
        )
        return func
    return decorator


def get_preset(name: str) -> Preset:
    try:
        return _registry[name]
    except KeyError:
        raise UnknownPresetError(name) from None


def all_presets() -> List[Preset]:
    return [_registry[name] for name in sorted(_registry)]


def execute(config: 'ExperimentConfig') -> Tuple[EnsembleSummary, List[TrajectoryRecord]]:
    """Run the ensemble a configuration describes and summarize it"""
    preset = get_preset(config.preset) if config.preset else None
    if preset is not None and preset.runner is not None:
        return preset.runner(config), []

    game, _ = MODELS[config.model]
    dynamics = config.dynamics()
    records = run_ensemble(
        config.agents, GameSpec.of(game), dynamics, config.rounds, config.runs, config.seed,
        snapshot_stride=config.stride, workers=config.workers, stag_count=config.stag_count,
    )
    summary = summarize_ensemble(records, dynamics.graph_threshold(config.agents),
                                 config.fixation_tol)
    if preset is not None and preset.report is not None:
        summary.statistics.update(preset.report(records, config))
    return summary, records


def _checkpoints(records: List[TrajectoryRecord]) -> List[int]:
    available = set(records[0].rounds)
    return [t for t in CHECKPOINTS if t in available]


def _entries(records: List[TrajectoryRecord], i: int, j: int) -> np.ndarray:
    return np.array([r.final_probabilities[i, j] for r in records])


# Reinforcement of the visitor only: Dirichlet rows

def _dirichlet_report(records: List[TrajectoryRecord], config: 'ExperimentConfig'):
    n = config.agents
    a, b = dirichlet_marginal_shapes(n)
    entries = _entries(records, 0, 1)
    ks_d, ks_p = ks_uniformity_test(entries) if n == 3 else beta_marginal_test(entries, a, b)
    oracle_rng = RandomSource(config.seed).child(config.runs)
    oracle = oracle_rng.stream.dirichlet(np.ones(n - 1), size=len(records))[:, 0]
    oracle_d, oracle_p = beta_marginal_test(oracle, a, b)
    maxima = np.array([r.final_probabilities.max(axis=1) for r in records])
    return {
        'ks_statistic': ks_d,
        'ks_pvalue': ks_p,
        'oracle_ks_statistic': oracle_d,
        'oracle_ks_pvalue': oracle_p,
        'row_correlation_p01_p10': row_correlation(entries, _entries(records, 1, 0)),
        'share_agents_favoring_one_partner': float(np.mean(maxima > 0.5)),
    }


register_preset('friends1-n3', 'visitor-only reinforcement, 3 agents: Dirichlet(1,1) rows',
                model='friends1', agents=3, rounds=10_000, runs=2_000,
                stride=10_000)(_dirichlet_report)
register_preset('friends1-n10', 'visitor-only reinforcement, 10 agents: Beta(1,8) marginals',
                model='friends1', agents=10, rounds=1_000, runs=500,
                stride=1_000)(_dirichlet_report)


# Symmetric reinforcement: slow approach to symmetric limits

def _symmetric_limit_report(records: List[TrajectoryRecord], config: 'ExperimentConfig'):
    n = config.agents
    checkpoints = _checkpoints(records)
    mask = ~np.eye(n, dtype=bool)
    finals = np.stack([r.final_probabilities for r in records])
    stats: Dict[str, Statistic] = {
        'checkpoints': [float(t) for t in checkpoints],
        'mean_symmetry_defect_by_checkpoint': [
            float(np.mean([symmetry_defect(r.matrix_at(t)) for r in records]))
            for t in checkpoints
        ],
        'mean_off_diagonal_entry': float(finals[:, mask].mean()),
        'max_abs_mean_entry_minus_half': float(np.max(np.abs(finals.mean(axis=0)[mask] - 0.5))),
    }
    if n == 3:
        early, late = 1_000, 8_000
        if early in records[0].rounds and late in records[0].rounds:
            near_early = trap_fraction(r.matrix_at(early) for r in records)
            near_late = trap_fraction(r.matrix_at(late) for r in records)
            stats['trap_fraction_t1000'] = near_early
            stats['trap_fraction_t8000'] = near_late
            # undefined until some replica is still near a trap late
            stats['trap_fraction_ratio'] = near_early / near_late if near_late else float('nan')
    return stats


register_preset('friends2-n3', 'symmetric reinforcement, 3 agents: limit 1/2 with traps',
                model='friends2', agents=3, rounds=100_000, runs=500,
                stride=1_000)(_symmetric_limit_report)
register_preset('friends2-n10', 'symmetric reinforcement, 10 agents: symmetric limit',
                model='friends2', agents=10, rounds=10_000, runs=200,
                stride=1_000)(_symmetric_limit_report)


# Punishment under the resistance rule: uniform limit with a CLT

def _uniform_limit_report(records: List[TrajectoryRecord], config: 'ExperimentConfig'):
    symmetric = MODELS[config.model][0] is GameName.ENEMIES_II
    distances = np.array([distance_to_uniform(r.final_probabilities) for r in records])
    stats: Dict[str, Statistic] = {
        'fraction_within_0.05_of_uniform': float(np.mean(distances < 0.05)),
        'expected_deviation_rank': float(deviation_rank_expected(config.agents, symmetric)),
    }
    if len(records) >= 2 and config.rounds > 0:
        stats['deviation_rank'] = float(covariance_rank(scaled_deviations(records)))
    return stats


register_preset('enemies1-resistance', 'visitor punished, resistance rule: uniform limit',
                model='enemies1', agents=5, rounds=10_000, runs=500,
                stride=10_000)(_uniform_limit_report)
register_preset('enemies2-resistance', 'both punished, resistance rule: uniform limit',
                model='enemies2', agents=5, rounds=10_000, runs=500,
                stride=10_000)(_uniform_limit_report)


# Transfer model and the Ehrenfest chain

def _transfer_occupancy_report(records: List[TrajectoryRecord], config: 'ExperimentConfig'):
    balls = int(round(2 * config.init_weight))
    counts = np.zeros(balls + 1)
    for record in records:
        # agent i's state is the number of balls in the urn of its higher-index partner
        for i in range(3):
            partner = max(j for j in range(3) if j != i)
            states = np.rint(record.matrices[:, i, partner] * balls).astype(np.int64)
            counts += np.bincount(states, minlength=balls + 1)
    exact = stationary_distribution(ehrenfest_transition_matrix(balls))
    empirical = counts / counts.sum()
    return {
        'stationary_vector': [float(x) for x in exact],
        'empirical_occupancy': [float(x) for x in empirical],
        'occupancy_total_variation': total_variation(empirical, exact),
    }


register_preset('ehrenfest-2ball', 'three-agent transfer model: stationary vector (1/4, 1/2, 1/4)',
                model='enemies1-transfer', agents=3, rounds=10_000, runs=20,
                init_weight=1.0, stride=1)(_transfer_occupancy_report)


@register_preset('ehrenfest-mixing', 'Ehrenfest urn: binomial law after N log N / 2 steps',
                 runner=True, model='enemies1-transfer', agents=3, rounds=0, runs=2_000,
                 init_weight=10.0)
def _ehrenfest_mixing(config: 'ExperimentConfig') -> EnsembleSummary:
    balls = int(round(config.init_weight))
    steps = mixing_steps(balls)
    exact = stationary_distribution(ehrenfest_transition_matrix(balls))
    binomial = binomial_law(balls)
    root = RandomSource(config.seed)
    # alternate parity so the sample averages two consecutive step laws
    counts = [simulate_counts(balls, steps + (k % 2), root.child(k)) for k in range(config.runs)]
    logger.info("simulated %d Ehrenfest chains of %d balls", config.runs, balls)
    return EnsembleSummary(
        replicas=config.runs,
        statistics={
            'balls': float(balls),
            'mixing_steps': float(steps),
            'stationary_vector': [float(x) for x in exact],
            'max_error_vs_binomial': float(np.max(np.abs(exact - binomial))),
            'exact_tv_at_mixing_steps': mixing_distance(balls, steps),
            'empirical_tv_at_mixing_steps': total_variation(empirical_law(counts, balls), binomial),
        },
    )


# Discounting: fixation, pairs and stars

def _settled_report(records: List[TrajectoryRecord], config: 'ExperimentConfig'):
    summary = summarize_ensemble(records, config.dynamics().graph_threshold(config.agents),
                                 config.fixation_tol)
    settled = (summary.class_counts[StateLabel.PAIRING.value]
               + summary.class_counts[StateLabel.PAIRS_PLUS_STARS.value])
    return {
        'fixation_fraction': summary.fraction(StateLabel.FIXATION),
        'pairs_and_stars_fraction': settled / len(records),
        # pairs, stars, or every agent fixed on a single partner
        'settled_fraction': (settled + summary.class_counts[StateLabel.FIXATION.value])
        / len(records),
    }


register_preset('discounted-friends1', 'discounted visitor-only reinforcement: fixation',
                model='friends1', agents=10, rounds=2_000, runs=500, discount=0.9,
                stride=2_000)(_settled_report)
register_preset('discounted-friends2', 'discounted symmetric reinforcement: pairs and stars',
                model='friends2', agents=10, rounds=2_000, runs=500, discount=0.9,
                stride=2_000)(_settled_report)
register_preset('loglik-friends1', 'log-likelihood rule, visitor-only reinforcement: fixation',
                model='friends1-loglik', agents=10, rounds=1_000, runs=200,
                stride=1_000)(_settled_report)
register_preset('discounted-loglik-friends2',
                'log-likelihood rule, discounted symmetric reinforcement: settles on partners',
                model='friends2-loglik', agents=10, rounds=1_000, runs=200, discount=0.9,
                stride=1_000)(_settled_report)


# Noise

def _noise_report(records: List[TrajectoryRecord], config: 'ExperimentConfig'):
    distances = [distance_to_uniform(r.final_probabilities) for r in records]
    return {'median_distance_to_uniform': float(np.median(distances))}


register_preset('noisy-friends2', 'noisy symmetric reinforcement: uniform is the only stable point',
                model='friends2', agents=4, rounds=10_000, runs=200, noise=0.05,
                stride=10_000)(_noise_report)


def _stability_report(records: List[TrajectoryRecord], config: 'ExperimentConfig'):
    eps = config.dynamics().graph_threshold(config.agents)
    burn_in = config.rounds // 10
    pairing = stars = 0.0
    for record in records:
        shares = occupancy(record, eps, config.fixation_tol, since_round=burn_in)
        pairing += shares.get(StateLabel.PAIRING.value, 0.0)
        stars += shares.get(StateLabel.PAIRS_PLUS_STARS.value, 0.0)
    classified = pairing + stars
    return {
        'pairing_occupancy': pairing / len(records),
        'pairs_plus_stars_occupancy': stars / len(records),
        'all_pairs_share_of_classified': pairing / classified if classified else 0.0,
    }


register_preset('noisy-discounted-friends2',
                'discounted symmetric reinforcement with noise: pairings are stochastically stable',
                model='friends2', agents=4, rounds=100_000, runs=4, discount=0.9,
                noise=0.01, stride=10)(_stability_report)


# Stag Hunt

def _segregation_report(records: List[TrajectoryRecord], config: 'ExperimentConfig'):
    checkpoints = _checkpoints(records) or [config.rounds]
    medians = []
    for t in checkpoints:
        values = np.concatenate([
            cross_type_visit_probability(r.matrix_at(t), r.profile_at(t)) for r in records
        ])
        medians.append(float(np.median(values)))
    rabbit_share = []
    for record in records:
        codes = record.final_profile.codes
        rabbits = codes == AgentType.RABBIT.code
        if rabbits.sum() > 1:
            rabbit_share.append(record.final_probabilities[rabbits][:, rabbits].sum(axis=1).mean())
    return {
        'checkpoints': [float(t) for t in checkpoints],
        'median_cross_type_visit_by_checkpoint': medians,
        'rabbit_to_rabbit_visit_share': float(np.mean(rabbit_share)) if rabbit_share else 0.0,
    }


register_preset('staghunt-frozen', 'fixed types, no discount: hunters segregate by type',
                model='staghunt', agents=10, rounds=100_000, runs=50,
                stride=1_000)(_segregation_report)
register_preset('staghunt-discounted', 'fixed types, discount 0.9: rabbit hunters visit rabbit hunters',
                model='staghunt', agents=10, rounds=2_000, runs=200, discount=0.9,
                stride=1_000)(_segregation_report)


def _coevolution_report(records: List[TrajectoryRecord], config: 'ExperimentConfig'):
    summary = summarize_ensemble(records, config.dynamics().graph_threshold(config.agents),
                                 config.fixation_tol)
    return {
        'all_stag_fraction': summary.fraction('all-Stag'),
        'all_rabbit_fraction': summary.fraction('all-Rabbit'),
        'absorbed_fraction': 1.0 - summary.fraction('mixed'),
    }


register_preset('staghunt-coevolve-q1', 'type revision q = 0.1: mostly all-Rabbit',
                model='staghunt', agents=10, rounds=1_000, runs=500, revision_prob=0.1,
                stride=1_000)(_coevolution_report)
register_preset('staghunt-coevolve-q01', 'type revision q = 0.01: mostly all-Stag',
                model='staghunt', agents=10, rounds=1_000, runs=500, revision_prob=0.01,
                stride=1_000)(_coevolution_report)
register_preset('staghunt-heavy-weights', 'initial weights 1000: Stag almost never wins',
                model='staghunt', agents=10, rounds=1_000, runs=500, revision_prob=0.1,
                init_weight=1_000.0, stride=1_000)(_coevolution_report)
