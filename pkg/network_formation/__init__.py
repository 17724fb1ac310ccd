"""
Network Formation - reinforcement-driven network formation experiments
"""
from .version import VERSION
from .core import (
    AgentType,
    DynamicsConfig,
    GameName,
    GameSpec,
    ProbabilityMatrix,
    RandomSource,
    Rule,
    StrategyProfile,
    WeightMatrix,
)
from .engine import TrajectoryRecord, run_ensemble, run_episode, run_round
from .analysis import EnsembleSummary, StateLabel, classify_state, summarize_ensemble

__version__ = VERSION

__all__ = [
    'AgentType',
    'DynamicsConfig',
    'EnsembleSummary',
    'GameName',
    'GameSpec',
    'ProbabilityMatrix',
    'RandomSource',
    'Rule',
    'StateLabel',
    'StrategyProfile',
    'TrajectoryRecord',
    'WeightMatrix',
    'classify_state',
    'run_ensemble',
    'run_episode',
    'run_round',
    'summarize_ensemble',
]
