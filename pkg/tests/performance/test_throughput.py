"""
Throughput of batched round execution
"""
import pytest

from network_formation.core import GameName, GameSpec, Rule
from network_formation.engine import run_ensemble
from network_formation.presets import execute
from network_formation.cli import build_config


@pytest.mark.benchmark(group='ensemble')
def test_friends2_batched_ensemble(benchmark, dynamics_factory):
    spec = GameSpec.of(GameName.FRIENDS_II)
    cfg = dynamics_factory(discount=0.9)
    records = benchmark(run_ensemble, 10, spec, cfg, 500, 256, 1, snapshot_stride=500)
    assert len(records) == 256


@pytest.mark.benchmark(group='ensemble')
def test_resistance_ensemble(benchmark, dynamics_factory):
    spec = GameSpec.of(GameName.ENEMIES_II)
    cfg = dynamics_factory(rule=Rule.RESISTANCE)
    records = benchmark(run_ensemble, 5, spec, cfg, 500, 256, 1, snapshot_stride=500)
    assert len(records) == 256


@pytest.mark.benchmark(group='preset')
def test_staghunt_coevolution_preset(benchmark):
    config = build_config(preset='staghunt-coevolve-q1', overrides={'runs': 100, 'rounds': 200})
    summary, _ = benchmark(execute, config)
    assert summary.replicas == 100
