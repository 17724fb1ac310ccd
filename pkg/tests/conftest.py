"""
Pytest configuration file
"""
import numpy as np
import pytest
import factory

from network_formation.cli import ExperimentConfig
from network_formation.core import (
    DynamicsConfig,
    GameName,
    GameSpec,
    RandomSource,
    Rule,
    WeightMatrix,
)


class DynamicsConfigFactory(factory.Factory):
    class Meta:
        model = DynamicsConfig

    rule = Rule.LINEAR
    discount = 1.0
    noise = 0.0
    revision_prob = 0.0
    graph_eps = None
    init_weight = 1.0


class ExperimentConfigFactory(factory.Factory):
    class Meta:
        model = ExperimentConfig

    model = 'friends1'
    agents = 3
    rounds = 50
    runs = 4
    seed = factory.Sequence(lambda n: n)
    stride = 10
    out = 'results'
    format = 'json'


@pytest.fixture
def dynamics_factory():
    return DynamicsConfigFactory


@pytest.fixture
def experiment_factory(tmp_path):
    class LocalExperimentFactory(ExperimentConfigFactory):
        out = str(tmp_path / 'out')
    return LocalExperimentFactory


@pytest.fixture
def rng():
    return RandomSource(12345)


@pytest.fixture
def friends1():
    return GameSpec.of(GameName.FRIENDS_I)


@pytest.fixture
def friends2():
    return GameSpec.of(GameName.FRIENDS_II)


@pytest.fixture
def staghunt():
    return GameSpec.of(GameName.STAG_HUNT)


@pytest.fixture
def weights_3():
    """Small asymmetric weight matrix for three agents"""
    return WeightMatrix(np.array([
        [0.0, 1.0, 3.0],
        [2.0, 0.0, 2.0],
        [4.0, 1.0, 0.0],
    ]))
