"""
Core state types for Network Formation

Weight and probability matrices, agent types, payoff tables, dynamics
configuration and the seeded random source shared by every other module.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import (
    ConfigurationError,
    DegenerateRowError,
    GameSpecError,
    InvalidStateError,
)

ROW_SUM_TOL = 1e-12


class AgentType(str, Enum):
    """Strategy carried by an agent"""
    TRIVIAL = 'Trivial'
    STAG = 'Stag'
    RABBIT = 'Rabbit'

    @property
    def code(self) -> int:
        return TYPE_CODES[self]


TYPE_CODES: Dict[AgentType, int] = {
    AgentType.TRIVIAL: 0,
    AgentType.STAG: 1,
    AgentType.RABBIT: 2,
}
TYPES_BY_CODE: Tuple[AgentType, ...] = (AgentType.TRIVIAL, AgentType.STAG, AgentType.RABBIT)


class Rule(str, Enum):
    """Probability and weight-update rule"""
    LINEAR = 'Linear'
    RESISTANCE = 'Resistance'
    LOGLIK = 'LogLikelihood'
    TRANSFER = 'Transfer'


class GameName(str, Enum):
    FRIENDS_I = 'FriendsI'
    FRIENDS_II = 'FriendsII'
    ENEMIES_I = 'EnemiesI'
    ENEMIES_II = 'EnemiesII'
    STAG_HUNT = 'StagHunt'


def _off_diagonal(n: int) -> np.ndarray:
    return ~np.eye(n, dtype=bool)


def _as_square(values, name: str) -> np.ndarray:
    array = np.array(values, dtype=float)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise InvalidStateError(f"{name} must be a square matrix, got shape {array.shape}")
    if array.shape[0] < 2:
        raise InvalidStateError(f"{name} needs at least 2 agents, got {array.shape[0]}")
    return array


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """
    n×n weights (or resistances) with a zero diagonal.

    Entries are nonnegative unless ``allow_negative`` is set, which only the
    log-likelihood rule uses.
    """
    w: np.ndarray
    allow_negative: bool = False

    def __post_init__(self):
        array = _as_square(self.w, 'weight matrix')
        if not np.all(np.isfinite(array)):
            raise InvalidStateError("weight matrix has non-finite entries")
        if np.any(np.diag(array) != 0):
            raise InvalidStateError("weight matrix must have a zero diagonal")
        if not self.allow_negative and np.any(array < 0):
            raise InvalidStateError("weight matrix has a negative entry")
        array.setflags(write=False)
        object.__setattr__(self, 'w', array)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    def validate_for(self, rule: Rule) -> None:
        """Check the row conditions the given rule relies on"""
        mask = _off_diagonal(self.n)
        if rule is Rule.LOGLIK:
            return
        if self.allow_negative and np.any(self.w < 0):
            raise InvalidStateError(f"negative weights are only allowed under {Rule.LOGLIK.value}")
        if rule is Rule.RESISTANCE:
            if np.any(self.w[mask] <= 0):
                raise DegenerateRowError("resistance rule needs every off-diagonal resistance > 0")
            return
        if np.any(self.w.sum(axis=1) <= 0):
            raise DegenerateRowError("every row needs a strictly positive off-diagonal weight")
        if rule is Rule.TRANSFER:
            if self.n != 3:
                raise InvalidStateError("the transfer model is defined for three agents only")
            if np.any(self.w != np.round(self.w)):
                raise InvalidStateError("the transfer model needs integer ball counts")

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightMatrix):
            return NotImplemented
        return np.array_equal(self.w, other.w)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ProbabilityMatrix:
    """Row-stochastic visit probabilities with a zero diagonal"""
    p: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        array = _as_square(self.p, 'probability matrix')
        if self.check:
            if np.any(np.diag(array) != 0):
                raise InvalidStateError("probability matrix must have a zero diagonal")
            if np.any(array < -ROW_SUM_TOL) or np.any(array > 1 + ROW_SUM_TOL):
                raise InvalidStateError("probabilities must lie in [0, 1]")
            if np.any(np.abs(array.sum(axis=1) - 1.0) > ROW_SUM_TOL):
                raise InvalidStateError("every row must sum to 1")
        array.setflags(write=False)
        object.__setattr__(self, 'p', array)

    @classmethod
    def uniform(cls, n: int) -> 'ProbabilityMatrix':
        values = np.full((n, n), 1.0 / (n - 1))
        np.fill_diagonal(values, 0.0)
        return cls(values)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProbabilityMatrix):
            return NotImplemented
        return np.array_equal(self.p, other.p)

    __hash__ = None


@dataclass(frozen=True)
class StrategyProfile:
    """Type of every agent, in agent order"""
    types: Tuple[AgentType, ...]

    def __post_init__(self):
        types = tuple(AgentType(t) for t in self.types)
        if len(types) < 2:
            raise InvalidStateError("a profile needs at least 2 agents")
        kinds = set(types)
        if AgentType.TRIVIAL in kinds and len(kinds) > 1:
            raise InvalidStateError("Trivial agents cannot be mixed with Stag/Rabbit agents")
        object.__setattr__(self, 'types', types)

    @classmethod
    def trivial(cls, n: int) -> 'StrategyProfile':
        return cls((AgentType.TRIVIAL,) * n)

    @classmethod
    def split(cls, n: int, stag_count: Optional[int] = None) -> 'StrategyProfile':
        """First ``stag_count`` agents hunt stag, the rest hunt rabbit"""
        if stag_count is None:
            stag_count = n // 2
        if not 0 <= stag_count <= n:
            raise InvalidStateError(f"stag_count must be in [0, {n}], got {stag_count}")
        return cls((AgentType.STAG,) * stag_count + (AgentType.RABBIT,) * (n - stag_count))

    @classmethod
    def from_codes(cls, codes: Iterable[int]) -> 'StrategyProfile':
        return cls(tuple(TYPES_BY_CODE[int(c)] for c in codes))

    @property
    def n(self) -> int:
        return len(self.types)

    @property
    def codes(self) -> np.ndarray:
        return np.array([t.code for t in self.types], dtype=np.int64)

    def count(self, agent_type: AgentType) -> int:
        return sum(1 for t in self.types if t is agent_type)

    def __len__(self) -> int:
        return len(self.types)


# (visitor payoff, host payoff) keyed by (visitor type, host type)
_PAYOFF_TABLES: Dict[GameName, Dict[Tuple[AgentType, AgentType], Tuple[float, float]]] = {
    GameName.FRIENDS_I: {(AgentType.TRIVIAL, AgentType.TRIVIAL): (1.0, 0.0)},
    GameName.FRIENDS_II: {(AgentType.TRIVIAL, AgentType.TRIVIAL): (1.0, 1.0)},
    GameName.ENEMIES_I: {(AgentType.TRIVIAL, AgentType.TRIVIAL): (-1.0, 0.0)},
    GameName.ENEMIES_II: {(AgentType.TRIVIAL, AgentType.TRIVIAL): (-1.0, -1.0)},
    GameName.STAG_HUNT: {
        (AgentType.STAG, AgentType.STAG): (1.0, 1.0),
        (AgentType.STAG, AgentType.RABBIT): (0.0, 0.75),
        (AgentType.RABBIT, AgentType.STAG): (0.75, 0.0),
        (AgentType.RABBIT, AgentType.RABBIT): (0.75, 0.75),
    },
}


@dataclass(frozen=True, eq=False)
class GameSpec:
    """
    Payoff rule for one visit.

    ``visitor_table`` and ``host_table`` are 3×3 arrays indexed by type code;
    cells for type pairs the game does not define hold NaN.
    """
    name: GameName
    visitor_table: np.ndarray = field(repr=False)
    host_table: np.ndarray = field(repr=False)

    @classmethod
    def of(cls, name: Union[str, GameName]) -> 'GameSpec':
        try:
            game = GameName(name)
        except ValueError:
            raise GameSpecError(f"unknown game '{name}'") from None
        visitor = np.full((3, 3), np.nan)
        host = np.full((3, 3), np.nan)
        for (v_type, h_type), (v_pay, h_pay) in _PAYOFF_TABLES[game].items():
            visitor[v_type.code, h_type.code] = v_pay
            host[v_type.code, h_type.code] = h_pay
        visitor.setflags(write=False)
        host.setflags(write=False)
        return cls(game, visitor, host)

    @property
    def valid_types(self) -> Tuple[AgentType, ...]:
        return tuple(sorted({v for v, _ in _PAYOFF_TABLES[self.name]}, key=TYPE_CODES.get))

    @property
    def reinforces_host(self) -> bool:
        """True when some host payoff is nonzero, i.e. updates are symmetric"""
        return bool(np.any(np.nan_to_num(self.host_table) != 0))

    def payoff(self, visitor_type: AgentType, host_type: AgentType) -> Tuple[float, float]:
        try:
            return _PAYOFF_TABLES[self.name][(AgentType(visitor_type), AgentType(host_type))]
        except (KeyError, ValueError):
            raise GameSpecError(
                f"{self.name.value} is not defined for ({visitor_type}, {host_type})"
            ) from None

    def default_profile(self, n: int, stag_count: Optional[int] = None) -> StrategyProfile:
        if self.name is GameName.STAG_HUNT:
            return StrategyProfile.split(n, stag_count)
        return StrategyProfile.trivial(n)

    def check_profile(self, profile: StrategyProfile) -> None:
        allowed = set(self.valid_types)
        for index, agent_type in enumerate(profile.types):
            if agent_type not in allowed:
                raise GameSpecError(
                    f"agent {index} has type {agent_type.value}, not valid for {self.name.value}"
                )

    def __eq__(self, other) -> bool:
        if not isinstance(other, GameSpec):
            return NotImplemented
        return self.name is other.name

    def __hash__(self) -> int:
        return hash(self.name)


@dataclass(frozen=True)
class DynamicsConfig:
    """
    Rule selector plus its parameters.

    ``discount`` = 1 means no discounting, ``noise`` = 0 no noise and
    ``revision_prob`` = 0 frozen strategies. ``graph_eps`` of None means
    1/(4n) once the population size is known.
    """
    rule: Rule = Rule.LINEAR
    discount: float = 1.0
    noise: float = 0.0
    revision_prob: float = 0.0
    graph_eps: Optional[float] = None
    init_weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'rule', Rule(self.rule))
        if not 0.0 < self.discount <= 1.0:
            raise ConfigurationError(f"must be in (0, 1], got {self.discount}", key='discount')
        if not 0.0 <= self.noise < 1.0:
            raise ConfigurationError(f"must be in [0, 1), got {self.noise}", key='noise')
        if not 0.0 <= self.revision_prob <= 1.0:
            raise ConfigurationError(
                f"must be in [0, 1], got {self.revision_prob}", key='revision_prob'
            )
        if not self.init_weight > 0:
            raise ConfigurationError(f"must be positive, got {self.init_weight}", key='init_weight')
        if self.graph_eps is not None and not self.graph_eps > 0:
            raise ConfigurationError(f"must be positive, got {self.graph_eps}", key='graph_eps')
        if self.discount < 1.0 and self.rule in (Rule.RESISTANCE, Rule.TRANSFER):
            raise ConfigurationError(
                f"discounting is only defined for the {Rule.LINEAR.value} and "
                f"{Rule.LOGLIK.value} rules",
                key='discount',
            )

    def graph_threshold(self, n: int) -> float:
        eps = self.graph_eps if self.graph_eps is not None else 1.0 / (4 * n)
        if not 0.0 < eps < 1.0 / (2 * n):
            raise ConfigurationError(f"must be in (0, 1/(2n)) = (0, {1.0 / (2 * n):.6g})",
                                     key='graph_eps')
        return eps


class RandomSource:
    """
    Seeded generator with deterministic child streams.

    A child for replica k depends only on (seed, k), so replicas draw the same
    numbers no matter how an ensemble is split up or scheduled.
    """

    def __init__(self, seed: int, spawn_key: Sequence[int] = ()):
        seed = int(seed)
        if not 0 <= seed < 2 ** 64:
            raise ConfigurationError(f"must be a 64-bit unsigned integer, got {seed}", key='seed')
        self.seed = seed
        self.spawn_key = tuple(int(k) for k in spawn_key)
        sequence = np.random.SeedSequence(seed, spawn_key=self.spawn_key)
        self.stream = np.random.Generator(np.random.PCG64(sequence))

    def child(self, k: int) -> 'RandomSource':
        return RandomSource(self.seed, self.spawn_key + (k,))

    def uniforms(self, shape) -> np.ndarray:
        return self.stream.random(shape)

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, spawn_key={self.spawn_key})"


def new_uniform_state(n: int, w0: float = 1.0) -> WeightMatrix:
    """All off-diagonal weights equal to ``w0``"""
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise InvalidStateError(f"population must have at least 2 agents, got {n}")
    if not w0 > 0:
        raise InvalidStateError(f"initial weight must be positive, got {w0}")
    values = np.full((n, n), float(w0))
    np.fill_diagonal(values, 0.0)
    return WeightMatrix(values)
