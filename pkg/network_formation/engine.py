"""
Round, episode and ensemble execution

Replicas are simulated in vectorized batches. Every replica draws 2n uniforms
per round from its own stream (n for visits, n for strategy revision), so a
replica's trajectory does not depend on the batch it runs in, on the number
of worker threads, or on whether it runs alone through ``run_episode``.
"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import settings
from .core import (
    GameName,
    GameSpec,
    DynamicsConfig,
    ProbabilityMatrix,
    RandomSource,
    Rule,
    StrategyProfile,
    WeightMatrix,
    new_uniform_state,
)
from .dynamics import apply_update, sample_hosts, visit_probabilities
from .exceptions import (
    ConfigurationError,
    InvalidStateError,
    NetworkFormationError,
    RoundExecutionError,
    SignViolationError,
)
from .games import RoundPayoffLedger, game_payoffs, revise_types, round_payoffs

logger = logging.getLogger(__name__)

SeedLike = Union[int, RandomSource]


class EngineConfig:
    """Configuration for episode and ensemble execution"""
    SNAPSHOT_STRIDE = settings.get('SNAPSHOT_STRIDE', 10)
    BATCH_SIZE = settings.get('BATCH_SIZE', 256)
    MAX_WORKERS = settings.get('MAX_WORKERS', 1)
    DRAW_CHUNK = 512
    MAX_ENUMERATION_AGENTS = 6


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """
    Snapshots of one episode plus its final state.

    ``matrices`` has shape (S, n, n) and ``profiles`` (S, n) type codes, one
    row per entry of ``rounds``.
    """
    rounds: Tuple[int, ...]
    matrices: np.ndarray
    profiles: np.ndarray
    stride: int
    total_rounds: int
    final_weights: WeightMatrix
    final_profile: StrategyProfile
    final_probabilities: np.ndarray

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.rounds, self.rounds[1:])):
            raise InvalidStateError("snapshots must be in strictly increasing round order")
        if self.rounds and self.rounds[-1] != self.total_rounds:
            raise InvalidStateError("last snapshot must be taken at the final round")

    @property
    def n(self) -> int:
        return self.final_weights.n

    @property
    def snapshots(self) -> List[Tuple[int, ProbabilityMatrix, StrategyProfile]]:
        return [
            (t, ProbabilityMatrix(self.matrices[k], check=False),
             StrategyProfile.from_codes(self.profiles[k]))
            for k, t in enumerate(self.rounds)
        ]

    @property
    def final_matrix(self) -> ProbabilityMatrix:
        return ProbabilityMatrix(self.final_probabilities, check=False)

    def matrix_at(self, round_index: int) -> np.ndarray:
        try:
            return self.matrices[self.rounds.index(round_index)]
        except ValueError:
            raise KeyError(f"no snapshot at round {round_index}") from None

    def profile_at(self, round_index: int) -> StrategyProfile:
        try:
            return StrategyProfile.from_codes(self.profiles[self.rounds.index(round_index)])
        except ValueError:
            raise KeyError(f"no snapshot at round {round_index}") from None

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrajectoryRecord):
            return NotImplemented
        return (
            self.rounds == other.rounds
            and self.stride == other.stride
            and self.total_rounds == other.total_rounds
            and np.array_equal(self.matrices, other.matrices)
            and np.array_equal(self.profiles, other.profiles)
            and self.final_weights == other.final_weights
            and self.final_profile == other.final_profile
            and np.array_equal(self.final_probabilities, other.final_probabilities)
        )

    __hash__ = None


def _snapshot_rounds(rounds: int, stride: int) -> List[int]:
    marks = list(range(0, rounds + 1, stride))
    if marks[-1] != rounds:
        marks.append(rounds)
    return marks


class _UniformFeed:
    """Hands out each replica's next 2n uniforms, drawing in chunks"""

    def __init__(self, sources: Sequence[RandomSource], width: int, rounds: int):
        self.sources = sources
        self.width = width
        self.remaining = rounds
        self.block = np.empty((len(sources), 0, width))
        self.position = 0

    def take(self) -> np.ndarray:
        if self.position == self.block.shape[1]:
            chunk = min(EngineConfig.DRAW_CHUNK, self.remaining)
            self.block = np.stack([s.uniforms((chunk, self.width)) for s in self.sources])
            self.remaining -= chunk
            self.position = 0
        row = self.block[:, self.position, :]
        self.position += 1
        return row


def _check_start(w: WeightMatrix, profile: StrategyProfile, spec: GameSpec,
                 cfg: DynamicsConfig) -> None:
    if profile.n != w.n:
        raise InvalidStateError(f"profile has {profile.n} agents, weights have {w.n}")
    spec.check_profile(profile)
    w.validate_for(cfg.rule)
    if cfg.rule is Rule.TRANSFER and spec.name not in (GameName.ENEMIES_I, GameName.ENEMIES_II):
        raise SignViolationError("the transfer model only applies to punishing games")


def _advance(w: np.ndarray, codes: np.ndarray, p: np.ndarray, uniforms: np.ndarray,
             spec: GameSpec, cfg: DynamicsConfig):
    n = w.shape[-1]
    hosts = sample_hosts(p, uniforms[:, :n])
    visitor_pay, host_pay = game_payoffs(spec, codes, hosts)
    updated = apply_update(w, hosts, visitor_pay, host_pay, cfg.rule,
                           spec.reinforces_host, cfg.discount)
    payoffs = round_payoffs(hosts, visitor_pay, host_pay)
    revised = revise_types(codes, payoffs, cfg.revision_prob, uniforms[:, n:])
    return updated, revised, payoffs


def _weights(values: np.ndarray, cfg: DynamicsConfig) -> WeightMatrix:
    return WeightMatrix(values, allow_negative=cfg.rule is Rule.LOGLIK)


def run_round(w: WeightMatrix, profile: StrategyProfile, spec: GameSpec,
              cfg: DynamicsConfig, rng: RandomSource
              ) -> Tuple[WeightMatrix, StrategyProfile, RoundPayoffLedger]:
    """
    Play one round: every agent samples a host from the start-of-round
    probabilities, all outcomes are applied in one batch, then types are
    revised.
    """
    _check_start(w, profile, spec, cfg)
    uniforms = rng.uniforms(2 * w.n)[None, :]
    p = visit_probabilities(w.w[None, :, :], cfg.rule, cfg.noise)
    updated, codes, payoffs = _advance(w.w[None, :, :], profile.codes[None, :], p,
                                       uniforms, spec, cfg)
    ledger = RoundPayoffLedger.from_payoffs(profile, payoffs[0])
    return _weights(updated[0], cfg), StrategyProfile.from_codes(codes[0]), ledger


def _run_batch(spec: GameSpec, cfg: DynamicsConfig, rounds: int,
               sources: Sequence[RandomSource], stride: int,
               w0: WeightMatrix, profile: StrategyProfile) -> List[TrajectoryRecord]:
    replicas, n = len(sources), w0.n
    w = np.broadcast_to(w0.w, (replicas, n, n)).copy()
    codes = np.broadcast_to(profile.codes, (replicas, n)).copy()
    marks = _snapshot_rounds(rounds, stride)
    matrices = np.empty((replicas, len(marks), n, n))
    profiles = np.empty((replicas, len(marks), n), dtype=np.int64)
    feed = _UniformFeed(sources, 2 * n, rounds)

    p = visit_probabilities(w, cfg.rule, cfg.noise)
    matrices[:, 0], profiles[:, 0] = p, codes
    mark = 1
    for t in range(rounds):
        try:
            w, codes, _ = _advance(w, codes, p, feed.take(), spec, cfg)
            p = visit_probabilities(w, cfg.rule, cfg.noise)
        except NetworkFormationError as exc:
            raise RoundExecutionError(t + 1, exc) from exc
        if mark < len(marks) and t + 1 == marks[mark]:
            matrices[:, mark], profiles[:, mark] = p, codes
            mark += 1

    return [
        TrajectoryRecord(
            rounds=tuple(marks),
            matrices=matrices[r],
            profiles=profiles[r],
            stride=stride,
            total_rounds=rounds,
            final_weights=_weights(w[r], cfg),
            final_profile=StrategyProfile.from_codes(codes[r]),
            final_probabilities=p[r].copy(),
        )
        for r in range(replicas)
    ]


def _prepare(n: int, spec: GameSpec, cfg: DynamicsConfig, rounds: int,
             snapshot_stride: Optional[int], initial_weights: Optional[WeightMatrix],
             initial_profile: Optional[StrategyProfile], stag_count: Optional[int]):
    if rounds < 0:
        raise ConfigurationError(f"must be >= 0, got {rounds}", key='rounds')
    stride = EngineConfig.SNAPSHOT_STRIDE if snapshot_stride is None else snapshot_stride
    if stride < 1:
        raise ConfigurationError(f"must be positive, got {stride}", key='stride')
    w0 = initial_weights if initial_weights is not None else new_uniform_state(n, cfg.init_weight)
    profile = initial_profile if initial_profile is not None else spec.default_profile(n, stag_count)
    _check_start(w0, profile, spec, cfg)
    return stride, w0, profile


def _source(seed: SeedLike) -> RandomSource:
    return seed if isinstance(seed, RandomSource) else RandomSource(seed)


def run_episode(n: int, spec: GameSpec, cfg: DynamicsConfig, rounds: int, seed: SeedLike,
                snapshot_stride: Optional[int] = None,
                initial_weights: Optional[WeightMatrix] = None,
                initial_profile: Optional[StrategyProfile] = None,
                stag_count: Optional[int] = None) -> TrajectoryRecord:
    """Run ``rounds`` rounds from the uniform state (or the given one)"""
    stride, w0, profile = _prepare(n, spec, cfg, rounds, snapshot_stride,
                                   initial_weights, initial_profile, stag_count)
    return _run_batch(spec, cfg, rounds, [_source(seed)], stride, w0, profile)[0]


def run_ensemble(n: int, spec: GameSpec, cfg: DynamicsConfig, rounds: int, runs: int,
                 seed: SeedLike, snapshot_stride: Optional[int] = None,
                 workers: Optional[int] = None, batch_size: Optional[int] = None,
                 initial_weights: Optional[WeightMatrix] = None,
                 initial_profile: Optional[StrategyProfile] = None,
                 stag_count: Optional[int] = None) -> List[TrajectoryRecord]:
    """
    Run ``runs`` independent replicas; replica k uses child stream k of the
    seed. Results are ordered by k whatever the execution order.
    """
    if runs < 1:
        raise ConfigurationError(f"must be >= 1, got {runs}", key='runs')
    stride, w0, profile = _prepare(n, spec, cfg, rounds, snapshot_stride,
                                   initial_weights, initial_profile, stag_count)
    root = _source(seed)
    batch_size = batch_size or EngineConfig.BATCH_SIZE
    workers = workers or EngineConfig.MAX_WORKERS
    batches = [range(start, min(start + batch_size, runs)) for start in range(0, runs, batch_size)]

    def run_batch(indices: range) -> List[TrajectoryRecord]:
        logger.debug("replicas %d-%d: %d rounds", indices.start, indices.stop - 1, rounds)
        sources = [root.child(k) for k in indices]
        return _run_batch(spec, cfg, rounds, sources, stride, w0, profile)

    logger.info("ensemble %s/%s: n=%d rounds=%d runs=%d workers=%d",
                spec.name.value, cfg.rule.value, n, rounds, runs, workers)
    if workers > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(run_batch, batches))
    else:
        results = [run_batch(indices) for indices in batches]
    records = [record for batch in results for record in batch]
    logger.info("ensemble finished: %d records", len(records))
    return records


def expected_next_probabilities(w: WeightMatrix, spec: GameSpec, cfg: DynamicsConfig,
                                profile: Optional[StrategyProfile] = None) -> np.ndarray:
    """
    Exact E[p(t+1) | w(t)] by enumerating every joint visit outcome.

    Strategy revision is not part of the expectation.
    """
    n = w.n
    if n > EngineConfig.MAX_ENUMERATION_AGENTS:
        raise InvalidStateError(
            f"exact enumeration is limited to {EngineConfig.MAX_ENUMERATION_AGENTS} agents"
        )
    profile = profile if profile is not None else spec.default_profile(n)
    _check_start(w, profile, spec, cfg)
    p = visit_probabilities(w.w, cfg.rule, cfg.noise)
    choices = [[j for j in range(n) if j != i and p[i, j] > 0] for i in range(n)]
    hosts = np.array(list(itertools.product(*choices)), dtype=np.int64)
    chances = np.prod(p[np.arange(n), hosts], axis=-1)
    codes = np.broadcast_to(profile.codes, hosts.shape)
    visitor_pay, host_pay = game_payoffs(spec, codes, hosts)
    stacked = np.broadcast_to(w.w, (len(hosts), n, n))
    updated = apply_update(stacked, hosts, visitor_pay, host_pay, cfg.rule,
                           spec.reinforces_host, cfg.discount)
    return np.tensordot(chances, visit_probabilities(updated, cfg.rule, cfg.noise), axes=1)
