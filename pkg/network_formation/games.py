"""
Payoff tables and strategy revision
"""
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from .core import (
    TYPES_BY_CODE,
    AgentType,
    GameSpec,
    RandomSource,
    StrategyProfile,
)
from .exceptions import GameSpecError, InvalidStateError


@dataclass(frozen=True)
class RoundPayoffLedger:
    """Payoffs collected in one round, as visitor and as host"""
    payoffs: Tuple[float, ...]
    type_means: Dict[AgentType, float]

    @classmethod
    def from_payoffs(cls, profile: StrategyProfile, payoffs: Sequence[float]) -> 'RoundPayoffLedger':
        payoffs = tuple(float(x) for x in payoffs)
        if len(payoffs) != profile.n:
            raise InvalidStateError(
                f"ledger has {len(payoffs)} entries for {profile.n} agents"
            )
        totals: Dict[AgentType, float] = {}
        counts: Dict[AgentType, int] = {}
        for agent_type, value in zip(profile.types, payoffs):
            totals[agent_type] = totals.get(agent_type, 0.0) + value
            counts[agent_type] = counts.get(agent_type, 0) + 1
        means = {t: totals[t] / counts[t] for t in totals}
        return cls(payoffs, means)


def payoff(spec: GameSpec, visitor_type: AgentType, host_type: AgentType) -> Tuple[float, float]:
    """(visitor payoff, host payoff) for one visit"""
    return spec.payoff(visitor_type, host_type)


def game_payoffs(spec: GameSpec, codes: np.ndarray, hosts: np.ndarray):
    """Visitor and host payoffs for a stack of rounds; codes and hosts are (R, n)"""
    host_codes = np.take_along_axis(codes, hosts, axis=-1)
    visitor_pay = spec.visitor_table[codes, host_codes]
    host_pay = spec.host_table[codes, host_codes]
    if np.any(np.isnan(visitor_pay)):
        raise GameSpecError(f"profile contains types not valid for {spec.name.value}")
    return visitor_pay, host_pay


def round_payoffs(hosts: np.ndarray, visitor_pay: np.ndarray, host_pay: np.ndarray) -> np.ndarray:
    """Per-agent payoff of a round: own visit plus every visit received"""
    replicas, n = hosts.shape
    flat = (np.arange(replicas)[:, None] * n + hosts).ravel()
    received = np.bincount(flat, weights=host_pay.ravel(), minlength=replicas * n)
    return visitor_pay + received.reshape(replicas, n)


def revise_types(codes: np.ndarray, payoffs: np.ndarray, q: float,
                 uniforms: np.ndarray) -> np.ndarray:
    """
    Imitate the best type of the previous round.

    An agent revises when its uniform falls below ``q`` and then adopts the
    type with the highest mean payoff among types still present. Ties keep
    the current type. All arrays are (R, n).
    """
    if q == 0:
        return codes
    means = np.full((codes.shape[0], len(TYPES_BY_CODE)), -np.inf)
    for code in range(len(TYPES_BY_CODE)):
        members = codes == code
        counts = members.sum(axis=-1)
        totals = np.where(members, payoffs, 0.0).sum(axis=-1)
        means[:, code] = np.where(counts > 0, totals / np.maximum(counts, 1), -np.inf)
    best_value = means.max(axis=-1)
    tied = (means == best_value[:, None]).sum(axis=-1) > 1
    best = means.argmax(axis=-1)
    revising = (uniforms < q) & ~tied[:, None]
    return np.where(revising, best[:, None], codes)


def strategy_revision(profile: StrategyProfile, ledger: RoundPayoffLedger, q: float,
                      rng: RandomSource) -> StrategyProfile:
    """Each agent, with probability q, switches to the most successful type"""
    if not 0.0 <= q <= 1.0:
        raise InvalidStateError(f"revision probability must be in [0, 1], got {q}")
    uniforms = rng.uniforms(profile.n)
    revised = revise_types(
        profile.codes[None, :],
        np.asarray(ledger.payoffs, dtype=float)[None, :],
        q,
        uniforms[None, :],
    )
    return StrategyProfile.from_codes(revised[0])


def is_coordinated(profile: StrategyProfile) -> bool:
    return len(set(profile.types)) == 1
