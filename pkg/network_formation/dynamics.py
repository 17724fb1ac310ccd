"""
Probability rules and weight-update rules

Public functions take and return core types. The underscore kernels work on
arrays of shape (..., n, n) so the engine can run many replicas at once with
the same arithmetic.
"""
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from .core import ProbabilityMatrix, RandomSource, Rule, WeightMatrix
from .exceptions import DegenerateRowError, InvalidStateError, SignViolationError


@dataclass(frozen=True)
class VisitOutcome:
    """One visit and the payoffs it produced"""
    visitor: int
    host: int
    visitor_payoff: float
    host_payoff: float

    def __post_init__(self):
        if self.visitor == self.host:
            raise InvalidStateError(f"agent {self.visitor} cannot visit itself")


def _mask(n: int) -> np.ndarray:
    return ~np.eye(n, dtype=bool)


def _linear(w: np.ndarray) -> np.ndarray:
    totals = w.sum(axis=-1, keepdims=True)
    if np.any(totals <= 0):
        raise DegenerateRowError("a row of weights has no positive entry")
    return w / totals


def _resistance(w: np.ndarray) -> np.ndarray:
    mask = np.broadcast_to(_mask(w.shape[-1]), w.shape)
    if np.any(w[mask] <= 0):
        raise DegenerateRowError("zero resistance has no reciprocal")
    inverse = np.zeros_like(w)
    np.divide(1.0, w, out=inverse, where=mask)
    return inverse / inverse.sum(axis=-1, keepdims=True)


def _loglik(w: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(w)):
        raise InvalidStateError("log-likelihood weights must be finite")
    mask = np.broadcast_to(_mask(w.shape[-1]), w.shape)
    shifted = np.where(mask, w, -np.inf)
    shifted = shifted - shifted.max(axis=-1, keepdims=True)
    weights = np.exp(shifted)
    return weights / weights.sum(axis=-1, keepdims=True)


def _noisy(p: np.ndarray, eps: float) -> np.ndarray:
    if eps == 0:
        return p
    n = p.shape[-1]
    mixed = eps / (n - 1) + (1.0 - eps) * p
    mixed[..., np.arange(n), np.arange(n)] = 0.0
    return mixed


_PROBABILITY_KERNELS = {
    Rule.LINEAR: _linear,
    Rule.TRANSFER: _linear,
    Rule.RESISTANCE: _resistance,
    Rule.LOGLIK: _loglik,
}


def visit_probabilities(w: np.ndarray, rule: Rule, eps: float = 0.0) -> np.ndarray:
    """Probabilities for the configured rule, with noise mixed in"""
    return _noisy(_PROBABILITY_KERNELS[Rule(rule)](w), eps)


def linear_probabilities(w: WeightMatrix) -> ProbabilityMatrix:
    """p[i][j] = w[i][j] / sum_k w[i][k]"""
    return ProbabilityMatrix(_linear(w.w))


def resistance_probabilities(w: WeightMatrix) -> ProbabilityMatrix:
    """p[i][j] proportional to 1 / w[i][j], the diagonal contributing nothing"""
    return ProbabilityMatrix(_resistance(w.w))


def loglik_probabilities(w: WeightMatrix) -> ProbabilityMatrix:
    """Row-wise softmax over the off-diagonal entries"""
    return ProbabilityMatrix(_loglik(w.w))


def noisy_mix(p: ProbabilityMatrix, eps: float) -> ProbabilityMatrix:
    """Mix ``eps`` of the uniform visit distribution into every row"""
    if not 0.0 <= eps <= 1.0:
        raise InvalidStateError(f"noise level must be in [0, 1], got {eps}")
    return ProbabilityMatrix(_noisy(np.array(p.p), eps))


def _outcome_arrays(outcomes: Iterable[VisitOutcome], n: int):
    outcomes = list(outcomes)
    visitors = np.array([o.visitor for o in outcomes], dtype=np.int64)
    hosts = np.array([o.host for o in outcomes], dtype=np.int64)
    if outcomes and (visitors.min() < 0 or hosts.min() < 0
                     or visitors.max() >= n or hosts.max() >= n):
        raise InvalidStateError(f"visit references an agent outside 0..{n - 1}")
    visitor_pay = np.array([o.visitor_payoff for o in outcomes], dtype=float)
    host_pay = np.array([o.host_payoff for o in outcomes], dtype=float)
    return visitors, hosts, visitor_pay, host_pay


def _check_linear_signs(w: np.ndarray) -> None:
    if np.any(w < 0):
        raise SignViolationError(
            "linear update produced a negative weight; negative payoffs need the "
            f"{Rule.RESISTANCE.value} rule"
        )


def linear_update(w: WeightMatrix, outcomes: Iterable[VisitOutcome],
                  symmetric: bool, d: float = 1.0) -> WeightMatrix:
    """Discount every weight by ``d``, then add the round's payoffs"""
    if not 0.0 < d <= 1.0:
        raise InvalidStateError(f"discount must be in (0, 1], got {d}")
    visitors, hosts, visitor_pay, host_pay = _outcome_arrays(outcomes, w.n)
    updated = d * w.w
    np.add.at(updated, (visitors, hosts), visitor_pay)
    if symmetric:
        np.add.at(updated, (hosts, visitors), host_pay)
    _check_linear_signs(updated)
    return WeightMatrix(updated)


def loglik_update(w: WeightMatrix, outcomes: Iterable[VisitOutcome],
                  symmetric: bool, d: float = 1.0) -> WeightMatrix:
    """Same arithmetic as the linear update, but weights may go negative"""
    if not 0.0 < d <= 1.0:
        raise InvalidStateError(f"discount must be in (0, 1], got {d}")
    visitors, hosts, visitor_pay, host_pay = _outcome_arrays(outcomes, w.n)
    updated = d * w.w
    np.add.at(updated, (visitors, hosts), visitor_pay)
    if symmetric:
        np.add.at(updated, (hosts, visitors), host_pay)
    return WeightMatrix(updated, allow_negative=True)


def _check_punishments(*payoffs: np.ndarray) -> None:
    for values in payoffs:
        if np.any(values > 0):
            raise SignViolationError("resistance rule is only defined for payoffs <= 0")


def resistance_update(w: WeightMatrix, outcomes: Iterable[VisitOutcome],
                      symmetric: bool) -> WeightMatrix:
    """Add the magnitude of each punishment to the matching resistance"""
    visitors, hosts, visitor_pay, host_pay = _outcome_arrays(outcomes, w.n)
    _check_punishments(visitor_pay, *((host_pay,) if symmetric else ()))
    updated = np.array(w.w)
    np.add.at(updated, (visitors, hosts), np.abs(visitor_pay))
    if symmetric:
        np.add.at(updated, (hosts, visitors), np.abs(host_pay))
    return WeightMatrix(updated)


def transfer_update(w: WeightMatrix, outcomes: Iterable[VisitOutcome]) -> WeightMatrix:
    """
    Three-agent transfer model: a visit i→j moves one ball of agent i from
    urn j to urn k, the third agent. Host weights are untouched.
    """
    w.validate_for(Rule.TRANSFER)
    visitors, hosts, _, _ = _outcome_arrays(outcomes, w.n)
    updated = np.array(w.w)
    others = 3 - visitors - hosts
    np.add.at(updated, (visitors, hosts), -1.0)
    np.add.at(updated, (visitors, others), 1.0)
    if np.any(updated < 0):
        raise SignViolationError("transfer from an empty urn")
    return WeightMatrix(updated)


def transfer_step(urn: Tuple[int, int], rng: RandomSource) -> Tuple[int, int]:
    """Move one ball, chosen uniformly among all N, to the other urn"""
    left, right = int(urn[0]), int(urn[1])
    if left < 0 or right < 0:
        raise InvalidStateError(f"urn counts must be nonnegative, got {urn}")
    total = left + right
    if total == 0:
        raise InvalidStateError("an empty urn pair has no ball to move")
    if rng.stream.random() * total < left:
        return left - 1, right + 1
    return left + 1, right - 1


# Batched kernels used by the engine. ``hosts``, ``visitor_pay`` and
# ``host_pay`` have shape (R, n); each (replica, visitor) pair occurs once.

def _batch_index(hosts: np.ndarray):
    replicas, n = hosts.shape
    rows = np.broadcast_to(np.arange(replicas)[:, None], (replicas, n))
    visitors = np.broadcast_to(np.arange(n)[None, :], (replicas, n))
    return rows, visitors


def apply_update(w: np.ndarray, hosts: np.ndarray, visitor_pay: np.ndarray,
                 host_pay: np.ndarray, rule: Rule, symmetric: bool,
                 d: float = 1.0) -> np.ndarray:
    """Apply one round of visits to a stack of weight matrices"""
    rows, visitors = _batch_index(hosts)
    if rule is Rule.TRANSFER:
        updated = w.copy()
        updated[rows, visitors, hosts] -= 1.0
        updated[rows, visitors, 3 - visitors - hosts] += 1.0
        if np.any(updated < 0):
            raise SignViolationError("transfer from an empty urn")
        return updated
    if rule is Rule.RESISTANCE:
        _check_punishments(visitor_pay, *((host_pay,) if symmetric else ()))
        updated = w.copy()
        updated[rows, visitors, hosts] += np.abs(visitor_pay)
        if symmetric:
            updated[rows, hosts, visitors] += np.abs(host_pay)
        return updated
    updated = w * d if d != 1.0 else w.copy()
    updated[rows, visitors, hosts] += visitor_pay
    if symmetric:
        updated[rows, hosts, visitors] += host_pay
    if rule is Rule.LINEAR:
        _check_linear_signs(updated)
    return updated


def sample_hosts(p: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw of one host per row; ``uniforms`` has shape p.shape[:-1]"""
    cumulative = np.cumsum(p, axis=-1)
    cumulative /= cumulative[..., -1:]
    return (cumulative <= uniforms[..., None]).sum(axis=-1)
