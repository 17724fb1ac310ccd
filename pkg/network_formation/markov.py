"""
Exact finite Markov chain tools for the Ehrenfest urn

State s of an N-ball chain means urn counts (N - s, s).
"""
import math
from typing import List

import numpy as np
import scipy.linalg
import scipy.stats

from .core import RandomSource
from .dynamics import transfer_step
from .exceptions import InvalidStateError


def ehrenfest_transition_matrix(balls: int) -> np.ndarray:
    """(N+1)×(N+1) transition matrix of the two-urn ball-transfer chain"""
    if balls < 1:
        raise InvalidStateError(f"the chain needs at least one ball, got {balls}")
    matrix = np.zeros((balls + 1, balls + 1))
    for s in range(balls + 1):
        if s < balls:
            matrix[s, s + 1] = (balls - s) / balls
        if s > 0:
            matrix[s, s - 1] = s / balls
    return matrix


def stationary_distribution(transition: np.ndarray, method: str = 'eigen',
                            tol: float = 1e-15, max_iter: int = 1_000_000) -> np.ndarray:
    """
    Stationary vector of an irreducible chain.

    ``eigen`` takes the left eigenvector for eigenvalue 1. ``power`` iterates
    the lazy chain (P + I) / 2, which has the same stationary law and also
    converges for periodic chains.
    """
    transition = np.asarray(transition, dtype=float)
    if method == 'eigen':
        values, vectors = scipy.linalg.eig(transition.T)
        vector = np.real(vectors[:, np.argmin(np.abs(values - 1.0))])
        vector = np.clip(vector / vector.sum(), 0.0, None)
        return vector / vector.sum()
    if method == 'power':
        lazy = 0.5 * (transition + np.eye(len(transition)))
        vector = np.full(len(transition), 1.0 / len(transition))
        for _ in range(max_iter):
            following = vector @ lazy
            if np.max(np.abs(following - vector)) < tol:
                return following
            vector = following
        return vector
    raise ValueError(f"unknown method '{method}'")


def binomial_law(balls: int) -> np.ndarray:
    return scipy.stats.binom.pmf(np.arange(balls + 1), balls, 0.5)


def distribution_after(transition: np.ndarray, start: int, steps: int) -> np.ndarray:
    """Law of the state after ``steps`` steps from ``start``"""
    initial = np.zeros(len(transition))
    initial[start] = 1.0
    return initial @ np.linalg.matrix_power(transition, steps)


def total_variation(first: np.ndarray, second: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(first) - np.asarray(second)).sum())


def mixing_steps(balls: int) -> int:
    """The N log N / 2 horizon"""
    return max(1, math.ceil(balls * math.log(balls) / 2))


def mixing_distance(balls: int, steps: int) -> float:
    """
    Distance to Binomial(N, 1/2) after ``steps`` steps from the all-in-one-urn
    state, averaging two consecutive steps because the chain has period 2.
    """
    transition = ehrenfest_transition_matrix(balls)
    law = 0.5 * (distribution_after(transition, 0, steps)
                 + distribution_after(transition, 0, steps + 1))
    return total_variation(law, binomial_law(balls))


def simulate_counts(balls: int, steps: int, rng: RandomSource) -> int:
    """Run one chain from (N, 0) and return the count in the second urn"""
    urn = (balls, 0)
    for _ in range(steps):
        urn = transfer_step(urn, rng)
    return urn[1]


def empirical_law(counts: List[int], balls: int) -> np.ndarray:
    return np.bincount(np.asarray(counts, dtype=np.int64), minlength=balls + 1) / len(counts)
