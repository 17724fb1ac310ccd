"""
Trajectory analysis: graphs, limit-state classification and statistical tests
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import scipy.stats

from . import settings
from .core import AgentType, ProbabilityMatrix, StrategyProfile
from .engine import TrajectoryRecord
from .exceptions import ConfigurationError, InvalidStateError

MatrixLike = Union[ProbabilityMatrix, np.ndarray]
Statistic = Union[float, List[float]]


class AnalysisConfig:
    """Configuration for classification and tests"""
    FIXATION_TOL = settings.get('FIXATION_TOL', 0.01)
    RANK_REL_TOL = settings.get('RANK_REL_TOL', 0.05)
    TRAP_TOL = settings.get('TRAP_TOL', 0.05)


class StateLabel(str, Enum):
    PAIRING = 'Pairing'
    PAIRS_PLUS_STARS = 'PairsPlusStars'
    FIXATION = 'Fixation'
    UNIFORM = 'Uniform'
    UNSETTLED = 'Unsettled'


class Absorption(str, Enum):
    ALL_STAG = 'all-Stag'
    ALL_RABBIT = 'all-Rabbit'
    MIXED = 'mixed'


@dataclass(frozen=True)
class InteractionGraph:
    """Undirected graph of pairs that visit each other with non-negligible probability"""
    n: int
    edges: frozenset

    def __post_init__(self):
        for i, j in self.edges:
            if i == j:
                raise InvalidStateError(f"self-loop at agent {i}")

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edges)
        return graph


@dataclass(frozen=True)
class StateClass:
    """
    Classified state.

    ``pairs`` and ``stars`` are filled for Pairing / PairsPlusStars, with
    stars given as (center, leaves). ``fixation`` maps agent i to f(i).
    """
    label: StateLabel
    pairs: Tuple[Tuple[int, int], ...] = ()
    stars: Tuple[Tuple[int, Tuple[int, ...]], ...] = ()
    fixation: Tuple[int, ...] = ()


@dataclass
class EnsembleSummary:
    """Aggregated verdicts for an ensemble of replicas"""
    replicas: int
    class_counts: Dict[str, int] = field(default_factory=dict)
    absorption: Dict[str, int] = field(default_factory=dict)
    statistics: Dict[str, Statistic] = field(default_factory=dict)

    def __post_init__(self):
        if self.class_counts and sum(self.class_counts.values()) != self.replicas:
            raise InvalidStateError("class counts must sum to the number of replicas")

    def fraction(self, label: Union[str, Enum]) -> float:
        key = label.value if isinstance(label, Enum) else label
        counts = self.absorption if key in self.absorption else self.class_counts
        return counts.get(key, 0) / self.replicas if self.replicas else 0.0

    def to_dict(self) -> Dict:
        """Convert summary to dictionary format"""
        return {
            'class_counts': dict(self.class_counts),
            'absorption': dict(self.absorption),
            'statistics': dict(self.statistics),
        }


def _values(p: MatrixLike) -> np.ndarray:
    return p.p if isinstance(p, ProbabilityMatrix) else np.asarray(p, dtype=float)


def _uniform(n: int) -> np.ndarray:
    return ProbabilityMatrix.uniform(n).p


def default_graph_eps(n: int) -> float:
    return 1.0 / (4 * n)


def extract_graph(p: MatrixLike, graph_eps: Optional[float] = None) -> InteractionGraph:
    """Edge {i, j} iff p[i][j] or p[j][i] exceeds ``graph_eps``"""
    values = _values(p)
    n = values.shape[0]
    eps = default_graph_eps(n) if graph_eps is None else graph_eps
    if not 0.0 < eps < 1.0 / (2 * n):
        raise ConfigurationError(f"must be in (0, 1/(2n)), got {eps}", key='graph_eps')
    above = values > eps
    rows, cols = np.nonzero(np.triu(above | above.T, k=1))
    return InteractionGraph(n, frozenset(zip(rows.tolist(), cols.tolist())))


def _partition(values: np.ndarray, graph: nx.Graph, eps: float, tol: float):
    """Pairs and stars covering every agent, or None"""
    pairs, stars = [], []
    for component in sorted(map(sorted, nx.connected_components(graph))):
        if len(component) < 2:
            return None
        if len(component) == 2:
            i, j = component
            if values[i, j] < 1 - tol or values[j, i] < 1 - tol:
                return None
            pairs.append((i, j))
            continue
        sub = graph.subgraph(component)
        if sub.number_of_edges() != len(component) - 1:
            return None
        centers = [v for v in component if sub.degree(v) == len(component) - 1]
        if len(centers) != 1:
            return None
        center = centers[0]
        leaves = tuple(v for v in component if v != center)
        if any(values[leaf, center] < 1 - tol for leaf in leaves):
            return None
        # the center must keep visiting every leaf
        if any(values[center, leaf] <= eps for leaf in leaves):
            return None
        stars.append((center, leaves))
    return tuple(pairs), tuple(stars)


def classify_state(p: MatrixLike, profile: Optional[StrategyProfile] = None,
                   graph_eps: Optional[float] = None,
                   fixation_tol: Optional[float] = None) -> StateClass:
    """
    Pairing / PairsPlusStars when the graph splits into settled pairs and
    stars, else Fixation when every agent has a single partner, else Uniform,
    else Unsettled.

    Raises ConfigurationError when ``graph_eps`` is outside (0, 1/(2n)), the
    range ``extract_graph`` accepts, and InvalidStateError when ``profile``
    does not match the matrix size.
    """
    values = _values(p)
    n = values.shape[0]
    if profile is not None and profile.n != n:
        raise InvalidStateError(f"profile has {profile.n} agents, matrix has {n}")
    tol = AnalysisConfig.FIXATION_TOL if fixation_tol is None else fixation_tol
    eps = default_graph_eps(n) if graph_eps is None else graph_eps

    graph = extract_graph(values, eps).to_networkx()
    partition = _partition(values, graph, eps, tol)
    if partition is not None:
        pairs, stars = partition
        label = StateLabel.PAIRS_PLUS_STARS if stars else StateLabel.PAIRING
        return StateClass(label, pairs=pairs, stars=stars)
    if np.all(values.max(axis=1) >= 1 - tol):
        return StateClass(StateLabel.FIXATION, fixation=tuple(int(j) for j in values.argmax(axis=1)))
    if distance_to_uniform(values) <= tol:
        return StateClass(StateLabel.UNIFORM)
    return StateClass(StateLabel.UNSETTLED)


def distance_to_uniform(p: MatrixLike) -> float:
    values = _values(p)
    mask = ~np.eye(values.shape[0], dtype=bool)
    return float(np.max(np.abs(values - _uniform(values.shape[0]))[mask]))


def symmetry_defect(p: MatrixLike) -> float:
    values = _values(p)
    return float(np.max(np.abs(values - values.T)))


def friends2_traps() -> List[np.ndarray]:
    """
    The three unstable rest points of three-agent symmetric reinforcement.

    In each, two agents ignore one another and both visit the third, who
    splits its visits evenly between them. An agent can never be ignored
    outright: its own visits reinforce both of its links.
    """
    half = 0.5
    return [
        np.array([[0, half, half], [1, 0, 0], [1, 0, 0]], dtype=float),
        np.array([[0, 1, 0], [half, 0, half], [0, 1, 0]], dtype=float),
        np.array([[0, 0, 1], [0, 0, 1], [half, half, 0]], dtype=float),
    ]


def trap_proximity(p: MatrixLike, traps: Sequence[MatrixLike]) -> float:
    """Smallest max-entry distance from ``p`` to any trap"""
    values = _values(p)
    if not traps:
        raise ValueError("at least one trap is needed")
    distances = []
    for trap in traps:
        trap_values = _values(trap)
        if trap_values.shape != values.shape:
            raise InvalidStateError(f"trap shape {trap_values.shape} != {values.shape}")
        distances.append(float(np.max(np.abs(values - trap_values))))
    return min(distances)


def trap_fraction(matrices: Iterable[MatrixLike], tol: Optional[float] = None,
                  traps: Optional[Sequence[MatrixLike]] = None) -> float:
    tol = AnalysisConfig.TRAP_TOL if tol is None else tol
    traps = friends2_traps() if traps is None else traps
    near = [trap_proximity(p, traps) <= tol for p in matrices]
    return sum(near) / len(near) if near else 0.0


def ks_uniformity_test(samples: Sequence[float]) -> Tuple[float, float]:
    """One-sample KS test against Uniform(0, 1) with the asymptotic p-value"""
    data = np.asarray(samples, dtype=float)
    if data.size == 0:
        raise ValueError("KS test needs at least one sample")
    result = scipy.stats.kstest(data, 'uniform', method='asymp')
    return float(result.statistic), float(result.pvalue)


def beta_marginal_test(samples: Sequence[float], a: float, b: float) -> Tuple[float, float]:
    """KS test of Beta(a, b) via the probability integral transform"""
    if not (a > 0 and b > 0):
        raise ValueError(f"Beta shapes must be positive, got ({a}, {b})")
    data = np.asarray(samples, dtype=float)
    return ks_uniformity_test(scipy.stats.beta.cdf(data, a, b))


def dirichlet_marginal_shapes(n: int) -> Tuple[float, float]:
    """A Dirichlet(1, ..., 1) row over n-1 partners has Beta(1, n-2) marginals"""
    return 1.0, float(n - 2)


def _off_diagonal_vectors(matrices: Sequence[MatrixLike]) -> np.ndarray:
    stacked = np.stack([_values(m) for m in matrices])
    n = stacked.shape[-1]
    return stacked[:, ~np.eye(n, dtype=bool)]


def covariance_rank(deviations: Sequence[MatrixLike], rel_tol: Optional[float] = None) -> int:
    """Number of covariance eigenvalues above ``rel_tol`` times the largest"""
    rel_tol = AnalysisConfig.RANK_REL_TOL if rel_tol is None else rel_tol
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must be in (0, 1), got {rel_tol}")
    if len(deviations) < 2:
        raise ValueError("covariance rank needs at least 2 samples")
    vectors = _off_diagonal_vectors(deviations)
    eigenvalues = np.linalg.eigvalsh(np.cov(vectors, rowvar=False))
    largest = eigenvalues.max()
    if largest <= 0:
        return 0
    return int(np.sum(eigenvalues > rel_tol * largest))


def deviation_rank_expected(n: int, symmetric: bool) -> int:
    """
    Rank of the limiting covariance of sqrt(t)(p - uniform) once every row is
    constrained to sum to zero: n(n-2) for one-sided punishment, and
    n(n-1)/2 - 1 when both sides are punished.
    """
    if symmetric:
        return n * (n - 1) // 2 - 1
    return n * (n - 2)


def scaled_deviations(records: Iterable[TrajectoryRecord],
                      round_index: Optional[int] = None) -> List[np.ndarray]:
    """sqrt(t) (p(t) - uniform) per record, at the final round by default"""
    deviations = []
    for record in records:
        t = record.total_rounds if round_index is None else round_index
        p = record.final_probabilities if round_index is None else record.matrix_at(t)
        deviations.append(math.sqrt(t) * (p - _uniform(record.n)))
    return deviations


def cross_type_visit_probability(p: MatrixLike, profile: StrategyProfile) -> np.ndarray:
    """Per agent, the total probability of visiting agents of another type"""
    values = _values(p)
    codes = profile.codes
    other = codes[:, None] != codes[None, :]
    return (values * other).sum(axis=1)


def row_correlation(first: Sequence[float], second: Sequence[float]) -> float:
    return float(np.corrcoef(np.asarray(first, float), np.asarray(second, float))[0, 1])


def occupancy(record: TrajectoryRecord, graph_eps: Optional[float] = None,
              fixation_tol: Optional[float] = None, since_round: int = 0) -> Dict[str, float]:
    """Fraction of snapshots (from ``since_round`` on) carrying each label"""
    labels = [
        classify_state(p, None, graph_eps, fixation_tol).label.value
        for t, p, _ in record.snapshots if t >= since_round
    ]
    if not labels:
        return {}
    return {label.value: labels.count(label.value) / len(labels) for label in StateLabel}


def absorption_of(profile: StrategyProfile) -> Optional[Absorption]:
    kinds = set(profile.types)
    if AgentType.TRIVIAL in kinds:
        return None
    if kinds == {AgentType.STAG}:
        return Absorption.ALL_STAG
    if kinds == {AgentType.RABBIT}:
        return Absorption.ALL_RABBIT
    return Absorption.MIXED


def summarize_ensemble(records: Sequence[TrajectoryRecord], graph_eps: Optional[float] = None,
                       fixation_tol: Optional[float] = None) -> EnsembleSummary:
    """Classify every final state and tally strategy absorption"""
    if not records:
        raise ValueError("cannot summarize an empty ensemble")
    class_counts = {label.value: 0 for label in StateLabel}
    absorption: Dict[str, int] = {}
    distances, defects = [], []
    for record in records:
        final = record.final_matrix
        verdict = classify_state(final, record.final_profile, graph_eps, fixation_tol)
        class_counts[verdict.label.value] += 1
        absorbed = absorption_of(record.final_profile)
        if absorbed is not None:
            if not absorption:
                absorption = {kind.value: 0 for kind in Absorption}
            absorption[absorbed.value] += 1
        distances.append(distance_to_uniform(final))
        defects.append(symmetry_defect(final))
    statistics: Dict[str, Statistic] = {
        'mean_distance_to_uniform': float(np.mean(distances)),
        'mean_symmetry_defect': float(np.mean(defects)),
    }
    return EnsembleSummary(len(records), class_counts, absorption, statistics)
