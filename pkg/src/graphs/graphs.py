"""Weighted graph operators and unweighted topology metrics of a grid case.

Matrices use internal bus indices 0..N-1 (case order); `GridGraph.bus_ids`
maps them back to external bus numbers.
"""
import dataclasses
import functools
import logging
from typing import Dict, Tuple

import networkx as nx
import numpy as np
import scipy.linalg
from scipy.sparse.linalg import eigsh

from src.cases.validation import topology
from src.utils.errors import GridPerturbError

logger = logging.getLogger('graphs.operators.logger')

SINGULAR_CONDITION = 1e14

# below this size the spectrum is computed densely
DENSE_SPECTRUM_LIMIT = 16


class DisconnectedGraphError(GridPerturbError):
    def __init__(self, component_sizes):
        super().__init__(
            err_msg="disconnected graph",
            err_code="errors.disconnectedGraph",
            exit_code=1,
            context={'component_sizes': component_sizes}
        )


class ZeroImpedanceError(GridPerturbError):
    def __init__(self, branch):
        super().__init__(
            err_msg="zero-impedance branch",
            err_code="errors.zeroImpedance",
            exit_code=1,
            context={'from': branch.from_bus, 'to': branch.to_bus}
        )


class SingularSystemError(GridPerturbError):
    def __init__(self, condition):
        super().__init__(
            err_msg="reduced susceptance matrix is numerically singular",
            err_code="errors.singularSystem",
            exit_code=3,
            context={'condition': condition}
        )


def _frozen(array):
    array = np.array(array)
    array.flags.writeable = False
    return array


@dataclasses.dataclass(frozen=True, eq=False)
class GridGraph:
    n: int
    laplacian: np.ndarray
    susceptance: np.ndarray
    slack_index: int
    adjacency: Tuple[Tuple[int, ...], ...]
    weights: Dict[Tuple[int, int], float]
    bus_ids: Tuple[int, ...]

    @functools.cached_property
    def topology(self):
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.weights)
        return graph


@dataclasses.dataclass(frozen=True, eq=False)
class BetaMatrix:
    beta: np.ndarray
    slack_index: int


def build_graph(case):
    """w_ij = sum of 1/(x*tap) over parallel in-service branches; B = L (no shunts)."""
    components = list(nx.connected_components(topology(case)))
    if len(components) > 1:
        raise DisconnectedGraphError(sorted((len(c) for c in components), reverse=True))

    index = case.bus_index
    n = case.n
    weights = {}
    for branch in case.in_service_branches():
        i, j = sorted((index[branch.from_bus], index[branch.to_bus]))
        if i == j:
            continue
        if branch.x * branch.tap == 0:
            raise ZeroImpedanceError(branch)
        weights[(i, j)] = weights.get((i, j), 0.0) + 1.0 / (branch.x * branch.tap)

    laplacian = np.zeros((n, n))
    for (i, j), w in weights.items():
        laplacian[i, j] -= w
        laplacian[j, i] -= w
        laplacian[i, i] += w
        laplacian[j, j] += w

    neighbors = [[] for _ in range(n)]
    for i, j in weights:
        neighbors[i].append(j)
        neighbors[j].append(i)

    logger.debug("Built graph for <%s>: %d vertices, %d edges", case.name, n, len(weights))

    return GridGraph(
        n=n,
        laplacian=_frozen(laplacian),
        susceptance=_frozen(laplacian),
        slack_index=case.slack_index,
        adjacency=tuple(tuple(sorted(row)) for row in neighbors),
        weights=weights,
        bus_ids=case.bus_ids
    )


def reduced_indices(graph):
    return np.delete(np.arange(graph.n), graph.slack_index)


def reduced_susceptance_inverse(graph):
    keep = reduced_indices(graph)
    reduced = graph.susceptance[np.ix_(keep, keep)]

    condition = np.linalg.cond(reduced) if reduced.size else 1.0
    if not np.isfinite(condition) or condition > SINGULAR_CONDITION:
        raise SingularSystemError(float(condition))

    factor = scipy.linalg.lu_factor(reduced)
    inverse = scipy.linalg.lu_solve(factor, np.eye(len(keep)))

    beta = np.zeros((graph.n, graph.n))
    # the exact inverse of a symmetric matrix is symmetric; drop round-off asymmetry
    beta[np.ix_(keep, keep)] = 0.5 * (inverse + inverse.T)
    return BetaMatrix(beta=_frozen(beta), slack_index=graph.slack_index)


def hop_distances(graph, u):
    lengths = nx.single_source_shortest_path_length(graph.topology, u)
    return np.array([lengths[i] for i in range(graph.n)], dtype=int)


def eccentricity(graph, u):
    return int(hop_distances(graph, u).max())


def closeness_modified(graph, n):
    """C'(n) = N / sum of hop distances from n, self-distance included."""
    return graph.n / float(hop_distances(graph, n).sum())


def spectral_bound(graph):
    """Largest eigenvalue of L."""
    if graph.n <= DENSE_SPECTRUM_LIMIT:
        return float(scipy.linalg.eigvalsh(graph.laplacian)[-1])
    values = eigsh(np.asarray(graph.laplacian), k=1, which='LA', tol=1e-12, return_eigenvectors=False)
    return float(values[0])
