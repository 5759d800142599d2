import dataclasses
import logging
from typing import Optional, Tuple

import numpy as np

from src.graphs.graphs import closeness_modified, hop_distances
from src.signals.gsp import SignalUnit, rad_per_pu_to_deg_per_mw
from src.utils.errors import UndefinedResultError

logger = logging.getLogger('analysis.spread.logger')

# OLS slopes at or above this are flat or rising
FLAT_SLOPE = -1e-12


@dataclasses.dataclass(frozen=True)
class HopProfile:
    u: Optional[int]
    means: Tuple[Tuple[int, float], ...]
    shell_sizes: Tuple[int, ...]
    unit: SignalUnit = SignalUnit.RAD_PER_PU

    @property
    def hops(self):
        return np.array([k for k, _ in self.means], dtype=float)

    @property
    def values(self):
        return np.array([mean for _, mean in self.means], dtype=float)

    def in_deg_per_mw(self, base_mva):
        if self.unit is SignalUnit.DEG_PER_MW:
            return self
        return dataclasses.replace(
            self,
            means=tuple((k, rad_per_pu_to_deg_per_mw(mean, base_mva)) for k, mean in self.means),
            unit=SignalUnit.DEG_PER_MW
        )


@dataclasses.dataclass(frozen=True)
class SpreadabilityFit:
    s: Optional[float]
    slope: float
    degenerate: bool


def mean_psi_by_hop(psi, hops, u=None):
    """Mean of psi over each non-empty K-hop shell, K >= 1."""
    values = np.asarray(getattr(psi, 'values', psi), dtype=float)
    hops = np.asarray(hops, dtype=int)
    unit = getattr(psi, 'unit', SignalUnit.RAD_PER_PU)

    means, sizes = [], []
    for k in range(1, int(hops.max(initial=0)) + 1):
        shell = hops == k
        if shell.any():
            means.append((k, float(values[shell].mean())))
            sizes.append(int(shell.sum()))
    return HopProfile(u=u, means=tuple(means), shell_sizes=tuple(sizes), unit=unit)


def spreadability(profile, weighted=False):
    """Reciprocal of the negated OLS slope through (K, mean psi).

    With `weighted` each shell counts by its size instead of equally.
    """
    if len(profile.means) < 2:
        return SpreadabilityFit(s=None, slope=float('nan'), degenerate=True)

    weights = np.sqrt(np.asarray(profile.shell_sizes, dtype=float)) if weighted else None
    slope = float(np.polyfit(profile.hops, profile.values, 1, w=weights)[0])
    if slope >= FLAT_SLOPE:
        logger.debug("hop profile of bus %s does not decay (slope=%.3e)", profile.u, slope)
        return SpreadabilityFit(s=None, slope=slope, degenerate=True)
    return SpreadabilityFit(s=-1.0 / slope, slope=slope, degenerate=False)


def spreadability_network(delta_theta, graph, u):
    """s'(u): closeness-scaled mean hop distance, weighted by the normalised difference signal."""
    values = np.asarray(getattr(delta_theta, 'values', delta_theta), dtype=float)
    total = values.sum()
    if total == 0.0:
        raise UndefinedResultError("difference signal sums to zero", context={'u': u})
    hops = hop_distances(graph, u)
    return closeness_modified(graph, u) * float(np.sum(values / total * hops))
