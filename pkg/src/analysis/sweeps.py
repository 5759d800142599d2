"""Single-bus spread reports and whole-grid sweeps."""
import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

from src.analysis.similarity import cosine_similarity, spearman
from src.analysis.smoothness import g_delta_theta, l_delta_theta_at_u
from src.analysis.spread import HopProfile, mean_psi_by_hop, spreadability, spreadability_network
from src.graphs.graphs import build_graph, hop_distances
from src.powerflow.ac import solve_base
from src.powerflow.dc import PerturbationKind, PerturbationSpec, PowerFlowModel, diff_theta
from src.signals.gsp import SignalUnit
from src.utils.errors import GridPerturbError, UndefinedResultError, UsageError

logger = logging.getLogger('analysis.sweeps.logger')

STATUS_OK = 'ok'

# fewer paired buses than this leave the footer undefined
MIN_SIMILARITY_ROWS = 2

# (footer key, report attribute) pairs compared against s
SIMILARITY_PAIRS = (
    ('s_prime', 's_prime'),
    ('g_delta_theta', 'g_delta_theta'),
    ('l_delta_theta_u', 'l_delta_theta_at_u'),
)

SIMILARITY_METRICS = (('spearman', spearman), ('cosine', cosine_similarity))


@dataclasses.dataclass(frozen=True)
class SpreadReport:
    u: int
    s: Optional[float] = None
    s_prime: Optional[float] = None
    g_delta_theta: Optional[float] = None
    l_delta_theta_at_u: Optional[float] = None
    profile: Optional[HopProfile] = None
    slope: Optional[float] = None
    slope_degenerate: bool = False
    status: str = STATUS_OK
    message: Optional[str] = None

    @property
    def ok(self):
        return self.status == STATUS_OK


def spread_report(case, spec, graph=None, options=None, base=None):
    """Every spread measure for one perturbation. Errors propagate."""
    if spec.gamma == 0:
        raise UsageError("gamma must be nonzero to normalise the difference signal", context={'gamma_mw': spec.gamma})

    graph = graph or build_graph(case)
    u = case.index_of(spec.bus_u)
    delta_theta = diff_theta(case, spec, graph, options, base)

    psi = delta_theta.scaled(1.0 / abs(spec.gamma_pu(case.base_mva)), SignalUnit.RAD_PER_PU)
    profile = mean_psi_by_hop(psi, hop_distances(graph, u), u=spec.bus_u)
    fit = spreadability(profile)

    return SpreadReport(
        u=spec.bus_u,
        s=fit.s,
        s_prime=spreadability_network(delta_theta, graph, u),
        g_delta_theta=g_delta_theta(delta_theta, graph),
        l_delta_theta_at_u=l_delta_theta_at_u(delta_theta, graph, u),
        profile=profile,
        slope=fit.slope,
        slope_degenerate=fit.degenerate
    )


def eligible_buses(case, kind):
    candidates = case.load_bus_ids() if kind is PerturbationKind.LOAD else case.gen_bus_ids()
    return sorted(set(candidates) - {case.slack_bus_id})


def sweep_all_buses(case, gamma, kind=PerturbationKind.LOAD, model=PowerFlowModel.DC, options=None, threads=None):
    """One SpreadReport per eligible bus, ordered by bus id. Per-bus failures land in the row."""
    buses = eligible_buses(case, kind)
    if not buses:
        return []

    graph = build_graph(case)
    base = solve_base(case, options) if model is PowerFlowModel.AC else None

    def run(bus):
        spec = PerturbationSpec(bus_u=bus, gamma=gamma, kind=kind, model=model)
        try:
            return spread_report(case, spec, graph, options, base)
        except GridPerturbError as e:
            logger.warning("Sweep failed at bus %s: %s (%s)", bus, e.err_msg, e.err_code)
            return SpreadReport(u=bus, status=e.err_code, message=e.err_msg)

    with ThreadPoolExecutor(max_workers=threads or 1) as executor:
        rows = list(executor.map(run, buses))

    logger.info(
        "Swept %d buses of <%s> (%s, %s, %.4f MW): %d failed",
        len(rows), case.name, kind.value, model.value, gamma, sum(1 for r in rows if not r.ok)
    )
    return sorted(rows, key=lambda r: r.u)


def _similarity(metric, a, b):
    if len(a) < MIN_SIMILARITY_ROWS:
        return None
    try:
        return metric(a, b)
    except UndefinedResultError:
        return None


def sweep_similarity(rows):
    """Spearman and cosine of s against s', g_delta_theta and l_delta_theta(u); None where undefined."""
    summary = {}
    for key, attribute in SIMILARITY_PAIRS:
        pairs = [(r.s, getattr(r, attribute)) for r in rows
                 if r.ok and r.s is not None and getattr(r, attribute) is not None]
        s_values = [a for a, _ in pairs]
        other = [b for _, b in pairs]
        for name, metric in SIMILARITY_METRICS:
            summary['{}_s_{}'.format(name, key)] = _similarity(metric, s_values, other)
    return summary


@dataclasses.dataclass(frozen=True)
class ModelComparison:
    """DC and AC reports for the same perturbation."""
    u: int
    dc: SpreadReport
    ac: SpreadReport

    @property
    def ok(self):
        return self.dc.ok or self.ac.ok


def sweep_both_models(case, gamma, kind=PerturbationKind.LOAD, options=None, threads=None):
    """Sweep every eligible bus under both power flow models, paired by bus id."""
    dc_rows = sweep_all_buses(case, gamma, kind, PowerFlowModel.DC, options, threads)
    ac_rows = sweep_all_buses(case, gamma, kind, PowerFlowModel.AC, options, threads)
    return [ModelComparison(u=dc.u, dc=dc, ac=ac) for dc, ac in zip(dc_rows, ac_rows)]


def model_agreement(comparisons):
    pairs = [(c.dc.s, c.ac.s) for c in comparisons if c.dc.s is not None and c.ac.s is not None]
    dc_s = [a for a, _ in pairs]
    ac_s = [b for _, b in pairs]
    return {
        '{}_s_s_ac'.format(name): _similarity(metric, dc_s, ac_s)
        for name, metric in SIMILARITY_METRICS
    }
