import dataclasses
import logging
from typing import Tuple

import networkx as nx

from src.cases.cases import BusKind

logger = logging.getLogger('cases.validation.logger')


@dataclasses.dataclass(frozen=True)
class Finding:
    code: str
    message: str
    context: dict = dataclasses.field(default_factory=dict)


@dataclasses.dataclass(frozen=True)
class ValidationReport:
    findings: Tuple[Finding, ...] = ()

    @property
    def is_valid(self):
        return not self.findings

    def codes(self):
        return [finding.code for finding in self.findings]

    def to_dict(self):
        return {
            'valid': self.is_valid,
            'findings': [dataclasses.asdict(finding) for finding in self.findings]
        }


def topology(case):
    """Unweighted graph of the in-service branches over every bus, keyed by external bus id."""
    graph = nx.Graph()
    graph.add_nodes_from(case.bus_ids)
    graph.add_edges_from(
        (branch.from_bus, branch.to_bus)
        for branch in case.in_service_branches()
        if branch.from_bus != branch.to_bus
    )
    return graph


def _check_slack(case):
    slacks = [bus.id for bus in case.buses if bus.kind is BusKind.SLACK]
    if not slacks:
        yield Finding('no_slack', 'no slack bus')
    elif len(slacks) > 1:
        yield Finding('multiple_slack', 'multiple slack buses', {'buses': slacks})


def _check_base(case):
    if not case.base_mva > 0:
        yield Finding('base_mva', 'base_mva must be positive', {'base_mva': case.base_mva})


def _check_branches(case):
    known = set(case.bus_ids)
    for position, branch in enumerate(case.branches):
        context = {'branch': position, 'from': branch.from_bus, 'to': branch.to_bus}
        if branch.from_bus == branch.to_bus:
            yield Finding('self_loop', 'branch connects a bus to itself', context)
        if branch.from_bus not in known or branch.to_bus not in known:
            yield Finding('unknown_bus', 'branch references an unknown bus', context)
        if branch.in_service and branch.x == 0:
            yield Finding('zero_reactance', 'zero reactance on in-service branch', context)


def _check_gens(case):
    known = set(case.bus_ids)
    for position, gen in enumerate(case.gens):
        if gen.bus not in known:
            yield Finding('unknown_bus', 'generator references an unknown bus', {'gen': position, 'bus': gen.bus})


def _check_connectivity(case):
    if not case.buses:
        return
    components = sorted(nx.connected_components(topology(case)), key=lambda c: (-len(c), min(c)))
    if len(components) > 1:
        yield Finding(
            'disconnected',
            'disconnected: {} components'.format(len(components)),
            {'component_sizes': [len(component) for component in components]}
        )


CHECKS = [
    _check_base,
    _check_slack,
    _check_branches,
    _check_gens,
    _check_connectivity
]


def validate_case(case):
    findings = tuple(finding for check in CHECKS for finding in check(case))
    for finding in findings:
        logger.info("Case <%s>: %s", case.name, finding.message)
    return ValidationReport(findings)
