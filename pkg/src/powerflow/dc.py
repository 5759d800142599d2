"""Linear (DC) power flow and single-bus perturbations.

Injection sign: p(n) = p_g(n) - p_d(n). A load perturbation of +gamma lowers
p(u) by gamma; a generation perturbation of +gamma raises it.
"""
import dataclasses
import enum
import logging
import math

import numpy as np
import scipy.linalg

from src.cases.cases import Generator
from src.graphs.graphs import build_graph, reduced_indices
from src.signals.gsp import GraphSignal, SignalUnit
from src.utils.errors import GridPerturbError, UsageError

logger = logging.getLogger('powerflow.dc.logger')


class PerturbationKind(enum.Enum):
    LOAD = 'load'
    GENERATION = 'generation'

    @property
    def injection_sign(self):
        return -1.0 if self is PerturbationKind.LOAD else 1.0

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {'load': cls.LOAD, 'gen': cls.GENERATION, 'generation': cls.GENERATION}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise UsageError("unknown perturbation kind <{}>".format(value))


class PowerFlowModel(enum.Enum):
    DC = 'dc'
    AC = 'ac'


class PerturbationError(GridPerturbError):
    def __init__(self, err_msg, context=None):
        super().__init__(err_msg=err_msg, err_code="errors.invalidPerturbation", exit_code=2, context=context)


@dataclasses.dataclass(frozen=True)
class PerturbationSpec:
    bus_u: int
    gamma: float
    kind: PerturbationKind = PerturbationKind.LOAD
    model: PowerFlowModel = PowerFlowModel.DC

    def __post_init__(self):
        if not math.isfinite(self.gamma):
            raise PerturbationError("gamma must be finite", context={'gamma_mw': self.gamma})

    def gamma_pu(self, base_mva):
        return self.gamma / base_mva

    def injection_change_pu(self, base_mva):
        return self.kind.injection_sign * self.gamma_pu(base_mva)

    def with_gamma(self, gamma):
        return dataclasses.replace(self, gamma=gamma)


def dc_solve(graph, p):
    """theta with theta(slack) = 0 and B_reduced theta_reduced = p_reduced."""
    values = np.asarray(getattr(p, 'values', p), dtype=float)
    keep = reduced_indices(graph)
    reduced = graph.susceptance[np.ix_(keep, keep)]

    theta = np.zeros(graph.n)
    if np.any(values[keep]):
        theta[keep] = scipy.linalg.lu_solve(scipy.linalg.lu_factor(reduced), values[keep])
    return GraphSignal(theta, SignalUnit.RADIAN)


def apply_perturbation(case, spec):
    if case.index_of(spec.bus_u) == case.slack_index:
        raise PerturbationError(
            "perturbing the slack bus is undefined",
            context={'bus': spec.bus_u}
        )

    delta = spec.gamma_pu(case.base_mva)
    if delta == 0.0:
        return case

    if spec.kind is PerturbationKind.LOAD:
        bus = case.bus(spec.bus_u)
        return case.replace_bus(spec.bus_u, p_load=bus.p_load + delta)

    position = case.first_gen_at(spec.bus_u)
    gens = list(case.gens)
    if position is None:
        logger.debug("no generator at bus %s, adding one for the perturbation", spec.bus_u)
        gens.append(Generator(bus=spec.bus_u, p_gen=delta, v_setpoint=case.bus(spec.bus_u).v_mag_setpoint))
    else:
        gens[position] = dataclasses.replace(gens[position], p_gen=gens[position].p_gen + delta)
    return dataclasses.replace(case, gens=tuple(gens))


def diff_theta(case, spec, graph=None, options=None, base=None):
    """|theta_after - theta_before| under the model named by `spec`."""
    if spec.model is PowerFlowModel.AC:
        from src.powerflow.ac import ac_diff_theta
        return ac_diff_theta(case, spec, options, base)

    graph = graph or build_graph(case)
    before = dc_solve(graph, case.injections())
    after = dc_solve(graph, apply_perturbation(case, spec).injections())
    return GraphSignal(np.abs(after.values - before.values), SignalUnit.RADIAN)


def psi_analytic(beta, u):
    """psi_u(n) = |beta_nu| in rad per p.u.; `u` is an internal index."""
    if u == beta.slack_index:
        raise PerturbationError("perturbing the slack bus is undefined", context={'index': u})
    return GraphSignal(np.abs(beta.beta[:, u]), SignalUnit.RAD_PER_PU)
