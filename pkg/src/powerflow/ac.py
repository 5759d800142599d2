"""Full AC power flow by Newton-Raphson on the polar mismatch equations.

Non-convergence is a result, not an exception: `ac_solve_nr` always returns an
`ACSolution` with `converged` set accordingly. Callers that need a solved
state raise `NonConvergenceError` themselves.
"""
import dataclasses
import logging
import warnings
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from src.cases.cases import BusKind
from src.graphs.graphs import ZeroImpedanceError
from src.powerflow.dc import PerturbationSpec, PowerFlowModel, apply_perturbation
from src.signals.gsp import GraphSignal, SignalUnit
from src.utils.errors import GridPerturbError, UsageError

logger = logging.getLogger('powerflow.ac.logger')

# mismatch (p.u.) above which an iterate is considered diverged
DIVERGENCE_MISMATCH = 1e8


class NonConvergenceError(GridPerturbError):
    def __init__(self, gamma_mw, solution=None, stage='perturbed'):
        context = {'gamma_mw': gamma_mw, 'stage': stage}
        if solution is not None:
            context.update({
                'iterations': solution.iterations,
                'max_mismatch': solution.max_mismatch
            })
        super().__init__(
            err_msg="AC power flow did not converge at gamma={} MW".format(gamma_mw),
            err_code="errors.nonConvergence",
            exit_code=3,
            context=context,
            reason=solution.reason if solution is not None else None
        )
        self.gamma_mw = gamma_mw
        self.solution = solution


class BracketError(GridPerturbError):
    def __init__(self, gamma_hi):
        super().__init__(
            err_msg="AC power flow converges at the upper bracket gamma={} MW".format(gamma_hi),
            err_code="errors.bracketError",
            exit_code=1,
            context={'gamma_hi_mw': gamma_hi}
        )


@dataclasses.dataclass(frozen=True)
class NrOptions:
    tolerance: float = 1e-8
    max_iterations: int = 30
    flat_start: bool = True

    def __post_init__(self):
        if not self.tolerance > 0:
            raise UsageError("NR tolerance must be positive", context={'tolerance': self.tolerance})
        if self.max_iterations < 1:
            raise UsageError("NR max iterations must be at least 1", context={'max_iterations': self.max_iterations})

    @classmethod
    def from_settings(cls, settings):
        return cls(
            tolerance=settings.get('nr_tolerance', 1e-8),
            max_iterations=settings.get('nr_max_iterations', 30),
            flat_start=settings.get('nr_flat_start', True)
        )


@dataclasses.dataclass(frozen=True, eq=False)
class ACSolution:
    v_mag: GraphSignal
    v_ang: GraphSignal
    iterations: int
    max_mismatch: float
    converged: bool
    reason: Optional[str] = None
    mismatch_history: Tuple[float, ...] = ()

    @property
    def voltage(self):
        return self.v_mag.values * np.exp(1j * self.v_ang.values)


def build_ybus(case):
    index = case.bus_index
    n = case.n
    ybus = np.zeros((n, n), dtype=complex)

    for branch in case.in_service_branches():
        impedance = complex(branch.r, branch.x)
        if impedance == 0:
            raise ZeroImpedanceError(branch)
        ys = 1.0 / impedance
        charging = 1j * branch.b_charging / 2.0
        tap = branch.tap * np.exp(1j * branch.shift)
        f, t = index[branch.from_bus], index[branch.to_bus]

        ybus[f, f] += (ys + charging) / (tap * np.conj(tap))
        ybus[t, t] += ys + charging
        ybus[f, t] += -ys / np.conj(tap)
        ybus[t, f] += -ys / tap

    for idx, bus in enumerate(case.buses):
        ybus[idx, idx] += complex(bus.shunt_g, bus.shunt_b)

    return ybus


def bus_types(case):
    """Internal indices of the reference, PV and PQ buses; a PV bus without a running generator is PQ."""
    index = case.bus_index
    regulated = {index[gen.bus] for gen in case.in_service_gens()}
    ref = [case.slack_index]
    pv = [idx for idx, bus in enumerate(case.buses) if bus.kind is BusKind.PV and idx in regulated]
    pq = [idx for idx in range(case.n) if idx not in ref and idx not in pv]
    return np.array(ref, dtype=int), np.array(pv, dtype=int), np.array(pq, dtype=int)


def _setpoints(case):
    index = case.bus_index
    setpoints = {}
    for gen in case.in_service_gens():
        setpoints.setdefault(index[gen.bus], gen.v_setpoint)
    return setpoints


def initial_voltage(case, options, initial=None):
    ref, pv, _ = bus_types(case)
    if initial is not None:
        v_mag = np.array(initial.v_mag.values, dtype=float)
        v_ang = np.array(initial.v_ang.values, dtype=float)
    elif options.flat_start:
        v_mag = np.ones(case.n)
        v_ang = np.full(case.n, case.buses[ref[0]].v_ang_init)
    else:
        v_mag = np.array([bus.v_mag_setpoint for bus in case.buses])
        v_ang = np.array([bus.v_ang_init for bus in case.buses])

    setpoints = _setpoints(case)
    for idx in np.r_[ref, pv]:
        v_mag[idx] = setpoints.get(idx, case.buses[idx].v_mag_setpoint)
    v_ang[ref] = case.buses[ref[0]].v_ang_init
    return v_mag * np.exp(1j * v_ang)


def power_mismatch(ybus, voltage, sbus):
    return voltage * np.conj(ybus @ voltage) - sbus


def _jacobian(ybus, voltage, pvpq, pq):
    current = ybus @ voltage
    v_norm = voltage / np.abs(voltage)

    ds_dvm = voltage[:, None] * np.conj(ybus * v_norm[None, :]) + np.diag(np.conj(current) * v_norm)
    ds_dva = 1j * voltage[:, None] * np.conj(np.diag(current) - ybus * voltage[None, :])

    j11 = ds_dva[np.ix_(pvpq, pvpq)].real
    j12 = ds_dvm[np.ix_(pvpq, pq)].real
    j21 = ds_dva[np.ix_(pq, pvpq)].imag
    j22 = ds_dvm[np.ix_(pq, pq)].imag
    return np.block([[j11, j12], [j21, j22]])


def _mismatch_vector(mismatch, pvpq, pq):
    return np.r_[mismatch[pvpq].real, mismatch[pq].imag]


def _solution(voltage, iterations, history, converged, reason=None):
    return ACSolution(
        v_mag=GraphSignal(np.abs(voltage), SignalUnit.DIMENSIONLESS),
        v_ang=GraphSignal(np.angle(voltage), SignalUnit.RADIAN),
        iterations=iterations,
        max_mismatch=history[-1],
        converged=converged,
        reason=reason,
        mismatch_history=tuple(history)
    )


def ac_solve_nr(case, options=None, initial=None):
    options = options or NrOptions()
    ybus = build_ybus(case)
    sbus = case.complex_injections()
    _, pv, pq = bus_types(case)
    pvpq = np.r_[pv, pq]
    n_angles = len(pvpq)

    voltage = initial_voltage(case, options, initial)
    v_mag, v_ang = np.abs(voltage), np.angle(voltage)

    f = _mismatch_vector(power_mismatch(ybus, voltage, sbus), pvpq, pq)
    history = [float(np.linalg.norm(f, np.inf)) if f.size else 0.0]
    iteration = 0

    while history[-1] >= options.tolerance:
        if iteration >= options.max_iterations:
            logger.info("NR for <%s> stopped after %d iterations, mismatch %.3e", case.name, iteration, history[-1])
            return _solution(voltage, iteration, history, False, 'max iterations reached')

        iteration += 1
        jacobian = _jacobian(ybus, voltage, pvpq, pq)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter('ignore', scipy.linalg.LinAlgWarning)
                dx = -scipy.linalg.solve(jacobian, f)
        except (np.linalg.LinAlgError, ValueError) as e:
            logger.info("NR for <%s>: singular Jacobian at iteration %d", case.name, iteration)
            return _solution(voltage, iteration, history, False, 'singular jacobian: {}'.format(e))

        v_ang[pvpq] += dx[:n_angles]
        v_mag[pq] += dx[n_angles:]
        if np.any(v_mag <= 0) or not np.all(np.isfinite(dx)):
            return _solution(voltage, iteration, history, False, 'non-positive voltage magnitude')

        voltage = v_mag * np.exp(1j * v_ang)
        f = _mismatch_vector(power_mismatch(ybus, voltage, sbus), pvpq, pq)
        history.append(float(np.linalg.norm(f, np.inf)))
        logger.debug("NR <%s> iteration %d: max mismatch %.3e", case.name, iteration, history[-1])

        if not np.isfinite(history[-1]) or history[-1] > DIVERGENCE_MISMATCH:
            return _solution(voltage, iteration, history, False, 'diverged')

    return _solution(voltage, iteration, history, True)


def solve_base(case, options=None):
    base = ac_solve_nr(case, options)
    if not base.converged:
        raise NonConvergenceError(0.0, base, stage='base')
    return base


def solve_perturbed(case, spec, options=None, base=None):
    """Solve the perturbed case warm-started from the base solution."""
    base = base or solve_base(case, options)
    return ac_solve_nr(apply_perturbation(case, spec), options, initial=base)


def ac_diff_theta(case, spec, options=None, base=None):
    base = base or solve_base(case, options)
    after = solve_perturbed(case, spec, options, base)
    if not after.converged:
        raise NonConvergenceError(spec.gamma, after)
    return GraphSignal(np.abs(after.v_ang.values - base.v_ang.values), SignalUnit.RADIAN)


def find_gamma_nc(case, u, kind, gamma_hi, resolution=0.1, options=None, gamma_lo=0.0, base=None):
    """Smallest failing gamma (MW) found by bisection; assumes failure is monotone in gamma.

    `gamma_lo` must be a converging point. Every trial point warm-starts from the base
    solution, so the result does not depend on the order of trials.
    """
    base = base or solve_base(case, options)

    def converges(gamma):
        spec = PerturbationSpec(bus_u=u, gamma=gamma, kind=kind, model=PowerFlowModel.AC)
        return solve_perturbed(case, spec, options, base).converged

    if converges(gamma_hi):
        raise BracketError(gamma_hi)

    lo, hi = float(gamma_lo), float(gamma_hi)
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if converges(mid):
            lo = mid
        else:
            hi = mid

    logger.info("gamma_nc at bus %s (%s): last converged %.4f MW, first failed %.4f MW", u, kind.value, lo, hi)
    return hi
