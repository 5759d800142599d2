"""Global smoothness of the voltage angle as a function of perturbation size.

Under the DC model theta(gamma) = beta (p0 + sigma gamma e_u), so
g_theta(gamma) is a ratio of two quadratics in gamma and its local maximum
has a closed form. Under the AC model the curve is sampled.
"""
import dataclasses
import logging
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from src.graphs.graphs import build_graph, reduced_susceptance_inverse
from src.powerflow.ac import NonConvergenceError, find_gamma_nc, solve_base, solve_perturbed
from src.powerflow.dc import PerturbationKind, PerturbationSpec, PowerFlowModel, apply_perturbation, dc_solve
from src.signals.gsp import global_smoothness
from src.utils.errors import UndefinedResultError, UsageError

logger = logging.getLogger('analysis.gamma.logger')

# relative size below which the derivative numerator is treated as identically zero
FLAT_TOLERANCE = 1e-12


@dataclasses.dataclass(frozen=True, eq=False)
class QRMatrices:
    q: np.ndarray
    r: np.ndarray


@dataclasses.dataclass(frozen=True)
class RationalQuadratic:
    """g(gamma) = (a2 g^2 + a1 g + a0) / (b2 g^2 + b1 g + b0), gamma in p.u."""
    numerator: Tuple[float, float, float]
    denominator: Tuple[float, float, float]

    def __call__(self, gamma):
        a2, a1, a0 = self.numerator
        b2, b1, b0 = self.denominator
        return (a2 * gamma ** 2 + a1 * gamma + a0) / (b2 * gamma ** 2 + b1 * gamma + b0)

    def derivative_numerator(self):
        a2, a1, a0 = self.numerator
        b2, b1, b0 = self.denominator
        return a2 * b1 - a1 * b2, 2.0 * (a2 * b0 - a0 * b2), a1 * b0 - a0 * b1


@dataclasses.dataclass(frozen=True)
class GammaPoint:
    gamma_mw: float
    g_theta: Optional[float]
    converged: bool


@dataclasses.dataclass(frozen=True)
class GammaCurve:
    u: int
    kind: PerturbationKind
    model: PowerFlowModel
    points: Tuple[GammaPoint, ...]
    gamma_c_mw: Optional[float]
    gamma_nc_mw: Optional[float] = None
    critical_load_mw: Optional[float] = None

    @property
    def gammas(self):
        return [p.gamma_mw for p in self.points]

    @property
    def g_theta(self):
        return [p.g_theta for p in self.points]


def qr_matrices(graph, beta):
    """Q = beta' L beta and R = beta' beta."""
    b = np.asarray(beta.beta)
    return QRMatrices(q=b.T @ graph.laplacian @ b, r=b.T @ b)


def g_theta_rational(case, u, kind, graph=None, beta=None):
    graph = graph or build_graph(case)
    beta = beta or reduced_susceptance_inverse(graph)
    qr = qr_matrices(graph, beta)
    p0 = case.injections()
    sigma = kind.injection_sign
    idx = case.index_of(u)

    def coefficients(m):
        return float(m[idx, idx]), float(2.0 * sigma * (m @ p0)[idx]), float(p0 @ m @ p0)

    return RationalQuadratic(numerator=coefficients(qr.q), denominator=coefficients(qr.r))


def g_theta_of_gamma(case, u, kind, gamma, model=PowerFlowModel.DC, graph=None, options=None, base=None):
    """g_theta after perturbing bus `u` by `gamma` MW.

    Raises NonConvergenceError when the AC power flow fails.
    """
    graph = graph or build_graph(case)
    spec = PerturbationSpec(bus_u=u, gamma=gamma, kind=kind, model=model)

    if model is PowerFlowModel.DC:
        theta = dc_solve(graph, apply_perturbation(case, spec).injections())
        return global_smoothness(theta, graph)

    solution = solve_perturbed(case, spec, options, base)
    if not solution.converged:
        raise NonConvergenceError(gamma, solution)
    return global_smoothness(solution.v_ang, graph)


def _local_maxima(curve):
    c2, c1, c0 = curve.derivative_numerator()
    scale = max(abs(c) for c in (c2, c1, c0))
    reference = max(abs(c) for c in curve.numerator + curve.denominator) ** 2
    if scale <= FLAT_TOLERANCE * reference:
        return None

    if abs(c2) <= FLAT_TOLERANCE * scale:
        roots = [-c0 / c1] if c1 != 0 else []
    else:
        roots = [r.real for r in np.roots([c2, c1, c0]) if abs(r.imag) <= FLAT_TOLERANCE * max(1.0, abs(r))]

    # g' changes from + to - where the derivative of its numerator is negative
    return sorted(r for r in roots if r > 0 and 2.0 * c2 * r + c1 < 0)


def critical_gamma(case, u, kind, graph=None, beta=None, gamma_hi=None):
    """Smallest positive local maximiser of g_theta(gamma) in MW, or None.

    When the closed form finds no maximum and `gamma_hi` (MW) is given, a bounded
    scalar search on (0, gamma_hi) is tried; only an interior optimum counts.
    """
    curve = g_theta_rational(case, u, kind, graph, beta)
    maxima = _local_maxima(curve)
    if maxima is None:
        logger.debug("g_theta is constant in gamma at bus %s", u)
        return None
    if maxima:
        return maxima[0] * case.base_mva

    if gamma_hi is None or gamma_hi <= 0:
        return None
    hi = gamma_hi / case.base_mva
    result = minimize_scalar(lambda g: -curve(g), bounds=(0.0, hi), method='bounded', options={'xatol': 1e-10 * hi})
    margin = 1e-6 * hi
    if result.success and margin < result.x < hi - margin:
        return float(result.x) * case.base_mva
    return None


def critical_load(case, u, gamma_c_mw):
    """Load (MW) at bus `u` once it has been raised by gamma_c."""
    if gamma_c_mw is None:
        return None
    return case.bus(u).p_load * case.base_mva + gamma_c_mw


def gamma_grid(gamma_from, gamma_to, step):
    if step <= 0:
        raise UsageError("gamma step must be positive", context={'step': step})
    if gamma_to < gamma_from:
        raise UsageError("gamma range is empty", context={'from': gamma_from, 'to': gamma_to})
    if step > gamma_to - gamma_from and gamma_to != gamma_from:
        raise UsageError("gamma step is larger than the range", context={'step': step, 'range': gamma_to - gamma_from})
    count = int(np.floor((gamma_to - gamma_from) / step + 1e-9)) + 1
    return gamma_from + step * np.arange(count)


def _sample(case, u, kind, gamma, model, graph, options=None, base=None):
    try:
        return GammaPoint(gamma, g_theta_of_gamma(case, u, kind, gamma, model, graph, options, base), True)
    except UndefinedResultError:
        # zero angle signal, e.g. an unloaded case at gamma = 0
        return GammaPoint(gamma, None, True)
    except NonConvergenceError as e:
        logger.info("gamma=%.4f MW at bus %s did not converge: %s", gamma, u, e.reason)
        return GammaPoint(gamma, None, False)


def gamma_curve(case, u, kind, model, gamma_from, gamma_to, step, options=None, resolution=0.1):
    gammas = [float(g) for g in gamma_grid(gamma_from, gamma_to, step)]
    graph = build_graph(case)

    if model is PowerFlowModel.DC:
        points = tuple(_sample(case, u, kind, g, model, graph) for g in gammas)
        gamma_c = critical_gamma(case, u, kind, graph, gamma_hi=gamma_to)
        if gamma_c is not None and not gamma_from <= gamma_c <= gamma_to:
            logger.info("gamma_c=%.4f MW at bus %s lies outside the swept range", gamma_c, u)
            gamma_c = None
        load = critical_load(case, u, gamma_c) if kind.injection_sign < 0 else None
        return GammaCurve(u=u, kind=kind, model=model, points=points, gamma_c_mw=gamma_c, critical_load_mw=load)

    base = solve_base(case, options)
    points = tuple(_sample(case, u, kind, g, model, graph, options, base) for g in gammas)

    sampled = [p for p in points if p.g_theta is not None]
    gamma_c = None
    if len(sampled) >= 3:
        best = int(np.argmax([p.g_theta for p in sampled]))
        if 0 < best < len(sampled) - 1:
            gamma_c = sampled[best].gamma_mw

    gamma_nc = None
    failed = [i for i, p in enumerate(points) if not p.converged]
    if failed:
        first = failed[0]
        lo = points[first - 1].gamma_mw if first > 0 else 0.0
        gamma_nc = find_gamma_nc(
            case, u, kind, points[first].gamma_mw,
            resolution=resolution, options=options, gamma_lo=lo, base=base
        )

    load = critical_load(case, u, gamma_c) if kind.injection_sign < 0 else None
    return GammaCurve(
        u=u, kind=kind, model=model, points=points,
        gamma_c_mw=gamma_c, gamma_nc_mw=gamma_nc, critical_load_mw=load
    )
