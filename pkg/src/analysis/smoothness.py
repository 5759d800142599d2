from src.signals.gsp import global_smoothness, local_smoothness
from src.utils.errors import UndefinedResultError


def g_delta_theta(delta_theta, graph):
    return global_smoothness(delta_theta, graph)


def local_delta_theta(delta_theta, graph):
    return local_smoothness(delta_theta, graph)


def l_delta_theta_at_u(delta_theta, graph, u):
    local = local_delta_theta(delta_theta, graph)
    if not local.defined[u]:
        raise UndefinedResultError(
            "local smoothness is undefined where the difference signal vanishes",
            context={'u': u}
        )
    return float(local.values[u])
