import numpy as np
from scipy.stats import rankdata

from src.utils.errors import UndefinedResultError


def _pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise UndefinedResultError("inputs must be vectors of equal length", context={'lengths': [a.size, b.size]})
    return a, b


def spearman(a, b):
    """Pearson correlation of average ranks."""
    a, b = _pair(a, b)
    if a.size < 2:
        raise UndefinedResultError("spearman needs at least two observations")
    ranks_a = rankdata(a, method='average')
    ranks_b = rankdata(b, method='average')
    if np.ptp(ranks_a) == 0 or np.ptp(ranks_b) == 0:
        raise UndefinedResultError("spearman is undefined for constant input")
    return float(np.corrcoef(ranks_a, ranks_b)[0, 1])


def cosine_similarity(a, b):
    a, b = _pair(a, b)
    norm = np.linalg.norm(a) * np.linalg.norm(b)
    if norm == 0.0:
        raise UndefinedResultError("cosine similarity of a zero vector is undefined")
    return float(a @ b / norm)
