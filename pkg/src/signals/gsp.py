import dataclasses
import enum
import math

import numpy as np

from src.utils.errors import UndefinedResultError

# |x(n)| below this is treated as zero by local smoothness
ZERO_THRESHOLD = 1e-12


class SignalUnit(enum.Enum):
    RADIAN = 'radian'
    DEGREE = 'degree'
    PU_POWER = 'pu_power'
    MW = 'mw'
    RAD_PER_PU = 'rad_per_pu'
    DEG_PER_MW = 'deg_per_mw'
    DIMENSIONLESS = 'dimensionless'


@dataclasses.dataclass(frozen=True, eq=False)
class GraphSignal:
    """A real value per bus. `values` may be a masked array when some entries are undefined."""
    values: np.ndarray
    unit: SignalUnit = SignalUnit.DIMENSIONLESS

    def __post_init__(self):
        data = np.ma.getdata(self.values)
        if not np.all(np.isfinite(data[~np.ma.getmaskarray(self.values)])):
            raise UndefinedResultError("graph signal contains non-finite values")

    def __len__(self):
        return len(self.values)

    @property
    def defined(self):
        return ~np.ma.getmaskarray(self.values)

    def scaled(self, factor, unit=None):
        return GraphSignal(self.values * factor, unit or self.unit)


def _vector(x):
    return np.asarray(np.ma.getdata(getattr(x, 'values', x)), dtype=float)


def global_smoothness(x, graph):
    """g_x = x'Lx / x'x."""
    values = _vector(x)
    energy = float(values @ values)
    if energy == 0.0:
        raise UndefinedResultError("global smoothness of the zero signal is undefined")
    return float(values @ graph.laplacian @ values) / energy


def local_smoothness(x, graph):
    """l_x(n) = (Lx)(n) / x(n); entries with |x(n)| < ZERO_THRESHOLD are masked."""
    values = _vector(x)
    undefined = np.abs(values) < ZERO_THRESHOLD
    variation = graph.laplacian @ values
    ratio = np.divide(variation, values, out=np.zeros_like(values), where=~undefined)
    return GraphSignal(np.ma.masked_array(ratio, mask=undefined), SignalUnit.DIMENSIONLESS)


def to_degrees(signal):
    return signal.scaled(180.0 / math.pi, SignalUnit.DEGREE)


def to_deg_per_mw(signal, base_mva):
    """rad per p.u. to degree per MW."""
    return signal.scaled((180.0 / math.pi) / base_mva, SignalUnit.DEG_PER_MW)


def rad_per_pu_to_deg_per_mw(value, base_mva):
    return value * (180.0 / math.pi) / base_mva
