"""Grid case records.

Everything here is stored in canonical units: powers in p.u. on ``base_mva``,
angles in radians. MW, MVAr and degrees only appear in the parsers and emitters.
"""
import dataclasses
import enum
from typing import Dict, Optional, Tuple

import numpy as np

from src.utils.errors import GridPerturbError


class BusKind(enum.Enum):
    SLACK = 'slack'
    PV = 'pv'
    PQ = 'pq'


class CaseValidationError(GridPerturbError):
    def __init__(self, err_msg, context=None):
        super().__init__(err_msg=err_msg, err_code="errors.caseValidationError", exit_code=1, context=context)


@dataclasses.dataclass(frozen=True)
class Bus:
    id: int
    kind: BusKind
    p_load: float = 0.0
    q_load: float = 0.0
    v_mag_setpoint: float = 1.0
    v_ang_init: float = 0.0
    shunt_g: float = 0.0
    shunt_b: float = 0.0


@dataclasses.dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    r: float
    x: float
    b_charging: float = 0.0
    tap: float = 1.0
    shift: float = 0.0
    in_service: bool = True


@dataclasses.dataclass(frozen=True)
class Generator:
    bus: int
    p_gen: float = 0.0
    q_gen: float = 0.0
    q_min: float = 0.0
    q_max: float = 0.0
    v_setpoint: float = 1.0
    in_service: bool = True


@dataclasses.dataclass(frozen=True)
class GridCase:
    base_mva: float
    buses: Tuple[Bus, ...]
    branches: Tuple[Branch, ...]
    gens: Tuple[Generator, ...]
    name: str = 'unnamed'

    @property
    def n(self):
        return len(self.buses)

    @property
    def bus_ids(self):
        return tuple(bus.id for bus in self.buses)

    @property
    def bus_index(self) -> Dict[int, int]:
        return {bus.id: idx for idx, bus in enumerate(self.buses)}

    def index_of(self, bus_id):
        try:
            return self.bus_index[bus_id]
        except KeyError:
            raise CaseValidationError(
                err_msg="Unknown bus <{}>".format(bus_id),
                context={'bus': bus_id}
            )

    def bus(self, bus_id) -> Bus:
        return self.buses[self.index_of(bus_id)]

    @property
    def slack_index(self):
        slacks = [idx for idx, bus in enumerate(self.buses) if bus.kind is BusKind.SLACK]
        if len(slacks) != 1:
            raise CaseValidationError(
                err_msg="Case must have exactly one slack bus, found {}".format(len(slacks)),
                context={'slack_buses': [self.buses[idx].id for idx in slacks]}
            )
        return slacks[0]

    @property
    def slack_bus_id(self):
        return self.buses[self.slack_index].id

    def in_service_branches(self):
        return tuple(branch for branch in self.branches if branch.in_service)

    def in_service_gens(self):
        return tuple(gen for gen in self.gens if gen.in_service)

    def load_bus_ids(self):
        """Buses of the load set: positive real-power demand."""
        return tuple(bus.id for bus in self.buses if bus.p_load > 0)

    def gen_bus_ids(self):
        return tuple(sorted({gen.bus for gen in self.in_service_gens()}))

    def injections(self) -> np.ndarray:
        """Real-power injection signal p = p_g - p_d in p.u., internal bus order."""
        index = self.bus_index
        p = np.array([-bus.p_load for bus in self.buses], dtype=float)
        for gen in self.in_service_gens():
            p[index[gen.bus]] += gen.p_gen
        return p

    def complex_injections(self) -> np.ndarray:
        index = self.bus_index
        s = np.array([complex(-bus.p_load, -bus.q_load) for bus in self.buses])
        for gen in self.in_service_gens():
            s[index[gen.bus]] += complex(gen.p_gen, gen.q_gen)
        return s

    def replace_bus(self, bus_id, **changes):
        idx = self.index_of(bus_id)
        buses = list(self.buses)
        buses[idx] = dataclasses.replace(buses[idx], **changes)
        return dataclasses.replace(self, buses=tuple(buses))

    def first_gen_at(self, bus_id) -> Optional[int]:
        for position, gen in enumerate(self.gens):
            if gen.bus == bus_id and gen.in_service:
                return position
        return None
