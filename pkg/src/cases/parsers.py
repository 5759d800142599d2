import importlib
import json
import logging
import math
import re
from pathlib import Path

from jsonschema import Draft7Validator

from src.cases.cases import Branch, Bus, BusKind, Generator, GridCase
from src.cases.cases_schema import CASE_SCHEMA
from src.utils.errors import GridPerturbError

logger = logging.getLogger('cases.parser.logger')

MATPOWER_BUS_KIND = {1: BusKind.PQ, 2: BusKind.PV, 3: BusKind.SLACK}
MATPOWER_BUS_CODE = {kind: code for code, kind in MATPOWER_BUS_KIND.items()}

# MATPOWER column positions (0-based)
BUS_I, BUS_TYPE, PD, QD, GS, BS, VM, VA = 0, 1, 2, 3, 4, 5, 7, 8
F_BUS, T_BUS, BR_R, BR_X, BR_B, TAP, SHIFT, BR_STATUS = 0, 1, 2, 3, 4, 8, 9, 10
GEN_BUS, PG, QG, QMAX, QMIN, VG, GEN_STATUS = 0, 1, 2, 3, 4, 5, 7

MIN_COLUMNS = {'bus': VA + 1, 'branch': BR_STATUS + 1, 'gen': GEN_STATUS + 1}

_BASE_MVA_RE = re.compile(r'mpc\.baseMVA\s*=\s*([^;\n]+)')
_MATRIX_RE = re.compile(r'mpc\.(bus|gen|branch)\s*=\s*\[(.*?)\]\s*;?', re.DOTALL)
_NAME_RE = re.compile(r'function\s+mpc\s*=\s*(\w+)')


class CaseParseError(GridPerturbError):
    def __init__(self, err_msg, path=None, context=None, reason=None):
        context = dict(context or {})
        if path is not None:
            context['path'] = path
        super().__init__(
            err_msg=err_msg,
            err_code="errors.caseParseError",
            exit_code=2,
            context=context,
            reason=reason
        )
        self.path = path


def _json_path(parts):
    path = '$'
    for part in parts:
        path += '[{}]'.format(part) if isinstance(part, int) else '.{}'.format(part)
    return path


def _reject_constant(token):
    raise ValueError('non-finite number <{}> is not allowed'.format(token))


def _assemble(name, base_mva, buses, branches, gens, locate):
    """Cross-record checks shared by every parser; `locate(kind, position)` names the offending record."""
    if not base_mva > 0:
        raise CaseParseError("base_mva must be positive", path=locate('base_mva', None))

    seen = {}
    for position, bus in enumerate(buses):
        if bus.id in seen:
            raise CaseParseError(
                "duplicate bus id <{}>".format(bus.id),
                path=locate('bus', position),
                context={'first_seen': locate('bus', seen[bus.id])}
            )
        seen[bus.id] = position

    slacks = [bus.id for bus in buses if bus.kind is BusKind.SLACK]
    if len(slacks) > 1:
        raise CaseParseError("multiple slack buses", path=locate('buses', None), context={'slack_buses': slacks})

    for position, branch in enumerate(branches):
        for end in (branch.from_bus, branch.to_bus):
            if end not in seen:
                raise CaseParseError(
                    "unknown bus <{}> referenced by branch".format(end),
                    path=locate('branch', position),
                    context={'bus': end}
                )

    for position, gen in enumerate(gens):
        if gen.bus not in seen:
            raise CaseParseError(
                "unknown bus <{}> referenced by generator".format(gen.bus),
                path=locate('gen', position),
                context={'bus': gen.bus}
            )

    case = GridCase(
        base_mva=float(base_mva),
        buses=tuple(buses),
        branches=tuple(branches),
        gens=tuple(gens),
        name=name
    )
    logger.debug("Parsed case <%s>: %d buses, %d branches, %d gens", name, len(buses), len(branches), len(gens))
    return case


def parse_case_json(text):
    try:
        document = json.loads(text, parse_constant=_reject_constant)
    except ValueError as e:
        raise CaseParseError("malformed JSON", path='$', reason=str(e))

    errors = sorted(Draft7Validator(CASE_SCHEMA).iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        error = errors[0]
        raise CaseParseError(
            error.message,
            path=_json_path(error.absolute_path),
            context={'validator': error.validator}
        )

    base_mva = float(document['base_mva'])

    buses = [
        Bus(
            id=int(item['id']),
            kind=BusKind(item['kind']),
            p_load=item.get('p_load_mw', 0.0) / base_mva,
            q_load=item.get('q_load_mvar', 0.0) / base_mva,
            v_mag_setpoint=float(item.get('v_mag_pu', 1.0)),
            v_ang_init=math.radians(item.get('v_ang_deg', 0.0)),
            shunt_g=item.get('shunt_g_mw', 0.0) / base_mva,
            shunt_b=item.get('shunt_b_mvar', 0.0) / base_mva
        )
        for item in document['buses']
    ]
    branches = [
        Branch(
            from_bus=int(item['from']),
            to_bus=int(item['to']),
            r=float(item.get('r_pu', 0.0)),
            x=float(item['x_pu']),
            b_charging=float(item.get('b_pu', 0.0)),
            tap=float(item.get('tap', 1.0)) or 1.0,
            shift=math.radians(item.get('shift_deg', 0.0)),
            in_service=item.get('status', 1) == 1
        )
        for item in document['branches']
    ]
    gens = [
        Generator(
            bus=int(item['bus']),
            p_gen=item.get('p_mw', 0.0) / base_mva,
            q_gen=item.get('q_mvar', 0.0) / base_mva,
            q_min=item.get('q_min_mvar', 0.0) / base_mva,
            q_max=item.get('q_max_mvar', 0.0) / base_mva,
            v_setpoint=float(item.get('v_setpoint_pu', 1.0)),
            in_service=item.get('status', 1) == 1
        )
        for item in document['gens']
    ]

    plural = {'bus': 'buses', 'branch': 'branches', 'gen': 'gens'}

    def locate(kind, position):
        if position is None:
            return _json_path([kind])
        return _json_path([plural[kind], position])

    return _assemble(document.get('name', 'unnamed'), base_mva, buses, branches, gens, locate)


def _rows(matrix, kind):
    rows = [] if matrix is None else [[float(value) for value in row] for row in matrix]
    for number, row in enumerate(rows):
        if len(row) < MIN_COLUMNS[kind]:
            raise CaseParseError(
                "unparseable matrix row: {} columns, at least {} required".format(len(row), MIN_COLUMNS[kind]),
                path='mpc.{}[{}]'.format(kind, number)
            )
    return rows


def _case_from_matrices(name, base_mva, bus, branch, gen):
    base_mva = float(base_mva)
    bus_rows, branch_rows, gen_rows = _rows(bus, 'bus'), _rows(branch, 'branch'), _rows(gen, 'gen')

    buses = []
    for number, row in enumerate(bus_rows):
        code = int(row[BUS_TYPE])
        if code not in MATPOWER_BUS_KIND:
            raise CaseParseError(
                "unsupported bus type <{}>".format(code),
                path='mpc.bus[{}]'.format(number)
            )
        buses.append(Bus(
            id=int(row[BUS_I]),
            kind=MATPOWER_BUS_KIND[code],
            p_load=row[PD] / base_mva,
            q_load=row[QD] / base_mva,
            v_mag_setpoint=row[VM],
            v_ang_init=math.radians(row[VA]),
            shunt_g=row[GS] / base_mva,
            shunt_b=row[BS] / base_mva
        ))

    branches = [
        Branch(
            from_bus=int(row[F_BUS]),
            to_bus=int(row[T_BUS]),
            r=row[BR_R],
            x=row[BR_X],
            b_charging=row[BR_B],
            tap=row[TAP] or 1.0,
            shift=math.radians(row[SHIFT]),
            in_service=row[BR_STATUS] != 0
        )
        for row in branch_rows
    ]

    gens = [
        Generator(
            bus=int(row[GEN_BUS]),
            p_gen=row[PG] / base_mva,
            q_gen=row[QG] / base_mva,
            q_min=row[QMIN] / base_mva,
            q_max=row[QMAX] / base_mva,
            v_setpoint=row[VG],
            in_service=row[GEN_STATUS] > 0
        )
        for row in gen_rows
    ]

    def locate(kind, position):
        if position is None:
            return 'mpc.{}'.format({'buses': 'bus', 'base_mva': 'baseMVA'}.get(kind, kind))
        return 'mpc.{}[{}]'.format(kind, position)

    return _assemble(name, base_mva, buses, branches, gens, locate)


def _parse_matrix(kind, body):
    body = re.sub(r'%[^\n]*', '', body)
    rows = []
    for number, raw in enumerate(filter(None, (chunk.strip() for chunk in re.split(r'[;\n]', body)))):
        try:
            rows.append([float(token) for token in raw.replace(',', ' ').split()])
        except ValueError as e:
            raise CaseParseError(
                "unparseable matrix row",
                path='mpc.{}[{}]'.format(kind, number),
                context={'row': raw},
                reason=str(e)
            )
    return rows


def parse_case_matpower(text):
    uncommented = re.sub(r'%[^\n]*', '', text)

    base_match = _BASE_MVA_RE.search(uncommented)
    if not base_match:
        raise CaseParseError("missing mpc.baseMVA", path='mpc.baseMVA')
    try:
        base_mva = float(base_match.group(1).strip())
    except ValueError as e:
        raise CaseParseError("unparseable mpc.baseMVA", path='mpc.baseMVA', reason=str(e))

    matrices = {}
    for match in _MATRIX_RE.finditer(uncommented):
        matrices[match.group(1)] = _parse_matrix(match.group(1), match.group(2))

    for kind in ('bus', 'branch', 'gen'):
        if kind not in matrices:
            raise CaseParseError("missing mpc.{} matrix".format(kind), path='mpc.{}'.format(kind))

    name_match = _NAME_RE.search(uncommented)
    name = name_match.group(1) if name_match else 'unnamed'

    return _case_from_matrices(name, base_mva, matrices['bus'], matrices['branch'], matrices['gen'])


def parse_case_ppc(ppc, name=None):
    """Build a case from in-memory MATPOWER matrices (a PYPOWER ``ppc`` dict)."""
    for key in ('baseMVA', 'bus', 'branch', 'gen'):
        if key not in ppc:
            raise CaseParseError("missing ppc key <{}>".format(key), path=key)
    return _case_from_matrices(name or ppc.get('name', 'unnamed'), ppc['baseMVA'], ppc['bus'], ppc['branch'], ppc['gen'])


def load_case(location):
    """Load a case from a `.json`/`.m` file or from `pypower:<case function>`."""
    location = str(location)

    if location.startswith('pypower:'):
        case_name = location.split(':', 1)[1]
        try:
            module = importlib.import_module('pypower.' + case_name)
        except ImportError as e:
            raise CaseParseError("reference case <{}> is not available".format(case_name), path=location, reason=str(e))
        return parse_case_ppc(getattr(module, case_name)(), name=case_name)

    path = Path(location)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise CaseParseError("case file can not be read", path=location, reason=str(e))

    if path.suffix == '.m':
        return parse_case_matpower(text)
    if path.suffix == '.json' or text.lstrip().startswith('{'):
        return parse_case_json(text)
    return parse_case_matpower(text)


def _mw(value, base_mva):
    return value * base_mva


def emit_case_json(case):
    base = case.base_mva
    document = {
        'name': case.name,
        'base_mva': base,
        'buses': [
            {
                'id': bus.id,
                'kind': bus.kind.value,
                'p_load_mw': _mw(bus.p_load, base),
                'q_load_mvar': _mw(bus.q_load, base),
                'shunt_g_mw': _mw(bus.shunt_g, base),
                'shunt_b_mvar': _mw(bus.shunt_b, base),
                'v_mag_pu': bus.v_mag_setpoint,
                'v_ang_deg': math.degrees(bus.v_ang_init)
            }
            for bus in case.buses
        ],
        'branches': [
            {
                'from': branch.from_bus,
                'to': branch.to_bus,
                'r_pu': branch.r,
                'x_pu': branch.x,
                'b_pu': branch.b_charging,
                'tap': branch.tap,
                'shift_deg': math.degrees(branch.shift),
                'status': int(branch.in_service)
            }
            for branch in case.branches
        ],
        'gens': [
            {
                'bus': gen.bus,
                'p_mw': _mw(gen.p_gen, base),
                'q_mvar': _mw(gen.q_gen, base),
                'q_min_mvar': _mw(gen.q_min, base),
                'q_max_mvar': _mw(gen.q_max, base),
                'v_setpoint_pu': gen.v_setpoint,
                'status': int(gen.in_service)
            }
            for gen in case.gens
        ]
    }
    return json.dumps(document, indent=2)


def _matrix_text(name, rows):
    lines = ['mpc.{} = ['.format(name)]
    lines.extend('\t' + '\t'.join(repr(float(value)) for value in row) + ';' for row in rows)
    lines.append('];')
    return '\n'.join(lines)


def emit_case_matpower(case):
    base = case.base_mva
    bus_rows = [
        [bus.id, MATPOWER_BUS_CODE[bus.kind], _mw(bus.p_load, base), _mw(bus.q_load, base),
         _mw(bus.shunt_g, base), _mw(bus.shunt_b, base), 1, bus.v_mag_setpoint,
         math.degrees(bus.v_ang_init), 0, 1, 1.06, 0.94]
        for bus in case.buses
    ]
    gen_rows = [
        [gen.bus, _mw(gen.p_gen, base), _mw(gen.q_gen, base), _mw(gen.q_max, base), _mw(gen.q_min, base),
         gen.v_setpoint, base, int(gen.in_service), 0, 0]
        for gen in case.gens
    ]
    branch_rows = [
        [branch.from_bus, branch.to_bus, branch.r, branch.x, branch.b_charging, 0, 0, 0,
         0 if branch.tap == 1.0 else branch.tap, math.degrees(branch.shift), int(branch.in_service), -360, 360]
        for branch in case.branches
    ]
    return '\n\n'.join([
        'function mpc = {}'.format(case.name if re.match(r'^\w+$', case.name) else 'unnamed'),
        "mpc.version = '2';\nmpc.baseMVA = {};".format(repr(float(base))),
        _matrix_text('bus', bus_rows),
        _matrix_text('gen', gen_rows),
        _matrix_text('branch', branch_rows)
    ]) + '\n'
