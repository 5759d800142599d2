_NUMBER = {'type': 'number'}

_STATUS = {'type': 'integer', 'enum': [0, 1]}

BUS_SCHEMA = {
    'type': 'object',
    'properties': {
        'id': {'type': 'integer'},
        'kind': {'type': 'string', 'enum': ['slack', 'pv', 'pq']},
        'p_load_mw': _NUMBER,
        'q_load_mvar': _NUMBER,
        'shunt_g_mw': _NUMBER,
        'shunt_b_mvar': _NUMBER,
        'v_mag_pu': _NUMBER,
        'v_ang_deg': _NUMBER
    },
    'required': [
        'id',
        'kind'
    ]
}

BRANCH_SCHEMA = {
    'type': 'object',
    'properties': {
        'from': {'type': 'integer'},
        'to': {'type': 'integer'},
        'r_pu': _NUMBER,
        'x_pu': _NUMBER,
        'b_pu': _NUMBER,
        'tap': _NUMBER,
        'shift_deg': _NUMBER,
        'status': _STATUS
    },
    'required': [
        'from',
        'to',
        'x_pu'
    ]
}

GEN_SCHEMA = {
    'type': 'object',
    'properties': {
        'bus': {'type': 'integer'},
        'p_mw': _NUMBER,
        'q_mvar': _NUMBER,
        'q_min_mvar': _NUMBER,
        'q_max_mvar': _NUMBER,
        'v_setpoint_pu': _NUMBER,
        'status': _STATUS
    },
    'required': [
        'bus'
    ]
}

CASE_SCHEMA = {
    '$schema': 'http://json-schema.org/draft-07/schema#',
    'type': 'object',
    'properties': {
        'name': {'type': 'string'},
        'base_mva': {'type': 'number', 'exclusiveMinimum': 0},
        'buses': {'type': 'array', 'items': BUS_SCHEMA, 'minItems': 1},
        'branches': {'type': 'array', 'items': BRANCH_SCHEMA},
        'gens': {'type': 'array', 'items': GEN_SCHEMA}
    },
    'required': [
        'base_mva',
        'buses',
        'branches',
        'gens'
    ]
}
