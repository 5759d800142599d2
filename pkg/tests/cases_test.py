import dataclasses
import json
import math

import numpy as np
import pytest

from src.cases.cases import BusKind, CaseValidationError
from src.cases.parsers import (
    CaseParseError,
    emit_case_json,
    emit_case_matpower,
    load_case,
    parse_case_json,
    parse_case_matpower,
    parse_case_ppc,
)
from src.cases.validation import validate_case

TWO_BUS_MATPOWER = """function mpc = case2
mpc.version = '2';
mpc.baseMVA = 100;

%% bus data
mpc.bus = [
1 3 0 0 0 0 1 1.00 0 110 1 1.05 0.95;
2 1 10 5 0 0 1 1.00 0 110 1 1.05 0.95;
];

mpc.gen = [
1 0 0 10 -10 1.00 100 1 50 0;
];

mpc.branch = [
1 2 0.01 0.05 0 100 100 100 0 0 1 -360 360;
];
"""


def _assert_cases_close(left, right):
    assert left.base_mva == pytest.approx(right.base_mva)
    assert left.bus_ids == right.bus_ids
    for records in ('buses', 'branches', 'gens'):
        assert len(getattr(left, records)) == len(getattr(right, records))
        for a, b in zip(getattr(left, records), getattr(right, records)):
            for field in dataclasses.fields(a):
                x, y = getattr(a, field.name), getattr(b, field.name)
                if isinstance(x, float):
                    assert x == pytest.approx(y, rel=1e-12, abs=1e-12), (records, field.name)
                else:
                    assert x == y, (records, field.name)


def test_parse_path3(path3):
    assert path3.n == 3
    assert len(path3.branches) == 2
    assert path3.slack_bus_id == 1
    assert path3.bus(2).kind is BusKind.PQ
    assert path3.branches[1].x == 1.0


def test_json_defaults_applied():
    case = parse_case_json(json.dumps({
        'base_mva': 100,
        'buses': [{'id': 1, 'kind': 'slack'}, {'id': 2, 'kind': 'pq', 'p_load_mw': 50, 'v_ang_deg': 90}],
        'branches': [{'from': 1, 'to': 2, 'x_pu': 0.2, 'tap': 0}],
        'gens': [{'bus': 1}]
    }))
    branch = case.branches[0]
    assert branch.tap == 1.0
    assert branch.shift == 0.0
    assert branch.in_service
    assert case.bus(2).p_load == pytest.approx(0.5)
    assert case.bus(2).v_ang_init == pytest.approx(math.pi / 2)
    assert case.gens[0].in_service


def test_multiple_slack_buses_rejected(path3_text):
    document = json.loads(path3_text)
    document['buses'][2]['kind'] = 'slack'
    with pytest.raises(CaseParseError, match='multiple slack buses'):
        parse_case_json(json.dumps(document))


def test_duplicate_bus_id_names_path(path3_text):
    document = json.loads(path3_text)
    document['buses'][2]['id'] = 2
    with pytest.raises(CaseParseError) as e:
        parse_case_json(json.dumps(document))
    assert e.value.path == '$.buses[2]'
    assert e.value.exit_code == 2


def test_missing_field_names_path(path3_text):
    document = json.loads(path3_text)
    del document['branches'][1]['x_pu']
    with pytest.raises(CaseParseError) as e:
        parse_case_json(json.dumps(document))
    assert e.value.path == '$.branches[1]'
    assert 'x_pu' in e.value.err_msg


def test_malformed_and_non_finite_json_rejected(path3_text):
    with pytest.raises(CaseParseError, match='malformed JSON'):
        parse_case_json(path3_text[:-10])
    with pytest.raises(CaseParseError):
        parse_case_json(path3_text.replace('"x_pu": 1.0', '"x_pu": NaN', 1))


def test_json_round_trip(path3):
    _assert_cases_close(parse_case_json(emit_case_json(path3)), path3)


def test_parse_minimal_matpower():
    case = parse_case_matpower(TWO_BUS_MATPOWER)
    assert case.name == 'case2'
    assert case.n == 2
    assert case.slack_bus_id == 1
    assert case.bus(2).p_load == pytest.approx(0.1)
    assert case.branches[0].tap == 1.0
    assert case.gens[0].q_max == pytest.approx(0.1)


def test_matpower_unknown_bus():
    text = TWO_BUS_MATPOWER.replace('1 2 0.01 0.05', '1 999 0.01 0.05')
    with pytest.raises(CaseParseError, match='unknown bus'):
        parse_case_matpower(text)


def test_matpower_unparseable_row():
    text = TWO_BUS_MATPOWER.replace('2 1 10 5 0 0', '2 1 ten 5 0 0')
    with pytest.raises(CaseParseError, match='unparseable matrix row') as e:
        parse_case_matpower(text)
    assert e.value.path == 'mpc.bus[1]'


def test_matpower_short_row():
    text = TWO_BUS_MATPOWER.replace('1 0 0 10 -10 1.00 100 1 50 0;', '1 0 0;')
    with pytest.raises(CaseParseError, match='unparseable matrix row'):
        parse_case_matpower(text)


def test_load_case_missing_file(tmp_path):
    with pytest.raises(CaseParseError) as e:
        load_case(tmp_path / 'nope.json')
    assert e.value.exit_code == 2


def test_load_case_dispatches_on_suffix(tmp_path, path3_text):
    (tmp_path / 'case2.m').write_text(TWO_BUS_MATPOWER, encoding='utf-8')
    (tmp_path / 'path3.json').write_text(path3_text, encoding='utf-8')
    assert load_case(tmp_path / 'case2.m').n == 2
    assert load_case(str(tmp_path / 'path3.json')).n == 3


def test_parse_case_ppc_matches_matpower_text():
    ppc = {
        'baseMVA': 100.0,
        'bus': np.array([
            [1, 3, 0, 0, 0, 0, 1, 1.00, 0, 110, 1, 1.05, 0.95],
            [2, 1, 10, 5, 0, 0, 1, 1.00, 0, 110, 1, 1.05, 0.95],
        ]),
        'gen': np.array([[1, 0, 0, 10, -10, 1.00, 100, 1, 50, 0]]),
        'branch': np.array([[1, 2, 0.01, 0.05, 0, 100, 100, 100, 0, 0, 1, -360, 360]]),
    }
    _assert_cases_close(parse_case_ppc(ppc, name='case2'), parse_case_matpower(TWO_BUS_MATPOWER))

    del ppc['gen']
    with pytest.raises(CaseParseError) as e:
        parse_case_ppc(ppc)
    assert e.value.path == 'gen'


def test_load_case_unknown_reference_case():
    with pytest.raises(CaseParseError, match='not available'):
        load_case('pypower:case_that_does_not_exist')


def test_unknown_bus_lookup(path3):
    with pytest.raises(CaseValidationError):
        path3.index_of(42)


def test_validate_path3(path3):
    report = validate_case(path3)
    assert report.is_valid
    assert report.to_dict() == {'valid': True, 'findings': []}


def test_validate_disconnected(path3):
    branches = (path3.branches[0], dataclasses.replace(path3.branches[1], in_service=False))
    report = validate_case(dataclasses.replace(path3, branches=branches))
    assert report.codes() == ['disconnected']
    assert report.findings[0].context['component_sizes'] == [2, 1]


def test_validate_zero_reactance(path3):
    branches = (dataclasses.replace(path3.branches[0], x=0.0), path3.branches[1])
    report = validate_case(dataclasses.replace(path3, branches=branches))
    assert 'zero_reactance' in report.codes()
    assert not report.is_valid


def test_validate_no_slack(path3):
    case = path3.replace_bus(1, kind=BusKind.PV)
    assert 'no_slack' in validate_case(case).codes()


def test_injection_signs(two_bus):
    case = two_bus(p_load=0.5)
    assert list(case.injections()) == [0.0, -0.5]
    assert case.load_bus_ids() == (2,)
    assert case.gen_bus_ids() == (1,)


@pytest.mark.slow
def test_ieee118_counts(ieee118):
    assert ieee118.n == 118
    assert len(ieee118.branches) == 186
    assert len(ieee118.gens) == 54
    assert ieee118.slack_bus_id == 69
    assert len(set(ieee118.load_bus_ids()) - {ieee118.slack_bus_id}) == 99
    assert validate_case(ieee118).is_valid


@pytest.mark.slow
def test_ieee118_cross_parser_equivalence(ieee118):
    from_matpower = parse_case_matpower(emit_case_matpower(ieee118))
    from_json = parse_case_json(emit_case_json(ieee118))
    _assert_cases_close(from_matpower, from_json)
    _assert_cases_close(from_json, ieee118)
