import json

import pytest
from click.testing import CliRunner

from src.cases.parsers import emit_case_json, parse_case_json
from src.cli.commands import RunConfig, cli
from src.utils.errors import UsageError
from tests.conftest import PATH3, make_two_bus


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def loaded_path3_file(tmp_path, loaded_path3):
    path = tmp_path / 'loaded_path3.json'
    path.write_text(emit_case_json(loaded_path3), encoding='utf-8')
    return str(path)


@pytest.fixture
def overloaded_file(tmp_path):
    path = tmp_path / 'overloaded.json'
    path.write_text(emit_case_json(make_two_bus(p_load=8.0, x=0.1)), encoding='utf-8')
    return str(path)


def _summary(output):
    return dict(line.split('=', 1) for line in output.splitlines() if '=' in line)


def test_run_config_requires_flags():
    with pytest.raises(UsageError):
        RunConfig(command='spread', case_path='x.json', gamma_mw=10.0)
    with pytest.raises(UsageError):
        RunConfig(command='gamma-curve', case_path='x.json', bus=2, gamma_from=0.0, gamma_to=1.0, gamma_step=-1.0)


def test_validate(runner, path3_text, tmp_path):
    result = runner.invoke(cli, ['validate', '--case', str(PATH3)])
    assert result.exit_code == 0
    assert result.output == 'code,message\n'

    document = json.loads(path3_text)
    document['branches'][1]['status'] = 0
    broken = tmp_path / 'broken.json'
    broken.write_text(json.dumps(document), encoding='utf-8')
    result = runner.invoke(cli, ['validate', '--case', str(broken), '--format', 'json'])
    assert result.exit_code == 1
    report = json.loads(result.output)
    assert report['findings'][0]['code'] == 'disconnected'
    assert report['findings'][0]['context']['component_sizes'] == [2, 1]


def test_validate_missing_file(runner, tmp_path):
    result = runner.invoke(cli, ['validate', '--case', str(tmp_path / 'missing.json')])
    assert result.exit_code == 2
    assert 'errors.caseParseError' in result.output


def test_spread_path3(runner):
    result = runner.invoke(cli, ['spread', '--case', str(PATH3), '--bus', '3', '--gamma', '100'])
    assert result.exit_code == 0, result.output
    lines = result.output.splitlines()
    assert lines[:3] == ['K,mean_psi_deg_per_mw,shell_size', '1,0.5729577951,1', '2,0,1']
    summary = _summary(result.output)
    assert summary['s'] == '1'
    assert summary['s_prime'] == '0.3333333333'
    assert summary['g_delta_theta'] == '0.4'
    assert summary['l_delta_theta_u'] == '0.5'
    assert summary['slope_degenerate'] == 'false'
    assert '\r' not in result.output


def test_spread_is_deterministic(runner, tmp_path):
    out = tmp_path / 'spread.csv'
    args = ['spread', '--case', str(PATH3), '--bus', '3', '--gamma', '100']
    first = runner.invoke(cli, args + ['--out', str(out)])
    assert first.exit_code == 0
    assert first.output == ''
    assert out.read_bytes() == runner.invoke(cli, args).output.encode('utf-8')


def test_spread_json_matches_csv(runner):
    args = ['spread', '--case', str(PATH3), '--bus', '3', '--gamma', '100']
    csv_summary = _summary(runner.invoke(cli, args).output)
    document = json.loads(runner.invoke(cli, args + ['--format', 'json']).output)
    assert document['profile'][0] == {'K': 1, 'mean_psi_deg_per_mw': 0.5729577951, 'shell_size': 1}
    for key in ('s', 's_prime', 'g_delta_theta', 'l_delta_theta_u'):
        assert document['summary'][key] == pytest.approx(float(csv_summary[key]), rel=1e-12)


def test_spread_missing_bus_is_usage_error(runner):
    result = runner.invoke(cli, ['spread', '--case', str(PATH3), '--gamma', '100'])
    assert result.exit_code == 2
    assert '--bus' in result.output


def test_spread_ac_non_convergence(runner, loaded_path3_file):
    result = runner.invoke(cli, ['spread', '--case', loaded_path3_file, '--bus', '3', '--gamma', '5000', '--model', 'ac'])
    assert result.exit_code == 3
    error = json.loads(result.output)
    assert error['err_code'] == 'errors.nonConvergence'
    assert error['context']['gamma_mw'] == 5000.0


def test_sweep_buses(runner, loaded_path3_file):
    result = runner.invoke(cli, ['sweep-buses', '--case', loaded_path3_file, '--gamma', '50'])
    assert result.exit_code == 0, result.output
    lines = result.output.splitlines()
    assert lines[0] == 'bus,s,s_prime,g_delta_theta,l_delta_theta_u,status'
    assert [line.split(',')[0] for line in lines[1:3]] == ['2', '3']
    assert all(line.endswith(',ok') for line in lines[1:3])
    assert set(_summary(result.output)) == {
        'spearman_s_s_prime', 'cosine_s_s_prime',
        'spearman_s_g_delta_theta', 'cosine_s_g_delta_theta',
        'spearman_s_l_delta_theta_u', 'cosine_s_l_delta_theta_u',
    }


def test_sweep_buses_json(runner, loaded_path3_file):
    document = json.loads(runner.invoke(cli, ['sweep-buses', '--case', loaded_path3_file, '--gamma', '50', '--format', 'json']).output)
    assert [row['bus'] for row in document['rows']] == [2, 3]
    assert set(document['rows'][0]) == {'bus', 's', 's_prime', 'g_delta_theta', 'l_delta_theta_u', 'status'}
    assert 'spearman_s_s_prime' in document['similarity']


def test_sweep_buses_both_models(runner, loaded_path3_file):
    result = runner.invoke(cli, ['sweep-buses', '--case', loaded_path3_file, '--gamma', '1', '--both-models'])
    assert result.exit_code == 0, result.output
    lines = result.output.splitlines()
    assert lines[0] == ('bus,s,s_prime,g_delta_theta,l_delta_theta_u,status,'
                        's_ac,s_prime_ac,g_delta_theta_ac,l_delta_theta_u_ac,status_ac')
    assert [line.split(',')[0] for line in lines[1:3]] == ['2', '3']
    assert all(line.endswith(',ok') and ',ok,' in line for line in lines[1:3])
    summary = _summary(result.output)
    assert {'spearman_s_s_prime', 'spearman_s_s_ac', 'cosine_s_s_ac'} <= set(summary)


def test_sweep_buses_empty_eligible_set(runner):
    result = runner.invoke(cli, ['sweep-buses', '--case', str(PATH3), '--gamma', '50'])
    assert result.exit_code == 1
    assert 'errors.emptySweep' in result.output
    result = runner.invoke(cli, ['sweep-buses', '--case', str(PATH3), '--gamma', '50', '--kind', 'gen'])
    assert result.exit_code == 1


def test_gamma_curve_dc(runner):
    result = runner.invoke(cli, ['gamma-curve', '--case', str(PATH3), '--bus', '3', '--from', '0', '--to', '20', '--step', '10'])
    assert result.exit_code == 0, result.output
    assert result.output.splitlines() == [
        'gamma_mw,g_theta,converged',
        '0,,true',
        '10,0.4,true',
        '20,0.4,true',
        'gamma_c_mw=',
    ]


def test_gamma_curve_step_larger_than_range(runner):
    result = runner.invoke(cli, ['gamma-curve', '--case', str(PATH3), '--bus', '3', '--from', '0', '--to', '5', '--step', '10'])
    assert result.exit_code == 2


def test_gamma_curve_ac_base_failure(runner, overloaded_file):
    result = runner.invoke(cli, ['gamma-curve', '--case', overloaded_file, '--bus', '2', '--from', '0', '--to', '10',
                                 '--step', '5', '--model', 'ac'])
    assert result.exit_code == 3
    assert json.loads(result.output)['context']['stage'] == 'base'


def test_gamma_curve_ac_reports_gamma_nc(runner, tmp_path):
    path = tmp_path / 'two_bus.json'
    path.write_text(emit_case_json(make_two_bus(p_load=0.0, x=0.1)), encoding='utf-8')
    result = runner.invoke(cli, ['gamma-curve', '--case', str(path), '--bus', '2', '--from', '0', '--to', '600',
                                 '--step', '100', '--model', 'ac'])
    assert result.exit_code == 0, result.output
    summary = _summary(result.output)
    assert float(summary['gamma_nc_mw']) == pytest.approx(500.0, rel=0.02)
    assert result.output.splitlines()[-1 - len(summary)].endswith(',false')


def test_export_case_round_trip(runner, path3, tmp_path):
    out = tmp_path / 'exported.m'
    result = runner.invoke(cli, ['export-case', '--case', str(PATH3), '--format', 'matpower', '--out', str(out)])
    assert result.exit_code == 0
    result = runner.invoke(cli, ['export-case', '--case', str(out)])
    assert result.exit_code == 0
    exported = parse_case_json(result.output)
    assert exported.bus_ids == path3.bus_ids
    assert [branch.x for branch in exported.branches] == [1.0, 1.0]


def test_threads_env_override(runner, loaded_path3_file, monkeypatch):
    monkeypatch.setenv('GRIDPERTURB_THREADS', 'many')
    result = runner.invoke(cli, ['sweep-buses', '--case', loaded_path3_file, '--gamma', '50'])
    assert result.exit_code == 2
