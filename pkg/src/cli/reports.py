"""Text renderings of command results.

Every emitter returns the full document as a string so the same bytes go to
stdout or to `--out`. CSV documents are a header, the data rows, then
`key=value` summary lines.
"""
import csv
import io
import json

from src.utils.json_helpers import format_float, numpy_to_json, rounded

PROFILE_COLUMNS = ('K', 'mean_psi_deg_per_mw', 'shell_size')
SWEEP_COLUMNS = ('bus', 's', 's_prime', 'g_delta_theta', 'l_delta_theta_u', 'status')
COMPARISON_COLUMNS = SWEEP_COLUMNS + tuple('{}_ac'.format(column) for column in SWEEP_COLUMNS[1:])
CURVE_COLUMNS = ('gamma_mw', 'g_theta', 'converged')
FINDING_COLUMNS = ('code', 'message')


def _cell(value, digits):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return format_float(value, digits)
    if value is None:
        return ''
    return str(value)


def to_csv(columns, rows, summary=None, digits=10):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[column], digits) for column in columns])
    for key, value in (summary or {}).items():
        buffer.write('{}={}\n'.format(key, _cell(value, digits)))
    return buffer.getvalue()


def to_json(document, digits=10):
    return json.dumps(rounded(document, digits), indent=2, default=numpy_to_json) + '\n'


def render(output_format, columns, rows, summary=None, digits=10, rows_key='rows', summary_key='summary'):
    if output_format == 'json':
        return to_json({rows_key: rows, summary_key: summary or {}}, digits)
    return to_csv(columns, rows, summary, digits)


def profile_rows(profile):
    return [
        {'K': k, 'mean_psi_deg_per_mw': float(mean), 'shell_size': size}
        for (k, mean), size in zip(profile.means, profile.shell_sizes)
    ]


def spread_summary(report):
    return {
        's': report.s,
        's_prime': report.s_prime,
        'g_delta_theta': report.g_delta_theta,
        'l_delta_theta_u': report.l_delta_theta_at_u,
        'slope': report.slope,
        'slope_degenerate': report.slope_degenerate
    }


def sweep_rows(reports):
    return [
        {
            'bus': report.u,
            's': report.s,
            's_prime': report.s_prime,
            'g_delta_theta': report.g_delta_theta,
            'l_delta_theta_u': report.l_delta_theta_at_u,
            'status': report.status
        }
        for report in reports
    ]


def comparison_rows(comparisons):
    rows = []
    for dc_row, ac_row in zip(sweep_rows([c.dc for c in comparisons]), sweep_rows([c.ac for c in comparisons])):
        ac_row.pop('bus')
        dc_row.update({'{}_ac'.format(column): value for column, value in ac_row.items()})
        rows.append(dc_row)
    return rows


def curve_rows(curve):
    return [
        {'gamma_mw': point.gamma_mw, 'g_theta': point.g_theta, 'converged': point.converged}
        for point in curve.points
    ]


def curve_summary(curve, include_nc):
    summary = {'gamma_c_mw': curve.gamma_c_mw}
    if include_nc:
        summary['gamma_nc_mw'] = curve.gamma_nc_mw
    if curve.critical_load_mw is not None:
        summary['critical_load_mw'] = curve.critical_load_mw
    return summary


def finding_rows(report):
    return [{'code': finding.code, 'message': finding.message} for finding in report.findings]
