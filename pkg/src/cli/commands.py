import dataclasses
import functools
import json
import logging
import sys
import traceback
from pathlib import Path
from typing import Optional

import click
from sentry_sdk import capture_exception

from confs import CONFIG_LOOKUP
from src import create_app
from src.analysis.gamma import gamma_curve
from src.analysis.sweeps import (
    model_agreement,
    spread_report,
    sweep_all_buses,
    sweep_both_models,
    sweep_similarity,
)
from src.cases.cases import CaseValidationError
from src.cases.parsers import emit_case_json, emit_case_matpower, load_case
from src.cases.validation import validate_case
from src.cli import reports
from src.powerflow.dc import PerturbationKind, PerturbationSpec, PowerFlowModel
from src.utils.errors import GridPerturbError, UsageError
from src.utils.json_helpers import numpy_to_json

logger = logging.getLogger('cli.commands.logger')

INTERNAL_ERROR_EXIT = 4

REQUIRED_FIELDS = {
    'validate': ('case_path',),
    'spread': ('case_path', 'bus', 'gamma_mw'),
    'sweep-buses': ('case_path', 'gamma_mw'),
    'gamma-curve': ('case_path', 'bus', 'gamma_from', 'gamma_to', 'gamma_step'),
    'export-case': ('case_path',),
}

FLAG_NAMES = {
    'case_path': '--case',
    'bus': '--bus',
    'gamma_mw': '--gamma',
    'gamma_from': '--from',
    'gamma_to': '--to',
    'gamma_step': '--step',
}


class EmptySweepError(GridPerturbError):
    def __init__(self, kind):
        super().__init__(
            err_msg="no eligible buses for a {} sweep".format(kind.value),
            err_code="errors.emptySweep",
            exit_code=1,
            context={'kind': kind.value}
        )


@dataclasses.dataclass(frozen=True)
class RunConfig:
    command: str
    case_path: Optional[str] = None
    model: PowerFlowModel = PowerFlowModel.DC
    gamma_mw: Optional[float] = None
    bus: Optional[int] = None
    kind: PerturbationKind = PerturbationKind.LOAD
    output_format: str = 'csv'
    output_path: Optional[str] = None
    gamma_from: Optional[float] = None
    gamma_to: Optional[float] = None
    gamma_step: Optional[float] = None
    nr_tolerance: Optional[float] = None
    nr_max_iter: Optional[int] = None
    both_models: bool = False

    def __post_init__(self):
        missing = [FLAG_NAMES[name] for name in REQUIRED_FIELDS[self.command] if getattr(self, name) is None]
        if missing:
            raise UsageError(
                "missing required option(s) for <{}>: {}".format(self.command, ', '.join(missing)),
                context={'missing': missing}
            )
        if self.gamma_step is not None and not self.gamma_step > 0:
            raise UsageError("--step must be positive", context={'step': self.gamma_step})

    @property
    def spec(self):
        return PerturbationSpec(bus_u=self.bus, gamma=self.gamma_mw, kind=self.kind, model=self.model)


def handle_exceptions(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (click.ClickException, click.exceptions.Exit, click.exceptions.Abort):
            raise
        except GridPerturbError as error:
            click.echo(json.dumps(error.to_dict(), default=numpy_to_json), err=True)
            sys.exit(error.exit_code)
        except Exception as error:
            app = click.get_current_context().obj
            if app is not None and app.settings['sentry']['active']:
                capture_exception(error)
            click.echo(json.dumps({
                'err_msg': str(error),
                'err_code': 'errors.internalError',
                'traceback': traceback.format_exc()
            }), err=True)
            sys.exit(INTERNAL_ERROR_EXIT)

    return wrapper


def _write(config, text):
    if config.output_path:
        with open(config.output_path, 'w', encoding='utf-8', newline='') as handle:
            handle.write(text)
        logger.info("Wrote <%s> output to %s", config.command, config.output_path)
    else:
        click.echo(text, nl=False)


def _load_valid_case(config):
    case = load_case(config.case_path)
    report = validate_case(case)
    if not report.is_valid:
        raise CaseValidationError("case is invalid", context=report.to_dict())
    return case


def _nr_options(app, config):
    return app.with_nr(config.nr_tolerance, config.nr_max_iter).nr_options


def case_option(func):
    return click.option('--case', 'case_path', help='Case file (.json, .m) or pypower:<case>.')(func)


def format_option(func):
    return click.option('--format', 'output_format', type=click.Choice(['csv', 'json']), default='csv')(func)


def out_option(func):
    return click.option('--out', 'output_path', type=click.Path(dir_okay=False), help='Write output to a file.')(func)


def perturbation_options(func):
    options = [
        click.option('--model', type=click.Choice(['dc', 'ac']), default='dc'),
        click.option('--kind', type=click.Choice(['load', 'gen', 'generation']), default='load'),
        click.option('--nr-tol', 'nr_tolerance', type=float),
        click.option('--nr-max-iter', 'nr_max_iter', type=int),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _config(command, **values):
    model = values.pop('model', 'dc')
    kind = values.pop('kind', 'load')
    return RunConfig(
        command=command,
        model=PowerFlowModel(model),
        kind=PerturbationKind.parse(kind),
        **values
    )


@click.group()
@click.option('--config', 'config_name', type=click.Choice(sorted(CONFIG_LOOKUP)), default='production')
@click.pass_context
@handle_exceptions
def cli(ctx, config_name):
    """Spreadability of single-bus power perturbations."""
    ctx.obj = create_app(CONFIG_LOOKUP[config_name])


@cli.command('validate')
@case_option
@format_option
@out_option
@click.pass_obj
@handle_exceptions
def cmd_validate(app, **values):
    config = _config('validate', **values)
    report = validate_case(load_case(config.case_path))

    if config.output_format == 'json':
        _write(config, reports.to_json(report.to_dict(), app.float_digits))
    else:
        _write(config, reports.to_csv(reports.FINDING_COLUMNS, reports.finding_rows(report), digits=app.float_digits))
    sys.exit(0 if report.is_valid else 1)


@cli.command('spread')
@case_option
@perturbation_options
@click.option('--bus', type=int)
@click.option('--gamma', 'gamma_mw', type=float)
@format_option
@out_option
@click.pass_obj
@handle_exceptions
def cmd_spread(app, **values):
    config = _config('spread', **values)
    case = _load_valid_case(config)
    report = spread_report(case, config.spec, options=_nr_options(app, config))

    profile = report.profile.in_deg_per_mw(case.base_mva)
    _write(config, reports.render(
        config.output_format,
        reports.PROFILE_COLUMNS,
        reports.profile_rows(profile),
        reports.spread_summary(report),
        app.float_digits,
        rows_key='profile'
    ))


@cli.command('sweep-buses')
@case_option
@perturbation_options
@click.option('--gamma', 'gamma_mw', type=float)
@click.option('--both-models', is_flag=True, help='Report AC columns next to the DC ones.')
@format_option
@out_option
@click.pass_obj
@handle_exceptions
def cmd_sweep_buses(app, **values):
    config = _config('sweep-buses', **values)
    case = _load_valid_case(config)
    options = _nr_options(app, config)

    if config.both_models:
        rows = sweep_both_models(case, config.gamma_mw, config.kind, options=options, threads=app.threads)
        columns, table = reports.COMPARISON_COLUMNS, reports.comparison_rows(rows)
        summary = dict(sweep_similarity([row.dc for row in rows]), **model_agreement(rows))
    else:
        rows = sweep_all_buses(case, config.gamma_mw, config.kind, config.model, options=options, threads=app.threads)
        columns, table = reports.SWEEP_COLUMNS, reports.sweep_rows(rows)
        summary = sweep_similarity(rows)
    if not rows:
        raise EmptySweepError(config.kind)

    _write(config, reports.render(
        config.output_format,
        columns,
        table,
        summary,
        app.float_digits,
        summary_key='similarity'
    ))
    if not any(row.ok for row in rows):
        logger.warning("Every bus of the sweep failed")
        sys.exit(1)


@cli.command('gamma-curve')
@case_option
@perturbation_options
@click.option('--bus', type=int)
@click.option('--from', 'gamma_from', type=float)
@click.option('--to', 'gamma_to', type=float)
@click.option('--step', 'gamma_step', type=float)
@format_option
@out_option
@click.pass_obj
@handle_exceptions
def cmd_gamma_curve(app, **values):
    config = _config('gamma-curve', **values)
    case = _load_valid_case(config)
    curve = gamma_curve(
        case, config.bus, config.kind, config.model,
        config.gamma_from, config.gamma_to, config.gamma_step,
        options=_nr_options(app, config), resolution=app.gamma_nc_resolution
    )
    _write(config, reports.render(
        config.output_format,
        reports.CURVE_COLUMNS,
        reports.curve_rows(curve),
        reports.curve_summary(curve, include_nc=config.model is PowerFlowModel.AC),
        app.float_digits
    ))


@cli.command('export-case')
@case_option
@click.option('--format', 'output_format', type=click.Choice(['json', 'matpower']), default='json')
@out_option
@handle_exceptions
def cmd_export_case(**values):
    config = _config('export-case', **values)
    case = load_case(config.case_path)
    text = emit_case_json(case) if config.output_format == 'json' else emit_case_matpower(case)
    _write(config, text if text.endswith('\n') else text + '\n')


def main():
    cli(prog_name=Path(sys.argv[0]).name)
