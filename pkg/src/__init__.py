import dataclasses
import logging
import os

import sentry_sdk

from src.powerflow.ac import NrOptions
from src.utils.errors import UsageError

THREADS_ENV = 'GRIDPERTURB_THREADS'


@dataclasses.dataclass(frozen=True)
class GridPerturbApp:
    settings: dict
    nr_options: NrOptions
    threads: int

    @property
    def float_digits(self):
        return self.settings.get('float_digits', 10)

    @property
    def gamma_nc_resolution(self):
        return self.settings.get('gamma_nc_resolution_mw', 0.1)

    def with_nr(self, tolerance=None, max_iterations=None):
        options = dataclasses.replace(
            self.nr_options,
            tolerance=self.nr_options.tolerance if tolerance is None else tolerance,
            max_iterations=self.nr_options.max_iterations if max_iterations is None else max_iterations
        )
        return dataclasses.replace(self, nr_options=options)


def _threads(settings):
    threads = settings.get('threads', 1)
    override = os.environ.get(THREADS_ENV)
    if override:
        try:
            cap = int(override)
        except ValueError:
            raise UsageError("{} must be an integer".format(THREADS_ENV), context={'value': override})
        if cap < 1:
            raise UsageError("{} must be at least 1".format(THREADS_ENV), context={'value': override})
        threads = min(threads, cap)
    if threads < 1:
        raise UsageError("worker count must be at least 1", context={'threads': threads})
    return threads


def create_app(settings):
    logging.basicConfig(
        level=settings.get('log_level', 'DEBUG' if settings.get('debug') else 'WARNING'),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s'
    )

    if settings['sentry']['active']:
        sentry_sdk.init(settings['sentry']['connection_string'], environment=settings['environment'])

    return GridPerturbApp(
        settings=settings,
        nr_options=NrOptions.from_settings(settings),
        threads=_threads(settings)
    )
