import logging
import os
import sys
from fluidmatch import settings
from fluidmatch.application.context import ctx


class LoggingFactory:  # pragma: no cover
    def __init__(self, loglevel=logging.DEBUG, logfile=None, stdout=False):
        formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
        root = logging.getLogger()
        root.setLevel(level=loglevel)

        file_logger = logfile and logging.FileHandler(logfile)
        stdout_logger = stdout and logging.StreamHandler(sys.stderr)

        stdout_logger and stdout_logger.setLevel(loglevel)
        stdout_logger and stdout_logger.setFormatter(formatter)
        stdout_logger and root.addHandler(stdout_logger)

        file_logger and file_logger.setLevel(loglevel)
        file_logger and file_logger.setFormatter(formatter)
        file_logger and root.addHandler(file_logger)

    @property
    def root(self):
        return logging.getLogger('root')

    @property
    def distributions(self):
        return logging.getLogger('distributions')

    @property
    def fluid(self):
        return logging.getLogger('fluid')

    @property
    def solver(self):
        return logging.getLogger('solver')

    @property
    def priority(self):
        return logging.getLogger('priority')

    @property
    def transport(self):
        return logging.getLogger('transport')

    @property
    def simulator(self):
        return logging.getLogger('simulator')

    @property
    def sweep(self):
        return logging.getLogger('sweep')

    @property
    def oracle(self):
        return logging.getLogger('oracle')

    @property
    def repository(self):
        return logging.getLogger('repository')

    @property
    def cli(self):
        return logging.getLogger('cli')


_domain_loggers = (
    'distributions', 'fluid', 'solver', 'priority', 'transport',
    'simulator', 'sweep', 'oracle', 'repository', 'cli'
)


def _logfile():  # pragma: no cover
    if not settings.LOGFILE or not os.path.isdir(os.path.dirname(settings.LOGFILE)):
        return None
    return settings.LOGFILE


def quiet_down():  # pragma: no cover
    for name in _domain_loggers + ('root',):
        logging.getLogger(name).setLevel(logging.WARNING)


if settings.TESTING:
    Logger = LoggingFactory(
        logfile=None,
        loglevel=logging.DEBUG,
        stdout=True
    )  # type: LoggingFactory

elif ctx.debug:  # pragma: no cover
    logging.getLogger().setLevel(logging.DEBUG)
    for _name in _domain_loggers:
        logging.getLogger(_name).setLevel(logging.DEBUG)
    logging.getLogger('asyncio').setLevel(logging.INFO)
    logging.getLogger('sqlalchemy').setLevel(logging.WARNING)
    Logger = LoggingFactory(
        logfile=_logfile(),
        loglevel=logging.DEBUG,
        stdout=True
    )  # type: LoggingFactory

else:  # pragma: no cover
    logging.getLogger('distributions').setLevel(logging.WARNING)
    logging.getLogger('fluid').setLevel(logging.INFO)
    logging.getLogger('solver').setLevel(logging.INFO)
    logging.getLogger('priority').setLevel(logging.INFO)
    logging.getLogger('transport').setLevel(logging.WARNING)
    logging.getLogger('simulator').setLevel(logging.INFO)
    logging.getLogger('sweep').setLevel(logging.INFO)
    logging.getLogger('oracle').setLevel(logging.INFO)
    logging.getLogger('repository').setLevel(logging.INFO)
    logging.getLogger('cli').setLevel(logging.INFO)
    logging.getLogger('asyncio').setLevel(logging.CRITICAL)
    logging.getLogger('sqlalchemy').setLevel(logging.ERROR)
    Logger = LoggingFactory(
        logfile=_logfile(),
        loglevel=logging.INFO,
        stdout=True
    )  # type: LoggingFactory
    if ctx.quiet:
        quiet_down()
