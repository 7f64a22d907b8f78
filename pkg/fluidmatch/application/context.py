from argparse import Namespace
import os
import threading
import multiprocessing
from pathlib import Path

from fluidmatch.application.exceptions import ConfigurationException


class Context(dict):
    env_prefix = 'FLUIDMATCH_'

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self.configfile = kw.get('configfile', 'fluidmatch.conf')
        self.update(
            {
                'configfile': {},
                'env': {},
                'args': {},
                'default': {
                    'datadir': str(Path.home()) + '/.fluidmatch',
                    'seed': 0,
                    'jobs': None,
                    'out': None,
                    'db': None,
                    'quiet': False,
                    'debug': False,
                    'cell_timeout': 600
                }
            }
        )
        self.load_env()
        self.load_config()

    _casts = {
        'i': ['seed', 'jobs', 'cell_timeout'],
        'b': ['quiet', 'debug']
    }

    def _cast(self, k, v):
        if k in self._casts['i']:
            try:
                return int(v)
            except ValueError:
                raise ConfigurationException('Parameter %s must be an integer, found: %s' % (k, v))
        if k in self._casts['b']:
            return v.lower() in ('1', 'true', 'yes', 'on')
        return v

    def load_env(self, environ=None):
        environ = os.environ if environ is None else environ
        for k in ('seed', 'jobs'):
            value = environ.get(self.env_prefix + k.upper())
            if value is not None and value != '':
                self['env'][k] = self._cast(k, value)

    def load_config(self):
        filename = self['default']['datadir'] + '/' + self.configfile
        if not os.path.exists(filename):
            return
        with open(filename, 'r') as f:
            lines = f.readlines()
        self.parse_config_lines(lines, filename)

    def parse_config_lines(self, lines, filename='<config>'):
        for i, line in enumerate(lines, 1):
            line = line.strip().replace(' ', '')
            if not line or line.startswith('#'):
                continue
            if '=' not in line:
                raise ConfigurationException('Configuration file error: malformed line: %s (%s:%s)' % (line, filename, i))
            k, v = line.split('=', 1)
            k = k.replace('-', '_')
            if k not in self['default']:
                raise ConfigurationException(
                    'Configuration file error: parameter not admitted: %s (%s:%s)' % (line, filename, i)
                )
            self['configfile'][k] = self._cast(k, v)

    @property
    def datadir(self):
        return self._get_param('datadir')

    @property
    def seed(self) -> int:
        return int(self._get_param('seed') or 0)

    @property
    def jobs(self) -> int:
        return int(self._get_param('jobs') or multiprocessing.cpu_count())

    @property
    def out(self):
        return self._get_param('out')

    @property
    def db(self):
        return self._get_param('db')

    @property
    def quiet(self) -> bool:
        return bool(self._get_param('quiet'))

    @property
    def debug(self) -> bool:
        return bool(self._get_param('debug'))

    @property
    def cell_timeout(self) -> int:
        return int(self._get_param('cell_timeout'))

    def load_args(self, args: Namespace):
        self['args'] = {
            k: getattr(args, k, None) for k in ('seed', 'jobs', 'out', 'db', 'quiet', 'debug', 'cell_timeout')
        }

    def explicit(self, key):
        """
        The value set by args, env or config file, None when only the default applies.
        """
        for layer in ('args', 'env', 'configfile'):
            value = self[layer].get(key, None)
            if value is not None:
                return value

    def _get_param(self, key):
        for layer in ('args', 'env', 'configfile', 'default'):
            value = self[layer].get(key, None)
            if value is not None:
                return value


_local = threading.local()
_local.ctx = ctx = Context()
