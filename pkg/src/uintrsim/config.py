"""Run configuration: an INI file (configparser) overridden by command-line flags.

Example::

    [run]
    scheme = ext
    variant = v5
    seed = 1
    out = results

    [calibration]
    redirect = 4

    [pto]
    mix = mixed
    freq_hz = 10000, 50000
"""
import configparser
import re
from dataclasses import dataclass, field, fields, replace

from .kernel import SchemeCosts
from .variants import Calibration, VariantConfig, preset, VARIANT_NAMES

SCHEMES = ('ext', 'kernel', 'intel', 'software')
DEFAULT_SEED = 1

RUN_KEYS = {'scheme', 'variant', 'seed', 'out', 'trace', 'workers'}
VARIANT_KEYS = {f.name for f in fields(VariantConfig)} - {'name', 'calibration'}
EXPERIMENT_KEYS = {
    'latency': {'state', 'n', 'period'},
    'pto': {'mix', 'freq_hz', 'edges', 'quanta'},
    'modbus': {'baud', 'window'},
    'sweep': {'experiment', 'schemes', 'conditions', 'points', 'n'},
}


class ConfigError(Exception):
    def __init__(self, msg, path=None, line=None, key=None):
        where = ''
        if path:
            where = str(path) + (':%d' % line if line else '') + ': '
        if key:
            where += '[%s] ' % key
        super().__init__(where + msg)
        self.line, self.key = line, key


@dataclass
class RunConfig:
    scheme: str = 'ext'
    variant: object = 'v5'            # preset name or a VariantConfig built from [variant]
    calibration: dict = field(default_factory=dict)
    costs: dict = field(default_factory=dict)
    experiments: dict = field(default_factory=dict)   # section -> {key: str}
    seed: int = DEFAULT_SEED
    out: str = None
    trace: bool = False
    workers: int = 1

    def calibration_obj(self):
        return replace(Calibration(), **self.calibration)

    def costs_obj(self):
        return replace(SchemeCosts(), **self.costs)

    def variant_obj(self):
        cal = self.calibration_obj()
        if isinstance(self.variant, VariantConfig):
            return self.variant.with_(calibration=cal)
        return preset(self.variant, calibration=cal)

    def section(self, name):
        return self.experiments.get(name, {})


def _lines(text):
    """(section, key) -> line number, for diagnostics."""
    out, sec = {}, None
    for i, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        m = re.match(r'\[([^\]]+)\]', s)
        if m:
            sec = m.group(1).strip()
            out.setdefault((sec, ''), i)
        elif sec and s and s[0] not in '#;':
            key = re.split(r'[=:]', s, 1)[0].strip().lower()
            out.setdefault((sec, key), i)
    return out


def _int(v, where):
    try:
        return int(v, 0)
    except ValueError:
        raise ConfigError('expected an integer, got %r' % v, *where) from None


def parse_list(v):
    return [x.strip() for x in v.split(',') if x.strip()]


def load(path=None, text=None):
    """Parse a config file into a RunConfig. Raises ConfigError with file:line context."""
    cfg = RunConfig()
    if path is None and text is None:
        return cfg
    if text is None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as e:
            raise ConfigError(e.strerror or str(e), path) from None
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=str(path or '<string>'))
    except configparser.Error as e:
        raise ConfigError(e.message.splitlines()[0], path, getattr(e, 'lineno', None)) from None
    lines = _lines(text)

    def where(sec, key):
        return (path, lines.get((sec, key)), '%s.%s' % (sec, key))

    for sec in cp.sections():
        known = (RUN_KEYS if sec == 'run' else VARIANT_KEYS if sec == 'variant' else
                 {f.name for f in fields(Calibration)} if sec == 'calibration' else
                 {f.name for f in fields(SchemeCosts)} if sec == 'costs' else
                 EXPERIMENT_KEYS.get(sec))
        if known is None:
            raise ConfigError('unknown section [%s]' % sec, path, lines.get((sec, '')))
        for key in cp[sec]:
            if key not in known:
                raise ConfigError('unknown key', *where(sec, key))

    run = cp['run'] if cp.has_section('run') else {}
    for key, v in run.items():
        if key == 'scheme':
            if v not in SCHEMES:
                raise ConfigError('scheme must be one of %s' % ', '.join(SCHEMES), *where('run', key))
            cfg.scheme = v
        elif key == 'variant':
            if v.lower() not in VARIANT_NAMES + ('v1-spill',):
                raise ConfigError('unknown variant %r' % v, *where('run', key))
            cfg.variant = v.lower()
        elif key in ('seed', 'workers'):
            setattr(cfg, key, _int(v, where('run', key)))
        elif key == 'trace':
            cfg.trace = cp.getboolean('run', 'trace')
        else:
            cfg.out = v

    for sec, target in (('calibration', cfg.calibration), ('costs', cfg.costs)):
        if cp.has_section(sec):
            for key, v in cp[sec].items():
                target[key] = _int(v, where(sec, key))

    if cp.has_section('variant'):
        if 'variant' in run:
            raise ConfigError('[run] variant and a [variant] section are mutually exclusive',
                              path, lines.get(('run', 'variant')), 'run.variant')
        kw = {}
        for key, v in cp['variant'].items():
            kw[key] = _int(v, where('variant', key)) if key in ('cam_entries', 'extra_banks', 'pmp_entries') else v
        try:
            cfg.variant = VariantConfig(name='custom', **kw)
        except ValueError as e:
            raise ConfigError(str(e), path, None, 'variant') from None

    for sec in EXPERIMENT_KEYS:
        if cp.has_section(sec):
            cfg.experiments[sec] = dict(cp[sec])
    return cfg
