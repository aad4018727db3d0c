"""Experiment matrices and CSV emission."""
import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from ..variants import PRESETS

SCHEMAS = {
    'latency': ('scheme', 'state', 'avg', 'max', 'n'),
    'pto': ('scheme', 'mix', 'freq_hz', 'jitter_norm', 'sustainable'),
    'modbus': ('scheme', 'baud', 'fps', 'sustainable'),
}
SCHEME_LABELS = tuple(sorted(PRESETS)) + ('kernel', 'intel', 'software')


def resolve(label, variant=None):
    """Scheme label -> (scheme, variant). 'v1'..'v5' mean the extension with that preset."""
    label = label.lower()
    if label in PRESETS:
        return 'ext', label
    if label == 'ext':
        return 'ext', variant or 'v5'
    if label in ('kernel', 'intel', 'software'):
        return label, variant or 'v5'
    raise ValueError('unknown scheme %r' % label)


@dataclass
class ExperimentSpec:
    kind: str
    schemes: list = field(default_factory=list)
    conditions: list = field(default_factory=list)   # states (latency) or mixes (pto)
    points: list = field(default_factory=list)       # freqs (pto) or bauds (modbus)
    n: int = 10_000
    seed: int = 1
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SCHEMAS:
            raise ValueError('unknown experiment %r' % self.kind)
        for s in self.schemes:
            resolve(s)

    def cells(self):
        if self.kind == 'latency':
            return [(s, c) for s in self.schemes for c in self.conditions]
        if self.kind == 'pto':
            return [(s, c, p) for s in self.schemes for c in self.conditions for p in self.points]
        return [(s, p) for s in self.schemes for p in self.points]


def run_cell(kind, cell, n=10_000, seed=1, options=None):
    """One row (as a dict in schema order)."""
    from .probe import run_latency_probe, latency_summary
    from .pto import run_pto
    from .modbus import run_modbus_coloc
    opts = dict(options or {})
    if kind == 'latency':
        label, state = cell
        scheme, variant = resolve(label)
        s = latency_summary(run_latency_probe(scheme, state, n=n, variant=variant, **opts))
        return dict(scheme=label, state=state, avg='%.3f' % s['avg'], max=s['max'], n=s['n'])
    if kind == 'pto':
        label, mix, freq = cell
        scheme, variant = resolve(label)
        st, ok = run_pto(scheme, int(freq), mix, variant=variant, **opts)
        return dict(scheme=label, mix=mix, freq_hz=int(freq), jitter_norm='%.6f' % st.normalized,
                    sustainable=int(ok))
    label, baud = cell
    scheme, variant = resolve(label)
    st, ok = run_modbus_coloc(scheme, int(baud), variant=variant, seed=seed, **opts)
    return dict(scheme=label, baud=int(baud), fps='%.3f' % st.fps, sustainable=int(ok))


def _run(args):
    return run_cell(*args)


def sort_key(kind, row):
    cols = SCHEMAS[kind][:-2] if kind != 'modbus' else SCHEMAS[kind][:2]
    return tuple(str(row[c]) if not isinstance(row[c], int) else '%012d' % row[c] for c in cols)


def sweep(spec, workers=1):
    """Run every cell; rows come back sorted by key so worker order never matters."""
    jobs = [(spec.kind, c, spec.n, spec.seed, spec.options) for c in spec.cells()]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_run, jobs))
    else:
        rows = [_run(j) for j in jobs]
    return sorted(rows, key=lambda r: sort_key(spec.kind, r))


def to_csv(kind, rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SCHEMAS[kind], lineterminator='\n')
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def parse_csv(kind, text):
    """Inverse of to_csv with typed fields."""
    types = {'avg': float, 'max': int, 'n': int, 'freq_hz': int, 'jitter_norm': float,
             'sustainable': lambda x: bool(int(x)), 'baud': int, 'fps': float}
    rows = list(csv.DictReader(io.StringIO(text)))
    for r in rows:
        if tuple(r) != SCHEMAS[kind]:
            raise ValueError('columns %r do not match the %s schema' % (tuple(r), kind))
        for k in r:
            if k in types:
                r[k] = types[k](r[k])
    return rows
