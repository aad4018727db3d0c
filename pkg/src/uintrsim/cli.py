"""Command line: latency verification, experiment runs and entry/return traces.

Exit codes: 0 success, 1 usage, 2 config, 3 acceptance-check failure.
"""
import argparse
import csv
import io
import os
import sys

from . import config as cfgmod
from .calibrate import check
from .engine import compose_entry, compose_return, KIND_HANDLER
from .platform import build_memory, stack_top, BUDGET_TABLE
from .variants import ANCHORS, BUDGET_WORDS, FRAME_WORDS, VARIANT_NAMES, InfeasibleVariant
from .harness import sweep as sw

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_FAIL = 0, 1, 2, 3
EXPERIMENTS = ('latency', 'isolate', 'pto', 'modbus', 'sweep')
SCHEME_CHOICES = cfgmod.SCHEMES + tuple(n for n in VARIANT_NAMES if n != 'base')
VARIANT_CHOICES = VARIANT_NAMES + ('v1-spill',)


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, '%s: error: %s\n' % (self.prog, message))


def _ints(text):
    try:
        return [int(x, 0) for x in cfgmod.parse_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError('expected comma-separated integers, got %r' % text) from None


def _kv(text):
    k, sep, v = text.partition('=')
    if not sep:
        raise argparse.ArgumentTypeError('expected KEY=VALUE, got %r' % text)
    try:
        return k.strip(), int(v, 0)
    except ValueError:
        raise argparse.ArgumentTypeError('value of %s must be an integer' % k) from None


def build_parser():
    p = Parser(prog='uintrsim', description='Cycle-level user-level interrupt simulator.')
    sub = p.add_subparsers(dest='command', required=True, parser_class=Parser)

    common = Parser(add_help=False)
    common.add_argument('--config', help='INI run configuration; flags override it')
    common.add_argument('--cal', action='append', type=_kv, default=[], metavar='KEY=VALUE',
                        help='override one calibration constant')

    v = sub.add_parser('verify-latency', parents=[common], help='check the idle-machine entry latencies')
    v.add_argument('--variant', choices=VARIANT_CHOICES, action='append',
                   help='limit the check to these variants')

    r = sub.add_parser('run', parents=[common], help='run an experiment')
    r.add_argument('experiment', choices=EXPERIMENTS)
    r.add_argument('--scheme', choices=SCHEME_CHOICES,
                   help='delivery scheme; v1..v5 select the extension with that preset')
    r.add_argument('--variant', choices=VARIANT_CHOICES)
    r.add_argument('--seed', type=int)
    r.add_argument('--out', help='directory for CSV output')
    r.add_argument('--workers', type=int)
    r.add_argument('--trace', action='store_true', default=None, help='also write trace.csv')
    r.add_argument('--state', choices=('active', 'inactive'), action='append')
    r.add_argument('--n', type=int, help='latency samples')
    r.add_argument('--mix', choices=('active', 'inactive', 'mixed'), action='append')
    r.add_argument('--freq', type=_ints, help='PTO frequencies in Hz, comma separated')
    r.add_argument('--edges', type=int)
    r.add_argument('--baud', type=_ints, help='UART baud rates, comma separated (0 = unloaded)')
    r.add_argument('--window', type=int, help='Modbus measurement window in cycles')
    r.add_argument('--experiment', dest='sweep_kind', choices=tuple(sw.SCHEMAS), help='sweep: experiment')
    r.add_argument('--schemes', help='sweep: comma separated scheme labels')
    r.add_argument('--conditions', help='sweep: states or mixes')
    r.add_argument('--points', type=_ints, help='sweep: frequencies or baud rates')

    t = sub.add_parser('trace', parents=[common], help='print the entry/return schedule')
    t.add_argument('--variant', choices=VARIANT_CHOICES)
    t.add_argument('--nested', action='store_true', help='entry that preempts another handler')
    t.add_argument('--no-return', dest='with_return', action='store_false')
    t.add_argument('--out', help='write to this file instead of stdout')
    return p


def _config(args):
    cfg = cfgmod.load(args.config) if args.config else cfgmod.RunConfig()
    cfg.calibration.update(dict(args.cal))
    for key in ('seed', 'out', 'workers', 'trace'):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    scheme = getattr(args, 'scheme', None)
    if scheme:
        cfg.scheme, variant = sw.resolve(scheme, getattr(args, 'variant', None))
        cfg.variant = variant
    elif getattr(args, 'variant', None):
        cfg.variant = args.variant
    try:
        cfg.calibration_obj()
        cfg.costs_obj()
    except TypeError as e:
        raise cfgmod.ConfigError(str(e)) from None
    return cfg


# ------------------------------------------------------------------ verify

def cmd_verify_latency(args, out=sys.stdout):
    cfg = _config(args)
    cal = cfg.calibration_obj()
    names = args.variant or list(ANCHORS)
    result = check(cal, {n: ANCHORS[n] for n in names})
    bad = []
    out.write('%-10s %8s %8s\n' % ('variant', 'expected', 'actual'))
    for name, (want, got) in result.items():
        flag = '' if want == got else '  MISMATCH'
        out.write('%-10s %8d %8d%s\n' % (name, want, got, flag))
        if want != got:
            bad.append(name)
    if bad:
        out.write('mismatch: %s\n' % ', '.join(bad))
        return EXIT_FAIL
    return EXIT_OK


# ------------------------------------------------------------------ trace

def trace_records(variant, nested=False, with_return=True):
    """Per-cycle (cycle, unit, action, port, detail) records of one entry and its return."""
    mem = build_memory(variant)
    banked = variant.extra_banks > 0
    kw = {}
    if nested:
        kw = dict(preempted=KIND_HANDLER, outer_budget_ptr=BUDGET_TABLE + 4 * BUDGET_WORDS)
    entry = compose_entry(variant, mem, bank_free=banked, **kw)
    phases = [('entry', entry)]
    if with_return:
        frame = ('bank', 0) if banked else ('spill', stack_top(variant) - 4 * FRAME_WORDS)
        ret = compose_return(variant, mem, t0=entry.end, frame=frame,
                             resume=KIND_HANDLER if nested else 0)
        phases.append(('return', ret))
    recs = []
    for phase, sched in phases:
        for s in sched.segments:
            port = s.port or '-'
            if s.end == s.start:
                recs.append((s.start, s.unit, s.action, port, '%s:switch' % phase))
                continue
            n = s.end - s.start
            for c in range(s.start, s.end):
                recs.append((c, s.unit, s.action, port, '%s:%d/%d' % (phase, c - s.start + 1, n)))
    recs.sort(key=lambda r: r[0])
    return recs


def format_trace(recs):
    lines = ['cycle,unit,action,port,detail']
    lines += ['%d,%s,%s,%s,%s' % r for r in recs]
    return '\n'.join(lines) + '\n'


def cmd_trace(args, out=sys.stdout):
    cfg = _config(args)
    v = cfg.variant_obj()
    if v is None:
        raise UsageError('the base core has no extension to trace')
    text = format_trace(trace_records(v, args.nested, args.with_return))
    if args.out:
        with open(args.out, 'w') as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


# ------------------------------------------------------------------ run

def _label(cfg):
    if cfg.scheme != 'ext':
        return cfg.scheme
    v = cfg.variant
    return v if isinstance(v, str) else v.name


def _spec(cfg, args):
    """Build an ExperimentSpec for run latency/pto/modbus/sweep."""
    exp = args.experiment
    opts = {}
    if exp == 'sweep':
        sec = cfg.section('sweep')
        kind = args.sweep_kind or sec.get('experiment')
        if not kind:
            raise UsageError('sweep needs --experiment or [sweep] experiment')
        schemes = cfgmod.parse_list(args.schemes or sec.get('schemes', ''))
        conds = cfgmod.parse_list(args.conditions or sec.get('conditions', ''))
        points = args.points if args.points is not None else _ints(sec.get('points', '')) if sec.get('points') else []
        n = args.n or int(sec.get('n', 10_000))
    else:
        kind = exp
        schemes = [_label(cfg)]
        sec = cfg.section(exp)
        n = args.n or int(sec.get('n', 10_000))
        if kind == 'latency':
            conds = args.state or cfgmod.parse_list(sec.get('state', 'active, inactive'))
            points = []
            if 'period' in sec:
                opts['period'] = int(sec['period'])
        elif kind == 'pto':
            conds = args.mix or cfgmod.parse_list(sec.get('mix', 'mixed'))
            points = args.freq or _ints(sec.get('freq_hz', '10000'))
        else:
            conds = []
            points = args.baud if args.baud is not None else _ints(sec.get('baud', '115200'))
    if kind == 'pto':
        sec = cfg.section('pto')
        edges = args.edges or (int(sec['edges']) if 'edges' in sec else None)
        if edges:
            opts['edges'] = edges
        if 'quanta' in sec:
            opts['quanta'] = int(sec['quanta'])
    if kind == 'modbus':
        window = args.window or (int(cfg.section('modbus')['window']) if 'window' in cfg.section('modbus') else None)
        if window:
            opts['window'] = window
    if cfg.calibration:
        opts['calibration'] = cfg.calibration_obj()
    if cfg.costs:
        opts['costs'] = cfg.costs_obj()
    for s in schemes:
        try:
            sw.resolve(s)
        except ValueError as e:
            raise UsageError(str(e)) from None
    return sw.ExperimentSpec(kind, schemes, conds, points, n=n, seed=cfg.seed, options=opts)


def _table(header, rows):
    widths = [max(len(str(h)), *(len(str(r[h])) for r in rows)) if rows else len(h) for h in header]
    lines = ['  '.join(str(h).ljust(w) for h, w in zip(header, widths))]
    for r in rows:
        lines.append('  '.join(str(r[h]).ljust(w) for h, w in zip(header, widths)))
    return '\n'.join(lines) + '\n'


def _write(cfg, name, text):
    outdir = cfg.out or 'results'
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, name)
    with open(path, 'w') as fh:
        fh.write(text)
    return path


ISO_FIELDS = ('variant', 'scenario', 'violation', 'terminated', 'cause', 'expected_cause',
              'context_ok', 'commits_ok', 'budget_ok', 'passed')


def cmd_run(args, out=sys.stdout):
    cfg = _config(args)
    if args.experiment == 'isolate':
        from .harness.isolation import run_isolation_suite
        v = cfg.variant_obj()
        if v is None:
            raise UsageError('isolation needs one of v1..v5')
        rows = []
        for c in run_isolation_suite(v):
            d = {f: getattr(c, f) for f in ISO_FIELDS}
            rows.append({k: int(x) if isinstance(x, bool) else x for k, x in d.items()})
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=ISO_FIELDS, lineterminator='\n')
        w.writeheader()
        w.writerows(rows)
        path = _write(cfg, 'isolate.csv', buf.getvalue())
        out.write(_table(ISO_FIELDS, rows))
        passed = sum(r['passed'] for r in rows)
        out.write('%d/%d cases passed; wrote %s\n' % (passed, len(rows), path))
        status = EXIT_OK if passed == len(rows) else EXIT_FAIL
    else:
        if cfg.scheme == 'ext' and not isinstance(cfg.variant, str):
            raise UsageError('experiment runs take a preset variant; use isolate or trace for [variant]')
        if cfg.scheme == 'ext' and cfg.variant in ('base', 'v1-spill'):
            raise UsageError('the ext scheme needs one of v1..v5')
        spec = _spec(cfg, args)
        rows = sw.sweep(spec, workers=max(1, cfg.workers))
        kind = spec.kind
        path = _write(cfg, '%s.csv' % kind, sw.to_csv(kind, rows))
        out.write(_table(sw.SCHEMAS[kind], rows))
        out.write('%d rows; wrote %s\n' % (len(rows), path))
        status = EXIT_OK
    if cfg.trace:
        v = cfg.variant_obj()
        if v is not None:
            _write(cfg, 'trace.csv', format_trace(trace_records(v)))
    return status


COMMANDS = {'verify-latency': cmd_verify_latency, 'run': cmd_run, 'trace': cmd_trace}


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except cfgmod.ConfigError as e:
        sys.stderr.write('config error: %s\n' % e)
        return EXIT_CONFIG
    except (InfeasibleVariant, ValueError) as e:
        sys.stderr.write('config error: %s\n' % e)
        return EXIT_CONFIG
    except (UsageError, argparse.ArgumentTypeError) as e:
        sys.stderr.write('usage error: %s\n' % e)
        return EXIT_USAGE


def entry():
    sys.exit(main())


if __name__ == '__main__':
    entry()
