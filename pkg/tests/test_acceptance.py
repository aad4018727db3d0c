"""Acceptance criteria 1-7. Each test prints one PASS/FAIL line and records it for the
terminal summary. Criterion 8 (silicon area, power, CoreMark, FPGA frequency) is out
of scope for a cycle-level simulator; see README."""
import os
import time
from concurrent.futures import ProcessPoolExecutor

import pytest

from conftest import ACCEPTANCE
from uintrsim.calibrate import check
from uintrsim.variants import ANCHORS
from uintrsim.harness.probe import run_latency_probe
from uintrsim.harness.isolation import run_isolation_suite
from uintrsim.harness.budget import run_budget_trace
from uintrsim.harness.sweep import ExperimentSpec, sweep
from uintrsim.harness.modbus import run_modbus_coloc
from uintrsim.harness.compat import CORPUS, differential

WORKERS = max(1, min(8, os.cpu_count() or 1))
EXT = ['v1', 'v2', 'v3', 'v4', 'v5']


def report(n, failures, detail):
    status = 'FAIL' if failures else 'PASS'
    text = detail + ('; ' + '; '.join(failures) if failures else '')
    ACCEPTANCE[n] = (status, text)
    print('criterion %d: %s  %s' % (n, status, text))
    assert not failures, text


def test_criterion_1_entry_latency_anchors():
    t = time.perf_counter()
    res = check()
    dt = time.perf_counter() - t
    bad = ['%s expected %d got %d' % (k, w, g) for k, (w, g) in res.items() if w != g]
    if set(res) != set(ANCHORS) or set(ANCHORS) != {'base', 'v1', 'v2', 'v3', 'v4', 'v5', 'v1-spill'}:
        bad.append('anchor set incomplete')
    if dt >= 1.0:
        bad.append('took %.2fs' % dt)
    report(1, bad, ' '.join('%s=%d' % (k, g) for k, (_, g) in res.items()) + ' in %.3fs' % dt)


def _probe(args):
    scheme, variant, state = args
    t = time.perf_counter()
    xs = [s.latency for s in run_latency_probe(scheme, state, n=10_000, variant=variant)]
    return args, xs, time.perf_counter() - t


def test_criterion_2_latency_probe():
    cells = [('ext', v, s) for v in EXT for s in ('active', 'inactive')]
    cells += [('kernel', 'v5', s) for s in ('active', 'inactive')]
    with ProcessPoolExecutor(WORKERS) as ex:
        res = {a: (xs, dt) for a, xs, dt in ex.map(_probe, cells)}
    bad = []
    for (scheme, v, state), (xs, dt) in res.items():
        if len(xs) != 10_000:
            bad.append('%s/%s/%s has %d samples' % (scheme, v, state, len(xs)))
        if dt >= 30:
            bad.append('%s/%s/%s took %.1fs' % (scheme, v, state, dt))
    for v in EXT:
        a, i = res[('ext', v, 'active')][0], res[('ext', v, 'inactive')][0]
        if max(a + i) >= 50:
            bad.append('%s max %d' % (v, max(a + i)))
        if a != i:
            bad.append('%s active and inactive samples differ' % v)
    v5 = max(res[('ext', 'v5', 'inactive')][0])
    if v5 >= 20:
        bad.append('v5 max %d' % v5)
    kmin = min(res[('kernel', 'v5', 'active')][0] + res[('kernel', 'v5', 'inactive')][0])
    if kmin <= 800:
        bad.append('kernel min %d' % kmin)
    detail = ' '.join('%s max=%d' % (v, max(res[('ext', v, 'inactive')][0])) for v in EXT)
    report(2, bad, detail + ' kernel min=%d' % kmin)


def test_criterion_3_isolation():
    cases = [c for v in ('v1', 'v2', 'v5') for c in run_isolation_suite(v)]
    bad = ['%s/%s/%s' % (c.variant, c.scenario, c.violation) for c in cases if not c.passed]
    if len(cases) != 18:
        bad.append('%d cases instead of 18' % len(cases))
    report(3, bad, '%d/%d cases passed' % (sum(c.passed for c in cases), len(cases)))


def _budget(seeds):
    out = []
    for s in seeds:
        a = run_budget_trace(s)
        out.append((s, a.errors[:2], a.counts))
    return out


def test_criterion_4_budget_semantics():
    seeds = list(range(1000))
    chunks = [seeds[i::WORKERS] for i in range(WORKERS)]
    with ProcessPoolExecutor(WORKERS) as ex:
        results = [r for part in ex.map(_budget, chunks) for r in part]
    bad = ['seed %d: %s' % (s, e[0]) for s, e, _ in results if e][:5]
    tot = {}
    for _, _, c in results:
        for k, v in c.items():
            tot[k] = tot.get(k, 0) + v
    # every property must actually have been exercised
    for k in ('nested', 'writebacks', 'resumes', 'forced', 'replenish_deferred'):
        if not tot.get(k):
            bad.append('no %s events exercised' % k)
    report(4, bad, '%d traces, %s' % (len(results), ' '.join('%s=%d' % kv for kv in sorted(tot.items()))))


FREQS = [10_000, 16_000, 50_000, 100_000, 250_000]


def test_criterion_5_pto():
    spec = ExperimentSpec('pto', ['v5', 'v2', 'v1', 'software', 'intel', 'kernel'], ['mixed'], FREQS)
    rows = sweep(spec, workers=WORKERS)
    j = {(r['scheme'], r['freq_hz']): float(r['jitter_norm']) for r in rows}
    bad = []
    for f in FREQS:
        a = [j[(s, f)] for s in ('v5', 'v2', 'v1', 'software', 'intel')]
        if not (a[0] <= a[1] <= a[2] < a[3] < a[4]):
            bad.append('ordering at %d Hz: %s' % (f, a))
    for v in ('v5', 'v2', 'v1'):
        if j[(v, 10_000)] >= 0.005:
            bad.append('%s at 10 kHz: %.4f' % (v, j[(v, 10_000)]))
    if j[('kernel', 16_000)] <= 0.60:
        bad.append('kernel at 16 kHz: %.3f' % j[('kernel', 16_000)])
    if abs(j[('v5', 250_000)] - 0.08) > 0.02:
        bad.append('v5 at 250 kHz: %.4f' % j[('v5', 250_000)])
    report(5, bad, 'v5@10k=%.2f%% kernel@16k=%.0f%% v5@250k=%.1f%%' % (
        100 * j[('v5', 10_000)], 100 * j[('kernel', 16_000)], 100 * j[('v5', 250_000)]))


def _modbus(args):
    scheme, variant, baud = args
    st, ok = run_modbus_coloc(scheme, baud, variant=variant)
    return args, st.fps, ok


def test_criterion_6_modbus():
    cells = [('ext', 'v5', 0), ('kernel', 'v5', 115_200), ('ext', 'v5', 1_000_000),
             ('ext', 'v1', 1_000_000)]
    cells += [(s, 'v5', b) for s in ('kernel', 'intel') for b in (500_000, 1_000_000, 2_000_000)]
    cells += [('ext', v, 2_000_000) for v in EXT]
    with ProcessPoolExecutor(WORKERS) as ex:
        res = {a: (fps, ok) for a, fps, ok in ex.map(_modbus, cells)}
    bad = []
    unloaded = res[('ext', 'v5', 0)][0]
    if unloaded != pytest.approx(142, rel=1e-9):
        bad.append('unloaded %.3f' % unloaded)
    for key, want in ((('kernel', 'v5', 115_200), 85), (('ext', 'v5', 1_000_000), 122),
                      (('ext', 'v1', 1_000_000), 107)):
        fps, ok = res[key]
        if not ok or abs(fps - want) > 0.10 * want:
            bad.append('%s/%s@%d: %.2f FPS (sustainable=%s)' % (key[0], key[1], key[2], fps, ok))
    for s in ('kernel', 'intel'):
        for b in (500_000, 1_000_000, 2_000_000):
            if res[(s, 'v5', b)][1]:
                bad.append('%s sustainable at %d' % (s, b))
    for v in EXT:
        if not res[('ext', v, 2_000_000)][1]:
            bad.append('%s not sustainable at 2 Mbps' % v)
    report(6, bad, 'unloaded=%.2f kernel@115.2k=%.2f v5@1M=%.2f v1@1M=%.2f' % (
        unloaded, res[('kernel', 'v5', 115_200)][0], res[('ext', 'v5', 1_000_000)][0],
        res[('ext', 'v1', 1_000_000)][0]))


def test_criterion_7_backward_compatibility():
    bad = []
    for p in CORPUS:
        ok, field = differential(p)
        if not ok:
            bad.append('%s differs in %s' % (p.name, field))
    if len(CORPUS) != 10:
        bad.append('corpus has %d programs' % len(CORPUS))
    report(7, bad, '%d/%d programs trace-identical' % (len(CORPUS) - len(bad), len(CORPUS)))
