from fractions import Fraction

import pytest

from uintrsim.core import Core
from uintrsim.platform import build_memory, CORE_HZ, TIMER, PULSE, UART
from uintrsim.protection import PmpSet
from uintrsim.harness.devices import ReloadTimer, PulsePin, UartByteSource, attach
from uintrsim.harness.stats import JitterStats, ThroughputStats, summarize, percentile
from uintrsim.harness.probe import run_latency_probe, latency_summary
from uintrsim.harness.pto import run_pto, half_period
from uintrsim.harness.modbus import run_modbus_coloc
from uintrsim.harness.isolation import run_case, run_isolation_suite, SCENARIOS, VIOLATIONS
from uintrsim.harness.budget import run_budget_trace
from uintrsim.harness import sweep as sw
from uintrsim.engine import entry_latency, TEMPORAL, SPATIAL


def _bare():
    return Core(build_memory(None))


def test_timer_fires_every_period():
    c = _bare()
    t = attach(c, 'timer', ReloadTimer(100, start=0))
    c.spend(1000)
    assert t.fires == list(range(100, 1001, 100))
    assert c.mem.read(TIMER, cycle=1050) == 50


def test_timer_reload_applies_at_next_fire():
    c = _bare()
    t = attach(c, 'timer', ReloadTimer(100, start=0))
    c.spend(50)
    c.mem.write(TIMER + 4, 30, cycle=50)
    c.spend(200)
    assert t.fires[:3] == [100, 130, 160]


def test_pulse_pin_logs_alternating_edges():
    c = _bare()
    p = attach(c, 'pulse', PulsePin())
    for cyc, v in [(1, 1), (2, 1), (3, 0), (9, 1)]:
        c.mem.write(PULSE, v, cycle=cyc)
    assert p.edges == [(1, 1), (3, 0), (9, 1)]


def test_uart_cadence_and_overrun():
    c = _bare()
    u = attach(c, 'uart', UartByteSource(115_200, seed=3))
    assert u.interval == Fraction(CORE_HZ * 10, 115_200)
    c.spend(int(u.interval * 3) + 1)
    assert len(u.arrivals) == 3 and u.overruns == 2
    assert c.mem.read(UART + 4) & 3 == 3
    c.mem.read(UART)
    assert c.mem.read(UART + 4) & 1 == 0


def test_stats():
    s = summarize([5, 1, 3])
    assert (s['min'], s['max'], s['p50']) == (1, 5, 3)
    assert percentile([1, 2, 3, 4], 100) == 4
    j = JitterStats.from_edges([105, 207, 300], [100, 200, 300], 50)
    assert j.ptp == 7 and j.normalized == 7 / 50
    assert ThroughputStats.from_cycles(CORE_HZ, CORE_HZ).fps == pytest.approx(142)


@pytest.mark.parametrize('variant', ['v1', 'v2', 'v3', 'v4', 'v5'])
def test_probe_identity(variant):
    """Measured latency = entry schedule total + pipeline fill, with a zero probe constant."""
    xs = run_latency_probe('ext', 'inactive', n=50, variant=variant)
    assert {x.latency for x in xs} == {entry_latency(variant) + 2}


def test_probe_active_equals_inactive_for_extension():
    a = run_latency_probe('ext', 'active', n=100, variant='v2')
    b = run_latency_probe('ext', 'inactive', n=100, variant='v2')
    assert [x.latency for x in a] == [x.latency for x in b]


def test_intel_fast_path_only_when_active():
    a = latency_summary(run_latency_probe('intel', 'active', n=50))
    i = latency_summary(run_latency_probe('intel', 'inactive', n=50))
    k = latency_summary(run_latency_probe('kernel', 'inactive', n=50))
    assert a['max'] < 100 and i['min'] == k['min'] > 800


def test_software_pmp_share():
    a = latency_summary(run_latency_probe('software', 'active', n=20))
    i = latency_summary(run_latency_probe('software', 'inactive', n=20))
    assert i['max'] == pytest.approx(120, abs=12) and i['max'] - a['max'] == 30


def test_isolation_v5_suite():
    rs = run_isolation_suite('v5')
    assert len(rs) == len(SCENARIOS) * len(VIOLATIONS)
    assert all(r.passed for r in rs), [r for r in rs if not r.passed]
    assert {r.cause for r in rs} == {SPATIAL, TEMPORAL}


def test_isolation_detects_missing_pmp(monkeypatch):
    monkeypatch.setattr(PmpSet, 'allows', lambda self, addr, access, n=1: True)
    r = run_case('v5', 'thread', 'spatial')
    assert not r.passed and not r.commits_ok


@pytest.mark.parametrize('seed', range(8))
def test_budget_trace(seed):
    audit = run_budget_trace(seed)
    assert not audit.errors, audit.errors[:3]
    assert audit.counts['entries'] > 0


def test_pto_short_run():
    st, ok = run_pto('ext', 50_000, 'inactive', variant='v5', edges=1000)
    assert ok and st.n >= 1000 and st.half_period == half_period(50_000)
    assert st.ptp == 0      # nothing else runs, so every edge lands at the same offset


def test_pto_unsustainable_kernel():
    _, ok = run_pto('kernel', 100_000, 'inactive', edges=1000)
    assert not ok


def test_modbus_monotone_in_baud():
    w = CORE_HZ // 50
    fps = [run_modbus_coloc('ext', b, variant='v1', window=w)[0].fps for b in (0, 115_200, 500_000, 1_000_000)]
    assert fps[0] == pytest.approx(142)
    assert all(a >= b for a, b in zip(fps, fps[1:]))


def test_sweep_rows_and_csv():
    spec = sw.ExperimentSpec('latency', ['v5', 'kernel', 'v1'], ['active', 'inactive'], n=20)
    rows = sw.sweep(spec)
    assert len(rows) == 6
    text = sw.to_csv('latency', rows)
    assert text == sw.to_csv('latency', sw.sweep(spec))
    back = sw.parse_csv('latency', text)
    assert [r['scheme'] for r in back] == ['kernel', 'kernel', 'v1', 'v1', 'v5', 'v5']
    assert back[-1]['max'] == 13 and isinstance(back[0]['avg'], float)


def test_sweep_parallel_matches_serial():
    spec = sw.ExperimentSpec('latency', ['v5', 'v2'], ['inactive'], n=20)
    assert sw.sweep(spec, workers=2) == sw.sweep(spec)


def test_empty_matrix_is_header_only():
    spec = sw.ExperimentSpec('pto', [], [], [])
    assert sw.to_csv('pto', sw.sweep(spec)) == 'scheme,mix,freq_hz,jitter_norm,sustainable\n'


def test_sweep_rejects_unknown():
    with pytest.raises(ValueError):
        sw.ExperimentSpec('latency', ['v9'])
    with pytest.raises(ValueError):
        sw.ExperimentSpec('power')
    with pytest.raises(ValueError):
        sw.parse_csv('pto', 'a,b\n1,2\n')
