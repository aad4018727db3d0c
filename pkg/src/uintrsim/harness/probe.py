"""Interrupt latency probe: a reload timer fires every `period` cycles and the
handler's first instruction reads the remaining count.

    sample = period - count - 3      (3 = timer read access)
"""
from dataclasses import dataclass

from .devices import ReloadTimer, TIMER_IRQ, attach
from .programs import System, P_DATA
from .stats import summarize


class ProbeOverrun(RuntimeError):
    pass


@dataclass
class LatencySample:
    index: int
    fire: int
    latency: int


def run_latency_probe(scheme='ext', state='inactive', n=10_000, variant='v5', period=4000,
                      calibration=None, costs=None, trace=False):
    """Returns the list of LatencySample for `n` timer interrupts."""
    sys_ = System(scheme, variant, calibration, costs, trace=trace)
    core = sys_.core
    sys_.install('probe', TIMER_IRQ)
    sys_.background(state)
    timer = attach(core, 'timer', ReloadTimer(period, TIMER_IRQ, start=core.cycle))
    sys_.start()
    mem = core.mem
    core.run(until=lambda c: mem.read(P_DATA) >= 4 * n or len(timer.fires) > n + 1)
    got = mem.read(P_DATA) // 4
    if got < n or core.intc.lost:
        raise ProbeOverrun('%d samples for %d fires (lost %d): handler overruns the period'
                           % (got, len(timer.fires), core.intc.lost))
    counts = mem.read_words(P_DATA + 8, n)
    out = []
    for i, cnt in enumerate(counts):
        lat = period - cnt - 3
        if not 0 <= lat < period:
            raise ProbeOverrun('sample %d out of range: %d' % (i, lat))
        out.append(LatencySample(i, timer.fires[i], lat))
    return out


def latency_summary(samples):
    s = summarize([x.latency for x in samples])
    return {'avg': s['mean'], 'max': s['max'], 'min': s['min'], 'n': s['n']}
