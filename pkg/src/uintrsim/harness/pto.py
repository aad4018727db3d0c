"""Pulse train output: one timer interrupt per edge, the handler toggles a pin and
programs the next interval. Jitter is measured against the timer fire times."""
from fractions import Fraction

from .devices import ReloadTimer, PulsePin, TIMER_IRQ, attach
from .programs import System, P_DATA
from .stats import JitterStats
from ..platform import CORE_HZ

MIN_EDGES = 1000


def half_period(freq_hz, core_hz=CORE_HZ):
    return Fraction(core_hz, 2 * freq_hz)


def default_quanta(H):
    """Scheduler quanta to cover so that the kernel's short MIE=0 windows get sampled at
    every phase offset with high probability (window hits are rare at low rates)."""
    return max(400, H)


def run_pto(scheme='ext', freq_hz=10_000, mix='mixed', variant='v5', edges=MIN_EDGES,
            quanta=None, calibration=None, costs=None, H=None):
    """Returns (JitterStats, sustainable). `H` overrides the half period in cycles."""
    H = int(H if H is not None else round(half_period(freq_hz)))
    if H < 2:
        raise ValueError('frequency beyond timer resolution')
    sys_ = System(scheme, variant, calibration, costs)
    core = sys_.core
    sys_.install('pto', TIMER_IRQ)
    core.mem.write(P_DATA + 4, H)
    sys_.background(mix)
    if quanta is None:
        quanta = default_quanta(H) if mix == 'mixed' else 0
    limit = max(edges * H, quanta * sys_.kernel.costs.quantum)
    n_fires = -(-limit // H)
    timer = attach(core, 'timer', ReloadTimer(H, TIMER_IRQ, start=core.cycle))
    pin = attach(core, 'pulse', PulsePin())
    sys_.start()
    t0 = core.cycle
    stop = t0 + (n_fires + 1) * H
    core.run(max_cycles=stop - t0)
    fires = timer.fires[:n_fires]
    times = [c for c, _ in pin.edges]
    stats = JitterStats.from_edges(times, fires, H)
    sustainable = (len(times) >= len(fires) and core.intc.lost == 0 and
                   all(times[i] - fires[i] < H for i in range(len(fires))))
    return stats, sustainable


def max_sustainable_freq(scheme='ext', mix='mixed', variant='v5', lo=10, hi=20_000, edges=300, **kw):
    """Smallest sustainable half period by bisection, reported as a frequency in Hz."""
    def ok(h):
        return run_pto(scheme, mix=mix, variant=variant, edges=edges, H=h, **kw)[1]
    if not ok(hi):
        return 0.0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return CORE_HZ / (2 * hi)
