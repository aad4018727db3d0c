"""Modbus colocation: a UART interrupt per received byte handled by the target
process while an unrelated background process computes frames."""
from .devices import UartByteSource, UART_IRQ, attach
from .programs import System, P_DATA
from .stats import ThroughputStats
from ..platform import CORE_HZ

DEFAULT_WINDOW = CORE_HZ // 10          # 100 ms of simulated time


def run_modbus_coloc(scheme='ext', baud=115_200, variant='v5', window=DEFAULT_WINDOW, seed=1,
                     calibration=None, costs=None):
    """Returns (ThroughputStats, sustainable). baud=0 runs the unloaded background."""
    sys_ = System(scheme, variant, calibration, costs)
    core = sys_.core
    sys_.install('modbus', UART_IRQ)
    sys_.background('inactive')
    uart = None
    if baud:
        uart = attach(core, 'uart', UartByteSource(baud, seed=seed, start=core.cycle))
    sys_.start()
    t0 = core.cycle
    tid = sys_.threads['B'].tid
    before = core.spent.get('thread:%d' % tid, 0)
    core.run(max_cycles=window)
    bg = core.spent.get('thread:%d' % tid, 0) - before
    stats = ThroughputStats.from_cycles(bg, core.cycle - t0)
    sustainable = True
    if uart is not None:
        got = core.mem.read(P_DATA)
        sustainable = uart.overruns == 0 and core.intc.lost == 0 and got >= len(uart.arrivals) - 1
    return stats, sustainable

