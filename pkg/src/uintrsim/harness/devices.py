"""MMIO device models. Register maps (byte offsets inside each 16-byte window):

ReloadTimer   +0x0 count (RO, cycles left until the next fire)
              +0x4 reload (RW, period loaded at every fire)
              +0x8 ctrl (RW, bit0 run, bit1 interrupt enable)
PulsePin      +0x0 level (RW, bit0)
UartByteSource +0x0 data (RO, reading pops the byte)
              +0x4 status (RO, bit0 byte ready, bit1 overrun seen)
"""
import random
from fractions import Fraction

from ..platform import MMIO_BASE, TIMER, PULSE, UART, TIMER2, CORE_HZ

TIMER_IRQ, UART_IRQ, TIMER2_IRQ = 1, 2, 4


class Device:
    irq = None

    def bind(self, core):
        self.core = core

    def advance(self, cycle):
        pass

    def next_event(self):
        return None

    def read(self, off, cycle):
        return 0

    def write(self, off, value, cycle):
        pass


class ReloadTimer(Device):
    def __init__(self, period, irq=TIMER_IRQ, start=0, enabled=True):
        self.reload = period
        self.irq = irq
        self.ctrl = 3 if enabled else 0
        self.last = start            # cycle of the most recent fire (or start)
        self.due = start + period
        self.fires = []

    @property
    def period(self):
        return self.reload

    def advance(self, cycle):
        while self.ctrl & 1 and cycle >= self.due:
            self.last = self.due
            self.fires.append(self.due)
            if self.ctrl & 2:
                self.core.intc.raise_(self.irq, self.due)
            self.due = self.last + self.reload

    def next_event(self):
        return self.due if self.ctrl & 1 else None

    def count(self, cycle):
        return max(self.due - cycle, 0)

    def read(self, off, cycle):
        if off == 0:
            return self.count(cycle)
        if off == 4:
            return self.reload
        if off == 8:
            return self.ctrl
        return 0

    def write(self, off, value, cycle):
        if off == 4 and value > 0:
            self.reload = value          # takes effect at the next fire
        elif off == 8:
            was = self.ctrl & 1
            self.ctrl = value & 3
            if self.ctrl & 1 and not was:
                self.last, self.due = cycle, cycle + self.reload


class PulsePin(Device):
    def __init__(self):
        self.level = 0
        self.edges = []              # (cycle, level)

    def read(self, off, cycle):
        return self.level

    def write(self, off, value, cycle):
        v = value & 1
        if v != self.level:
            self.level = v
            self.edges.append((cycle, v))


class UartByteSource(Device):
    """Receive side of a UART fed by a seeded byte stream, 10 bits per byte."""
    bits_per_byte = 10

    def __init__(self, baud, core_hz=CORE_HZ, seed=1, irq=UART_IRQ, start=0, count=None):
        self.baud = baud
        self.interval = Fraction(core_hz * self.bits_per_byte, baud)
        self.irq = irq
        self.rng = random.Random(seed)
        self.start = start
        self.k = 1                   # index of the next arrival
        self.limit = count
        self.ready = False
        self.data = 0
        self.overruns = 0
        self.arrivals = []
        self.consumed = 0

    def _at(self, k):
        return self.start + int(self.k_time(k))

    def k_time(self, k):
        return self.interval * k

    def advance(self, cycle):
        while (self.limit is None or self.k <= self.limit) and cycle >= self._at(self.k):
            t = self._at(self.k)
            if self.ready:
                self.overruns += 1
            self.ready = True
            self.data = self.rng.randrange(256)
            self.arrivals.append(t)
            self.core.intc.raise_(self.irq, t)
            self.k += 1

    def next_event(self):
        if self.limit is not None and self.k > self.limit:
            return None
        return self._at(self.k)

    def read(self, off, cycle):
        if off == 0:
            v = self.data
            if self.ready:
                self.consumed += 1
            self.ready = False
            return v
        if off == 4:
            return int(self.ready) | (2 if self.overruns else 0)
        return 0


WINDOWS = {'timer': TIMER - MMIO_BASE, 'pulse': PULSE - MMIO_BASE, 'uart': UART - MMIO_BASE,
           'timer2': TIMER2 - MMIO_BASE}


def attach(core, name, dev):
    """Map `dev` at its standard window and register it with the core."""
    core.mem.map.by_name['mmio'].device.attach(WINDOWS[name], dev)
    core.attach(dev)
    return dev
