"""Memory map, ports and the fixed-priority bus arbiter."""
import struct
from dataclasses import dataclass, field

# Arbitration classes, highest priority first.
REQUESTERS = ('ctx_engine', 'table_loader', 'core_data', 'core_fetch')
PRIORITY = {r: i for i, r in enumerate(REQUESTERS)}
KINDS = ('sram', 'flash', 'tcm_stack', 'tcm_table', 'mmio')
PORT_OF_KIND = {'sram': 'main_sram', 'flash': 'main_sram', 'mmio': 'main_sram',
                'tcm_stack': 'tcm_stack', 'tcm_table': 'tcm_table'}


class BusFault(Exception):
    def __init__(self, addr, why='unmapped'):
        super().__init__('bus fault at 0x%08x (%s)' % (addr, why))
        self.addr = addr


class ConfigError(Exception):
    pass


@dataclass
class Region:
    name: str
    base: int
    size: int
    kind: str
    addr_cycles: int = 1
    data_cycles: int = 1      # per beat
    device: object = None

    @property
    def end(self):
        return self.base + self.size

    @property
    def port(self):
        return PORT_OF_KIND[self.kind]

    @property
    def read_cycles(self):
        return self.addr_cycles + self.data_cycles

    write_cycles = read_cycles

    def contains(self, addr, n=1):
        return self.base <= addr and addr + n <= self.end


@dataclass
class PortRequest:
    requester: str
    addr: int
    width: int = 4
    is_write: bool = False
    issue_cycle: int = 0
    words: int = 1            # burst length in 32-bit words
    setup: int = 0            # cycles the requester holds the port before the address phase
    tag: str = ''
    seq: int = 0

    def __post_init__(self):
        if self.requester not in PRIORITY:
            raise ValueError('unknown requester %r' % self.requester)
        if self.width not in (1, 2, 4):
            raise ValueError('bad width %r' % self.width)


@dataclass
class Grant:
    req: PortRequest
    port: str
    start: int
    end: int

    @property
    def stall(self):
        return self.start - self.req.issue_cycle


class MemoryMap:
    def __init__(self, regions):
        self.regions = sorted(regions, key=lambda r: r.base)
        for r in self.regions:
            if r.size <= 0:
                raise ConfigError('region %s has size %d' % (r.name, r.size))
            if r.kind not in KINDS:
                raise ConfigError('region %s has unknown kind %r' % (r.name, r.kind))
        for a, b in zip(self.regions, self.regions[1:]):
            if a.end > b.base:
                raise ConfigError('regions %s and %s overlap' % (a.name, b.name))
        self.by_name = {r.name: r for r in self.regions}

    def find(self, addr, n=1):
        for r in self.regions:
            if r.contains(addr, n):
                return r
        raise BusFault(addr)

    def __iter__(self):
        return iter(self.regions)


def arbitrate(pending, cycle=None):
    """Grant order for requests to one port: fixed class priority, FIFO by issue cycle."""
    return sorted(pending, key=lambda r: (PRIORITY[r.requester], r.issue_cycle, r.seq))


class MemorySystem:
    """Storage for every region plus per-port occupancy. Timing and data are separate:
    `read`/`write` are functional, `access`/`run_batch` charge port cycles."""

    def __init__(self, mmap, beat_words=2):
        self.map = mmap
        self.beat_words = beat_words
        self.store = {r.name: bytearray(r.size) for r in mmap if r.kind != 'mmio'}
        self.busy = {}            # port -> cycle when free
        self.log = []             # Grant records, when tracing
        self.tracing = False
        self._last = None

    # ----- functional access
    def region(self, addr, n=1):
        r = self._last
        if r is not None and r.base <= addr and addr + n <= r.base + r.size:
            return r
        r = self.map.find(addr, n)
        self._last = r
        return r

    def read(self, addr, width=4, cycle=0):
        r = self.region(addr, width)
        if r.device is not None:
            return r.device.read(addr - r.base, cycle) & ((1 << (8 * width)) - 1)
        off = addr - r.base
        return int.from_bytes(self.store[r.name][off:off + width], 'little')

    def write(self, addr, value, width=4, cycle=0, loader=False):
        r = self.region(addr, width)
        if r.kind == 'flash' and not loader:
            raise BusFault(addr, 'flash is read-only')
        if r.device is not None:
            r.device.write(addr - r.base, value & 0xFFFFFFFF, cycle)
            return
        off = addr - r.base
        self.store[r.name][off:off + width] = (value & ((1 << (8 * width)) - 1)).to_bytes(width, 'little')

    def load_words(self, addr, words):
        r = self.region(addr, 4 * max(len(words), 1))
        if r.device is None and not addr & 3:
            off = addr - r.base
            self.store[r.name][off:off + 4 * len(words)] = struct.pack('<%dI' % len(words),
                                                                       *[w & 0xFFFFFFFF for w in words])
            return
        for i, w in enumerate(words):
            self.write(addr + 4 * i, w, 4, loader=True)

    def read_words(self, addr, n):
        r = self.region(addr, 4 * max(n, 1))
        if r.device is None and not addr & 3:
            off = addr - r.base
            return list(struct.unpack_from('<%dI' % n, self.store[r.name], off))
        return [self.read(addr + 4 * i) for i in range(n)]

    def snapshot(self):
        return {k: bytes(v) for k, v in self.store.items()}

    # ----- timing
    def duration(self, region, words=1):
        beats = -(-words // self.beat_words)
        return region.addr_cycles + region.data_cycles * beats

    def access(self, req, value=None):
        """Single transfer. Returns (value, completion_cycle)."""
        r = self.region(req.addr, req.width if req.words == 1 else 4 * req.words)
        start = max(req.issue_cycle, self.busy.get(r.port, 0))
        end = start + req.setup + self.duration(r, req.words)
        self.busy[r.port] = end
        if self.tracing:
            self.log.append(Grant(req, r.port, start, end))
        if req.is_write:
            if req.words == 1:
                self.write(req.addr, value, req.width, cycle=end)
            else:
                for i, v in enumerate(value):
                    self.write(req.addr + 4 * i, v, 4, cycle=end)
            return None, end
        if req.words == 1:
            # device registers are sampled on the last data cycle
            return self.read(req.addr, req.width, cycle=end - 1), end
        return [self.read(req.addr + 4 * i, 4, cycle=end) for i in range(req.words)], end

    def run_batch(self, reqs, busy=None):
        """Timing-only arbitration of requests that may span several ports.
        Returns a Grant per request in grant order. `busy` (port -> free cycle) seeds
        occupancy and is updated in place; when omitted a copy of the live state is used."""
        if busy is None:
            busy = dict(self.busy)
        for i, q in enumerate(reqs):
            q.seq = i
        ports = {}
        for q in reqs:
            ports.setdefault(self.region(q.addr).port, []).append(q)
        grants = []
        for port, pend in ports.items():
            t = busy.get(port, 0)
            pend = list(pend)
            while pend:
                t = max(t, min(q.issue_cycle for q in pend))
                ready = [q for q in pend if q.issue_cycle <= t]
                q = arbitrate(ready, t)[0]
                pend.remove(q)
                d = q.setup + self.duration(self.region(q.addr), q.words)
                grants.append(Grant(q, port, t, t + d))
                t += d
            busy[port] = t
        grants.sort(key=lambda g: (g.start, PRIORITY[g.req.requester], g.req.seq))
        if self.tracing:
            self.log.extend(grants)
        return grants
