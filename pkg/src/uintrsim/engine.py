"""The user-level interrupt engine: IID lookup, parallel entry, banking/spilling,
budget countdown with write-back, forced return and nesting.

Timing is computed from real port occupancy (MemorySystem.run_batch), so every
segment of an EntrySchedule corresponds to an arbitrated bus transfer.
"""
from dataclasses import dataclass, field

from .memory import PortRequest
from .protection import PmpSet, ShadowBank
from .variants import FRAME_WORDS, IID_WORDS, BUDGET_WORDS
from . import platform as plat

SPATIAL, TEMPORAL, EXC_BASE = 1, 2, 3
KIND_THREAD, KIND_KERNEL, KIND_HANDLER = 0, 1, 2
KIND_NAMES = {KIND_THREAD: 'thread', KIND_KERNEL: 'kernel', KIND_HANDLER: 'handler'}

UNIT_OF = {'ack': 'intc', 'iid_lookup': 'iidu', 'pmp_load': 'pmp', 'budget_load': 'budget',
           'budget_wb': 'budget', 'ctx_save': 'ctx', 'ctx_restore': 'ctx', 'kpmp_spill': 'ctx',
           'kpmp_restore': 'ctx', 'redirect': 'core'}


class EngineFault(Exception):
    """Fatal configuration error (table bus fault, save-stack overflow)."""


def forced_cause_code(kind, code=0):
    return {'spatial': SPATIAL, 'temporal': TEMPORAL}.get(kind, EXC_BASE + code)


@dataclass
class Segment:
    action: str
    start: int
    end: int
    port: str = ''
    unit: str = ''

    @property
    def cycles(self):
        return self.end - self.start


@dataclass
class EntrySchedule:
    segments: list
    t0: int
    end: int

    @property
    def total(self):
        return self.end - self.t0

    def segment(self, action):
        for s in self.segments:
            if s.action == action:
                return s
        return None

    def check(self):
        """Structural invariants: no same-port overlap, loads after lookup, redirect last."""
        byport = {}
        for s in self.segments:
            if s.port and s.port != 'bank' and s.end > s.start:
                byport.setdefault(s.port, []).append(s)
        for segs in byport.values():
            segs.sort(key=lambda s: s.start)
            for a, b in zip(segs, segs[1:]):
                assert a.end <= b.start, 'overlap on %s: %s / %s' % (a.port, a, b)
        iid = self.segment('iid_lookup')
        red = self.segment('redirect')
        for s in self.segments:
            if s.action in ('pmp_load', 'budget_load', 'ctx_save') and iid is not None:
                assert s.start >= iid.end, s
            if red is not None and s is not red and s.action != 'ack':
                assert red.start >= s.end, s
        return True


@dataclass
class IidHit:
    int_num: int
    prio: int
    pmp_ptr: int
    budget_ptr: int
    slot: int = 0


@dataclass
class Activation:
    """One level of the handler nest."""
    hit: IidHit
    remaining: int
    preempted: int                 # KIND_*
    frame: tuple                   # ('bank', i) or ('spill', addr)
    kpmp_addr: int = 0             # spilled kernel PMP record, kernel_pmp=spill only
    executed: int = 0              # handler cycles in this activation
    mark: int = None               # counter value at a pending replenish boundary


class BankSet:
    def __init__(self, n):
        self.frames = [None] * n

    def free(self):
        for i, f in enumerate(self.frames):
            if f is None:
                return i
        return None

    def put(self, i, frame):
        assert self.frames[i] is None
        self.frames[i] = list(frame)

    def take(self, i):
        f, self.frames[i] = self.frames[i], None
        return f


def pack_status(kind, mie, prio, int_num):
    return (kind & 3) | (int(bool(mie)) << 2) | ((prio & 0xFF) << 8) | ((int_num & 0xFFFF) << 16)


def unpack_status(w):
    return w & 3, bool(w >> 2 & 1), (w >> 8) & 0xFF, w >> 16


# ------------------------------------------------------------------ timing

def compose_entry(variant, mem, t0=0, iid_addr=None, pmp_ptr=None, budget_ptr=None,
                  spill_addr=None, bank_free=True, preempted=KIND_THREAD,
                  outer_budget_ptr=None, busy=None):
    """Build the entry timeline. Addresses default to the standard platform layout."""
    cal = variant.calibration
    busy = dict(mem.busy) if busy is None else dict(busy)
    tb = plat.table_base(variant)
    iid_addr = tb if iid_addr is None else iid_addr
    pmp_ptr = plat.pmp_table_base(variant) if pmp_ptr is None else pmp_ptr
    budget_ptr = plat.BUDGET_TABLE if budget_ptr is None else budget_ptr
    top = plat.stack_top(variant)
    spill_addr = top - 4 * FRAME_WORDS if spill_addr is None else spill_addr
    segs = [Segment('ack', t0, t0 + cal.ack, '', 'intc')]
    t = t0 + cal.ack
    if variant.iid == 'table':
        g = mem.run_batch([PortRequest('table_loader', iid_addr, words=IID_WORDS, issue_cycle=t,
                                       tag='iid_lookup')], busy)[0]
        segs.append(Segment('iid_lookup', g.start, g.end, g.port, 'iidu'))
        t = g.end
    reqs = []
    if bank_free:
        segs.append(Segment('ctx_save', t, t, 'bank', 'ctx'))
    else:
        reqs.append(PortRequest('ctx_engine', spill_addr, is_write=True, issue_cycle=t,
                                words=FRAME_WORDS, setup=cal.ctx_setup, tag='ctx_save'))
    if preempted != KIND_HANDLER and variant.kernel_pmp == 'spill':
        reqs.append(PortRequest('ctx_engine', spill_addr - 4 * variant.record_words, is_write=True,
                                issue_cycle=t, words=variant.record_words, tag='kpmp_spill'))
    if preempted == KIND_HANDLER and outer_budget_ptr is not None:
        reqs.append(PortRequest('table_loader', outer_budget_ptr, is_write=True, issue_cycle=t,
                                words=cal.budget_wb_words, tag='budget_wb'))
    reqs.append(PortRequest('table_loader', pmp_ptr, issue_cycle=t, words=variant.record_words, tag='pmp_load'))
    reqs.append(PortRequest('table_loader', budget_ptr, issue_cycle=t, words=BUDGET_WORDS, tag='budget_load'))
    end = t
    for g in mem.run_batch(reqs, busy):
        segs.append(Segment(g.req.tag, g.start, g.end, g.port, UNIT_OF[g.req.tag]))
        end = max(end, g.end)
    segs.append(Segment('redirect', end, end + cal.redirect, '', 'core'))
    return EntrySchedule(segs, t0, end + cal.redirect)


def compose_return(variant, mem, t0=0, budget_ptr=None, frame=('bank', 0), resume=KIND_THREAD,
                   kpmp_addr=None, outer=None, iid_addr=None, busy=None):
    """Return timeline: budget write-back, register restore, domain restore, redirect."""
    cal = variant.calibration
    busy = dict(mem.busy) if busy is None else dict(busy)
    budget_ptr = plat.BUDGET_TABLE if budget_ptr is None else budget_ptr
    if kpmp_addr is None:
        kpmp_addr = plat.stack_top(variant) - 4 * (FRAME_WORDS + variant.record_words)
    segs = []
    reqs = [PortRequest('table_loader', budget_ptr, is_write=True, issue_cycle=t0,
                        words=cal.budget_wb_words, tag='budget_wb')]
    if frame[0] == 'spill':
        reqs.append(PortRequest('ctx_engine', frame[1], issue_cycle=t0, words=FRAME_WORDS,
                                setup=cal.ctx_setup, tag='ctx_restore'))
    else:
        segs.append(Segment('ctx_restore', t0, t0, 'bank', 'ctx'))
    if resume != KIND_HANDLER and variant.kernel_pmp == 'spill':
        reqs.append(PortRequest('ctx_engine', kpmp_addr, issue_cycle=t0, words=variant.record_words,
                                tag='kpmp_restore'))
    end = t0
    t = t0
    if resume == KIND_HANDLER and outer is not None and variant.iid == 'table':
        reqs.append(PortRequest('table_loader', iid_addr, issue_cycle=t0, words=IID_WORDS, tag='iid_lookup'))
    for g in mem.run_batch(reqs, busy):
        segs.append(Segment(g.req.tag, g.start, g.end, g.port, UNIT_OF[g.req.tag]))
        end = max(end, g.end)
        if g.req.tag == 'iid_lookup':
            t = g.end
    if resume == KIND_HANDLER and outer is not None:
        more = [PortRequest('table_loader', outer.pmp_ptr, issue_cycle=t, words=variant.record_words, tag='pmp_load'),
                PortRequest('table_loader', outer.budget_ptr, issue_cycle=t, words=BUDGET_WORDS, tag='budget_load')]
        for g in mem.run_batch(more, busy):
            segs.append(Segment(g.req.tag, g.start, g.end, g.port, UNIT_OF[g.req.tag]))
            end = max(end, g.end)
    segs.append(Segment('redirect', end, end + cal.redirect, '', 'core'))
    return EntrySchedule(segs, t0, end + cal.redirect)


def kernel_entry_cycles(calibration):
    """Stock trap entry: acknowledge then redirect to the trap vector."""
    return calibration.ack + calibration.redirect


def entry_latency(name, calibration=None):
    """Idle-machine entry total for a named variant ('base', 'v1'..'v5', 'v1-spill')."""
    from .variants import preset, Calibration
    cal = calibration or Calibration()
    v = preset(name, calibration=cal)
    if v is None:
        return kernel_entry_cycles(cal)
    mem = plat.build_memory(v)
    return compose_entry(v, mem, bank_free=v.extra_banks > 0).total


# ------------------------------------------------------------------ engine

class Engine:
    """Stateful extension hardware attached to a Core."""

    def __init__(self, core, variant):
        self.core = core
        self.v = variant
        self.mem = core.mem
        self.banks = BankSet(variant.extra_banks)
        self.shadow = ShadowBank()
        self.nest = []
        self.spill_sp = None
        self.replenish = {}        # budget_ptr -> capacity, deferred until write-back
        self.last_entry = None
        self.last_return = None
        self.on_writeback = None   # hook(budget_ptr, value, cycle) for audits
        self.on_consume = None     # hook(budget_ptr, cycles) for audits
        self._cache = {}

    # ---- state helpers
    @property
    def running(self):
        return self.nest[-1] if self.nest else None

    @property
    def level(self):
        return self.nest[-1].hit.prio if self.nest else 0

    def enabled(self):
        return bool(self.core.csrs.muictl & 1)

    def iid_base(self):
        return self.core.csrs.muictl & ~3

    def _compose(self, fn, t0, **kw):
        """Schedules only depend on port occupancy relative to t0, so they are memoized."""
        rel = tuple(sorted((p, b - t0) for p, b in self.mem.busy.items() if b > t0))
        key = (fn.__name__, rel) + tuple(sorted((k, v if not isinstance(v, IidHit) else
                                                 (v.pmp_ptr, v.budget_ptr)) for k, v in kw.items()))
        base = self._cache.get(key)
        if base is None or self.mem.tracing:
            base = fn(self.v, self.mem, 0, busy={p: b - t0 for p, b in self.mem.busy.items()}, **kw)
            self._cache[key] = base
        return EntrySchedule([Segment(s.action, s.start + t0, s.end + t0, s.port, s.unit)
                              for s in base.segments], t0, base.end + t0)

    # ---- lookup
    def lookup(self, int_num):
        """Functional IID lookup. Returns IidHit or None (legacy kernel path)."""
        cs = self.core.csrs
        if self.v.iid == 'cam':
            for i in range(self.v.cam_entries):
                num = cs.cam_num[i]
                if num >> 31 and (num & 0xFFFF) == int_num:
                    return IidHit(int_num, (num >> 16) & 0xFF, cs.cam_pmp[i], cs.cam_tim[i], i)
            return None
        if not 0 <= int_num < plat.TABLE_SLOTS:
            return None
        addr = self.iid_base() + 16 * int_num
        try:
            ctrl, num, pmp_ptr, budget_ptr = self.mem.read_words(addr, IID_WORDS)
        except Exception as e:
            raise EngineFault('IID table read failed: %s' % e)
        if not ctrl & 1 or num != int_num:
            return None
        return IidHit(int_num, (ctrl >> 8) & 0xFF, pmp_ptr, budget_ptr, int_num)

    # ---- entry
    def _push_addr(self, words):
        if self.spill_sp is None:
            self.spill_sp = self.core.csrs.muistk
        addr = self.spill_sp - 4 * words
        if addr < plat.stack_floor(self.v):
            raise EngineFault('save stack overflow at nesting depth %d' % (len(self.nest) + 1))
        self.spill_sp = addr
        return addr

    def enter(self, hit, t0):
        """Take a user-level interrupt at cycle t0. Returns the EntrySchedule."""
        core, mem, v = self.core, self.mem, self.v
        outer = self.running
        if outer is not None:
            kind = KIND_HANDLER
        else:
            kind = KIND_KERNEL if core.mode == 'machine' else KIND_THREAD
        status = pack_status(kind, core.csrs.mie_bit(), self.level,
                             outer.hit.int_num if outer else 0)
        frame = core.gprs[1:] + [core.pc, status]
        bank = self.banks.free()
        if self.spill_sp is None:
            self.spill_sp = core.csrs.muistk
        if bank is not None:
            loc = ('bank', bank)
            spill_addr = self.spill_sp - 4 * FRAME_WORDS
        else:
            spill_addr = self._push_addr(FRAME_WORDS)
            loc = ('spill', spill_addr)
        kpmp_addr = 0
        if kind != KIND_HANDLER and v.kernel_pmp == 'spill':
            kpmp_addr = self._push_addr(v.record_words)
        sched = self._compose(compose_entry, t0, iid_addr=self.iid_base() + 16 * hit.int_num,
                              pmp_ptr=hit.pmp_ptr, budget_ptr=hit.budget_ptr, spill_addr=spill_addr,
                              bank_free=bank is not None, preempted=kind,
                              outer_budget_ptr=outer.hit.budget_ptr if outer else None)
        # functional effects
        if bank is not None:
            self.banks.put(bank, frame)
        else:
            mem.load_words(spill_addr, frame)
        if kind == KIND_HANDLER:
            self._write_back(outer, t0)
        else:
            if v.kernel_pmp == 'spill':
                mem.load_words(kpmp_addr, core.pmp.pack())
            else:
                self.shadow.save(core.pmp)
            core.pause_mtime(t0)
        try:
            words = mem.read_words(hit.pmp_ptr, v.record_words)
            rem, granted, policy, vector = mem.read_words(hit.budget_ptr, BUDGET_WORDS)
        except Exception as e:
            raise EngineFault('table load failed: %s' % e)
        core.pmp = PmpSet.unpack(words, owner=hit.int_num)
        act = Activation(hit, rem, kind, loc, kpmp_addr)
        self.nest.append(act)
        core.gprs[1:] = [0] * 31
        core.mode = 'user'
        core.csrs.muiepc = frame[31]
        core.pc = vector
        self.last_entry = sched
        return sched

    # ---- budget
    def _write_back(self, act, cycle):
        value = act.remaining
        cap = self.replenish.pop(act.hit.budget_ptr, None)
        if cap is not None:
            used = act.mark - act.remaining
            value = max(cap - used, 0)
            self.mem.write(act.hit.budget_ptr + 4, cap)
            act.mark = None
            act.remaining = value
        self.mem.write(act.hit.budget_ptr, value)
        if self.on_writeback:
            self.on_writeback(act.hit.budget_ptr, value, cycle)

    def consume(self, cycles):
        """Charge handler execution. Returns cycles actually allowed (<= cycles)."""
        act = self.nest[-1]
        n = min(cycles, act.remaining)
        act.remaining -= n
        act.executed += n
        if self.on_consume:
            self.on_consume(act.hit.budget_ptr, n)
        return n

    def request_replenish(self, budget_ptr, capacity):
        """Replenish hook for the kernel. The running handler's counter belongs to the
        hardware, so its refill waits for the next write-back. Returns True if deferred."""
        act = self.running
        if act is None or act.hit.budget_ptr != budget_ptr:
            return False
        self.replenish[budget_ptr] = capacity
        act.mark = act.remaining
        return True

    # ---- return
    def leave(self, t0, cause=None):
        """Normal (cause None) or forced return of the running handler."""
        core, mem, v = self.core, self.mem, self.v
        if not self.nest:
            raise RuntimeError('return with no active handler')
        act = self.nest.pop()
        outer = self.running
        resume = act.preempted
        iid_addr = self.iid_base() + 16 * outer.hit.int_num if outer else None
        sched = self._compose(compose_return, t0, budget_ptr=act.hit.budget_ptr, frame=act.frame,
                              resume=resume, kpmp_addr=act.kpmp_addr, outer=outer.hit if outer else None,
                              iid_addr=iid_addr)
        if cause is not None:
            core.csrs.muicause = cause
        self._write_back(act, t0)
        if act.frame[0] == 'bank':
            frame = self.banks.take(act.frame[1])
        else:
            frame = mem.read_words(act.frame[1], FRAME_WORDS)
            self.spill_sp = act.frame[1] + 4 * FRAME_WORDS
        kind, mie, prio, outer_num = unpack_status(frame[32])
        core.gprs[1:] = frame[:31]
        core.pc = frame[31]
        if resume == KIND_HANDLER:
            words = mem.read_words(outer.hit.pmp_ptr, v.record_words)
            core.pmp = PmpSet.unpack(words, owner=outer.hit.int_num)
            outer.remaining = mem.read(outer.hit.budget_ptr)
            core.mode = 'user'
            core.csrs.muiepc = frame[31]
        else:
            if v.kernel_pmp == 'spill':
                core.pmp = PmpSet.unpack(mem.read_words(act.kpmp_addr, v.record_words))
                self.spill_sp = act.kpmp_addr + 4 * v.record_words
            else:
                core.pmp = self.shadow.restore()
            core.mode = 'machine' if kind == KIND_KERNEL else 'user'
            core.csrs.set_mie(mie)
            core.resume_mtime(sched.end)
        if not self.nest:
            self.spill_sp = None
        self.last_return = sched
        return sched
