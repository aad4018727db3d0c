"""RV32IM core with a 3-stage-pipeline cycle cost model and the extension CSRs."""
import heapq

from .isa import decode, CSRS, IIDNUM, IIDPMP, IIDTIM, CAM_MAX
from .memory import BusFault
from .protection import PmpSet, R, W, X
from .variants import Calibration
from . import engine as eng

M32 = 0xFFFFFFFF
MSTATUS_MIE, MSTATUS_MPIE = 1 << 3, 1 << 7
MPP_SHIFT = 11

# exception codes
EXC_FETCH_FAULT, EXC_ILLEGAL, EXC_BREAK = 1, 2, 3
EXC_LOAD_MISALIGNED, EXC_LOAD_FAULT, EXC_STORE_MISALIGNED, EXC_STORE_FAULT = 4, 5, 6, 7
EXC_ECALL_U, EXC_ECALL_M = 8, 11
IRQ_BIT = 1 << 31
IRQ_TIMER = 7
IRQ_EXT_BASE = 16      # platform interrupt n -> mcause 16 + n

SPIN = 0x00000063   # beq x0, x0, . : one cycle per iteration and no state change
_MU = {CSRS[n] for n in ('muictl', 'muistk', 'muiepc', 'muicause', 'mtime', 'mtimeh', 'mtimecmp', 'mtimecmph')}


class Trap(Exception):
    def __init__(self, code, tval=0, spatial=False):
        super().__init__('trap %d tval=0x%x' % (code, tval))
        self.code, self.tval, self.spatial = code, tval, spatial


class CsrFile:
    def __init__(self, hw_support):
        self.hw = bool(hw_support)
        self.muictl = 2 if self.hw else 0
        self.muistk = self.muiepc = self.muicause = 0
        self.mtime = 0
        self.mtimecmp = (1 << 64) - 1
        self.mstatus = 0
        self.mie = self.mtvec = self.mscratch = self.mepc = self.mcause = self.mtval = 0
        self.cam_num = [0] * CAM_MAX
        self.cam_pmp = [0] * CAM_MAX
        self.cam_tim = [0] * CAM_MAX

    def mie_bit(self):
        return bool(self.mstatus & MSTATUS_MIE)

    def set_mie(self, on):
        self.mstatus = (self.mstatus | MSTATUS_MIE) if on else (self.mstatus & ~MSTATUS_MIE)

    def exists(self, num):
        if num in _MU or IIDNUM <= num < IIDNUM + CAM_MAX or IIDPMP <= num < IIDPMP + CAM_MAX \
                or IIDTIM <= num < IIDTIM + CAM_MAX:
            return self.hw or num == CSRS['muictl']
        return num in _STD

    def read(self, num, core):
        if num == 0x7C0:
            return self.muictl
        if num == 0x7C1:
            return self.muistk
        if num == 0x7C2:
            return self.muiepc
        if num == 0x7C3:
            return self.muicause
        if num == 0x7C8:
            return self.mtime & M32
        if num == 0x7C9:
            return self.mtime >> 32
        if num == 0x7CA:
            return self.mtimecmp & M32
        if num == 0x7CB:
            return (self.mtimecmp >> 32) & M32
        if IIDNUM <= num < IIDNUM + CAM_MAX:
            return self.cam_num[num - IIDNUM]
        if IIDPMP <= num < IIDPMP + CAM_MAX:
            return self.cam_pmp[num - IIDPMP]
        if IIDTIM <= num < IIDTIM + CAM_MAX:
            return self.cam_tim[num - IIDTIM]
        if num in (0xB00, 0xC00):
            return core.cycle & M32
        if num in (0xB80, 0xC80):
            return (core.cycle >> 32) & M32
        if num == 0x344:
            return self.mip(core)
        return getattr(self, _STD[num])

    def mip(self, core):
        return (1 << IRQ_TIMER) if self.mtime >= self.mtimecmp else 0

    def write(self, num, v, core):
        v &= M32
        if num == 0x7C0:
            # bit1 mirrors hardware presence and ignores writes
            self.muictl = (v & ~2) | (2 if self.hw else 0) if self.hw else 0
        elif num == 0x7C1:
            self.muistk = v & ~3
        elif num == 0x7C2:
            self.muiepc = v & ~3
        elif num == 0x7C3:
            self.muicause = v
        elif num == 0x7C8:
            self.mtime = (self.mtime & ~M32) | v
        elif num == 0x7C9:
            self.mtime = (self.mtime & M32) | (v << 32)
        elif num == 0x7CA:
            self.mtimecmp = (self.mtimecmp & ~M32) | v
        elif num == 0x7CB:
            self.mtimecmp = (self.mtimecmp & M32) | (v << 32)
        elif IIDNUM <= num < IIDNUM + CAM_MAX:
            self.cam_num[num - IIDNUM] = v
        elif IIDPMP <= num < IIDPMP + CAM_MAX:
            self.cam_pmp[num - IIDPMP] = v
        elif IIDTIM <= num < IIDTIM + CAM_MAX:
            self.cam_tim[num - IIDTIM] = v
        elif num in (0xB00, 0xB80, 0xC00, 0xC80, 0x344):
            pass
        elif num == 0x305:
            self.mtvec = v & ~3
        elif num == 0x341:
            self.mepc = v & ~3
        else:
            setattr(self, _STD[num], v)


_STD = {0x300: 'mstatus', 0x304: 'mie', 0x305: 'mtvec', 0x340: 'mscratch', 0x341: 'mepc',
        0x342: 'mcause', 0x343: 'mtval', 0x344: 'mip', 0xB00: 'mcycle', 0xB80: 'mcycleh',
        0xC00: 'cycle', 0xC80: 'cycleh'}


def csr_access(core, csr_id, op, value=0):
    """Read-modify-write a CSR with privilege checks. Returns the old value."""
    cs = core.csrs
    if not cs.exists(csr_id):
        raise Trap(EXC_ILLEGAL, csr_id)
    if core.mode != 'machine' and csr_id not in (0xC00, 0xC80):
        raise Trap(EXC_ILLEGAL, csr_id)
    old = cs.read(csr_id, core)
    if op == 'read':
        return old
    if op in ('write', 'set', 'clear') and csr_id in (0xC00, 0xC80):
        raise Trap(EXC_ILLEGAL, csr_id)
    new = {'write': value, 'set': old | value, 'clear': old & ~value}[op]
    cs.write(csr_id, new, core)
    return old


class IntController:
    """Pending flags for platform interrupt lines."""

    def __init__(self):
        self.pending = {}      # int_num -> cycle raised
        self.lost = 0

    def raise_(self, n, cycle):
        if n in self.pending:
            self.lost += 1
        else:
            self.pending[n] = cycle

    def clear(self, n):
        return self.pending.pop(n, None)


class Core:
    """One simulation instance: architectural state, memory, optional extension engine."""

    def __init__(self, mem, variant=None, calibration=None, trace=False):
        self.mem = mem
        self.variant = variant
        self.cal = calibration or (variant.calibration if variant else Calibration())
        self.gprs = [0] * 32
        self.pc = 0
        self.mode = 'machine'
        self.cycle = 0
        self.csrs = CsrFile(variant is not None)
        self.pmp = PmpSet.empty(variant.pmp_entries if variant else 4)
        self.engine = eng.Engine(self, variant) if variant is not None else None
        self.intc = IntController()
        self.devices = []
        self.trap_hook = None           # kernel model: hook(core, cause, tval, epc) -> bool
        self.owner = 'boot'             # accounting label for the running context
        self.spent = {}                 # owner -> cycles
        self.mtime_running = True
        self._resume_pending = False
        self.halted = False
        self.tracing = trace
        self.trace = []
        self.events = []                # (cycle, unit, action, port, detail)
        self.on_entry = None            # hook(core, int_num, sched)
        self.on_return = None           # hook(core, act, sched, cause)
        self._dcache = {}
        self.retired = 0
        self.alarms = []                # heap of (due, seq, clock, callback)
        self._aseq = 0
        self._limit = None
        self.fast_forward = True

    # ---- helpers
    @property
    def active_bank(self):
        if self.engine is None or not self.engine.nest:
            return 0
        fr = self.engine.running.frame
        return fr[1] + 1 if fr[0] == 'bank' else 0

    def state(self):
        return {'pc': self.pc, 'gprs': list(self.gprs), 'mode': self.mode, 'pmp': self.pmp.pack(),
                'mstatus': self.csrs.mstatus}

    def load(self, image):
        self.mem.load_words(image.origin, image.words)

    def attach(self, dev):
        self.devices.append(dev)
        dev.bind(self)

    def pause_mtime(self, cycle):
        self.mtime_running = False

    def resume_mtime(self, cycle):
        # applied once the return sequence has been charged
        self._resume_pending = True

    def event(self, unit, action, port='', detail='', cycle=None):
        if self.tracing:
            self.events.append((self.cycle if cycle is None else cycle, unit, action, port, detail))

    def spend(self, n, owner=None):
        """Advance time by n cycles (used by the kernel model and the engine)."""
        self.cycle += n
        if self.mtime_running:
            self.csrs.mtime += n
        o = owner or self.owner
        self.spent[o] = self.spent.get(o, 0) + n
        for d in self.devices:
            d.advance(self.cycle)

    def add_alarm(self, clock, due, callback):
        """Run callback(core) at an instruction boundary once `clock` ('cycle' or
        'mtime') reaches `due`. The kernel model uses these for timed work."""
        self._aseq += 1
        heapq.heappush(self.alarms, (due, self._aseq, clock, callback))

    def _now(self, clock):
        return self.cycle if clock == 'cycle' else self.csrs.mtime

    def _fire_alarms(self):
        fired = False
        while self.alarms:
            due = [a for a in self.alarms if self._now(a[2]) >= a[0]]
            if not due:
                break
            a = min(due)
            self.alarms.remove(a)
            heapq.heapify(self.alarms)
            a[3](self)
            fired = True
        return fired

    def next_event(self):
        """Earliest future cycle at which anything outside the core can change."""
        t = None
        for d in self.devices:
            e = d.next_event()
            if e is not None and (t is None or e < t):
                t = e
        cs = self.csrs
        mt = []
        if cs.mie & (1 << IRQ_TIMER) and cs.mtimecmp < (1 << 64) - 1:
            mt.append(cs.mtimecmp)
        for due, _, clock, _ in self.alarms:
            if clock == 'cycle':
                t = due if t is None else min(t, due)
            else:
                mt.append(due)
        if mt and self.mtime_running:
            e = self.cycle + max(min(mt) - cs.mtime, 0)
            t = e if t is None else min(t, e)
        return t

    def _spin(self):
        """Skip a run of idle `beq x0, x0, .` iterations in one go (exact)."""
        t = self.next_event()
        if self._limit is not None:
            t = self._limit if t is None else min(t, self._limit)
        n = 1 if t is None else max(1, t - self.cycle)
        if self.in_handler():
            e = self.engine
            n = e.consume(n)
            self.spend(n)
            if e.running.remaining == 0:
                self.event('budget', 'exhausted', '', 'int=%d' % e.running.hit.int_num)
                self.uintr_return(eng.TEMPORAL)
            return
        self.spend(n)

    # ---- interrupts
    def in_handler(self):
        return self.engine is not None and bool(self.engine.nest)

    def _poll(self):
        pend = self.intc.pending
        cs = self.csrs
        mtip = cs.mtime >= cs.mtimecmp and cs.mie & (1 << IRQ_TIMER)
        if not pend and not mtip:
            return False
        e = self.engine
        machine = []
        for n in sorted(pend):
            hit = None
            if e is not None and cs.muictl & 1:
                hit = e.lookup(n)
            if hit is None:
                machine.append(n)
            elif hit.prio > e.level and (self.mode == 'user' or cs.mstatus & MSTATUS_MIE or e.nest):
                self.intc.clear(n)
                self._enter_uintr(n, hit)
                return True
        if self.in_handler() or not (self.mode == 'user' or cs.mstatus & MSTATUS_MIE):
            return False
        # the scheduler tick ranks above platform lines
        if mtip:
            self.take_trap(IRQ_BIT | IRQ_TIMER, 0, self.pc, interrupt=True)
            return True
        for n in machine:
            if n < 16 and cs.mie & (1 << (IRQ_EXT_BASE + n)):
                self.intc.clear(n)
                self.take_trap(IRQ_BIT | (IRQ_EXT_BASE + n), 0, self.pc, interrupt=True)
                return True
        return False

    def _enter_uintr(self, n, hit):
        t0 = self.cycle
        sched = self.engine.enter(hit, t0)
        for s in sched.segments:
            self.event(s.unit, s.action, s.port, 'int=%d %d..%d' % (n, s.start, s.end), s.start)
        self.spend(sched.total + self.cal.pipeline_fill, 'engine')
        self.owner = 'handler:%d' % n
        if self.on_entry:
            self.on_entry(self, n, sched)

    def uintr_return(self, cause=None):
        act = self.engine.running
        sched = self.engine.leave(self.cycle, cause)
        for s in sched.segments:
            self.event(s.unit, s.action, s.port, 'int=%d %d..%d' % (act.hit.int_num, s.start, s.end), s.start)
        self.event('core', 'forced_return' if cause else 'return', '', 'cause=%s' % cause)
        self.spend(sched.total + self.cal.pipeline_fill, 'engine')
        if self._resume_pending:
            self.mtime_running = True
            self._resume_pending = False
        self.owner = 'handler:%d' % self.engine.running.hit.int_num if self.engine.nest else self.resume_owner
        if self.on_return:
            self.on_return(self, act, sched, cause)

    resume_owner = 'thread'

    def take_trap(self, cause, tval, epc, interrupt=False):
        """Machine-mode trap. The kernel hook may take over; otherwise stock vectoring."""
        if self.trap_hook is not None and self.trap_hook(self, cause, tval, epc):
            return
        cs = self.csrs
        cs.mepc = epc & ~3
        cs.mcause = cause
        cs.mtval = tval
        mie = cs.mstatus & MSTATUS_MIE
        cs.mstatus = (cs.mstatus & ~(MSTATUS_MIE | MSTATUS_MPIE | (3 << MPP_SHIFT))) | \
            (MSTATUS_MPIE if mie else 0) | ((3 if self.mode == 'machine' else 0) << MPP_SHIFT)
        self.mode = 'machine'
        self.pc = cs.mtvec
        self.event('core', 'trap', '', 'cause=0x%x' % cause)
        self.spend(eng.kernel_entry_cycles(self.cal) + self.cal.pipeline_fill, 'trap')

    # ---- execution
    def run(self, max_cycles=None, until=None, max_steps=None):
        end = None if max_cycles is None else self.cycle + max_cycles
        self._limit = end
        steps = 0
        while not self.halted:
            if end is not None and self.cycle >= end:
                break
            if until is not None and until(self):
                break
            if max_steps is not None and steps >= max_steps:
                break
            self.step()
            steps += 1
        self._limit = None
        return steps

    def step(self):
        if self.alarms and self._fire_alarms():
            return
        if self._poll():
            return
        pc = self.pc
        try:
            if self.mode == 'user' and not self.pmp.allows(pc, X, 4):
                raise Trap(EXC_FETCH_FAULT, pc, spatial=True)
            try:
                word = self.mem.read(pc)
            except BusFault:
                raise Trap(EXC_FETCH_FAULT, pc)
            if word == SPIN and self.fast_forward:
                if self.tracing:
                    self.trace.append((self.cycle, pc, word, 0, 0, None))
                self._spin()
                return
            ins = self._dcache.get(word)
            if ins is None:
                ins = self._dcache[word] = decode(word)
            if self.in_handler():
                cost = self.cost_of(ins)
                if cost is None:
                    cost = 1
                e = self.engine
                if cost > e.running.remaining:
                    # budget runs out before this instruction can commit
                    n = e.consume(cost)
                    self.spend(n)
                    self.event('budget', 'exhausted', '', 'int=%d' % e.running.hit.int_num)
                    self.uintr_return(eng.TEMPORAL)
                    return
            cost = self.execute(ins)
            if self.in_handler() and ins.name != 'uret' and cost:
                e = self.engine
                e.consume(cost)
                self.spend(cost)
                self.retired += 1
                if e.running.remaining == 0:
                    self.event('budget', 'exhausted', '', 'int=%d' % e.running.hit.int_num)
                    self.uintr_return(eng.TEMPORAL)
                return
            if cost:
                self.spend(cost)
                self.retired += 1
        except Trap as t:
            self.exception(t, pc)

    def exception(self, t, pc):
        self.event('core', 'exception', '', 'code=%d tval=0x%x' % (t.code, t.tval))
        if self.in_handler():
            self.spend(1)
            self.uintr_return(eng.SPATIAL if t.spatial else eng.EXC_BASE + t.code)
            return
        self.take_trap(t.code, t.tval, pc)

    # ---- timing
    def _mem_cycles(self, addr, width, write):
        try:
            r = self.mem.region(addr, width)
        except BusFault:
            return 1
        start = max(self.cycle + 1, self.mem.busy.get(r.port, 0))
        return start - self.cycle - 1 + self.mem.duration(r, 1)

    def cost_of(self, ins):
        """Cycles `ins` would take from the current state, without side effects."""
        n = ins.name
        c = self.cal
        g = self.gprs
        if n in _LOADS or n in _STORES:
            return 1 + self._mem_cycles((g[ins.rs1] + ins.imm) & M32, 4, n in _STORES)
        if n in _BR:
            taken = _BR[n](g[ins.rs1], g[ins.rs2])
            return 1 + (c.branch_penalty if taken != (ins.imm <= 0) else 0)
        if n == 'jal':
            return 1 + c.jal_penalty
        if n in ('jalr', 'mret'):
            return 1 + c.jalr_penalty
        if n in ('mul',):
            return c.mul_cycles
        if n in ('mulh', 'mulhsu', 'mulhu'):
            return c.mulh_cycles
        if n in ('div', 'divu', 'rem', 'remu'):
            return c.div_cycles
        if n == 'uret':
            return 0
        return 1

    def _set(self, rd, v):
        if rd:
            self.gprs[rd] = v & M32

    def _load(self, addr, width, signed):
        if addr % width:
            raise Trap(EXC_LOAD_MISALIGNED, addr)
        if self.mode == 'user' and not self.pmp.allows(addr, R, width):
            raise Trap(EXC_LOAD_FAULT, addr, spatial=True)
        try:
            r = self.mem.region(addr, width)
        except BusFault:
            raise Trap(EXC_LOAD_FAULT, addr)
        from .memory import PortRequest
        v, end = self.mem.access(PortRequest('core_data', addr, width, False, self.cycle + 1))
        if signed and v >> (8 * width - 1):
            v -= 1 << (8 * width)
        return v & M32, end - self.cycle

    def _store(self, addr, width, value):
        if addr % width:
            raise Trap(EXC_STORE_MISALIGNED, addr)
        if self.mode == 'user' and not self.pmp.allows(addr, W, width):
            # suppressed before commit: memory is never touched
            raise Trap(EXC_STORE_FAULT, addr, spatial=True)
        try:
            r = self.mem.region(addr, width)
        except BusFault:
            raise Trap(EXC_STORE_FAULT, addr)
        if r.kind == 'flash':
            raise Trap(EXC_STORE_FAULT, addr)
        from .memory import PortRequest
        _, end = self.mem.access(PortRequest('core_data', addr, width, True, self.cycle + 1), value)
        return end - self.cycle

    def execute(self, ins):
        """Commit one instruction; returns its cycle cost (0 if control left via engine)."""
        n = ins.name
        g = self.gprs
        c = self.cal
        pc = self.pc
        nxt = (pc + 4) & M32
        cost = 1
        tr = None
        if n in _ALU_I:
            self._set(ins.rd, _ALU_I[n](g[ins.rs1], ins.imm))
        elif n in _ALU_R:
            self._set(ins.rd, _ALU_R[n](g[ins.rs1], g[ins.rs2]))
            if n in _MULDIV:
                cost = c.mul_cycles if n == 'mul' else c.mulh_cycles if n.startswith('mulh') else c.div_cycles
        elif n in _LOADS:
            w, s = _LOADS[n]
            addr = (g[ins.rs1] + ins.imm) & M32
            v, cost = self._load(addr, w, s)
            self._set(ins.rd, v)
            tr = ('r', addr, v)
        elif n in _STORES:
            w = _STORES[n]
            addr = (g[ins.rs1] + ins.imm) & M32
            v = g[ins.rs2] & ((1 << (8 * w)) - 1)
            cost = self._store(addr, w, v)
            tr = ('w', addr, v)
        elif n in _BR:
            taken = _BR[n](g[ins.rs1], g[ins.rs2])
            if taken:
                nxt = (pc + ins.imm) & M32
            if taken != (ins.imm <= 0):         # backward (and self) predicted taken, forward not
                cost += c.branch_penalty
        elif n == 'lui':
            self._set(ins.rd, ins.imm)
        elif n == 'auipc':
            self._set(ins.rd, pc + ins.imm)
        elif n == 'jal':
            self._set(ins.rd, nxt)
            nxt = (pc + ins.imm) & M32
            cost += c.jal_penalty
        elif n == 'jalr':
            t = (g[ins.rs1] + ins.imm) & ~1 & M32
            self._set(ins.rd, nxt)
            nxt = t
            cost += c.jalr_penalty
        elif n in _CSR:
            op, imm = _CSR[n]
            src = ins.rs1 if imm else g[ins.rs1]
            if op == 'write':
                old = csr_access(self, ins.csr, 'write', src)
            elif ins.rs1 == 0:
                old = csr_access(self, ins.csr, 'read')
            else:
                old = csr_access(self, ins.csr, op, src)
            self._set(ins.rd, old)
        elif n == 'fence' or n == 'wfi':
            pass
        elif n == 'ecall':
            raise Trap(EXC_ECALL_U if self.mode == 'user' else EXC_ECALL_M, 0)
        elif n == 'ebreak':
            raise Trap(EXC_BREAK, pc)
        elif n == 'mret':
            if self.mode != 'machine':
                raise Trap(EXC_ILLEGAL, ins.word)
            cs = self.csrs
            mpp = (cs.mstatus >> MPP_SHIFT) & 3
            cs.set_mie(cs.mstatus & MSTATUS_MPIE)
            cs.mstatus |= MSTATUS_MPIE
            cs.mstatus &= ~(3 << MPP_SHIFT)
            self.mode = 'machine' if mpp == 3 else 'user'
            nxt = cs.mepc
            cost += c.jalr_penalty
        elif n == 'uret':
            if not self.in_handler():
                raise Trap(EXC_ILLEGAL, ins.word)
            if self.tracing:
                self.trace.append((self.cycle, pc, ins.word, 0, 0, None))
            self.uintr_return()
            return 0
        else:
            raise Trap(EXC_ILLEGAL, ins.word)
        if self.tracing:
            self.trace.append((self.cycle, pc, ins.word, ins.rd, g[ins.rd], tr))
        self.pc = nxt
        return cost


def _s(v):
    return v - (1 << 32) if v & 0x80000000 else v


def _div(a, b):
    a, b = _s(a), _s(b)
    if b == 0:
        return M32
    if a == -(1 << 31) and b == -1:
        return a & M32
    q = abs(a) // abs(b)
    return (-q if (a < 0) != (b < 0) else q) & M32


def _rem(a, b):
    sa, sb = _s(a), _s(b)
    if sb == 0:
        return a
    if sa == -(1 << 31) and sb == -1:
        return 0
    r = abs(sa) % abs(sb)
    return (-r if sa < 0 else r) & M32


_ALU_I = {
    'addi': lambda a, i: a + i, 'slti': lambda a, i: int(_s(a) < i), 'sltiu': lambda a, i: int(a < (i & M32)),
    'xori': lambda a, i: a ^ (i & M32), 'ori': lambda a, i: a | (i & M32), 'andi': lambda a, i: a & (i & M32),
    'slli': lambda a, i: a << i, 'srli': lambda a, i: a >> i, 'srai': lambda a, i: _s(a) >> i,
}
_ALU_R = {
    'add': lambda a, b: a + b, 'sub': lambda a, b: a - b, 'sll': lambda a, b: a << (b & 31),
    'slt': lambda a, b: int(_s(a) < _s(b)), 'sltu': lambda a, b: int(a < b), 'xor': lambda a, b: a ^ b,
    'srl': lambda a, b: a >> (b & 31), 'sra': lambda a, b: _s(a) >> (b & 31), 'or': lambda a, b: a | b,
    'and': lambda a, b: a & b,
    'mul': lambda a, b: a * b, 'mulh': lambda a, b: (_s(a) * _s(b)) >> 32,
    'mulhsu': lambda a, b: (_s(a) * b) >> 32, 'mulhu': lambda a, b: (a * b) >> 32,
    'div': _div, 'divu': lambda a, b: a // b if b else M32, 'rem': _rem, 'remu': lambda a, b: a % b if b else a,
}
_MULDIV = {'mul', 'mulh', 'mulhsu', 'mulhu', 'div', 'divu', 'rem', 'remu'}
_LOADS = {'lb': (1, True), 'lh': (2, True), 'lw': (4, False), 'lbu': (1, False), 'lhu': (2, False)}
_STORES = {'sb': 1, 'sh': 2, 'sw': 4}
_BR = {
    'beq': lambda a, b: a == b, 'bne': lambda a, b: a != b, 'blt': lambda a, b: _s(a) < _s(b),
    'bge': lambda a, b: _s(a) >= _s(b), 'bltu': lambda a, b: a < b, 'bgeu': lambda a, b: a >= b,
}
_CSR = {'csrrw': ('write', False), 'csrrs': ('set', False), 'csrrc': ('clear', False),
        'csrrwi': ('write', True), 'csrrsi': ('set', True), 'csrrci': ('clear', True)}
