"""A small microkernel model: processes, threads, round-robin scheduling, the
user-interrupt API, deferrable-server budgets and the baseline delivery schemes.

The kernel is Python code invoked on machine traps. Its work is charged as
cycles on the core; preemptible kernel work runs as a machine-mode idle stub so
user-level interrupts can land on top of it.

Syscall ABI (ecall from user mode): a7 = call number, a0..a3 = arguments,
result in a0 (negative on error).
"""
from dataclasses import dataclass, field

from . import platform as plat
from .core import IRQ_BIT, IRQ_TIMER, IRQ_EXT_BASE, EXC_ECALL_U, MSTATUS_MIE
from .engine import kernel_entry_cycles
from .protection import PmpSet, PmpEntry, X
from .variants import BUDGET_WORDS

SYS_INT_REG, SYS_INT_DEL, SYS_INT_PRIO, SYS_INT_ENA, SYS_INT_DIS, SYS_IRET, SYS_YIELD = range(1, 8)
SCHEMES = ('ext', 'kernel', 'intel', 'software')

# kernel code in the bottom of flash
KSTUB = 0x0          # beq x0, x0, .  (kernel busy; user interrupts may preempt when MIE=1)
IDLE = 0x10          # idle thread body
KERNEL_CODE_END = 0x100

ERRORS = {'no-free-entry': -1, 'permission': -2, 'duplicate': -3, 'invalid-handle': -4,
          'foreign-handle': -5, 'bad-call': -6}


class KernelError(Exception):
    def __init__(self, kind, msg=''):
        super().__init__('%s%s' % (kind, ': ' + msg if msg else ''))
        self.kind = kind

    @property
    def code(self):
        return ERRORS[self.kind]


@dataclass
class SchemeCosts:
    """Software path costs in cycles, on top of the stock trap entry."""
    kernel_path: int = 634       # trap dispatch, domain switch and upcall
    kernel_extra: int = 170      # trap-side pipeline effects and timer reads seen by the probe
    kernel_exit_inactive: int = 870
    kernel_exit_active: int = 400
    intel_fast: int = 53
    intel_exit: int = 40
    software_prologue: int = 83
    software_pmp: int = 30
    software_exit: int = 60
    syscall: int = 150
    switch: int = 600            # context switch on a scheduler tick
    atomic_window: int = 8       # tail of the switch that runs with MIE=0
    quantum: int = 10_000


@dataclass
class BudgetPolicy:
    """Deferrable server: `capacity` cycles, refilled at every `period` boundary."""
    capacity: int
    period: int

    def __post_init__(self):
        if not 0 < self.capacity <= self.period:
            raise ValueError('need 0 < capacity <= period')


@dataclass
class Process:
    pid: int
    name: str
    pmp: PmpSet
    caps: set = field(default_factory=set)
    threads: list = field(default_factory=list)
    regs: list = field(default_factory=list)       # live Registrations
    pmp_ptr: int = None


@dataclass
class Thread:
    tid: int
    proc: Process
    pc: int
    gprs: list = field(default_factory=lambda: [0] * 32)
    state: str = 'ready'


@dataclass
class Registration:
    handle: int
    proc: Process
    int_num: int
    vector: int
    policy: BudgetPolicy
    prio: int = 1
    enabled: bool = False
    slot: int = None
    pmp_ptr: int = None
    budget_ptr: int = None
    next_refill: int = 0


class Kernel:
    def __init__(self, core, scheme='ext', costs=None):
        if scheme not in SCHEMES:
            raise ValueError('unknown scheme %r' % scheme)
        if scheme == 'ext' and core.variant is None:
            raise ValueError('the ext scheme needs a core with the extension')
        self.core = core
        self.v = core.variant
        self.scheme = scheme
        self.costs = costs or SchemeCosts()
        self.procs = {}
        self.threads = []
        self.current = None
        self.handles = {}
        self.by_int = {}
        self.upcall = None
        self.switches = []          # (cycle, from_tid, to_tid)
        self.deliveries = []        # (cycle, int_num, scheme path, active)
        self.faults = []
        self._next = {'pid': 1, 'tid': 1, 'handle': 1}
        self._pmp_free = []
        self._budget_free = []
        self._pmp_top = plat.pmp_table_base(self.v)
        self._budget_top = plat.BUDGET_TABLE
        self.tick_armed = False
        core.trap_hook = self._trap

    @property
    def trap_cycles(self):
        cal = self.core.cal
        return kernel_entry_cycles(cal) + cal.pipeline_fill

    def _id(self, kind):
        n = self._next[kind]
        self._next[kind] += 1
        return n

    # ------------------------------------------------------------ boot
    def boot_init(self, enable=True):
        core, cs = self.core, self.core.csrs
        core.mem.load_words(KSTUB, [0x00000063])
        core.mem.load_words(IDLE, [0x00000063])
        self.idle_proc = Process(0, 'idle', PmpSet.build(self._k(), [PmpEntry.of(IDLE, 4, 'x')]))
        self.idle = Thread(0, self.idle_proc, IDLE)
        if self.v is not None:
            cs.muistk = plat.stack_top(self.v)
            base = plat.table_base(self.v) if self.v.iid == 'table' else 0
            mem = core.mem
            if self.v.iid == 'table':
                mem.load_words(base, [0] * (4 * plat.TABLE_SLOTS))
            else:
                for i in range(len(cs.cam_num)):
                    cs.cam_num[i] = cs.cam_pmp[i] = cs.cam_tim[i] = 0
            cs.write(0x7C0, base | int(bool(enable)), core)
        cs.mtimecmp = (1 << 64) - 1
        cs.mie |= 1 << IRQ_TIMER

    def _k(self):
        return self.v.pmp_entries if self.v else 4

    def create_process(self, name, regions, caps=()):
        pid = self._id('pid')
        p = Process(pid, name, PmpSet.build(self._k(), regions, owner=pid), set(caps))
        self.procs[pid] = p
        return p

    def spawn(self, proc, pc, gprs=None):
        t = Thread(self._id('tid'), proc, pc, list(gprs) if gprs else [0] * 32)
        proc.threads.append(t)
        self.threads.append(t)
        return t

    def start(self):
        """Dispatch the first ready thread (idle thread if none)."""
        ready = self._ready()
        self._load(ready[0] if ready else self.idle)
        self._arm_tick()

    # ------------------------------------------------------------ context
    def _ready(self):
        return [t for t in self.threads if t.state in ('ready', 'running')]

    def _save(self, epc):
        core = self.core
        t = self.current
        t.gprs = list(core.gprs)
        t.pc = epc
        if t.state == 'running':
            t.state = 'ready'

    def _load(self, t):
        core = self.core
        core.gprs[:] = t.gprs
        core.gprs[0] = 0
        core.pc = t.pc
        core.pmp = PmpSet(list(t.proc.pmp.entries), t.proc.pid)
        core.mode = 'user'
        t.state = 'running'
        self.current = t
        core.owner = 'thread:%d' % t.tid
        core.resume_owner = core.owner

    def _arm_tick(self):
        cs = self.core.csrs
        if len(self._ready()) > 1:
            cs.mtimecmp = cs.mtime + self.costs.quantum
            self.tick_armed = True
        else:
            cs.mtimecmp = (1 << 64) - 1
            self.tick_armed = False

    def kernel_work(self, cycles, preemptible, then):
        """Spend `cycles` of kernel time, then call `then()`. Preemptible work runs
        as the machine-mode stub with MIE=1 so user-level interrupts can land."""
        core = self.core
        if not preemptible or cycles <= 0:
            core.spend(cycles, 'kernel')
            then()
            return
        cs = core.csrs
        core.mode = 'machine'
        core.pc = KSTUB
        core.owner = core.resume_owner = 'kernel'
        saved_mie = cs.mie
        cs.mie = 0
        cs.set_mie(True)

        def done(c):
            cs.set_mie(False)
            cs.mie = saved_mie
            then()
        core.add_alarm('mtime', cs.mtime + cycles, done)

    # ------------------------------------------------------------ traps
    def _trap(self, core, cause, tval, epc):
        if cause & IRQ_BIT:
            code = cause & ~IRQ_BIT
            if code == IRQ_TIMER:
                self._tick(epc)
            else:
                self._deliver(code - IRQ_EXT_BASE, epc)
            return True
        if cause == EXC_ECALL_U:
            self._syscall(epc)
            return True
        # fault in user code
        core.spend(self.trap_cycles, 'kernel')
        if self.upcall is not None:
            self.faults.append((core.cycle, 'upcall', cause, tval))
            self._iret()
            return True
        if self.current is None or core.mode == 'machine':
            raise RuntimeError('kernel fault cause=%d tval=0x%x pc=0x%x' % (cause, tval, epc))
        self.faults.append((core.cycle, self.current.tid, cause, tval))
        self.current.state = 'blocked'
        self._switch_to_next(save=False)
        return True

    def _tick(self, epc):
        core = self.core
        core.spend(self.trap_cycles, 'kernel')
        core.csrs.mtimecmp = (1 << 64) - 1
        self._save(epc)
        c = self.costs
        pre = self.scheme == 'ext'

        def tail():
            core.spend(c.atomic_window, 'kernel')
            self._switch_to_next(save=False)
        self.kernel_work(c.switch - c.atomic_window, pre, tail)

    def _switch_to_next(self, save=True):
        ready = self._ready()
        prev = self.current
        if not ready:
            nxt = self.idle
        elif prev in ready:
            nxt = ready[(ready.index(prev) + 1) % len(ready)]
        else:
            nxt = ready[0]
        self.switches.append((self.core.cycle, prev.tid if prev else None, nxt.tid))
        self._load(nxt)
        self._arm_tick()

    def schedule(self, quantum=None):
        """Round-robin order for the next len(ready) quanta (pure; no side effects)."""
        ready = self._ready()
        if not ready:
            return []
        i = ready.index(self.current) if self.current in ready else -1
        return [ready[(i + 1 + j) % len(ready)].tid for j in range(len(ready))]

    # ------------------------------------------------------------ delivery
    def path_costs(self, active):
        """(latency, exit) kernel cycles for the configured scheme, excluding the trap entry."""
        c = self.costs
        kern = (c.kernel_path + c.kernel_extra,
                c.kernel_exit_active if active else c.kernel_exit_inactive)
        if self.scheme == 'intel' and active:
            return c.intel_fast, c.intel_exit
        if self.scheme == 'software':
            extra = 0 if active else c.software_pmp
            return c.software_prologue + extra, c.software_exit + extra
        return kern

    def _deliver(self, n, epc):
        core = self.core
        reg = self.by_int.get(n)
        if reg is None or not reg.enabled:
            core.spend(self.trap_cycles, 'kernel')
            return
        active = self.current is not None and self.current.proc is reg.proc
        lat, ex = self.path_costs(active)
        path = 'fast' if self.scheme == 'intel' and active else self.scheme
        self.deliveries.append((core.cycle, n, path, active))
        core.spend(self.trap_cycles + lat, 'kernel')
        cs = core.csrs
        self.upcall = dict(gprs=list(core.gprs), pc=epc, pmp=core.pmp, mode=core.mode,
                           mie=cs.mie, mstatus=cs.mstatus, exit=ex, reg=reg, owner=core.owner)
        cs.mie = 0
        core.gprs[1:] = [0] * 31
        core.pmp = PmpSet(list(reg.proc.pmp.entries), reg.proc.pid)
        core.mode = 'user'
        core.pc = reg.vector
        core.owner = 'handler:%d' % n

    def _iret(self):
        core = self.core
        u, self.upcall = self.upcall, None
        core.spend(u['exit'], 'kernel')
        core.gprs[:] = u['gprs']
        core.pc = u['pc']
        core.pmp = u['pmp']
        core.mode = u['mode']
        core.csrs.mie = u['mie']
        core.csrs.mstatus = u['mstatus']
        core.owner = u['owner']

    # ------------------------------------------------------------ syscalls
    def _syscall(self, epc):
        core = self.core
        g = core.gprs
        n = g[17]
        if n == SYS_IRET and self.upcall is not None:
            core.spend(self.trap_cycles, 'kernel')
            self._iret()
            return
        core.spend(self.trap_cycles + self.costs.syscall, 'kernel')
        proc = self.current.proc if self.current else None
        a0, a1, a2, a3 = g[10:14]
        try:
            if n == SYS_INT_REG:
                r = self.int_reg(proc, a0, a1, BudgetPolicy(a2, a3))
            elif n == SYS_INT_DEL:
                r = self.int_del(a0, proc)
            elif n == SYS_INT_PRIO:
                r = self.int_prio(a0, a1, proc)
            elif n == SYS_INT_ENA:
                r = self.int_ena(a0, proc)
            elif n == SYS_INT_DIS:
                r = self.int_dis(a0, proc)
            elif n == SYS_YIELD:
                r = 0
            else:
                raise KernelError('bad-call', str(n))
        except KernelError as e:
            r = e.code
        except ValueError:
            r = ERRORS['bad-call']
        g[10] = r & 0xFFFFFFFF
        core.pc = (epc + 4) & 0xFFFFFFFF
        if n == SYS_YIELD:
            self._save(core.pc)
            self._switch_to_next(save=False)

    # ------------------------------------------------------------ user-interrupt API
    def _alloc_pmp(self):
        if self._pmp_free:
            return self._pmp_free.pop()
        a = self._pmp_top
        limit = plat.BUDGET_TABLE if self.v.table_port == 'main_sram' else \
            plat.TCM_TABLE_BASE + plat.TCM_TABLE_SIZE
        if a + 4 * self.v.record_words > limit:
            raise KernelError('no-free-entry', 'PMP table full')
        self._pmp_top += 4 * self.v.record_words
        return a

    def _alloc_budget(self):
        if self._budget_free:
            return self._budget_free.pop()
        a = self._budget_top
        if a + 4 * BUDGET_WORDS > plat.SRAM_STACK_TOP - plat.SRAM_STACK_SIZE:
            raise KernelError('no-free-entry', 'budget table full')
        self._budget_top += 4 * BUDGET_WORDS
        return a

    def live(self):
        return len(self.handles)

    def int_reg(self, proc, int_id, entry, policy, prio=1):
        if proc is None or int_id not in proc.caps:
            raise KernelError('permission', 'interrupt %s not owned' % int_id)
        if int_id in self.by_int:
            raise KernelError('duplicate', 'interrupt %d' % int_id)
        if not proc.pmp.allows(entry, X, 4):
            raise KernelError('permission', 'vector outside the domain')
        reg = Registration(self._id('handle'), proc, int_id, entry, policy, prio)
        v = self.v
        if v is not None:
            cs = self.core.csrs
            if v.iid == 'cam':
                free = [i for i in range(v.cam_entries) if not cs.cam_num[i] and not cs.cam_tim[i]]
                if not free:
                    raise KernelError('no-free-entry', 'all %d CAM entries in use' % v.cam_entries)
                reg.slot = free[0]
            else:
                if not 0 <= int_id < plat.TABLE_SLOTS:
                    raise KernelError('no-free-entry', 'interrupt %d beyond the IID table' % int_id)
                reg.slot = int_id
            if proc.pmp_ptr is None:
                proc.pmp_ptr = self._alloc_pmp()
                self.core.mem.load_words(proc.pmp_ptr, proc.pmp.pack())
            reg.pmp_ptr = proc.pmp_ptr
            reg.budget_ptr = self._alloc_budget()
            self.core.mem.load_words(reg.budget_ptr, [policy.capacity, policy.capacity, reg.handle, entry])
            self._write_iid(reg)
        reg.next_refill = self.core.cycle + policy.period
        self.handles[reg.handle] = reg
        self.by_int[int_id] = reg
        proc.regs.append(reg)
        return reg.handle

    def _write_iid(self, reg):
        v, cs = self.v, self.core.csrs
        if v is None:
            return
        if v.iid == 'cam':
            cs.cam_num[reg.slot] = (int(reg.enabled) << 31) | ((reg.prio & 0xFF) << 16) | reg.int_num
            cs.cam_pmp[reg.slot] = reg.pmp_ptr
            cs.cam_tim[reg.slot] = reg.budget_ptr
        else:
            a = plat.table_base(v) + 16 * reg.slot
            self.core.mem.load_words(a, [int(reg.enabled) | ((reg.prio & 0xFF) << 8), reg.int_num,
                                         reg.pmp_ptr, reg.budget_ptr])

    def _get(self, handle, proc=None):
        reg = self.handles.get(handle)
        if reg is None:
            raise KernelError('invalid-handle', str(handle))
        if proc is not None and reg.proc is not proc:
            raise KernelError('foreign-handle', str(handle))
        return reg

    def int_del(self, handle, proc=None):
        reg = self._get(handle, proc)
        self.int_dis(handle, proc)
        v, cs = self.v, self.core.csrs
        if v is not None:
            if v.iid == 'cam':
                cs.cam_num[reg.slot] = cs.cam_pmp[reg.slot] = cs.cam_tim[reg.slot] = 0
            else:
                self.core.mem.load_words(plat.table_base(v) + 16 * reg.slot, [0, 0, 0, 0])
            self.core.mem.load_words(reg.budget_ptr, [0] * BUDGET_WORDS)
            self._budget_free.append(reg.budget_ptr)
        del self.handles[handle]
        del self.by_int[reg.int_num]
        reg.proc.regs.remove(reg)
        if not reg.proc.regs and reg.proc.pmp_ptr is not None:
            self._pmp_free.append(reg.proc.pmp_ptr)
            reg.proc.pmp_ptr = None
        return 0

    def int_prio(self, handle, prio, proc=None):
        reg = self._get(handle, proc)
        if not 1 <= prio <= 255:
            raise KernelError('bad-call', 'priority %d' % prio)
        reg.prio = prio
        self._write_iid(reg)
        return 0

    def int_ena(self, handle, proc=None):
        reg = self._get(handle, proc)
        reg.enabled = True
        self._write_iid(reg)
        self.core.csrs.mie |= 1 << (IRQ_EXT_BASE + reg.int_num)
        return 0

    def int_dis(self, handle, proc=None):
        reg = self._get(handle, proc)
        reg.enabled = False
        self._write_iid(reg)
        self.core.csrs.mie &= ~(1 << (IRQ_EXT_BASE + reg.int_num))
        return 0

    # ------------------------------------------------------------ budgets
    def replenish_tick(self, now=None):
        """Refill every budget whose period boundary has passed. A refill for the
        handler that is running right now is deferred to its next write-back."""
        now = self.core.cycle if now is None else now
        done = []
        for reg in self.handles.values():
            if reg.budget_ptr is None or now < reg.next_refill:
                continue
            while reg.next_refill <= now:
                reg.next_refill += reg.policy.period
            cap = reg.policy.capacity
            e = self.core.engine
            if e is not None and e.request_replenish(reg.budget_ptr, cap):
                done.append((reg.handle, 'deferred'))
                continue
            self.core.mem.write(reg.budget_ptr, cap)
            self.core.mem.write(reg.budget_ptr + 4, cap)
            done.append((reg.handle, 'now'))
        return done

    def arm_replenish(self):
        """Run replenish_tick at every policy boundary (bookkeeping is not charged)."""
        regs = [r for r in self.handles.values() if r.budget_ptr is not None]
        if not regs:
            return
        due = min(r.next_refill for r in regs)

        def fire(core):
            self.replenish_tick(core.cycle)
            self.arm_replenish()
        self.core.add_alarm('cycle', due, fire)
