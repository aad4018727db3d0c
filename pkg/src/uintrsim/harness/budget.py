"""Randomized nest/preempt traces with a running audit of budget semantics."""
import random

from ..core import Core
from ..engine import KIND_HANDLER
from ..isa import assemble
from ..kernel import Kernel, BudgetPolicy
from ..platform import build_memory
from ..protection import PmpEntry
from ..variants import preset, PRESETS

T_CODE, T_DATA = 0x3000, 0x2000_2000

WORKER = """
  lui  t1, %hi({data})
  addi t1, t1, %lo({data})
  lw   t0, 0(t1)              # iteration count chosen by the trace
work:
  addi t0, t0, -1
  sw   t0, 4(t1)
  bgtz t0, work
  uret
"""

THREAD = """
  lui  s0, %hi(0x20002000)
loop:
  addi a0, a0, 1
  add  a1, a1, a0
  sw   a1, 0(s0)
  j    loop
"""


class BudgetAudit:
    """Hooks into the engine and kernel and records every broken rule."""

    def __init__(self, core, kernel):
        self.core, self.kernel = core, kernel
        self.mem = core.mem
        self.e = core.engine
        self.consumed = {}
        self.granted = {}
        self.seg_start = {}      # id(act) -> (remaining at segment start, executed then)
        self.thread_mtime = None
        self.errors = []
        self.counts = dict(entries=0, nested=0, writebacks=0, replenish_now=0, replenish_deferred=0,
                           forced=0, resumes=0)
        self.e.on_consume = self._consume
        self.e.on_writeback = self._writeback
        core.on_entry = self._entry
        core.on_return = self._return
        self._pre_entry_mtime = None
        orig = kernel.replenish_tick

        def tick(now=None):
            running = self.e.running
            for h, how in orig(now):
                ptr = kernel.handles[h].budget_ptr
                self.consumed[ptr] = 0
                if how == 'now':
                    self.granted[ptr] = kernel.handles[h].policy.capacity
                    self.counts['replenish_now'] += 1
                else:
                    self.counts['replenish_deferred'] += 1
            return []
        kernel.replenish_tick = tick

    def register(self, ptr):
        self.consumed[ptr] = 0
        self.granted[ptr] = self.mem.read(ptr + 4)

    def _fail(self, msg):
        self.errors.append('cycle %d: %s' % (self.core.cycle, msg))

    def _consume(self, ptr, n):
        self.consumed[ptr] = self.consumed.get(ptr, 0) + n

    def _writeback(self, ptr, value, cycle):
        self.counts['writebacks'] += 1
        self.granted[ptr] = self.mem.read(ptr + 4)
        if value != self.granted[ptr] - self.consumed[ptr]:
            self._fail('conservation: wrote %d, granted %d consumed %d'
                       % (value, self.granted[ptr], self.consumed[ptr]))

    def _entry(self, core, n, sched):
        self.counts['entries'] += 1
        act = self.e.running
        if act.remaining != self.mem.read(act.hit.budget_ptr):
            self._fail('entry remaining %d differs from table' % act.remaining)
        self.seg_start[id(act)] = (act.remaining, act.executed)
        if act.preempted == KIND_HANDLER:
            self.counts['nested'] += 1
            outer = self.e.nest[-2]
            self._close_segment(outer)
            if self.mem.read(outer.hit.budget_ptr) != outer.remaining:
                self._fail('outer budget not written back on preemption')
        elif self.thread_mtime is None:
            # mtime froze at the start of the entry sequence
            self.thread_mtime = core.csrs.mtime

    def _close_segment(self, act):
        start, ex0 = self.seg_start.pop(id(act), (None, None))
        if start is not None and act.executed - ex0 > start:
            self._fail('handler ran %d cycles on a budget of %d' % (act.executed - ex0, start))

    def _return(self, core, act, sched, cause):
        self._close_segment(act)
        if cause is not None:
            self.counts['forced'] += 1
        if self.e.nest:
            outer = self.e.running
            self.counts['resumes'] += 1
            if outer.remaining != self.mem.read(outer.hit.budget_ptr):
                self._fail('outer budget not reloaded on resume')
            self.seg_start[id(outer)] = (outer.remaining, outer.executed)
        else:
            if self.thread_mtime is not None and core.csrs.mtime != self.thread_mtime:
                self._fail('mtime moved by %d across an activation' % (core.csrs.mtime - self.thread_mtime))
            self.thread_mtime = None

    def final_check(self):
        for ptr in self.granted:
            act = next((a for a in self.e.nest if a.hit.budget_ptr == ptr), None)
            if act is not None:
                continue
            if self.mem.read(ptr) != self.granted[ptr] - self.consumed[ptr]:
                self._fail('final conservation for 0x%x' % ptr)


def run_budget_trace(seed, variant=None, events=12, handlers=3):
    rng = random.Random(seed)
    variant = variant or rng.choice(sorted(PRESETS))
    v = preset(variant)
    core = Core(build_memory(v), v)
    k = Kernel(core, 'ext')
    k.boot_init()
    T = k.create_process('thread', [PmpEntry.of(T_CODE, 0x1000, 'x'), PmpEntry.of(T_DATA, 0x1000, 'rw')])
    core.load(assemble(THREAD, T_CODE))
    audit = BudgetAudit(core, k)
    lines = []
    for i in range(handlers):
        code, data = 0x5000 + 0x1000 * i, 0x2000_6000 + 0x1000 * i
        p = k.create_process('h%d' % i, [PmpEntry.of(code, 0x1000, 'x'), PmpEntry.of(data, 0x1000, 'rw')],
                             caps=[i + 1])
        core.load(assemble(WORKER.format(data=data), code))
        cap = rng.randint(20, 600)
        period = rng.randint(cap, 4000)
        h = k.int_reg(p, i + 1, code, BudgetPolicy(cap, period), prio=rng.randint(1, 4))
        k.int_ena(h)
        audit.register(k.handles[h].budget_ptr)
        lines.append((i + 1, data))
    k.spawn(T, T_CODE)
    k.arm_replenish()
    k.start()
    for _ in range(events):
        core.run(max_cycles=rng.randint(1, 400))
        n, data = rng.choice(lines)
        core.mem.write(data, rng.choice([0, 1, rng.randint(2, 40), 10_000]))
        core.intc.raise_(n, core.cycle)
    core.run(max_cycles=4000)
    audit.final_check()
    return audit
