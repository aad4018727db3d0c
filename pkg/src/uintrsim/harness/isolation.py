"""Isolation suite: a malicious handler either writes kernel memory or spins forever,
preempting a thread, the kernel, or another handler."""
from dataclasses import dataclass

from ..core import Core
from ..engine import SPATIAL, TEMPORAL
from ..isa import assemble
from ..kernel import Kernel, BudgetPolicy
from ..platform import build_memory, KERNEL_DATA, BUDGET_TABLE, stack_floor, stack_top
from ..protection import PmpEntry
from ..variants import preset, BUDGET_WORDS, VariantConfig

SCENARIOS = ('thread', 'kernel', 'handler')
VIOLATIONS = ('spatial', 'temporal')

T_CODE, T_DATA = 0x3000, 0x2000_2000
M_CODE, M_DATA = 0x1000, 0x2000_4000
O_CODE, O_DATA = 0x5000, 0x2000_6000
M_IRQ, O_IRQ = 3, 5
SECRET = 0x5EC7E7

THREAD = """
  lui  s0, %hi(0x20002000)
loop:
  addi a0, a0, 1
  add  a1, a1, a0
  xor  a2, a2, a1
  sw   a1, 0(s0)
  j    loop
"""

SPATIAL_HANDLER = """
  li   t0, 0x{target:x}
  li   t1, 0xBAD
  sw   t1, 0(t0)              # outside the domain: must never commit
  sw   t1, 4(t0)
  uret
"""

TEMPORAL_HANDLER = """
  lui  t1, %hi(0x20004000)
spin:
  addi t0, t0, 1
  sw   t0, 0(t1)
  j    spin
  uret
"""

OUTER_HANDLER = """
  lui  t1, %hi(0x20006000)
  li   t0, 100000
work:
  addi t0, t0, -1
  sw   t0, 0(t1)
  bnez t0, work
  uret
"""


@dataclass
class CaseResult:
    variant: str
    scenario: str
    violation: str
    terminated: bool
    cause: int
    expected_cause: int
    context_ok: bool
    commits_ok: bool
    budget_ok: bool

    @property
    def passed(self):
        return (self.terminated and self.cause == self.expected_cause and self.context_ok
                and self.commits_ok and self.budget_ok)


def _context(core):
    cs = core.csrs
    return (tuple(core.gprs), core.pc, core.mode, tuple(core.pmp.pack()), cs.mstatus & 0x8,
            cs.mtime)


def _memory(core):
    return {name: bytearray(buf) for name, buf in core.mem.store.items()}


def _changed(before, after, mem):
    out = []
    for name, buf in after.items():
        old = before[name]
        base = mem.map.by_name[name].base
        if buf != old:
            out += [base + i for i in range(len(buf)) if buf[i] != old[i]]
    return out


def run_case(variant, scenario, violation):
    v = variant if isinstance(variant, VariantConfig) else preset(variant)
    variant = v.name
    core = Core(build_memory(v), v)
    k = Kernel(core, 'ext')
    k.boot_init()
    T = k.create_process('victim', [PmpEntry.of(T_CODE, 0x1000, 'x'), PmpEntry.of(T_DATA, 0x1000, 'rw')])
    M = k.create_process('malicious', [PmpEntry.of(M_CODE, 0x1000, 'x'), PmpEntry.of(M_DATA, 0x1000, 'rw')],
                         caps=[M_IRQ])
    O = k.create_process('outer', [PmpEntry.of(O_CODE, 0x1000, 'x'), PmpEntry.of(O_DATA, 0x1000, 'rw')],
                         caps=[O_IRQ])
    core.mem.write(KERNEL_DATA, SECRET)
    core.load(assemble(THREAD, T_CODE))
    src = SPATIAL_HANDLER.format(target=KERNEL_DATA) if violation == 'spatial' else TEMPORAL_HANDLER
    core.load(assemble(src, M_CODE))
    core.load(assemble(OUTER_HANDLER, O_CODE))
    hm = k.int_reg(M, M_IRQ, M_CODE, BudgetPolicy(2000, 1_000_000), prio=2)
    ho = k.int_reg(O, O_IRQ, O_CODE, BudgetPolicy(500_000, 1_000_000), prio=1)
    k.int_ena(hm)
    k.int_ena(ho)
    k.spawn(T, T_CODE)
    k.start()
    core.run(max_cycles=500)

    if scenario == 'kernel':
        k.kernel_work(50_000, True, lambda: k._load(k.current))
        core.run(max_cycles=100)
        assert core.mode == 'machine'
    elif scenario == 'handler':
        core.intc.raise_(O_IRQ, core.cycle)
        core.run(max_cycles=300)
        assert core.in_handler() and core.engine.running.hit.int_num == O_IRQ

    depth = len(core.engine.nest)
    outer_ptr = core.engine.running.hit.budget_ptr if depth else None
    ctx = _context(core)
    mem_before = _memory(core)
    core.intc.raise_(M_IRQ, core.cycle)
    returns = []
    core.on_return = lambda c, act, sched, cause: returns.append((act.hit.int_num, cause, act))
    core.run(until=lambda c: returns, max_cycles=100_000)
    terminated = bool(returns) and returns[0][0] == M_IRQ and returns[0][1] is not None
    cause = core.csrs.muicause
    after = _context(core)
    # mtime keeps running inside a preempted handler's nest; compare everything else
    context_ok = after[:5] == ctx[:5] and (depth > 0 or after[5] == ctx[5])
    mem_after = _memory(core)
    allowed = _allowed(v, core, M, hm, k)
    bad = [a for a in _changed(mem_before, mem_after, core.mem) if not allowed(a)]
    commits_ok = not bad and core.mem.read(KERNEL_DATA) == SECRET
    budget_ok = True
    if depth:
        # outer handler resumed with its written-back budget reloaded from the table
        budget_ok = (len(core.engine.nest) == depth and
                     core.engine.running.remaining == core.mem.read(outer_ptr) and
                     core.engine.running.hit.int_num == O_IRQ)
    expected = SPATIAL if violation == 'spatial' else TEMPORAL
    return CaseResult(variant, scenario, violation, terminated, cause, expected, context_ok,
                      commits_ok, budget_ok)


def _allowed(v, core, proc, handle, kernel):
    """Bytes the malicious activation may legitimately change: its own domain, the
    hardware save stack and the budget table (engine write-back)."""
    reg = kernel.handles[handle]
    spans = [(e.base, e.limit) for e in proc.pmp.entries if e.perms & 2]
    spans.append((stack_floor(v), stack_top(v)))
    spans.append((BUDGET_TABLE, BUDGET_TABLE + 4 * BUDGET_WORDS * 64))
    return lambda a: any(lo <= a < hi for lo, hi in spans)


def run_isolation_suite(variant='v5'):
    return [run_case(variant, s, x) for s in SCENARIOS for x in VIOLATIONS]
