"""Differential corpus for backward compatibility: legacy programs run on a core built
without the extension and on an extension core whose muictl enable bit is clear.
The programs never touch the extension CSRs, which is what makes them legacy."""
from dataclasses import dataclass, field

from ..core import Core
from ..isa import assemble
from ..platform import build_memory, SRAM_BASE, TIMER
from ..protection import PmpEntry, PmpSet
from ..variants import preset
from .devices import ReloadTimer, attach

CODE, VECTOR, USER = 0x100, 0x800, 0x1000
DATA = SRAM_BASE + 0x100

# common trap vector: count traps, log mcause, skip the faulting instruction
VECTOR_SRC = """
  csrw mscratch, t6
  lui  t6, %hi(0x20000000)
  lw   t5, 0(t6)
  addi t5, t5, 1
  sw   t5, 0(t6)
  csrr t5, mcause
  sw   t5, 4(t6)
  bltz t5, irq
  csrr t5, mepc
  addi t5, t5, 4
  csrw mepc, t5
irq:
  csrr t6, mscratch
  mret
"""


@dataclass
class Program:
    name: str
    source: str
    user: str = ''
    setup: object = None          # callable(core) applied to both cores
    irqs: list = field(default_factory=list)   # (cycle, line)
    cycles: int = 6000


def _user_pmp(core):
    core.pmp = PmpSet.build(4, [PmpEntry.of(USER, 0x100, 'x'), PmpEntry.of(DATA, 0x40, 'rw')])


def _timer(core):
    core.csrs.mie |= 1 << (16 + 1)
    attach(core, 'timer', ReloadTimer(700, 1, start=0))


def _line3(core):
    core.csrs.mie |= 1 << (16 + 3)


CORPUS = [
    Program('fibonacci', """
      li   s0, 0x%x
      li   a0, 0
      li   a1, 1
      li   t0, 40
    loop:
      add  a2, a0, a1
      mv   a0, a1
      mv   a1, a2
      sw   a1, 0(s0)
      addi s0, s0, 4
      addi t0, t0, -1
      bnez t0, loop
    done:
      j    done
    """ % DATA),
    Program('muldiv', """
      li   a0, -7
      li   a1, 3
      mul  a2, a0, a1
      mulh a3, a0, a1
      mulhu a4, a0, a1
      mulhsu a5, a0, a1
      div  a6, a0, a1
      rem  a7, a0, a1
      divu s2, a0, a1
      remu s3, a0, a1
      div  s4, a0, zero
      rem  s5, a0, zero
      li   t0, 0x80000000
      li   t1, -1
      div  s6, t0, t1
      rem  s7, t0, t1
    done:
      j    done
    """),
    Program('widths', """
      li   s0, 0x%x
      li   t0, 0x80FF7F01
      sw   t0, 0(s0)
      lb   a0, 0(s0)
      lb   a1, 3(s0)
      lbu  a2, 3(s0)
      lh   a3, 2(s0)
      lhu  a4, 2(s0)
      sb   t0, 5(s0)
      sh   t0, 6(s0)
      lw   a5, 4(s0)
      lw   a6, 0x100(zero)
    done:
      j    done
    """ % DATA),
    Program('calls', """
      li   sp, 0x%x
      li   a0, 10
      call fact
      mv   s1, a0
      li   a0, 7
      jal  ra, fact
      add  s1, s1, a0
    done:
      j    done
    fact:
      addi sp, sp, -8
      sw   ra, 4(sp)
      sw   a0, 0(sp)
      li   t0, 2
      blt  a0, t0, base
      addi a0, a0, -1
      call fact
      lw   t1, 0(sp)
      mul  a0, a0, t1
      j    out
    base:
      li   a0, 1
    out:
      lw   ra, 4(sp)
      addi sp, sp, 8
      ret
    """ % (SRAM_BASE + 0x1000)),
    Program('csrs', """
      li   t0, 0x1234
      csrw mscratch, t0
      csrrs a0, mscratch, t0
      csrrc a1, mscratch, t0
      csrr a2, mscratch
      csrrwi a3, mscratch, 17
      csrr a4, mtvec
      csrr s0, cycle
      nop
      nop
      csrr s1, cycle
      sub  s2, s1, s0
      csrr a5, mcause
    done:
      j    done
    """),
    Program('syscalls', """
      li   a0, 1
      ecall
      addi a0, a0, 1
      ebreak
      addi a0, a0, 1
      ecall
    done:
      j    done
    """),
    Program('faults', """
      li   s0, 0x%x
      lw   a0, 2(s0)
      sw   a0, 1(s0)
      sw   a0, 0x200(zero)
      li   t0, 0x40000000
      lw   a1, 0(t0)
      sw   a1, 0(t0)
      li   a2, 5
    done:
      j    done
    """ % DATA),
    Program('illegal', """
      .word 0xffffffff
      uret
      csrw 0x123, t0
      li   a0, 9
      .word 0x00000000
    done:
      j    done
    """),
    Program('usermode', """
      li   t0, 0x%x
      csrw mepc, t0
      csrr t1, mstatus
      li   t2, 0x1800
      not  t2, t2
      and  t1, t1, t2
      csrw mstatus, t1
      mret
    """ % USER, user="""
      li   s0, 0x%x
      li   a0, 42
      sw   a0, 0(s0)
      sw   a0, 0x40(s0)
      lw   a1, -4(s0)
      csrr a2, mstatus
      mret
      ecall
      rdcycle:
      csrr a3, cycle
    spin:
      j    spin
    """ % DATA, setup=_user_pmp),
    Program('interrupts', """
      li   t0, 0x88
      csrs mstatus, t0
      li   s0, 0x%x
      li   s1, 0x%x
      li   s2, 0x%x
    loop:
      lw   a0, 0(s1)
      sw   a0, 0(s0)
      lw   a1, 0(s0)
      add  a2, a2, a1
      addi s0, s0, 4
      andi s0, s0, 0x7fc
      or   s0, s0, s2
      j    loop
    """ % (DATA, TIMER, SRAM_BASE), setup=lambda c: (_timer(c), _line3(c)),
       irqs=[(333, 3), (1500, 3), (1501, 3), (4000, 3)]),
]


def _build(prog, extension):
    v = preset('v5') if extension else None
    core = Core(build_memory(v), v, trace=True)
    core.mem.tracing = True
    core.load(assemble(VECTOR_SRC, VECTOR))
    core.csrs.mtvec = VECTOR
    core.load(assemble(prog.source, CODE))
    if prog.user:
        core.load(assemble(prog.user, USER))
    core.pc = CODE
    if prog.setup:
        prog.setup(core)
    return core


def run_program(prog, extension):
    """Run one corpus entry; returns the externally visible record."""
    core = _build(prog, extension)
    assert not core.csrs.muictl & 1
    for at, line in sorted(prog.irqs):
        core.run(max_cycles=max(0, at - core.cycle))
        core.intc.raise_(line, core.cycle)
    core.run(max_cycles=max(0, prog.cycles - core.cycle))
    cs = core.csrs
    mem = {name: bytes(buf) for name, buf in core.mem.store.items() if name in ('flash', 'sram')}
    grants = [(g.req.requester, g.req.addr, g.req.is_write, g.port, g.start, g.end) for g in core.mem.log]
    return dict(trace=list(core.trace), events=list(core.events), grants=grants, memory=mem,
                gprs=list(core.gprs), pc=core.pc, mode=core.mode, cycle=core.cycle,
                csrs=(cs.mstatus, cs.mepc, cs.mcause, cs.mtval, cs.mscratch, cs.mie),
                retired=core.retired, lost=core.intc.lost)


def differential(prog):
    """(equal, first differing field or None)."""
    a, b = run_program(prog, False), run_program(prog, True)
    for k in a:
        if a[k] != b[k]:
            return False, k
    return True, None
