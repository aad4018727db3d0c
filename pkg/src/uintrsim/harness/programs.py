"""Workload programs and the standard two-process system the experiments share.

Layout
    target process P   code 0x1000 (flash), data 0x20004000 (64 KiB), MMIO window
    background proc B  code 0x3000 (flash), data 0x20002000 (4 KiB)
"""
from ..core import Core
from ..isa import assemble
from ..kernel import Kernel, BudgetPolicy, SYS_IRET, SchemeCosts
from ..platform import build_memory, MMIO_BASE, CORE_HZ
from ..protection import PmpEntry
from ..variants import preset, Calibration, VariantConfig

P_CODE, P_DATA, P_DATA_SIZE = 0x1000, 0x2000_4000, 0x1_0000
B_CODE, B_DATA, B_DATA_SIZE = 0x3000, 0x2000_2000, 0x1000
MMIO_WINDOW = 0x100

SPIN = 'loop:\n  beq x0, x0, loop\n'


def ret_seq(scheme):
    """Handler epilogue: `uret` for the extension, a kernel upcall return otherwise."""
    if scheme == 'ext':
        return 'uret'
    return 'li a7, %d\n  ecall' % SYS_IRET


def data_base(lines):
    return 'lui t1, %%hi(%d)\n  addi t1, t1, %%lo(%d)' % (lines, lines)


PROBE_HANDLER = """
handler:
  lw   t0, -2048(x0)        # timer count, first handler instruction
  {base}
  lw   t2, 0(t1)            # byte offset of the next sample
  add  t3, t1, t2
  sw   t0, 8(t3)
  addi t2, t2, 4
  sw   t2, 0(t1)
  {ret}
"""

PTO_HANDLER = """
handler:
  {base}
  lw   t2, 0(t1)            # current level
  xori t2, t2, 1
  sw   t2, -2032(x0)        # drive the pin
  sw   t2, 0(t1)
  lw   t3, 4(t1)            # next half period from the pulse spec
  sw   t3, -2044(x0)        # timer reload
  {ret}
"""

MODBUS_HANDLER = """
handler:
  lw   t0, -2012(x0)        # uart status
  andi t0, t0, 1
  beqz t0, done
  lw   a0, -2016(x0)        # received byte
  {base}
  lw   t2, 0(t1)            # bytes received
  andi t4, t2, 255
  add  t3, t1, t4
  sb   a0, 64(t3)           # ring buffer
  addi t2, t2, 1
  sw   t2, 0(t1)
  lw   a1, 4(t1)            # running crc
  xor  a1, a1, a0
  andi a3, a1, 15           # two nibble steps of the table-driven crc-16
  slli a3, a3, 2
  add  a3, a3, t1
  lw   a3, 320(a3)
  srli a1, a1, 4
  xor  a1, a1, a3
  andi a3, a1, 15
  slli a3, a3, 2
  add  a3, a3, t1
  lw   a3, 320(a3)
  srli a1, a1, 4
  xor  a1, a1, a3
  sw   a1, 4(t1)
done:
  {ret}
"""


def crc16_nibble_table(poly=0xA001):
    t = []
    for n in range(16):
        c = n
        for _ in range(4):
            c = (c >> 1) ^ poly if c & 1 else c >> 1
        t.append(c)
    return t


def handler_image(kind, scheme, origin=P_CODE):
    src = {'probe': PROBE_HANDLER, 'pto': PTO_HANDLER, 'modbus': MODBUS_HANDLER}[kind]
    return assemble(src.format(base=data_base(P_DATA), ret=ret_seq(scheme)), origin)


class System:
    """Core + kernel + the two standard processes."""

    def __init__(self, scheme='ext', variant='v5', calibration=None, costs=None, trace=False):
        if scheme == 'ext':
            if isinstance(variant, VariantConfig):
                v = variant if calibration is None else variant.with_(calibration=calibration)
            else:
                v = preset(variant, calibration=calibration)
            if v is None:
                raise ValueError('the ext scheme needs one of v1..v5')
        else:
            v = None
        self.scheme = scheme
        self.variant = v
        cal = calibration or (v.calibration if v else Calibration())
        self.core = Core(build_memory(v, calibration=cal), v, cal, trace=trace)
        self.kernel = Kernel(self.core, scheme, costs or SchemeCosts())
        self.kernel.boot_init()
        mmio = PmpEntry.of(MMIO_BASE, MMIO_WINDOW, 'rw')
        self.P = self.kernel.create_process('target', [PmpEntry.of(P_CODE, 0x1000, 'x'),
                                                       PmpEntry.of(P_DATA, P_DATA_SIZE, 'rw'), mmio],
                                            caps=range(1, 8))
        self.B = self.kernel.create_process('background', [PmpEntry.of(B_CODE, 0x1000, 'x'),
                                                           PmpEntry.of(B_DATA, B_DATA_SIZE, 'rw')])
        self.core.load(assemble(SPIN, B_CODE))
        self.core.load(assemble(SPIN, P_CODE + 0x800))
        self.threads = {}

    def install(self, kind, irq, policy=None, prio=1):
        img = handler_image(kind, self.scheme)
        self.core.load(img)
        if kind == 'modbus':
            self.core.mem.load_words(P_DATA + 320, crc16_nibble_table())
        policy = policy or BudgetPolicy(50_000, 100_000)
        h = self.kernel.int_reg(self.P, irq, img.symbols['handler'], policy, prio)
        self.kernel.int_ena(h)
        return h

    def background(self, mix):
        """Threads for an operating condition: active, inactive or mixed."""
        k = self.kernel
        if mix in ('active', 'mixed'):
            self.threads['P'] = k.spawn(self.P, P_CODE + 0x800)
        if mix in ('inactive', 'mixed'):
            self.threads['B'] = k.spawn(self.B, B_CODE)
        if mix not in ('active', 'inactive', 'mixed'):
            raise ValueError('mix must be active, inactive or mixed')

    def start(self):
        self.kernel.arm_replenish()
        self.kernel.start()
