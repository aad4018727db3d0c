"""Standard SoC layout: address map and where the kernel places hardware tables."""
from .memory import Region, MemoryMap, MemorySystem

CORE_HZ = 50_000_000

FLASH_BASE, FLASH_SIZE = 0x0000_0000, 256 * 1024
SRAM_BASE, SRAM_SIZE = 0x2000_0000, 128 * 1024
TCM_STACK_BASE, TCM_STACK_SIZE = 0x3000_0000, 4 * 1024
TCM_TABLE_BASE, TCM_TABLE_SIZE = 0x3001_0000, 4 * 1024
MMIO_BASE, MMIO_SIZE = 0xFFFF_F800, 0x800   # reachable from x0 with a negative offset

TIMER = MMIO_BASE + 0x00      # count RO, reload RW, ctrl RW
PULSE = MMIO_BASE + 0x10      # level RW
UART = MMIO_BASE + 0x20       # data RO, status RO
TIMER2 = MMIO_BASE + 0x40     # second reload timer, same layout as TIMER

# kernel-owned table areas
TABLE_SLOTS = 64                              # IID table rows in table mode
SRAM_TABLES = SRAM_BASE + 0x1_8000            # IID + PMP tables when table_port is main
BUDGET_TABLE = SRAM_BASE + 0x1_A000           # budget records always live in main SRAM
SRAM_STACK_TOP = SRAM_BASE + SRAM_SIZE        # save stack top when stack_port is main
SRAM_STACK_SIZE = 0x2000
KERNEL_DATA = SRAM_BASE                       # kernel-private scratch


def table_base(variant):
    if variant is not None and variant.table_port == 'tcm_table':
        return TCM_TABLE_BASE
    return SRAM_TABLES


def pmp_table_base(variant):
    return table_base(variant) + 16 * TABLE_SLOTS


def stack_top(variant):
    if variant is not None and variant.stack_port == 'tcm_stack':
        return TCM_STACK_BASE + TCM_STACK_SIZE
    return SRAM_STACK_TOP


def stack_floor(variant):
    if variant is not None and variant.stack_port == 'tcm_stack':
        return TCM_STACK_BASE
    return SRAM_STACK_TOP - SRAM_STACK_SIZE


def build_memory(variant, devices=None, calibration=None):
    """Memory system for a variant (None = core without the extension)."""
    cal = calibration or (variant.calibration if variant else None)
    if cal is None:
        from .variants import Calibration
        cal = Calibration()
    a = cal.addr_cycles
    regs = [
        Region('flash', FLASH_BASE, FLASH_SIZE, 'flash', a, cal.flash_data),
        Region('sram', SRAM_BASE, SRAM_SIZE, 'sram', a, cal.sram_data),
    ]
    if variant is not None and variant.stack_port == 'tcm_stack':
        regs.append(Region('tcm_stack', TCM_STACK_BASE, TCM_STACK_SIZE, 'tcm_stack', a, cal.tcm_data))
    if variant is not None and variant.table_port == 'tcm_table':
        regs.append(Region('tcm_table', TCM_TABLE_BASE, TCM_TABLE_SIZE, 'tcm_table', a, cal.tcm_data))
    bus = MmioBus(devices or {})
    regs.append(Region('mmio', MMIO_BASE, MMIO_SIZE, 'mmio', a, cal.mmio_data, device=bus))
    return MemorySystem(MemoryMap(regs), beat_words=cal.beat_words)


class MmioBus:
    """Routes MMIO offsets to devices mapped at 16-byte-aligned windows."""

    def __init__(self, devices):
        self.devices = dict(devices)   # window offset -> device

    def attach(self, offset, dev):
        self.devices[offset] = dev

    def _find(self, off):
        base = off & ~0xF
        return self.devices.get(base), off - base

    def read(self, off, cycle):
        dev, o = self._find(off)
        return dev.read(o, cycle) if dev else 0

    def write(self, off, value, cycle):
        dev, o = self._find(off)
        if dev:
            dev.write(o, value, cycle)
