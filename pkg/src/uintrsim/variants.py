"""Variant presets and the timing calibration they share."""
from dataclasses import dataclass, field, replace, asdict

FRAME_WORDS = 33          # x1..x31, saved pc, status word
IID_WORDS = 4             # enabled/prio, int_num, pmp_ptr, budget_ptr
BUDGET_WORDS = 4          # remaining, granted, policy_ref, handler vector


class InfeasibleVariant(ValueError):
    pass


@dataclass
class Calibration:
    """Cycle constants. Defaults are the solution found by `calibrate.solve` that
    reproduces every entry-latency anchor; see tests/test_calibration.py."""
    ack: int = 1              # interrupt acknowledge
    redirect: int = 4         # pc redirect to the handler (or trap vector)
    ctx_setup: int = 3        # context engine register-file readout before its first beat
    beat_words: int = 2       # 64-bit data beats on every port
    addr_cycles: int = 1
    sram_data: int = 1
    flash_data: int = 2
    tcm_data: int = 1
    mmio_data: int = 2        # timer count read = 3 cycles total
    pipeline_fill: int = 2    # redirect to first instruction reaching execute
    branch_penalty: int = 2
    jal_penalty: int = 1
    jalr_penalty: int = 2
    mul_cycles: int = 2
    mulh_cycles: int = 3
    div_cycles: int = 32
    budget_wb_words: int = 1

    def as_dict(self):
        return asdict(self)


@dataclass
class VariantConfig:
    name: str = 'custom'
    iid: str = 'table'                 # table | cam
    iid_location: str = ''             # ram | cpu, defaults to the feasible one
    cam_entries: int = 16
    stack_port: str = 'main_sram'      # main_sram | tcm_stack
    table_port: str = 'main_sram'      # main_sram | tcm_table
    extra_banks: int = 0
    kernel_pmp: str = 'shadow'         # shadow | spill
    pmp_entries: int = 4
    calibration: Calibration = field(default_factory=Calibration)

    def __post_init__(self):
        if self.iid == 'table_in_sram':
            self.iid = 'table'
        if not self.iid_location:
            self.iid_location = 'cpu' if self.iid == 'cam' else 'ram'
        self.validate()

    def validate(self):
        if self.iid not in ('table', 'cam'):
            raise ValueError('iid must be table or cam, got %r' % self.iid)
        if self.iid == 'cam' and self.iid_location == 'ram':
            raise InfeasibleVariant('a CAM needs parallel lookup and cannot live in RAM')
        if self.iid == 'table' and self.iid_location == 'cpu':
            raise InfeasibleVariant('an indexed table inside the CPU is not a feasible IID design')
        if self.iid == 'cam' and self.cam_entries not in (16, 32, 48):
            raise ValueError('cam_entries must be 16, 32 or 48')
        if self.stack_port not in ('main_sram', 'tcm_stack'):
            raise ValueError('bad stack_port %r' % self.stack_port)
        if self.table_port not in ('main_sram', 'tcm_table'):
            raise ValueError('bad table_port %r' % self.table_port)
        if not 0 <= self.extra_banks <= 3:
            raise ValueError('extra_banks must be 0..3')
        if self.kernel_pmp not in ('shadow', 'spill'):
            raise ValueError('bad kernel_pmp %r' % self.kernel_pmp)
        if not 1 <= self.pmp_entries <= 16:
            raise ValueError('pmp_entries must be 1..16')

    @property
    def record_words(self):
        return 2 * self.pmp_entries + 1

    def with_(self, **kw):
        return replace(self, **kw)


PRESETS = {
    'v1': dict(iid='table', stack_port='main_sram', table_port='main_sram', extra_banks=0),
    'v2': dict(iid='table', stack_port='tcm_stack', table_port='main_sram', extra_banks=0),
    'v3': dict(iid='table', stack_port='tcm_stack', table_port='main_sram', extra_banks=1),
    'v4': dict(iid='table', stack_port='tcm_stack', table_port='tcm_table', extra_banks=1),
    'v5': dict(iid='cam', cam_entries=16, stack_port='tcm_stack', table_port='tcm_table', extra_banks=1),
}
VARIANT_NAMES = ('base',) + tuple(PRESETS)

# Expected entry latencies (cycles) on an idle machine.
ANCHORS = {'base': 5, 'v1': 38, 'v2': 29, 'v3': 17, 'v4': 14, 'v5': 11, 'v1-spill': 44}


def preset(name, calibration=None, **overrides):
    """Named preset. 'base' is the core without the extension and returns None."""
    name = name.lower()
    if name == 'base':
        return None
    if name == 'v1-spill':
        name, overrides = 'v1', dict(overrides, kernel_pmp='spill')
    if name not in PRESETS:
        raise KeyError('unknown variant %r' % name)
    kw = dict(PRESETS[name])
    kw.update(overrides)
    if calibration is not None:
        kw['calibration'] = calibration
    return VariantConfig(name=name if not overrides else name + '*', **kw)
