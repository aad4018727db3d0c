import pytest
from hypothesis import given, settings, strategies as st

from uintrsim.core import Core
from uintrsim.isa import assemble
from uintrsim.kernel import (Kernel, KernelError, BudgetPolicy, SchemeCosts, ERRORS, SYS_INT_REG,
                             SYS_INT_ENA)
from uintrsim.platform import build_memory, table_base
from uintrsim.protection import PmpEntry, PmpSet
from uintrsim.variants import preset

CODE, DATA = 0x4000, 0x2000_4000
POL = BudgetPolicy(100, 1000)


def _kernel(variant='v5', scheme='ext', **kw):
    v = preset(variant) if variant else None
    core = Core(build_memory(v), v)
    k = Kernel(core, scheme, **kw)
    k.boot_init()
    return k


def _proc(k, name='p', caps=range(64), code=CODE):
    return k.create_process(name, [PmpEntry.of(code, 0x1000, 'x'), PmpEntry.of(DATA, 0x100, 'rw')], caps)


def test_boot_programs_muictl():
    k = _kernel('v1')
    assert k.core.csrs.muictl & 1 and k.core.csrs.muictl & ~3 == table_base(k.v)
    off = Kernel(Core(build_memory(k.v), k.v), 'ext')
    off.boot_init(enable=False)
    assert not off.core.csrs.muictl & 1


def test_ext_scheme_needs_extension():
    with pytest.raises(ValueError):
        Kernel(Core(build_memory(None)), 'ext')


def test_policy_validation():
    with pytest.raises(ValueError):
        BudgetPolicy(0, 10)
    with pytest.raises(ValueError):
        BudgetPolicy(20, 10)


def test_cam_capacity():
    k = _kernel('v5')
    p = _proc(k)
    for i in range(16):
        k.int_reg(p, i + 1, CODE, POL)
    with pytest.raises(KernelError) as e:
        k.int_reg(p, 17, CODE, POL)
    assert e.value.kind == 'no-free-entry' and e.value.code == ERRORS['no-free-entry']


def test_table_mode_bounds():
    k = _kernel('v1')
    p = _proc(k, caps=range(70))
    for i in range(40):
        k.int_reg(p, i, CODE, POL)
    with pytest.raises(KernelError) as e:
        k.int_reg(p, 64, CODE, POL)
    assert e.value.kind == 'no-free-entry'


@pytest.mark.parametrize('args,kind', [
    (dict(int_id=9, entry=CODE), 'permission'),        # no capability
    (dict(int_id=1, entry=DATA), 'permission'),        # vector not executable in the domain
])
def test_registration_errors(args, kind):
    k = _kernel()
    p = _proc(k, caps=[1])
    with pytest.raises(KernelError) as e:
        k.int_reg(p, args['int_id'], args['entry'], POL)
    assert e.value.kind == kind


def test_duplicate_and_foreign():
    k = _kernel()
    a, b = _proc(k, 'a', [1, 2]), _proc(k, 'b', [1, 2], code=0x6000)
    h = k.int_reg(a, 1, CODE, POL)
    with pytest.raises(KernelError) as e:
        k.int_reg(b, 1, 0x6000, POL)
    assert e.value.kind == 'duplicate'
    with pytest.raises(KernelError) as e:
        k.int_ena(h, b)
    assert e.value.kind == 'foreign-handle'
    with pytest.raises(KernelError):
        k.int_del(999)
    with pytest.raises(KernelError):
        k.int_prio(h, 0)


def test_pmp_record_shared_and_reused():
    k = _kernel('v2')
    a = _proc(k, 'a')
    h1 = k.int_reg(a, 1, CODE, POL)
    h2 = k.int_reg(a, 2, CODE, POL)
    assert k.handles[h1].pmp_ptr == k.handles[h2].pmp_ptr
    assert k.handles[h1].budget_ptr != k.handles[h2].budget_ptr
    ptr = a.pmp_ptr
    assert k.core.mem.read_words(ptr, k.v.record_words) == a.pmp.pack()
    k.int_del(h1)
    assert a.pmp_ptr == ptr
    k.int_del(h2)
    assert a.pmp_ptr is None
    b = _proc(k, 'b', code=0x6000)
    k.int_reg(b, 3, 0x6000, POL)
    assert b.pmp_ptr == ptr


def test_enable_disable_updates_cam():
    k = _kernel('v5')
    p = _proc(k)
    h = k.int_reg(p, 5, CODE, POL, prio=3)
    assert k.core.engine.lookup(5) is None
    k.int_ena(h)
    hit = k.core.engine.lookup(5)
    assert (hit.prio, hit.pmp_ptr, hit.budget_ptr) == (3, p.pmp_ptr, k.handles[h].budget_ptr)
    k.int_prio(h, 7)
    assert k.core.engine.lookup(5).prio == 7
    k.int_dis(h)
    assert k.core.engine.lookup(5) is None


def test_disabled_interrupt_never_enters_handler():
    k = _kernel('v5')
    core = k.core
    p = _proc(k)
    core.load(assemble('x: j x', CODE))
    t = k.spawn(p, CODE)
    h = k.int_reg(p, 4, CODE + 0x100, POL)
    k.start()
    core.intc.raise_(4, core.cycle)
    core.run(max_cycles=2000)
    assert not core.in_handler() and not k.deliveries
    assert k.current is t


def test_replenish_only_at_boundaries():
    k = _kernel('v5')
    p = _proc(k)
    h = k.int_reg(p, 1, CODE, BudgetPolicy(50, 500))
    ptr = k.handles[h].budget_ptr
    k.core.mem.write(ptr, 3)
    assert k.replenish_tick(499) == []
    assert k.replenish_tick(500) == [(h, 'now')]
    assert k.core.mem.read(ptr) == 50


def test_syscall_abi():
    k = _kernel('v5')
    core = k.core
    p = _proc(k, caps=[6])
    core.load(assemble("""
      li a7, %d
      li a0, 6
      li a1, %d
      li a2, 100
      li a3, 1000
      ecall
      mv s0, a0
      li a7, %d
      ecall
      mv s1, a0
      li a7, 99
      ecall
      mv s2, a0
    x: j x
    """ % (SYS_INT_REG, CODE + 0x200, SYS_INT_ENA), CODE))
    k.spawn(p, CODE)
    k.start()
    core.run(max_cycles=3000)
    g = core.gprs
    assert g[8] in k.handles and g[9] == 0
    assert g[18] == ERRORS['bad-call'] & 0xFFFFFFFF
    assert k.handles[g[8]].enabled


OPS = st.lists(st.tuples(st.sampled_from(['reg', 'del', 'ena', 'dis', 'prio']), st.integers(0, 2),
                         st.integers(1, 20), st.integers(1, 9)), max_size=40)


@given(st.sampled_from(['v1', 'v4', 'v5']), OPS)
@settings(max_examples=60, deadline=None)
def test_api_safety(variant, ops):
    """No sequence of API calls lets a live IID entry point at a domain larger than its
    owner's, and allocations stay within capacity."""
    k = _kernel(variant)
    procs = [k.create_process('p%d' % i, [PmpEntry.of(0x4000 + 0x1000 * i, 0x1000, 'x'),
                                          PmpEntry.of(DATA + 0x100 * i, 0x100, 'rw')], caps=range(1, 21))
             for i in range(3)]
    for op, who, num, arg in ops:
        p = procs[who]
        try:
            if op == 'reg':
                k.int_reg(p, num, 0x4000 + 0x1000 * who, BudgetPolicy(arg * 10, 1000), prio=arg)
            elif k.by_int.get(num):
                h = k.by_int[num].handle
                {'del': k.int_del, 'ena': k.int_ena, 'dis': k.int_dis}.get(op, lambda h, p: k.int_prio(h, arg, p))(h, p)
        except KernelError:
            pass
        v, cs, mem = k.v, k.core.csrs, k.core.mem
        if v.iid == 'cam':
            assert sum(1 for i in range(v.cam_entries) if cs.cam_num[i]) <= v.cam_entries
        budgets = [r.budget_ptr for r in k.handles.values()]
        assert len(set(budgets)) == len(budgets)
        for n in range(1, 21):
            hit = k.core.engine.lookup(n)
            reg = k.by_int.get(n)
            if hit is None:
                assert reg is None or not reg.enabled
                continue
            assert reg is not None and reg.enabled
            dom = PmpSet.unpack(mem.read_words(hit.pmp_ptr, v.record_words))
            assert dom.subset_of(reg.proc.pmp)
            assert mem.read(hit.budget_ptr + 12) == reg.vector


@pytest.mark.parametrize('scheme', ['kernel', 'intel', 'software'])
def test_baselines_run_without_extension(scheme):
    k = _kernel(None, scheme)
    assert k.core.engine is None
    lat_a, _ = k.path_costs(True)
    lat_i, _ = k.path_costs(False)
    c = SchemeCosts()
    if scheme == 'intel':
        assert lat_a == c.intel_fast and lat_i == c.kernel_path + c.kernel_extra
    elif scheme == 'software':
        assert lat_i - lat_a == c.software_pmp
    else:
        assert lat_a == lat_i
