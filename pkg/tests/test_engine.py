import pytest

from uintrsim.engine import (compose_entry, compose_return, entry_latency, KIND_HANDLER, KIND_THREAD,
                             pack_status, unpack_status)
from uintrsim.platform import build_memory, stack_top, BUDGET_TABLE
from uintrsim.variants import preset, ANCHORS, FRAME_WORDS, VariantConfig, InfeasibleVariant


def _entry(name, **kw):
    v = preset(name)
    m = build_memory(v)
    kw.setdefault('bank_free', v.extra_banks > 0)
    return compose_entry(v, m, **kw)


@pytest.mark.parametrize('name', sorted(ANCHORS))
def test_idle_anchor(name):
    assert entry_latency(name) == ANCHORS[name]


@pytest.mark.parametrize('name', ['v1', 'v2', 'v3', 'v4', 'v5', 'v1-spill'])
def test_schedule_invariants(name):
    assert _entry(name).check()


def test_v1_segments_serialize_on_main_sram():
    s = _entry('v1')
    main = [x for x in s.segments if x.port == 'main_sram']
    assert {x.action for x in main} == {'iid_lookup', 'ctx_save', 'pmp_load', 'budget_load'}
    main.sort(key=lambda x: x.start)
    assert all(a.end == b.start for a, b in zip(main, main[1:]))


def test_v2_stacking_overlaps_table_loads():
    s = _entry('v2')
    save, pmp = s.segment('ctx_save'), s.segment('pmp_load')
    assert save.port == 'tcm_stack' and pmp.port == 'main_sram'
    assert save.start == pmp.start


def test_cam_has_no_lookup_segment():
    assert _entry('v5').segment('iid_lookup') is None


def test_nested_v3_spills_frame():
    v = preset('v3')
    s = compose_entry(v, build_memory(v), bank_free=False, preempted=KIND_HANDLER,
                      outer_budget_ptr=BUDGET_TABLE + 16)
    assert s.total == 29
    assert s.segment('budget_wb') is not None


@pytest.mark.parametrize('name,total', [('v1', 27), ('v2', 25), ('v3', 6), ('v4', 6), ('v5', 6)])
def test_return_totals(name, total):
    v = preset(name)
    frame = ('bank', 0) if v.extra_banks else ('spill', stack_top(v) - 4 * FRAME_WORDS)
    assert compose_return(v, build_memory(v), frame=frame).total == total


@pytest.mark.parametrize('name', ['v1', 'v2', 'v3', 'v4', 'v5'])
def test_contention_is_monotonic(name):
    v = preset(name)
    m = build_memory(v)
    totals = [compose_entry(v, m, bank_free=v.extra_banks > 0, busy={'main_sram': k}).total
              for k in range(40)]
    assert totals[0] == ANCHORS[name]
    assert all(a <= b for a, b in zip(totals, totals[1:]))


def test_status_word_round_trip():
    assert unpack_status(pack_status(KIND_HANDLER, True, 7, 300)) == (KIND_HANDLER, True, 7, 300)


def test_infeasible_iid_placements():
    with pytest.raises(InfeasibleVariant):
        VariantConfig(iid='cam', iid_location='ram')
    with pytest.raises(InfeasibleVariant):
        VariantConfig(iid='table', iid_location='cpu')
    with pytest.raises(ValueError):
        VariantConfig(iid='cam', cam_entries=20)


def test_spill_costs_one_record():
    v = preset('v1-spill')
    s = compose_entry(v, build_memory(v), bank_free=False)
    assert s.segment('kpmp_spill').cycles == _entry('v1').segment('pmp_load').cycles
