import pytest
from hypothesis import given, strategies as st

from uintrsim.protection import PmpEntry, PmpSet, ShadowBank, pmp_check, load_pmp_set, record_words
from uintrsim.platform import build_memory, SRAM_BASE
from uintrsim.memory import PortRequest


def test_entry_validation():
    with pytest.raises(ValueError):
        PmpEntry(8, 4, 1)
    with pytest.raises(ValueError):
        PmpEntry(1, 8, 1)


def test_allows_whole_access_only():
    s = PmpSet.build(4, [PmpEntry.of(0x100, 0x10, 'rw')])
    assert s.allows(0x10C, 'read', 4)
    assert not s.allows(0x10E, 'read', 4)
    assert not s.allows(0x100, 'exec', 4)


def test_machine_mode_bypasses():
    s = PmpSet.empty(4)
    assert pmp_check(s, 0x1234, 'write', 'machine')
    assert not pmp_check(s, 0x1234, 'write', 'user')


def test_too_many_entries():
    with pytest.raises(ValueError):
        PmpSet.build(2, [PmpEntry.of(0, 4, 'r')] * 3)


def test_record_is_2k_plus_1_words():
    assert record_words(4) == 9
    assert len(PmpSet.empty(4).pack()) == 9


def test_load_through_memory_costs_bus_time():
    m = build_memory(None)
    s = PmpSet.build(4, [PmpEntry.of(0x1000, 0x100, 'x'), PmpEntry.of(SRAM_BASE, 0x40, 'rw')])
    m.load_words(SRAM_BASE + 0x100, s.pack())
    got, cycles = load_pmp_set(m, SRAM_BASE + 0x100, 4)
    assert got.pack() == s.pack()
    assert cycles == m.duration(m.region(SRAM_BASE), 9)


def test_shadow_bank_round_trip():
    b = ShadowBank()
    s = PmpSet.build(4, [PmpEntry.of(0, 0x100, 'rwx')])
    assert b.save(s) == 0
    with pytest.raises(AssertionError):
        b.save(s)
    assert b.restore().pack() == s.pack()
    with pytest.raises(AssertionError):
        b.restore()


words = st.integers(0, 0x3FFF).map(lambda x: 4 * x)
entries = st.tuples(words, words, st.integers(0, 7)).map(
    lambda t: PmpEntry(min(t[0], t[1]), max(t[0], t[1]), t[2]))


@given(st.lists(entries, max_size=4))
def test_pack_unpack(es):
    s = PmpSet.build(4, es)
    assert PmpSet.unpack(s.pack()).pack() == s.pack()


@given(st.lists(entries, max_size=4), words, st.sampled_from(['read', 'write', 'exec']))
def test_subset_never_grants_more(es, addr, acc):
    """If a set is a subset of another, every access it allows the other allows too."""
    s = PmpSet.build(4, es)
    big = PmpSet.build(4, [PmpEntry(0, 0x10000, 7)])
    assert s.subset_of(big)
    if s.allows(addr, acc, 4):
        assert big.allows(addr, acc, 4)
    assert not PmpSet.empty(4).allows(addr, acc)
