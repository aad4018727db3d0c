"""Range-based PMP: permission checks, packed records, and the kernel shadow bank.

Record layout for K entries (2K+1 words):
    word 2i     base of entry i
    word 2i+1   limit of entry i (exclusive)
    word 2K     permissions, 3 bits per entry at bit 3i: R=1, W=2, X=4
"""
from dataclasses import dataclass, field

R, W, X = 1, 2, 4
ACCESS = {'read': R, 'write': W, 'exec': X}


@dataclass(frozen=True)
class PmpEntry:
    base: int = 0
    limit: int = 0
    perms: int = 0

    def __post_init__(self):
        if self.base > self.limit:
            raise ValueError('pmp base above limit')
        if (self.base | self.limit) & 3:
            raise ValueError('pmp bounds must be word aligned')

    def covers(self, addr, n=1):
        return self.base <= addr and addr + n <= self.limit

    @classmethod
    def of(cls, base, size, perms):
        if isinstance(perms, str):
            perms = sum({'r': R, 'w': W, 'x': X}[c] for c in perms.lower())
        return cls(base, base + size, perms)


@dataclass
class PmpSet:
    entries: list
    owner: int = 0

    @classmethod
    def empty(cls, k, owner=0):
        return cls([PmpEntry() for _ in range(k)], owner)

    @classmethod
    def build(cls, k, entries, owner=0):
        entries = list(entries)
        if len(entries) > k:
            raise ValueError('%d entries do not fit a %d-entry PMP set' % (len(entries), k))
        return cls(entries + [PmpEntry()] * (k - len(entries)), owner)

    @property
    def k(self):
        return len(self.entries)

    def allows(self, addr, access, n=1):
        need = ACCESS[access] if isinstance(access, str) else access
        for e in self.entries:
            if e.perms & need == need and e.covers(addr, n):
                return True
        return False

    def pack(self):
        words, perms = [], 0
        for i, e in enumerate(self.entries):
            words += [e.base, e.limit]
            perms |= (e.perms & 7) << (3 * i)
        return words + [perms]

    @classmethod
    def unpack(cls, words, owner=0):
        k = (len(words) - 1) // 2
        perms = words[2 * k]
        return cls([PmpEntry(words[2 * i], words[2 * i + 1], (perms >> (3 * i)) & 7) for i in range(k)], owner)

    def subset_of(self, other):
        """Every permission this set grants is also granted by `other` (region-wise)."""
        for e in self.entries:
            if e.perms == 0 or e.base == e.limit:
                continue
            for bit in (R, W, X):
                if e.perms & bit and not _range_covered(e.base, e.limit, bit, other):
                    return False
        return True


def _range_covered(lo, hi, bit, pset):
    ivs = sorted((e.base, e.limit) for e in pset.entries if e.perms & bit and e.base < e.limit)
    at = lo
    for b, l in ivs:
        if b > at:
            break
        at = max(at, l)
        if at >= hi:
            return True
    return at >= hi


def record_words(k):
    return 2 * k + 1


def pmp_check(pset, addr, access, mode, width=1):
    """Machine mode bypasses PMP; user mode needs an entry covering the whole access."""
    if mode == 'machine':
        return True
    return pset.allows(addr, access, width)


def load_pmp_set(mem, table_addr, k, issue_cycle=0, requester='table_loader'):
    """Read a packed record through the memory system. Returns (PmpSet, cycles)."""
    from .memory import PortRequest
    n = record_words(k)
    req = PortRequest(requester, table_addr, 4, False, issue_cycle, words=n, tag='pmp_load')
    words, end = mem.access(req)
    return PmpSet.unpack(words), end - issue_cycle


class ShadowBank:
    """Holds the kernel-managed PMP set while a handler runs on top of thread/kernel code."""

    def __init__(self):
        self.saved = None
        self.valid = False

    def save(self, pset):
        assert not self.valid, 'shadow bank already holds a set'
        self.saved = PmpSet(list(pset.entries), pset.owner)
        self.valid = True
        return 0

    def restore(self):
        assert self.valid, 'shadow bank is empty'
        self.valid = False
        s, self.saved = self.saved, None
        return s
