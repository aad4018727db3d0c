"""Brute-force search for segment constants that reproduce the entry-latency anchors.

Only the constants the anchors can see are searched. The rest (instruction costs,
MMIO timing) keep their defaults.
"""
import itertools
from dataclasses import replace

from .engine import entry_latency
from .variants import Calibration, ANCHORS

SEARCH = {
    'ack': range(1, 3),
    'redirect': range(1, 6),
    'ctx_setup': range(0, 6),
    'beat_words': (1, 2),
    'addr_cycles': (1, 2),
    'sram_data': (1, 2),
    'tcm_data': (1, 2),
}


def check(calibration=None, anchors=ANCHORS):
    """{name: (expected, actual)} for every anchor."""
    cal = calibration or Calibration()
    return {name: (want, entry_latency(name, cal)) for name, want in anchors.items()}


def mismatches(calibration=None, anchors=ANCHORS):
    return {k: v for k, v in check(calibration, anchors).items() if v[0] != v[1]}


def solutions(base=None, space=SEARCH, anchors=ANCHORS):
    """Yield every calibration in the search space that hits all anchors."""
    base = base or Calibration()
    keys = list(space)
    # the base core only sees ack + redirect, so prune on it first
    for combo in itertools.product(*(space[k] for k in keys)):
        kw = dict(zip(keys, combo))
        if kw.get('ack', base.ack) + kw.get('redirect', base.redirect) != anchors.get('base', 5):
            continue
        cal = replace(base, **kw)
        if all(entry_latency(n, cal) == want for n, want in anchors.items()):
            yield cal


def solve(base=None, space=SEARCH, anchors=ANCHORS):
    """First solution in search order, or None."""
    return next(solutions(base, space, anchors), None)
