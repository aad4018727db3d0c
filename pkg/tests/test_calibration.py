from dataclasses import fields, replace

import pytest

from uintrsim.calibrate import solve, solutions, mismatches, SEARCH
from uintrsim.variants import Calibration


def test_default_is_the_first_solution():
    assert solve() == Calibration()


def test_every_solution_hits_every_anchor():
    sols = list(solutions())
    assert sols
    for s in sols:
        assert not mismatches(s)


@pytest.mark.parametrize('name', sorted(SEARCH))
def test_plus_one_breaks_an_anchor(name):
    cal = replace(Calibration(), **{name: getattr(Calibration(), name) + 1})
    assert mismatches(cal)


def test_unsearched_constants_do_not_move_anchors():
    hidden = {f.name for f in fields(Calibration)} - set(SEARCH) - {'flash_data', 'mmio_data',
                                                                    'budget_wb_words'}
    for name in hidden:
        cal = replace(Calibration(), **{name: getattr(Calibration(), name) + 1})
        assert not mismatches(cal), name
