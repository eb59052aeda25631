"""Acceptance gate: every exit criterion at its pinned tolerance.

Each test prints the criterion's pass/fail line. The underlying grids are
heavy (hundreds of million-slot episodes) and shared across criteria within
the process; the full module takes a few minutes on one core.
"""

from aoilab import acceptance


def _check(result):
    print(result.line, flush=True)
    assert result.passed, result.detail


def test_criterion_01_table1():
    _check(acceptance.criterion_1_table1())


def test_criterion_02_srp_closed_form():
    _check(acceptance.criterion_2_srp_closed_form())


def test_criterion_03_nsrp_closed_form():
    _check(acceptance.criterion_3_nsrp_closed_form())


def test_criterion_04_lower_bound_dominance():
    _check(acceptance.criterion_4_lower_bound_dominance())


def test_criterion_05_srp_sandwich():
    _check(acceptance.criterion_5_srp_sandwich())


def test_criterion_06_no_switching_wins_symmetric():
    _check(acceptance.criterion_6_no_switching_wins_symmetric())


def test_criterion_07_mw_dominance():
    _check(acceptance.criterion_7_mw_dominance())


def test_criterion_08_mw_vs_mwl1():
    _check(acceptance.criterion_8_mw_vs_mwl1())


def test_criterion_09_mw_throughput():
    _check(acceptance.criterion_9_mw_throughput())


def test_criterion_10_index_ordering():
    _check(acceptance.criterion_10_index_ordering())


def test_criterion_11_cycle_reconstruction():
    _check(acceptance.criterion_11_cycle_reconstruction())


def test_criterion_12_optimizer_vs_grid():
    _check(acceptance.criterion_12_optimizer_vs_grid())
