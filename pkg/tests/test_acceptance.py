"""End-to-end acceptance criteria 1-11, one line per criterion.

Each criterion prints ``[PASS]`` or ``[FAIL]`` with its key numbers
directly to the terminal, then asserts. Select with ``-m acceptance``
or skip with ``-m "not acceptance"``.
"""
import pytest

from multiwalk.acceptance import CRITERIA

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    result = CRITERIA[number]()
    with capsys.disabled():
        print("\n" + result.line(), flush=True)
    assert result.passed, result.summary
