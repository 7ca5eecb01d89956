"""Acceptance criteria, one test each, at the stated tolerances.

Every test prints its ``[PASS]``/``[FAIL]`` line with the measured value, so
``pytest tests/test_acceptance.py -v`` doubles as the verification report.
"""

import pytest

from zfkwave.verify import CRITERIA, Context, run_check


@pytest.fixture(scope="module")
def ctx():
    return Context()


@pytest.mark.parametrize("number", [c[0] for c in CRITERIA], ids=[f"{c[0]:02d}-{c[1].replace(' ', '-')}" for c in CRITERIA])
def test_criterion(number, ctx, capsys):
    result = run_check(number, ctx)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()
