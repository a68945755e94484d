"""Acceptance suite: one check per criterion, one PASS/FAIL line each.

The lines are repeated in the terminal summary under "acceptance criteria".
"""

import pytest

from catsim import acceptance as ac


@pytest.mark.parametrize("check", ac.CHECKS, ids=lambda c: c.__name__.removeprefix("check_"))
def test_criterion(check, record_property):
    res = check()
    record_property("acceptance", res.line())
    print(res.line())
    assert res.passed, res.line()
