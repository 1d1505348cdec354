"""Acceptance gate: every criterion of the built-in verify suite must pass
at its stated tolerance.  One pass/fail line is printed per criterion."""

import pytest

from entroflow.verify import CRITERIA, run_criterion


@pytest.mark.parametrize("name", sorted(CRITERIA))
def test_criterion(name):
    result = run_criterion(name)
    print(result.line())
    assert result.passed, result.details
