"""Acceptance gate: runs every criterion and prints one PASS/FAIL line each.

The criteria live in mechaudit.acceptance so that `mechaudit verify`
exercises exactly the same checks.
"""

import pytest

from mechaudit import acceptance


@pytest.mark.parametrize("criterion", acceptance.CRITERIA,
                         ids=[fn.__name__ for fn in acceptance.CRITERIA])
def test_acceptance_criterion(criterion):
    result = criterion()
    status = "PASS" if result.passed else "FAIL"
    print(f"\n{status} criterion {result.name}: {result.detail}")
    assert result.passed, f"criterion {result.name}: {result.detail}"
