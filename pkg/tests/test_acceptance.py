"""One test per acceptance criterion.

Each prints a PASS/FAIL line with its measured values; the lines are repeated in the
terminal summary so they show up without ``-s``.
"""

import pytest

from skelquant import validation


@pytest.mark.parametrize(
    "number",
    [num for num, *_ in validation.CRITERIA],
    ids=[name.replace(" ", "_") for _, name, *_ in validation.CRITERIA],
)
def test_criterion(number, acceptance_log):
    result = validation.run_criterion(number)
    print(result.line())
    acceptance_log.append(result.line())
    assert result.passed, result.line()
