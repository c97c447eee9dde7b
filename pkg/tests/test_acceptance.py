"""Full acceptance suite at the stated tolerances; prints one status line per criterion.

The lines are repeated in an "acceptance criteria" section at the end of the pytest
report; ``pytest -s`` also shows them live.
"""

import pytest

from ehm import acceptance


@pytest.mark.acceptance
@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number, record_property, acceptance_log):
    res = acceptance.run([number])[0]
    line = f"{res.line()} ({res.seconds:.1f}s)"
    print("\n" + line)
    acceptance_log.append(line)
    record_property("status", res.status)
    record_property("detail", repr(res.detail))
    # INDETERMINATE is a qualitative outcome and does not fail the run
    assert res.status in (acceptance.PASS, acceptance.INDETERMINATE), res.detail
