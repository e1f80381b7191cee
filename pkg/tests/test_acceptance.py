"""The eleven acceptance criteria at their stated tolerances.

Each test prints one ``[PASS]``/``[FAIL]`` line; the lines are repeated in the
terminal summary.  Criterion 9 inspects the descent traces recorded by
criteria 4, 5, 6 and 10, so the criteria run in order within one session.
"""

import json

import pytest

from fracdegiorgi import suite

ORDER = sorted(suite.CRITERIA)


@pytest.fixture(scope="module")
def results():
    suite.TRACES.clear()
    return {}


@pytest.mark.parametrize("cid", ORDER)
def test_criterion(cid, results, acceptance_lines):
    res = suite.CRITERIA[cid]()
    results[cid] = res
    acceptance_lines.append(res.line())
    print(res.line())
    assert res.passed, json.dumps(suite.CheckResult.to_dict(res), default=str)[:4000]
