"""Acceptance gate: every top-level certification criterion must pass.

One test per criterion; each prints the criterion's one-line verdict
(visible under ``pytest -s`` or on failure) and asserts it passed, with
the per-check detail lines attached to the assertion message.
"""

import pytest

from pyrodiff.acceptance import ALL_CRITERIA

_results = {}


def _run(idx):
    # criteria are independent but the two long runs are cached inside the
    # acceptance module, so evaluation order does not matter
    if idx not in _results:
        _results[idx] = ALL_CRITERIA[idx](tol_scale=1.0)
    return _results[idx]


@pytest.mark.parametrize(
    "idx",
    range(len(ALL_CRITERIA)),
    ids=[fn.__name__.removeprefix("criterion_") for fn in ALL_CRITERIA],
)
def test_criterion(idx):
    res = _run(idx)
    print(res.line())
    assert res.passed, "\n".join([res.line(), *res.detail_lines()])


def test_all_twelve_present():
    assert len(ALL_CRITERIA) == 12
    assert [_run(i).index for i in range(12)] == list(range(1, 13))
