import numpy as np
import pytest

from pyrodiff import CheckResult, ReportBundle
from pyrodiff.reports import fmt


def test_fmt_is_deterministic_and_plain():
    assert fmt(True) == "true" and fmt(False) == "false"
    assert fmt(0.1) == "0.1"
    assert fmt(np.float64(0.1)) == "0.1"  # no numpy wrapper in the repr
    assert fmt(3) == "3"
    assert fmt("x") == "x"
    assert fmt(1e-300) == "1e-300"


def test_check_result_verdicts():
    assert CheckResult("id", "d", 1.0, 2.0).passed
    assert not CheckResult("id", "d", 3.0, 2.0).passed
    assert CheckResult("id", "d", 3.0, 2.0, comparison=">=").passed
    assert not CheckResult("id", "d", 1.0, 2.0, comparison=">=").passed
    # explicit verdicts override the comparison
    assert not CheckResult("id", "d", 1.0, 2.0, passed=False).passed
    with pytest.raises(ValueError):
        CheckResult("id", "d", 1.0, 2.0, comparison="<")
    line = CheckResult("my-check", "says things", 1.0, 2.0).line()
    assert "[PASS]" in line and "my-check" in line


def test_bundle_summary_and_verdict():
    b = ReportBundle(title="demo")
    b.add(CheckResult("a", "first", 1.0, 2.0))
    assert b.passed
    b.add(CheckResult("b", "second", 3.0, 2.0))
    assert not b.passed
    s = b.summary()
    assert s.startswith("== demo ==")
    assert "CHECK FAILURES PRESENT" in s and "(1/2)" in s


def test_bundle_write_artifacts(tmp_path):
    b = ReportBundle(title="demo")
    b.add(CheckResult("a", "value, with comma", 0.25, 1.0))
    b.add_table("stats", ("t", "value"), [(0.0, 1.0), (0.5, np.float64(2.0))])
    out1 = tmp_path / "one"
    out2 = tmp_path / "two"
    b.write(str(out1))
    b.write(str(out2))

    checks = (out1 / "checks.csv").read_text()
    header, row = checks.splitlines()
    assert header == "check_id,description,value,threshold,comparison,passed"
    assert row == "a,value; with comma,0.25,1.0,<=,true"
    assert (out1 / "stats.csv").read_text() == "t,value\n0.0,1.0\n0.5,2.0\n"
    assert "ALL CHECKS PASSED" in (out1 / "summary.txt").read_text()

    # identical bundles serialize byte-identically
    for name in ("checks.csv", "summary.txt", "stats.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
