"""Uniform pass/fail bookkeeping and CSV artifact output.

Every diagnostic in the package reduces to ``CheckResult`` rows: a stable
check id, the measured value, the threshold it is compared against, and
the direction of the comparison.  Bundles render a plain-text summary (one
line per check) and deterministic CSV artifacts; no timestamps or timing
data enter the files, so identical configurations and seeds produce
byte-identical output.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

__all__ = ["CheckResult", "ReportBundle", "fmt"]


def fmt(x) -> str:
    """Deterministic shortest-roundtrip formatting for CSV cells."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(float(x))  # collapse numpy scalars to plain floats
    return str(x)


@dataclass(frozen=True)
class CheckResult:
    """One verified statement: measured value against a threshold."""

    check_id: str  # stable anchor naming the statement under test
    description: str
    value: float
    threshold: float
    comparison: str = "<="  # "<=" or ">="
    passed: bool | None = None

    def __post_init__(self):
        if self.comparison not in ("<=", ">="):
            raise ValueError(f"bad comparison {self.comparison!r}")
        if self.passed is None:
            ok = (
                self.value <= self.threshold
                if self.comparison == "<="
                else self.value >= self.threshold
            )
            object.__setattr__(self, "passed", bool(ok))

    def line(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        return (
            f"[{state}] {self.check_id}: {self.description} "
            f"(value = {self.value:.6g}, required {self.comparison} "
            f"{self.threshold:.6g})"
        )


@dataclass
class ReportBundle:
    """Checks plus named CSV tables destined for the report directory."""

    title: str
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)  # name -> (header, rows)

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        return check

    def add_table(self, name: str, header, rows) -> None:
        self.tables[name] = (list(header), [list(r) for r in rows])

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> str:
        lines = [f"== {self.title} =="]
        lines += [c.line() for c in self.checks]
        verdict = "ALL CHECKS PASSED" if self.passed else "CHECK FAILURES PRESENT"
        lines.append(f"== {verdict} ({sum(c.passed for c in self.checks)}"
                     f"/{len(self.checks)}) ==")
        return "\n".join(lines)

    def write(self, out_dir: str) -> None:
        """Write summary.txt, checks.csv and all tables under ``out_dir``."""
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
            fh.write(self.summary() + "\n")
        with open(os.path.join(out_dir, "checks.csv"), "w") as fh:
            fh.write("check_id,description,value,threshold,comparison,passed\n")
            for c in self.checks:
                desc = c.description.replace(",", ";")
                fh.write(
                    f"{c.check_id},{desc},{fmt(c.value)},{fmt(c.threshold)},"
                    f"{c.comparison},{fmt(c.passed)}\n"
                )
        for name, (header, rows) in self.tables.items():
            with open(os.path.join(out_dir, f"{name}.csv"), "w") as fh:
                fh.write(",".join(header) + "\n")
                for row in rows:
                    fh.write(",".join(fmt(x) for x in row) + "\n")
