"""Suite runner and per-test summary rows."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from ..errors import PreconditionError
from . import nist
from .nist import TestResult

ORDER = list(nist.TESTS)


@dataclass
class RandReport:
    results: list = field(default_factory=list)
    skipped: list = field(default_factory=list)  # (stream, test, reason)

    @property
    def total(self) -> int:
        return len(self.results)

    @property
    def passed(self) -> int:
        return sum(r.passed for r in self.results)

    @property
    def pass_rate(self) -> float:
        return self.passed / self.total if self.total else 0.0

    @property
    def mean_p(self) -> float:
        return sum(r.p_value for r in self.results) / self.total if self.total else 0.0

    def rows(self):
        """One row per test: name, total, average p, pass, fail, pass %."""
        out = []
        for name in ORDER:
            rs = [r for r in self.results if r.test_name == name]
            if not rs:
                continue
            ok = sum(r.passed for r in rs)
            out.append({
                "name": nist.TITLES[name],
                "test": name,
                "total": len(rs),
                "average_p": sum(r.p_value for r in rs) / len(rs),
                "pass": ok,
                "fail": len(rs) - ok,
                "pass_pct": 100.0 * ok / len(rs),
            })
        return out

    def to_json(self) -> str:
        doc = {
            "summary": {
                "total": self.total,
                "passed": self.passed,
                "failed": self.total - self.passed,
                "pass_rate": self.pass_rate,
                "mean_p": self.mean_p,
            },
            "rows": self.rows(),
            "results": [r.to_json() for r in self.results],
            "skipped": [list(s) for s in self.skipped],
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RandReport":
        doc = json.loads(text)
        return cls([TestResult.from_json(r) for r in doc["results"]], [tuple(s) for s in doc["skipped"]])

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["name", "total", "average_p", "pass", "fail", "pass_pct"]
        w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            w.writerow(row)
        w.writerow({"name": "Total", "total": self.total, "average_p": self.mean_p, "pass": self.passed,
                    "fail": self.total - self.passed, "pass_pct": 100.0 * self.pass_rate})
        return buf.getvalue()


def run_suite(streams, config: dict | None = None, tests=None, enforce_minimum: bool = True) -> RandReport:
    """Run the tests on every stream.

    ``config`` maps a test name to its keyword parameters; unspecified tests
    use ``nist.default_params`` for the stream length. Streams too short for
    a test are recorded as skipped.
    """
    streams = list(streams)
    if not streams:
        raise PreconditionError("need at least one stream")
    config = config or {}
    names = list(tests or ORDER)
    report = RandReport()
    for i, s in enumerate(streams):
        bits = nist.as_bits(s)
        for name in names:
            params = config.get(name, nist.default_params(name, len(bits)))
            try:
                r = nist.run_test(name, bits, params, enforce_minimum=enforce_minimum)
            except PreconditionError as exc:
                report.skipped.append((i, name, str(exc)))
                continue
            r.stream = i
            report.results.append(r)
    return report
