"""Certificate reports: ordered named checks with machine-readable payloads.

A check is either machine-verified (pass/fail) or an analytic fact the
pipeline relies on but does not re-prove (status "trusted").  The overall
verdict is pass iff every non-trusted check passes.  JSON output is
schema-versioned and byte-stable for fixed inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

SCHEMA_VERSION = 1

PASS = "pass"
FAIL = "fail"
TRUSTED = "trusted"


@dataclass
class CheckResult:
    name: str
    status: str
    metrics: dict = field(default_factory=dict)
    note: str = ""

    def __post_init__(self) -> None:
        if self.status not in (PASS, FAIL, TRUSTED):
            raise ValueError(f"unknown status {self.status!r}")

    def to_jsonable(self):
        return {
            "name": self.name,
            "status": self.status,
            "metrics": self.metrics,
            "note": self.note,
        }


@dataclass
class CertificateReport:
    scenario: str
    config: dict
    checks: list[CheckResult] = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)

    def add(self, name: str, ok: bool, metrics: Optional[dict] = None, note: str = "") -> CheckResult:
        if any(c.name == name for c in self.checks):
            raise ValueError(f"duplicate check name {name!r}")
        c = CheckResult(name, PASS if ok else FAIL, metrics or {}, note)
        self.checks.append(c)
        return c

    def add_trusted(self, name: str, note: str, metrics: Optional[dict] = None) -> CheckResult:
        if any(c.name == name for c in self.checks):
            raise ValueError(f"duplicate check name {name!r}")
        c = CheckResult(name, TRUSTED, metrics or {}, note)
        self.checks.append(c)
        return c

    @property
    def overall_pass(self) -> bool:
        return all(c.status != FAIL for c in self.checks)

    def to_jsonable(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario,
            "config": self.config,
            "overall": PASS if self.overall_pass else FAIL,
            "checks": [c.to_jsonable() for c in self.checks],
            "artifacts": self.artifacts,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_jsonable(), sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        lines = [
            f"scenario: {self.scenario}",
            f"overall:  {'PASS' if self.overall_pass else 'FAIL'}",
            "",
        ]
        width = max((len(c.name) for c in self.checks), default=4)
        for c in self.checks:
            lines.append(f"  {c.name.ljust(width)}  {c.status.upper():8s}  {c.note}".rstrip())
        return "\n".join(lines) + "\n"


def emit_report(rep: CertificateReport, path: str, fmt: str = "json") -> None:
    """Write the report; JSON output is byte-identical for identical inputs."""
    if fmt not in ("json", "text"):
        raise ValueError(f"unknown format {fmt!r}")
    payload = rep.to_json() if fmt == "json" else rep.to_text()
    with open(path, "w") as fh:
        fh.write(payload)
