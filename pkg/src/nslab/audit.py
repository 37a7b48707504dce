"""Audit report container shared by every module."""
from __future__ import annotations

from dataclasses import dataclass, field

PASS, WARN, FAIL, UNMET, INFO = "pass", "warn", "fail", "precondition_unmet", "info"


@dataclass
class Check:
    name: str
    value: float
    threshold: float | None = None
    status: str = PASS
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status in (PASS, INFO)

    def to_dict(self) -> dict:
        d = {"name": self.name, "value": self.value, "status": self.status}
        if self.threshold is not None:
            d["threshold"] = self.threshold
        if self.note:
            d["note"] = self.note
        return d


@dataclass
class AuditReport:
    """Named list of checks plus free-form measured quantities.

    A check compares a value to a threshold and contributes to the overall
    status; ``measured`` values are reported only.
    """

    name: str
    checks: list = field(default_factory=list)
    measured: dict = field(default_factory=dict)
    sections: list = field(default_factory=list)
    forced_status: str | None = None

    def check(self, name, value, threshold=None, passed=None, status=None, note=""):
        """Record a check; ``value <= threshold`` decides it unless ``passed``/``status`` is given."""
        value = float(value)
        if status is None:
            if passed is None:
                passed = threshold is None or value <= threshold
            status = PASS if passed else FAIL
        c = Check(name, value, None if threshold is None else float(threshold), status, note)
        self.checks.append(c)
        return c

    def measure(self, name, value):
        self.measured[name] = value
        return value

    def add_section(self, report: "AuditReport"):
        self.sections.append(report)
        return report

    @property
    def status(self) -> str:
        if self.forced_status is not None:
            return self.forced_status
        own = {c.status for c in self.checks}
        nested = {WARN if s.status == UNMET else s.status for s in self.sections}
        found = own | nested
        if FAIL in found:
            return FAIL
        if WARN in found:
            return WARN
        if UNMET in found:
            return UNMET
        return PASS

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def get(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "checks": [c.to_dict() for c in self.checks],
            "measured": dict(self.measured),
            "sections": [s.to_dict() for s in self.sections],
        }
