"""Verification reports: per-identity results and the scenario-level report."""

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List

logger = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"
ERROR = "error"

REPORT_VERSION = 1


@dataclass
class Failure:
    """A failed identity together with the data that exhibits the failure."""

    identity: str
    witness: Dict[str, Any]

    def to_dict(self) -> dict:
        return {"identity": self.identity, "witness": self.witness}


@dataclass
class VerificationReport:
    """Outcome of one verification routine over a family of identities."""

    subject: str
    checked: int = 0
    failures: List[Failure] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def record(self, identity: str, ok: bool, **witness) -> bool:
        self.checked += 1
        if not ok:
            self.failures.append(Failure(identity, {k: _jsonable(v) for k, v in witness.items()}))
            logger.debug(f"{self.subject}: {identity} failed with {witness}")
        return ok

    def merge(self, other: "VerificationReport", prefix: str = "") -> "VerificationReport":
        self.checked += other.checked
        for failure in other.failures:
            self.failures.append(Failure(f"{prefix}{failure.identity}", failure.witness))
        return self

    def failed_identities(self) -> List[str]:
        return sorted({f.identity for f in self.failures})

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "checked": self.checked,
            "passed": self.passed,
            "failures": [f.to_dict() for f in self.failures],
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }


def _jsonable(value):
    if isinstance(value, (str, int, bool)) or value is None:
        return value
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    render = getattr(value, "render", None)
    if callable(render):
        return render()
    return str(value)


@dataclass
class CheckResult:
    name: str
    kind: str
    verdict: str
    witnesses: List[Dict[str, Any]] = field(default_factory=list)
    message: str = ""
    details: Dict[str, Any] = field(default_factory=dict)
    elapsed: float = 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "verdict": self.verdict,
            "witnesses": self.witnesses,
            "message": self.message,
            "details": self.details,
            "timing": {"seconds": round(self.elapsed, 6)},
        }


@dataclass
class Report:
    scenario: str
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 0 if all(c.verdict == PASS for c in self.checks) else 1

    @property
    def summary(self) -> Dict[str, int]:
        counts = {PASS: 0, FAIL: 0, ERROR: 0}
        for c in self.checks:
            counts[c.verdict] += 1
        return counts

    def to_dict(self) -> dict:
        return {
            "version": REPORT_VERSION,
            "scenario": self.scenario,
            "summary": self.summary,
            "checks": [c.to_dict() for c in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False)

    def render_text(self) -> str:
        lines = ["", "======= REPORT =======", f"Scenario: {self.scenario}"]
        for c in self.checks:
            lines.append(f"[{c.verdict.upper():5}] {c.name} ({c.kind}) {c.elapsed:.2f}s")
            if c.message:
                lines.append(f"        {c.message}")
            for witness in c.witnesses[:5]:
                lines.append(f"        witness: {json.dumps(witness, sort_keys=True, ensure_ascii=False)}")
            if len(c.witnesses) > 5:
                lines.append(f"        ... and {len(c.witnesses) - 5} more witnesses")
        s = self.summary
        lines.append(f"Passed: {s[PASS]}  Failed: {s[FAIL]}  Errors: {s[ERROR]}")
        return "\n".join(lines)


REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "scenario", "summary", "checks"],
    "properties": {
        "version": {"const": REPORT_VERSION},
        "scenario": {"type": "string"},
        "summary": {
            "type": "object",
            "additionalProperties": False,
            "required": [PASS, FAIL, ERROR],
            "properties": {k: {"type": "integer", "minimum": 0} for k in (PASS, FAIL, ERROR)},
        },
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name", "kind", "verdict", "witnesses", "message", "details", "timing"],
                "properties": {
                    "name": {"type": "string"},
                    "kind": {"type": "string"},
                    "verdict": {"enum": [PASS, FAIL, ERROR]},
                    "witnesses": {"type": "array", "items": {"type": "object"}},
                    "message": {"type": "string"},
                    "details": {"type": "object"},
                    "timing": {
                        "type": "object",
                        "required": ["seconds"],
                        "properties": {"seconds": {"type": "number", "minimum": 0}},
                    },
                },
                "if": {"properties": {"verdict": {"const": FAIL}}},
                "then": {"properties": {"witnesses": {"minItems": 1}}},
            },
        },
    },
}
