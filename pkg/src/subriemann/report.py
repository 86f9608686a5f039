"""Check results and machine-readable reports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

PASS, FAIL, SKIP = "pass", "fail", "skip"


@dataclass
class Check:
    name: str
    status: str
    deviation: float | None = None
    location: tuple[float, ...] | None = None
    note: str = ""

    @classmethod
    def from_deviation(cls, name, deviation, tol, location=None, note=""):
        return cls(name, PASS if deviation <= tol else FAIL, float(deviation), location, note)

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    def as_dict(self) -> dict[str, Any]:
        d = {"name": self.name, "status": self.status}
        if self.deviation is not None:
            d["deviation"] = _num(self.deviation)
        if self.location is not None:
            d["location"] = [_num(c) for c in self.location]
        if self.note:
            d["note"] = self.note
        return d


@dataclass
class Report:
    command: str
    manifold: str
    checks: list[Check] = field(default_factory=list)
    payload: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, checks):
        self.checks.extend(checks)

    def as_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "manifold": self.manifold,
            "status": "pass" if self.passed else "fail",
            "checks": [c.as_dict() for c in self.checks],
            "payload": self.payload,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2)

    def to_text(self) -> str:
        lines = [f"{self.command}: {self.manifold}"]
        for key, value in self.payload.items():
            lines.extend(_text_payload(key, value))
        for c in self.checks:
            dev = "" if c.deviation is None else f"  (worst {c.deviation:.3e})"
            note = f"  {c.note}" if c.note else ""
            lines.append(f"[{c.status.upper():4}] {c.name}{dev}{note}")
        lines.append("result: " + ("pass" if self.passed else "FAIL"))
        return "\n".join(lines)


def _num(x: float) -> float:
    # normalise -0.0 and float noise for stable output
    x = float(x)
    return 0.0 if x == 0 else float(f"{x:.15g}")


def _text_payload(key, value, indent=""):
    if isinstance(value, dict) and value and all(isinstance(v, (int, float)) for v in value.values()):
        return [f"{indent}{key}: " + ", ".join(f"{k}={v:.3g}" for k, v in value.items())]
    if isinstance(value, dict):
        out = [f"{indent}{key}:"]
        for k, v in value.items():
            out.extend(_text_payload(k, v, indent + "  "))
        return out
    return [f"{indent}{key}: {value}"]
