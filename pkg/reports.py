# reports.py
"""Pass/fail property reports shared by the hypothesis audit and the verification suites."""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

PASS = "pass"
FAIL = "fail"
SKIPPED = "skipped"


@dataclass
class PropertyCheck:
    name: str
    status: str
    margin: Optional[float] = None  # worst-case margin; negative means violated
    samples: int = 0
    note: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'status': self.status,
            'margin': None if self.margin is None else float(self.margin),
            'samples': int(self.samples),
            'note': self.note,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PropertyCheck':
        return cls(name=data['name'], status=data['status'], margin=data.get('margin'),
                   samples=data.get('samples', 0), note=data.get('note', ''))


@dataclass
class PropertyReport:
    suite: str
    checks: List[PropertyCheck] = field(default_factory=list)
    meta: Dict[str, Any] = field(default_factory=dict)

    def add(self, name: str, ok: Optional[bool], margin: Optional[float] = None,
            samples: int = 0, note: str = "") -> PropertyCheck:
        """Appends a check; ``ok=None`` records it as skipped."""
        if ok is None:
            status = SKIPPED
        else:
            status = PASS if ok else FAIL
        check = PropertyCheck(name, status, margin, samples, note)
        self.checks.append(check)
        return check

    def skip(self, name: str, note: str = "") -> PropertyCheck:
        return self.add(name, None, note=note)

    def status_of(self, name: str) -> str:
        for check in self.checks:
            if check.name == name:
                return check.status
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        return all(c.status != FAIL for c in self.checks)

    @property
    def failures(self) -> List[str]:
        return [c.name for c in self.checks if c.status == FAIL]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'suite': self.suite,
            'passed': self.passed,
            'checks': [c.to_dict() for c in self.checks],
            'meta': plain(self.meta),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PropertyReport':
        return cls(suite=data['suite'],
                   checks=[PropertyCheck.from_dict(c) for c in data.get('checks', [])],
                   meta=dict(data.get('meta', {})))


class HypothesisReport(PropertyReport):
    """Outcome of auditing a Nonlinearity/Potential pair against the standing hypotheses."""


def plain(obj: Any) -> Any:
    """Recursively converts numpy scalars/arrays and tuples into YAML-safe builtins."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj
