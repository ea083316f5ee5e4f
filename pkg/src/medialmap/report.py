"""Pass/fail records shared by the checks and the verify command."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field


@dataclass(slots=True)
class CheckReport:
    """One verified inequality: ``measured <= bound`` passes, or
    ``measured >= bound`` with ``at_least``.

    ``slack`` is the signed margin, so a negative slack is a failure margin.
    """
    name: str
    measured: float
    bound: float
    passed: bool | None = None
    details: dict = field(default_factory=dict)
    at_least: bool = False

    def __post_init__(self) -> None:
        if self.passed is None:
            ok = self.measured >= self.bound if self.at_least else self.measured <= self.bound
            self.passed = bool(ok)

    @property
    def slack(self) -> float:
        return self.measured - self.bound if self.at_least else self.bound - self.measured

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: measured={self.measured:.6g} bound={self.bound:.6g} slack={self.slack:.3g}"

    def to_json(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v
        out = {k: clean(v) for k, v in asdict(self).items() if k not in ("details", "at_least")}
        out["relation"] = ">=" if self.at_least else "<="
        out["slack"] = clean(self.slack)
        if self.details:
            out["details"] = {k: clean(_plain(v)) for k, v in self.details.items()}
        return out


def _plain(v):
    # numpy scalars to builtins so the report serializes.
    return v.item() if hasattr(v, "item") else v


def all_passed(reports: list[CheckReport]) -> bool:
    return all(r.passed for r in reports)
