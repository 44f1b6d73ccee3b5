"""Sampling-based certificates shared by the probes."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

PASS = "PASS"
FAIL = "FAIL"


def to_jsonable(obj: Any) -> Any:
    """Recursively convert numpy containers/scalars to plain Python."""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return "nan" if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    return obj


@dataclass
class Certificate:
    """Outcome of checking an inequality over a finite set of samples.

    A PASS only means that no violation was found among ``samples_checked``
    samples. ``worst_margin`` is the smallest value of (allowed side minus
    checked side); it is negative for a violation. On FAIL, ``witness``
    holds the inputs realising the worst margin.
    """

    verdict: str
    samples_checked: int
    worst_margin: float
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in (PASS, FAIL):
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.verdict == FAIL and self.witness is None:
            raise ValueError("a failing certificate needs a witness")

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "samples_checked": int(self.samples_checked),
            "worst_margin": float(self.worst_margin),
            "witness": to_jsonable(self.witness),
            "details": to_jsonable(self.details),
        }


def from_margins(margins, slack, witnesses, details=None) -> Certificate:
    """Build a certificate from an array of margins (PASS iff all >= -slack).

    ``witnesses`` is a callable mapping the index of the worst sample to the
    witness dict, so witnesses are only materialised when needed.
    """
    margins = np.asarray(margins, dtype=float)
    if margins.size == 0:
        return Certificate(PASS, 0, float("inf"), None, dict(details or {}))
    k = int(np.argmin(margins))
    worst = float(margins[k])
    if worst >= -slack:
        return Certificate(PASS, margins.size, worst, None, dict(details or {}))
    return Certificate(FAIL, margins.size, worst, witnesses(k), dict(details or {}))
