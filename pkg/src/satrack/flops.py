"""Arithmetic-cost bookkeeping for complexity checks.

Counters are incremented by the algorithms themselves with explicit operation
counts derived from array sizes (a multiply-add pair counts as two). They
exist to verify scaling claims, not to model hardware.
"""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = ["FlopCounter"]


@dataclass
class FlopCounter:
    """Accumulates floating-point operation counts, optionally by phase."""

    total: int = 0
    by_phase: dict[str, int] = field(default_factory=dict)

    def add(self, count: int | float, phase: str | None = None) -> None:
        n = int(count)
        if n < 0:
            raise ValueError(f"flop count must be nonnegative, got {n}")
        self.total += n
        if phase is not None:
            self.by_phase[phase] = self.by_phase.get(phase, 0) + n

    def reset(self) -> None:
        self.total = 0
        self.by_phase.clear()
