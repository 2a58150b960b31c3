"""Exception hierarchy shared by every flowrack module."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from flowrack.optimizer import ShortfallReport


class FlowRackError(Exception):
    """Base class for all flowrack errors."""


class DimensionMismatch(FlowRackError, ValueError):
    """A matrix or vector does not match the rack dimensions."""


class NonContiguousBin(FlowRackError, ValueError):
    """A bin has an empty slot in front of an occupied one."""


class NotEnabled(FlowRackError):
    """A transition was fired in a marking where it is not enabled."""


class LengthMismatch(FlowRackError, ValueError):
    """Request vectors of different lengths were combined."""


class ScenarioError(FlowRackError, ValueError):
    """A scenario or input file is malformed."""


class Infeasible(FlowRackError):
    """The rack does not hold enough stock to satisfy a request."""

    def __init__(self, shortfall: ShortfallReport):
        self.shortfall = shortfall
        lines = ", ".join(
            f"type {t}: requested {req}, available {avail}"
            for t, req, avail in shortfall.entries
        )
        super().__init__(f"request exceeds rack stock ({lines})")


class BudgetExceeded(FlowRackError):
    """The brute-force search space is larger than the allowed budget."""

    def __init__(self, size: int, budget: int):
        self.size = size
        self.budget = budget
        super().__init__(f"{size} cut-depth vectors exceed the budget of {budget}")
