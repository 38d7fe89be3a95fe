"""Named run settings on the embedded 13-bus case.

These are the documented settings behind README's experiment table and the
acceptance suite; scripts/run_cases.py runs all of them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .caseio import embedded_case
from .model import ClearingMode, MarketCase


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    mode: ClearingMode = ClearingMode.CONSTANT
    ignore_limits: bool = False
    scale_power: float = 1.0
    capacity: dict[int, Optional[float]] = field(default_factory=dict)  # line id -> MW

    def apply(self, case: MarketCase) -> MarketCase:
        case = case.with_mode(self.mode)
        if self.ignore_limits:
            case = case.without_line_limits()
        if self.capacity:
            case = case.with_line_capacity(self.capacity)
        if self.scale_power != 1.0:
            case = case.scale_assigned_power(self.scale_power)
        return case

    def case(self) -> MarketCase:
        return self.apply(embedded_case())


VARIABLE = Scenario(
    "variable",
    "grid power bought at the T-LMP; midday hours are uncongested, night hours congest 5-6 and 4-9",
    mode=ClearingMode.VARIABLE,
)
VARIABLE_TIGHT = Scenario(
    "variable-tight",
    "variable mode with line 4-9 cut to 2.0 MW and line 8-7 to 0.8 MW, so congestion reaches the daytime hours",
    mode=ClearingMode.VARIABLE,
    capacity={9: 2.0, 7: 0.8},
)
UNCONSTRAINED = Scenario(
    "no-limits",
    "assigned power with every line limit removed; one price per hour across the feeder",
    ignore_limits=True,
)
CONSTANT = Scenario(
    "constant",
    "assigned power at the ISO award; lines 5-6 and 4-9 bind in the night hours",
)
CONSTANT_PLUS10 = Scenario(
    "constant+10%",
    "assigned power raised 10%; prices fall below the T-LMP and the surplus turns negative",
    scale_power=1.1,
)

ALL = (VARIABLE, VARIABLE_TIGHT, UNCONSTRAINED, CONSTANT, CONSTANT_PLUS10)

# hours of CONSTANT where lines 5-6 (id 6) and 4-9 (id 9) both bind
CONGESTED_LINES = (6, 9)
CONGESTION_HOURS = (0, 1, 2, 3, 4, 5, 6, 22, 23)

SWEEP_HOUR = 12
SWEEP_GRID = tuple(1.0 + 0.5 * i for i in range(19))  # 1..10 MW
