"""The DMO's single price-quantity bid to the wholesale market.

Aggregation is a merit-order stack of every customer segment; line limits
are not embedded, so the curve matches network clearing only when no line
binds.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .errors import InvalidCase
from .model import MarketCase, validate_case


@dataclass(frozen=True)
class AggregatedBid:
    hour: int
    breakpoints: tuple[tuple[float, float], ...]  # (benefit $/MWh, cumulative MW)
    base: float  # price-inelastic fixed load, MW

    @property
    def elastic_quantity(self) -> float:
        return self.breakpoints[-1][1] if self.breakpoints else 0.0

    def segments(self) -> list[tuple[float, float]]:
        """(benefit, width) pairs of the stacked curve."""
        out, prev = [], 0.0
        for price, cum in self.breakpoints:
            out.append((price, cum - prev))
            prev = cum
        return out

    def benefit(self, quantity: float) -> float:
        """Total benefit of serving ``quantity`` MW of elastic load in merit order."""
        total, left = 0.0, quantity
        for price, width in self.segments():
            take = min(max(left, 0.0), width)
            total += price * take
            left -= take
        return total


def aggregate(case: MarketCase, hour: int) -> AggregatedBid:
    violations = validate_case(case)
    if violations:
        raise InvalidCase(violations)
    by_price: dict[float, float] = defaultdict(float)
    base = 0.0
    for bus in case.network.sorted_buses():
        base += bus.fixed_at(hour)
        curve = bus.bid_at(hour)
        if curve is None:
            continue
        for seg in curve.segments:
            if seg.max_quantity > 0:
                by_price[seg.benefit] += seg.max_quantity
    points, cum = [], 0.0
    for price in sorted(by_price, reverse=True):
        cum += by_price[price]
        points.append((price, cum))
    return AggregatedBid(hour, tuple(points), base)


def aggregate_horizon(case: MarketCase) -> list[AggregatedBid]:
    return [aggregate(case, t) for t in range(case.horizon)]
