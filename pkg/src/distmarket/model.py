"""Market-domain types and structural validation.

Everything here is an immutable value. Constructors coerce sequences to
tuples but do not enforce invariants; ``validate_case`` reports every
violation with its location instead of raising on the first one.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Union

from .errors import UnknownBus


class ClearingMode(str, enum.Enum):
    CONSTANT = "constant"
    VARIABLE = "variable"


@dataclass(frozen=True)
class BidSegment:
    benefit: float  # $/MWh
    max_quantity: float  # MW


@dataclass(frozen=True)
class BidCurve:
    segments: tuple[BidSegment, ...]

    def __post_init__(self):
        segs = tuple(
            s if isinstance(s, BidSegment) else BidSegment(float(s[0]), float(s[1]))
            for s in self.segments
        )
        object.__setattr__(self, "segments", segs)

    @classmethod
    def from_pairs(cls, pairs):
        """Build from ``[(benefit, max_quantity), ...]``."""
        return cls(tuple(BidSegment(float(b), float(q)) for b, q in pairs))

    @property
    def capacity(self) -> float:
        return sum(s.max_quantity for s in self.segments)

    def is_monotone(self) -> bool:
        b = [s.benefit for s in self.segments]
        return all(b[i] >= b[i + 1] for i in range(len(b) - 1))


BidSpec = Union[BidCurve, tuple[BidCurve, ...], None]


@dataclass(frozen=True)
class Bus:
    id: int
    fixed_load: tuple[float, ...] = ()
    bid: BidSpec = None
    is_root: bool = False

    def __post_init__(self):
        object.__setattr__(self, "fixed_load", tuple(float(v) for v in self.fixed_load))
        if isinstance(self.bid, (list, tuple)):
            object.__setattr__(self, "bid", tuple(self.bid))

    @property
    def is_proactive(self) -> bool:
        return self.bid is not None

    @property
    def bid_varies_by_hour(self) -> bool:
        return isinstance(self.bid, tuple)

    def bid_at(self, hour: int) -> Optional[BidCurve]:
        if self.bid is None:
            return None
        if isinstance(self.bid, tuple):
            return self.bid[hour]
        return self.bid

    def fixed_at(self, hour: int) -> float:
        return self.fixed_load[hour] if self.fixed_load else 0.0


@dataclass(frozen=True)
class Line:
    id: int
    from_bus: int
    to_bus: int
    capacity: Optional[float] = None  # None: unlimited

    @property
    def limited(self) -> bool:
        return self.capacity is not None


@dataclass(frozen=True)
class RadialNetwork:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    root: int

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "lines", tuple(self.lines))

    @cached_property
    def _bus_index(self) -> dict[int, Bus]:
        return {b.id: b for b in self.buses}

    @cached_property
    def _line_index(self) -> dict[int, Line]:
        return {ln.id: ln for ln in self.lines}

    @property
    def bus_ids(self) -> list[int]:
        return sorted(self._bus_index)

    @property
    def line_ids(self) -> list[int]:
        return sorted(self._line_index)

    def bus(self, bus_id: int) -> Bus:
        try:
            return self._bus_index[bus_id]
        except KeyError:
            raise UnknownBus(bus_id) from None

    def line(self, line_id: int) -> Line:
        return self._line_index[line_id]

    def sorted_buses(self) -> list[Bus]:
        return [self._bus_index[i] for i in self.bus_ids]

    def sorted_lines(self) -> list[Line]:
        return [self._line_index[i] for i in self.line_ids]

    @cached_property
    def parent_line(self) -> dict[int, Line]:
        """Bus id -> the line entering it (tree networks only)."""
        return {ln.to_bus: ln for ln in self.lines}

    @cached_property
    def children(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {b.id: [] for b in self.buses}
        for ln in sorted(self.lines, key=lambda ln: ln.id):
            out.setdefault(ln.from_bus, []).append(ln.to_bus)
        return out

    def path_to_root(self, bus_id: int) -> list[Line]:
        """Lines from ``bus_id`` up to the root, nearest first."""
        path = []
        cur = bus_id
        while cur != self.root:
            ln = self.parent_line[cur]
            path.append(ln)
            cur = ln.from_bus
        return path

    def subtree(self, bus_id: int) -> list[int]:
        out, stack = [], [bus_id]
        while stack:
            b = stack.pop()
            out.append(b)
            stack.extend(self.children.get(b, []))
        return sorted(out)

    def depths(self) -> dict[int, int]:
        """Breadth-first hop distance from the root over the undirected graph."""
        adj: dict[int, list[int]] = {b.id: [] for b in self.buses}
        for ln in self.lines:
            if ln.from_bus in adj and ln.to_bus in adj:
                adj[ln.from_bus].append(ln.to_bus)
                adj[ln.to_bus].append(ln.from_bus)
        dist = {self.root: 0}
        queue = deque([self.root])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist


@dataclass(frozen=True)
class MarketCase:
    network: RadialNetwork
    horizon: int
    tlmp: tuple[float, ...]
    assigned_power: Optional[tuple[float, ...]] = None
    mode: ClearingMode = ClearingMode.CONSTANT
    comment: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "tlmp", tuple(float(v) for v in self.tlmp))
        if self.assigned_power is not None:
            object.__setattr__(
                self, "assigned_power", tuple(float(v) for v in self.assigned_power)
            )
        object.__setattr__(self, "mode", ClearingMode(self.mode))

    def with_mode(self, mode) -> "MarketCase":
        return dataclasses.replace(self, mode=ClearingMode(mode))

    def with_assigned_power(self, profile: Sequence[float]) -> "MarketCase":
        return dataclasses.replace(self, assigned_power=tuple(profile))

    def with_assigned_at(self, hour: int, value: float) -> "MarketCase":
        prof = list(self.assigned_power or [0.0] * self.horizon)
        prof[hour] = float(value)
        return self.with_assigned_power(prof)

    def scale_assigned_power(self, factor: float) -> "MarketCase":
        return self.with_assigned_power([factor * p for p in self.assigned_power])

    def without_line_limits(self) -> "MarketCase":
        lines = [dataclasses.replace(ln, capacity=None) for ln in self.network.lines]
        return dataclasses.replace(self, network=dataclasses.replace(self.network, lines=lines))

    def with_line_capacity(self, caps: dict[int, Optional[float]]) -> "MarketCase":
        lines = [
            dataclasses.replace(ln, capacity=caps[ln.id]) if ln.id in caps else ln
            for ln in self.network.lines
        ]
        return dataclasses.replace(self, network=dataclasses.replace(self.network, lines=lines))

    def with_fixed_load(self, bus_id: int, hour: int, value: float) -> "MarketCase":
        buses = []
        for b in self.network.buses:
            if b.id == bus_id:
                prof = list(b.fixed_load or [0.0] * self.horizon)
                prof[hour] = float(value)
                b = dataclasses.replace(b, fixed_load=prof)
            buses.append(b)
        return dataclasses.replace(self, network=dataclasses.replace(self.network, buses=buses))


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    location: str = ""

    def __str__(self):
        return f"{self.location}: {self.message}" if self.location else self.message


def _bad_number(v) -> bool:
    return not isinstance(v, (int, float)) or math.isnan(v) or math.isinf(v)


def _check_bid(curve: BidCurve, where: str, out: list[Violation]):
    for g, seg in enumerate(curve.segments):
        loc = f"{where} segment {g}"
        if _bad_number(seg.benefit) or seg.benefit < 0:
            out.append(Violation("bad_benefit", f"benefit must be finite and >= 0, got {seg.benefit}", loc))
        if _bad_number(seg.max_quantity) or seg.max_quantity < 0:
            out.append(Violation("bad_quantity", f"max_quantity must be finite and >= 0, got {seg.max_quantity}", loc))
    if not curve.is_monotone():
        benefits = [s.benefit for s in curve.segments]
        out.append(Violation("non_monotone_bid", f"non-monotone bid: benefits {benefits} must be non-increasing", where))


def _check_network(net: RadialNetwork, horizon: int, out: list[Violation]):
    seen: set[int] = set()
    for b in net.buses:
        if b.id in seen:
            out.append(Violation("duplicate_bus", f"duplicated bus id {b.id}", f"bus {b.id}"))
        seen.add(b.id)
    line_seen: set[int] = set()
    for ln in net.lines:
        if ln.id in line_seen:
            out.append(Violation("duplicate_line", f"duplicated line id {ln.id}", f"line {ln.id}"))
        line_seen.add(ln.id)

    roots = [b.id for b in net.buses if b.is_root]
    if len(roots) != 1:
        out.append(Violation("root_count", f"exactly one root bus required, found {roots}"))
    if net.root not in seen:
        out.append(Violation("unknown_root", f"root bus {net.root} does not exist"))
    elif roots and net.root not in roots:
        out.append(Violation("root_flag", f"bus {net.root} is the network root but not flagged is_root", f"bus {net.root}"))

    for b in net.buses:
        where = f"bus {b.id}"
        if b.fixed_load and len(b.fixed_load) != horizon:
            out.append(Violation("profile_length", f"profile length: fixed_load has {len(b.fixed_load)} entries, horizon is {horizon}", where))
        for t, v in enumerate(b.fixed_load):
            if _bad_number(v) or v < 0:
                out.append(Violation("negative_load", f"fixed_load must be finite and >= 0, got {v}", f"{where} hour {t}"))
        if b.is_root or b.id == net.root:
            if any(v != 0 for v in b.fixed_load):
                out.append(Violation("root_load", "root bus cannot carry fixed load", where))
            if b.bid is not None:
                out.append(Violation("root_bid", "root bus cannot carry a bid", where))
        if isinstance(b.bid, tuple):
            if len(b.bid) != horizon:
                out.append(Violation("profile_length", f"profile length: {len(b.bid)} hourly bids, horizon is {horizon}", where))
            for t, curve in enumerate(b.bid):
                _check_bid(curve, f"{where} hour {t} bid", out)
        elif b.bid is not None:
            _check_bid(b.bid, f"{where} bid", out)

    tree_ok = True
    for ln in net.lines:
        where = f"line {ln.id}"
        if ln.from_bus == ln.to_bus:
            out.append(Violation("self_loop", f"from_bus equals to_bus ({ln.from_bus})", where))
            tree_ok = False
        for end in (ln.from_bus, ln.to_bus):
            if end not in seen:
                out.append(Violation("unknown_bus", f"references unknown bus {end}", where))
                tree_ok = False
        if ln.capacity is not None and (_bad_number(ln.capacity) or ln.capacity < 0):
            out.append(Violation("bad_capacity", f"capacity must be finite and >= 0, got {ln.capacity}", where))

    if not tree_ok or net.root not in seen:
        return
    dist = net.depths()
    if len(net.lines) != len(seen) - 1 or len(dist) != len(seen):
        out.append(Violation(
            "not_a_tree",
            f"not a tree: {len(seen)} buses, {len(net.lines)} lines, {len(dist)} reachable from root",
        ))
        return
    for ln in net.lines:
        if dist[ln.from_bus] >= dist[ln.to_bus]:
            out.append(Violation(
                "orientation", f"line must point away from the root ({ln.from_bus}->{ln.to_bus})", f"line {ln.id}",
            ))


def validate_case(case: MarketCase) -> list[Violation]:
    """Return every violated structural invariant; empty means valid."""
    out: list[Violation] = []
    T = case.horizon
    if not isinstance(T, int) or T < 1:
        out.append(Violation("horizon", f"horizon must be a positive integer, got {T}"))
        return out
    if len(case.tlmp) != T:
        out.append(Violation("profile_length", f"profile length: tlmp has {len(case.tlmp)} entries, horizon is {T}", "tlmp"))
    for t, v in enumerate(case.tlmp):
        if _bad_number(v):
            out.append(Violation("bad_price", f"tlmp must be finite, got {v}", f"tlmp hour {t}"))
    if case.mode is ClearingMode.CONSTANT and case.assigned_power is None:
        out.append(Violation("missing_assigned_power", "constant-power mode requires assigned_power", "assigned_power"))
    if case.assigned_power is not None:
        if len(case.assigned_power) != T:
            out.append(Violation(
                "profile_length",
                f"profile length: assigned_power has {len(case.assigned_power)} entries, horizon is {T}",
                "assigned_power",
            ))
        for t, v in enumerate(case.assigned_power):
            if _bad_number(v) or v < 0:
                out.append(Violation("negative_power", f"assigned power must be finite and >= 0, got {v}", f"assigned_power hour {t}"))
    _check_network(case.network, T, out)
    return out


def incidence_row(network: RadialNetwork, bus: int) -> dict[int, int]:
    """Line id -> +1 for lines leaving ``bus`` toward a child, -1 for the entering line."""
    network.bus(bus)
    row = {}
    for ln in network.lines:
        if ln.from_bus == bus:
            row[ln.id] = 1
        elif ln.to_bus == bus:
            row[ln.id] = -1
    return row
