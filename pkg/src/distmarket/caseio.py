"""Case documents (JSON), CSV exports and the embedded 13-bus case.

Case document layout, schema version "1"::

    {
      "schema_version": "1",
      "comment": "free text",
      "units": {"power": "MW", "price": "$/MWh"},
      "mode": "constant" | "variable",
      "horizon": T,
      "tlmp": [T prices],
      "assigned_power": [T values] | null,
      "buses": [
        {"id": 1, "root": true},
        {"id": 2, "fixed_load": [T values], "bid": [[benefit, max_quantity], ...]},
        {"id": 3, "hourly_bids": [[[benefit, max_quantity], ...] x T]}
      ],
      "lines": [{"id": 2, "from": 1, "to": 2, "capacity": 5.0 | null}]
    }

Unknown keys are rejected. ``serialize_case`` writes one canonical layout so
that parse/serialize round trips are byte-stable.
"""
from __future__ import annotations

import csv
import io
import json
import math
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Sequence

from .aggregation import AggregatedBid
from .clearing import ClearingResult, SweepPoint
from .errors import InvalidCase, ParseError
from .model import BidCurve, Bus, ClearingMode, Line, MarketCase, RadialNetwork, Violation, validate_case
from .settlement import Settlement

SCHEMA_VERSION = "1"
UNITS = {"power": "MW", "price": "$/MWh"}
EMBEDDED_CASE = "ieee13.json"

_TOP_KEYS = {"schema_version", "comment", "units", "mode", "horizon", "tlmp", "assigned_power", "buses", "lines"}
_BUS_KEYS = {"id", "root", "fixed_load", "bid", "hourly_bids"}
_LINE_KEYS = {"id", "from", "to", "capacity"}


class _Reader:
    def __init__(self):
        self.errors: list[str] = []

    def fail(self, where, msg):
        self.errors.append(f"{where}: {msg}")

    def keys(self, obj, allowed, required, where) -> bool:
        if not isinstance(obj, dict):
            self.fail(where, "expected an object")
            return False
        for k in sorted(set(obj) - allowed):
            self.fail(where, f"unknown field {k!r}")
        for k in sorted(required - set(obj)):
            self.fail(where, f"missing field {k!r}")
        return True

    def number(self, v, where) -> Optional[float]:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.fail(where, f"expected a finite number, got {v!r}")
            return None
        return float(v)

    def integer(self, v, where) -> Optional[int]:
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(where, f"expected an integer, got {v!r}")
            return None
        return v

    def numbers(self, v, where) -> list[float]:
        if not isinstance(v, list):
            self.fail(where, "expected a list of numbers")
            return []
        out = [self.number(x, f"{where}[{i}]") for i, x in enumerate(v)]
        return [x for x in out if x is not None]

    def curve(self, v, where) -> Optional[BidCurve]:
        if not isinstance(v, list):
            self.fail(where, "expected a list of [benefit, max_quantity] pairs")
            return None
        pairs = []
        for g, seg in enumerate(v):
            if not isinstance(seg, list) or len(seg) != 2:
                self.fail(f"{where}[{g}]", "expected [benefit, max_quantity]")
                continue
            b = self.number(seg[0], f"{where}[{g}][0]")
            q = self.number(seg[1], f"{where}[{g}][1]")
            if b is not None and q is not None:
                pairs.append((b, q))
        return BidCurve.from_pairs(pairs)


def parse_case(text: str, *, validate: bool = True) -> MarketCase:
    """Read a case document.

    Raises ParseError (with line/field locations) for malformed documents and
    InvalidCase for well-formed documents that break a domain invariant.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError([f"line {exc.lineno} column {exc.colno}: {exc.msg}"]) from None
    r = _Reader()
    if not r.keys(doc, _TOP_KEYS, {"schema_version", "mode", "horizon", "tlmp", "buses", "lines"}, "document"):
        raise ParseError(r.errors)
    if doc.get("schema_version") != SCHEMA_VERSION:
        r.fail("schema_version", f"unsupported version {doc.get('schema_version')!r}, expected {SCHEMA_VERSION!r}")
    if "units" in doc and doc["units"] != UNITS:
        r.fail("units", f"units are fixed to {UNITS}")
    comment = doc.get("comment", "")
    if not isinstance(comment, str):
        r.fail("comment", "expected a string")
        comment = ""
    mode = doc.get("mode")
    if mode not in ("constant", "variable"):
        r.fail("mode", f"expected 'constant' or 'variable', got {mode!r}")
    horizon = r.integer(doc.get("horizon"), "horizon")
    tlmp = r.numbers(doc.get("tlmp"), "tlmp")
    assigned = doc.get("assigned_power")
    if assigned is not None:
        assigned = r.numbers(assigned, "assigned_power")

    buses, root = [], None
    if not isinstance(doc.get("buses"), list):
        r.fail("buses", "expected a list")
    else:
        for i, raw in enumerate(doc["buses"]):
            where = f"buses[{i}]"
            if not r.keys(raw, _BUS_KEYS, {"id"}, where):
                continue
            bid_id = r.integer(raw.get("id"), f"{where}.id")
            is_root = raw.get("root", False)
            if not isinstance(is_root, bool):
                r.fail(f"{where}.root", "expected true or false")
                is_root = False
            if is_root:
                root = bid_id
            fixed = r.numbers(raw["fixed_load"], f"{where}.fixed_load") if "fixed_load" in raw else []
            if "bid" in raw and "hourly_bids" in raw:
                r.fail(where, "give either 'bid' or 'hourly_bids', not both")
            bid: Any = None
            if "bid" in raw:
                bid = r.curve(raw["bid"], f"{where}.bid")
            elif "hourly_bids" in raw:
                if not isinstance(raw["hourly_bids"], list):
                    r.fail(f"{where}.hourly_bids", "expected a list of bids")
                else:
                    bid = tuple(
                        r.curve(c, f"{where}.hourly_bids[{t}]") for t, c in enumerate(raw["hourly_bids"])
                    )
            if bid_id is not None:
                buses.append(Bus(bid_id, fixed, bid, is_root))

    lines = []
    if not isinstance(doc.get("lines"), list):
        r.fail("lines", "expected a list")
    else:
        for i, raw in enumerate(doc["lines"]):
            where = f"lines[{i}]"
            if not r.keys(raw, _LINE_KEYS, {"id", "from", "to"}, where):
                continue
            lid = r.integer(raw.get("id"), f"{where}.id")
            fb = r.integer(raw.get("from"), f"{where}.from")
            tb = r.integer(raw.get("to"), f"{where}.to")
            cap = raw.get("capacity")
            if cap is not None:
                cap = r.number(cap, f"{where}.capacity")
            if None not in (lid, fb, tb):
                lines.append(Line(lid, fb, tb, cap))

    if r.errors:
        raise ParseError(r.errors)
    if root is None:
        raise InvalidCase([Violation("root_count", "no bus is flagged as root", "buses")])
    case = MarketCase(
        RadialNetwork(buses, lines, root), horizon, tlmp, assigned, ClearingMode(mode), comment=comment,
    )
    if validate:
        violations = validate_case(case)
        if violations:
            raise InvalidCase(violations)
    return case


def read_case(path) -> MarketCase:
    return parse_case(Path(path).read_text())


def _dumps(v) -> str:
    return json.dumps(v, separators=(", ", ": "), ensure_ascii=False)


def _curve(curve: BidCurve):
    return [[s.benefit, s.max_quantity] for s in curve.segments]


def serialize_case(case: MarketCase) -> str:
    head = {
        "schema_version": SCHEMA_VERSION,
        "comment": case.comment,
        "units": UNITS,
        "mode": case.mode.value,
        "horizon": case.horizon,
        "tlmp": list(case.tlmp),
        "assigned_power": list(case.assigned_power) if case.assigned_power is not None else None,
    }
    out = ["{"]
    for k, v in head.items():
        out.append(f"  {_dumps(k)}: {_dumps(v)},")
    out.append('  "buses": [')
    rows = []
    for bus in case.network.sorted_buses():
        d: dict[str, Any] = {"id": bus.id}
        if bus.is_root:
            d["root"] = True
        if bus.fixed_load:
            d["fixed_load"] = list(bus.fixed_load)
        if isinstance(bus.bid, tuple):
            d["hourly_bids"] = [_curve(c) for c in bus.bid]
        elif bus.bid is not None:
            d["bid"] = _curve(bus.bid)
        rows.append("    " + _dumps(d))
    out.append(",\n".join(rows))
    out.append("  ],")
    out.append('  "lines": [')
    rows = [
        "    " + _dumps({"id": ln.id, "from": ln.from_bus, "to": ln.to_bus, "capacity": ln.capacity})
        for ln in case.network.sorted_lines()
    ]
    out.append(",\n".join(rows))
    out.append("  ]")
    out.append("}")
    return "\n".join(out) + "\n"


def write_case(case: MarketCase, path):
    Path(path).write_text(serialize_case(case))


def embedded_case() -> MarketCase:
    """The bundled 13-bus feeder case (synthetic bids, loads, prices and limits)."""
    text = resources.files("distmarket").joinpath("data", EMBEDDED_CASE).read_text()
    return parse_case(text)


# ---- CSV exports -----------------------------------------------------------

def _f(x: float, digits: int) -> str:
    s = f"{x:.{digits}f}"
    if float(s) == 0.0:
        s = f"{0.0:.{digits}f}"
    return s


def _price(x):
    return _f(x, 4)


def _mw(x):
    return _f(x, 6)


def _money(x):
    return _f(x, 4)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def dlmp_table(results: Sequence[ClearingResult]) -> str:
    rows = []
    for res in results:
        for bus in sorted(res.dlmp):
            rows.append([
                res.hour, bus, _price(res.dlmp[bus]), _mw(res.fixed_load[bus]),
                _mw(res.responsive_load[bus]), int(res.degenerate_prices),
            ])
    return _csv(["hour", "bus", "dlmp", "fixed_load_mw", "responsive_load_mw", "degenerate"], rows)


def flow_table(results: Sequence[ClearingResult], case: MarketCase, tol: float = 1e-7) -> str:
    rows = []
    for res in results:
        for ln in case.network.sorted_lines():
            cap = "" if ln.capacity is None else _mw(ln.capacity)
            binding = ln.limited and abs(res.flows[ln.id]) >= ln.capacity - tol
            rows.append([
                res.hour, ln.id, ln.from_bus, ln.to_bus, _mw(res.flows[ln.id]), cap,
                _price(res.line_shadow[ln.id]), int(binding),
            ])
    return _csv(["hour", "line", "from_bus", "to_bus", "flow_mw", "capacity_mw", "shadow_price", "binding"], rows)


def settlement_table(results: Sequence[ClearingResult], settlement: Settlement) -> str:
    rows = []
    cust = settlement.hourly_customer_payment
    for t, res in enumerate(results):
        rows.append([
            res.hour, _price(res.tlmp), _mw(res.grid_power), _money(cust[t]),
            _money(settlement.hourly_utility_payment[t]), _money(cust[t] - settlement.hourly_utility_payment[t]),
            _mw(settlement.balance_residuals[t]),
        ])
    rows.append([
        "total", "", _mw(sum(r.grid_power for r in results)), _money(settlement.total_customer_payment),
        _money(settlement.utility_payment), _money(settlement.surplus), _mw(max(settlement.balance_residuals, default=0.0)),
    ])
    return _csv(
        ["hour", "tlmp", "grid_power_mw", "customer_payment", "utility_payment", "surplus", "balance_residual_mw"],
        rows,
    )


def sweep_table(points: Sequence[SweepPoint]) -> str:
    rows = []
    for p in points:
        flag = "infeasible" if p.infeasible else ("degenerate" if p.degenerate else "")
        avg = "" if p.average_dlmp is None else _price(p.average_dlmp)
        rows.append([_mw(p.assigned_power), avg, flag])
    return _csv(["assigned_power_mw", "avg_dlmp", "flag"], rows)


def aggregate_table(bids: Sequence[AggregatedBid]) -> str:
    rows = []
    for bid in bids:
        if not bid.breakpoints:
            rows.append([bid.hour, "", _mw(0.0), _mw(bid.base)])
        for price, cum in bid.breakpoints:
            rows.append([bid.hour, _price(price), _mw(cum), _mw(bid.base)])
    return _csv(["hour", "benefit", "cumulative_mw", "base_mw"], rows)


def export_results(
    results: Sequence[ClearingResult],
    settlement: Optional[Settlement],
    destination,
    *,
    case: MarketCase,
    sweep: Optional[Sequence[SweepPoint]] = None,
) -> list[Path]:
    """Write the CSV tables into ``destination`` and return the written paths."""
    dest = Path(destination)
    dest.mkdir(parents=True, exist_ok=True)
    files = {"dlmp.csv": dlmp_table(results), "flows.csv": flow_table(results, case)}
    if settlement is not None:
        files["settlement.csv"] = settlement_table(results, settlement)
    if sweep is not None:
        files["sweep.csv"] = sweep_table(sweep)
    written = []
    for name, text in files.items():
        path = dest / name
        path.write_text(text)
        written.append(path)
    return written
