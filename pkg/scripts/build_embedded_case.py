"""Regenerate src/distmarket/data/ieee13.json.

Topology follows the IEEE 13-node feeder renumbered 1..13 with bus 1 as the
substation (grid interface). Bids, fixed loads, prices and limits are
synthetic; they are chosen so the congestion patterns discussed for the
feeder (lines 5-6, 8-7 and 4-9) appear under the documented settings in
README.md.
"""
import sys
from pathlib import Path

from distmarket.caseio import serialize_case
from distmarket.clearing import clear_horizon
from distmarket.model import BidCurve, Bus, ClearingMode, Line, MarketCase, RadialNetwork

OUT = Path(__file__).resolve().parents[1] / "src" / "distmarket" / "data" / "ieee13.json"

# (parent, child); line id = child bus id
EDGES = [(1, 2), (2, 3), (3, 11), (2, 8), (8, 7), (2, 4), (4, 12), (4, 5), (5, 6), (4, 9), (9, 10), (9, 13)]
CAPACITY = {2: 14.0, 3: 3.0, 11: 1.5, 8: 2.0, 7: 1.2, 4: 9.0, 12: 2.0, 5: 3.0, 6: 1.5, 9: 3.6, 10: 2.5, 13: 2.5}

# three-segment bids, (benefit $/MWh, MW)
BIDS = {
    2: [(45.0, 1.0), (32.0, 1.0), (20.0, 1.0)],
    3: [(44.0, 0.6), (30.0, 0.6), (18.0, 0.6)],
    5: [(46.0, 0.5), (33.0, 0.5), (21.0, 0.5)],
    6: [(55.0, 0.8), (36.0, 0.8), (26.0, 0.6)],
    7: [(52.0, 0.5), (38.0, 0.5), (24.0, 0.5)],
    10: [(70.0, 0.8), (48.0, 0.8), (34.0, 0.6)],
    11: [(43.0, 0.4), (31.0, 0.4), (19.0, 0.4)],
    12: [(47.0, 0.5), (34.0, 0.5), (22.0, 0.5)],
    13: [(68.0, 0.8), (46.0, 0.8), (33.0, 0.6)],
}
# peak fixed (passive) load, MW
FIXED_PEAK = {2: 0.06, 3: 0.03, 4: 0.35, 6: 0.04, 8: 0.12, 9: 0.05, 11: 0.03, 12: 0.02}
SHAPE = [0.62, 0.58, 0.55, 0.55, 0.57, 0.62, 0.70, 0.80, 0.87, 0.92, 0.95, 0.98,
         1.00, 0.99, 0.97, 0.95, 0.94, 0.96, 0.98, 0.95, 0.88, 0.80, 0.72, 0.66]
TLMP = [27.5, 26.5, 25.5, 25.5, 26.5, 28.5, 31.5, 35.5, 39.5, 42.5, 45.5, 48.5,
        53.5, 56.5, 49.5, 54.5, 47.5, 51.5, 46.5, 43.5, 39.5, 35.5, 31.5, 28.5]
# the wholesale award: what the feeder would buy at the T-LMP (variable-power
# clearing), shaded down a little so a segment bid above the T-LMP is marginal
AWARD_SHADE = 0.97

COMMENT = (
    "IEEE 13-node feeder topology renumbered 1..13 (bus 1 = substation). "
    "SYNTHETIC DATA: bids, fixed loads, T-LMP, assigned power and line limits are "
    "illustrative values, not published measurements."
)


def assigned_power(case: MarketCase) -> list[float]:
    results = clear_horizon(case.with_mode(ClearingMode.VARIABLE))
    return [round(AWARD_SHADE * r.grid_power, 2) for r in results]


def build() -> MarketCase:
    T = len(TLMP)
    buses = [Bus(1, (), None, True)]
    for b in range(2, 14):
        fixed = [round(FIXED_PEAK.get(b, 0.0) * s, 6) for s in SHAPE]
        bid = BidCurve.from_pairs(BIDS[b]) if b in BIDS else None
        buses.append(Bus(b, fixed if any(fixed) else (), bid))
    lines = [Line(c, p, c, CAPACITY[c]) for p, c in EDGES]
    case = MarketCase(RadialNetwork(buses, lines, 1), T, TLMP, [0.0] * T, ClearingMode.CONSTANT, comment=COMMENT)
    return case.with_assigned_power(assigned_power(case))


if __name__ == "__main__":
    text = serialize_case(build())
    if "--check" in sys.argv:
        sys.exit(0 if OUT.read_text() == text else 1)
    OUT.write_text(text)
    print(f"wrote {OUT}")
