import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from distmarket.aggregation import aggregate, aggregate_horizon
from distmarket.caseio import embedded_case
from distmarket.clearing import clear_hour
from distmarket.model import BidCurve, Bus, ClearingMode, Line, MarketCase, RadialNetwork

from helpers import random_case


def star(*curves, fixed=()):
    buses = [Bus(0, is_root=True)]
    for i, c in enumerate(curves, start=1):
        buses.append(Bus(i, fixed_load=fixed[i - 1] if fixed else (), bid=c))
    lines = [Line(i, 0, i) for i in range(1, len(buses))]
    return MarketCase(RadialNetwork(buses, lines, 0), 1, [20.0], [0.0])


def test_merge_of_three_segments():
    case = star(BidCurve.from_pairs([(30, 5)]), BidCurve.from_pairs([(40, 4), (30, 2)]))
    bid = aggregate(case, 0)
    assert bid.breakpoints == ((40.0, 4.0), (30.0, 11.0))
    assert bid.base == 0.0


def test_single_segment_identity():
    case = star(BidCurve.from_pairs([(25, 3)]), fixed=[[1.5]])
    bid = aggregate(case, 0)
    assert bid.breakpoints == ((25.0, 3.0),)
    assert bid.base == 1.5


def test_no_responsive_customers():
    case = star(None, None, fixed=[[0.4], [0.6]])
    bid = aggregate(case, 0)
    assert bid.breakpoints == () and bid.elastic_quantity == 0.0
    assert bid.base == pytest.approx(1.0)


def test_zero_width_segments_are_dropped():
    case = star(BidCurve.from_pairs([(30, 0), (20, 1)]))
    assert aggregate(case, 0).breakpoints == ((20.0, 1.0),)


def test_horizon_embedded():
    bids = aggregate_horizon(embedded_case())
    assert len(bids) == 24
    assert all(b.elastic_quantity > 0 for b in bids)


def test_benefit_of_partial_quantity():
    case = star(BidCurve.from_pairs([(30, 5)]), BidCurve.from_pairs([(40, 4), (30, 2)]))
    assert aggregate(case, 0).benefit(6.0) == pytest.approx(4 * 40 + 2 * 30)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_quantity_conservation(seed):
    case = random_case(np.random.default_rng(seed))
    bid = aggregate(case, 0)
    total = sum(b.bid_at(0).capacity for b in case.network.buses if b.bid_at(0) is not None)
    assert bid.elastic_quantity == pytest.approx(total)
    prices = [p for p, _ in bid.breakpoints]
    assert prices == sorted(prices, reverse=True) and len(set(prices)) == len(prices)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_matches_uncapacitated_clearing(seed, share):
    case = random_case(np.random.default_rng(seed), mode=ClearingMode.CONSTANT).without_line_limits()
    bid = aggregate(case, 0)
    q = share * bid.elastic_quantity
    res = clear_hour(case.with_assigned_power([q + bid.base]), 0)
    assert res.benefit == pytest.approx(bid.benefit(q), abs=1e-6)
