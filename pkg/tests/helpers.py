"""Case builders shared by the unit, property and acceptance tests."""
from __future__ import annotations

from typing import Optional

import numpy as np

from distmarket.model import BidCurve, Bus, ClearingMode, Line, MarketCase, RadialNetwork


def two_bus(assigned=7.0, tlmp=20.0, mode=ClearingMode.CONSTANT, capacity=None) -> MarketCase:
    net = RadialNetwork(
        [Bus(0, is_root=True), Bus(1, bid=BidCurve.from_pairs([(30.0, 5.0), (20.0, 5.0)]))],
        [Line(1, 0, 1, capacity)],
        0,
    )
    return MarketCase(net, 1, [tlmp], None if mode is ClearingMode.VARIABLE else [assigned], mode)


def three_bus(assigned=8.0, tlmp=20.0, capacity=3.0) -> MarketCase:
    net = RadialNetwork(
        [
            Bus(0, is_root=True),
            Bus(1, bid=BidCurve.from_pairs([(20.0, 10.0)])),
            Bus(2, bid=BidCurve.from_pairs([(40.0, 10.0)])),
        ],
        [Line(1, 0, 1), Line(2, 1, 2, capacity)],
        0,
    )
    return MarketCase(net, 1, [tlmp], [assigned])


def random_case(
    rng: np.random.Generator,
    *,
    n_buses: Optional[int] = None,
    max_buses: int = 13,
    max_segments: int = 3,
    max_responsive: Optional[int] = None,
    min_responsive: int = 1,
    mode: Optional[ClearingMode] = None,
    horizon: int = 1,
    quantum: Optional[float] = None,
    max_segment_mw: float = 3.0,
) -> MarketCase:
    """A random feasible radial case.

    Constant mode: a random target allocation is drawn first and the assigned
    power and line limits are set so that it is feasible. Variable mode: line
    limits always cover the fixed load behind them. With ``quantum`` set,
    segment sizes, fixed loads and limits are multiples of ``quantum``
    (benefits are whole dollars) and assigned power lands on a quantum/10 grid.
    """
    n = n_buses or int(rng.integers(2, max_buses + 1))
    mode = mode or (ClearingMode.CONSTANT if rng.random() < 0.6 else ClearingMode.VARIABLE)
    parent = {i: int(rng.integers(0, i)) for i in range(1, n)}
    children_of = {i: [j for j, p in parent.items() if p == i] for i in range(n)}

    def subtree(i):
        out, stack = [], [i]
        while stack:
            k = stack.pop()
            out.append(k)
            stack.extend(children_of[k])
        return out

    def q(x, up=False):
        if quantum is None:
            return float(x)
        f = np.ceil if up else np.round
        return float(f(x / quantum) * quantum)

    non_root = list(range(1, n))
    top = min(len(non_root), max_responsive or len(non_root))
    k = int(rng.integers(min(min_responsive, top), top + 1))
    responsive = set(int(b) for b in rng.choice(non_root, size=k, replace=False))

    bids, fixed = {}, {}
    for b in non_root:
        if b in responsive:
            curves = []
            for _ in range(horizon):
                g = int(rng.integers(1, max_segments + 1))
                benefits = sorted((float(rng.integers(5, 81)) for _ in range(g)), reverse=True)
                sizes = [max(q(rng.uniform(0.1, max_segment_mw)), quantum or 0.0) for _ in range(g)]
                curves.append(BidCurve.from_pairs(list(zip(benefits, sizes))))
            bids[b] = curves[0] if horizon == 1 else tuple(curves)
        if rng.random() < 0.4:
            fixed[b] = [q(rng.uniform(0.0, 1.0)) for _ in range(horizon)]

    buses = [Bus(0, is_root=True)] + [
        Bus(b, fixed.get(b, ()), bids.get(b)) for b in non_root
    ]
    tlmp = [float(rng.integers(10, 61)) for _ in range(horizon)]

    load = np.zeros((horizon, n))
    for b, prof in fixed.items():
        load[:, b] += prof
    if mode is ClearingMode.CONSTANT:
        for b in responsive:
            for t in range(horizon):
                cap = (bids[b] if horizon == 1 else bids[b][t]).capacity
                share = rng.uniform(0, 1)
                step = quantum / 10 if quantum else None
                load[t, b] += np.round(share * cap / step) * step if step else share * cap
        assigned = [float(np.round(load[t].sum(), 10)) for t in range(horizon)]
    else:
        assigned = None

    lines = []
    for child, par in parent.items():
        cap = None
        if rng.random() < 0.6:
            need = float(load[:, subtree(child)].sum(axis=1).max())
            extra = rng.uniform(0.0, 2.0) if rng.random() < 0.7 else 0.0
            cap = max(q(need + extra, up=True), quantum or 0.05)
        lines.append(Line(child, par, child, cap))
    net = RadialNetwork(buses, lines, 0)
    return MarketCase(net, horizon, tlmp, assigned, mode)
