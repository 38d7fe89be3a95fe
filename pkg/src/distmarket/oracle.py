"""Independent checks used by the test suite.

``brute_force_clear`` enumerates per-bus load levels on a grid and rebuilds
the tree flows bottom-up, so it never touches the LP solver.
``perturbation_price`` recovers a D-LMP from its definition as the welfare
sensitivity to extra load. ``lp_vertex_optimum`` solves tiny LPs by
enumerating every basic solution.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .clearing import ClearingResult, clear_hour
from .errors import DegenerateAtAllTriedEps, InfeasibleMarket, InvalidCase, TooLarge
from .lp import LinearProgram
from .model import BidCurve, ClearingMode, MarketCase, validate_case

MAX_BUSES = 3
MAX_SEGMENTS = 2


@dataclass(frozen=True)
class OracleResult:
    best_welfare: float
    best_allocation: dict[int, tuple[float, ...]]
    step: float
    evaluated_points: int


def _greedy_fill(curve: BidCurve, quantity: float) -> tuple[float, ...]:
    out, left = [], quantity
    for seg in curve.segments:
        take = min(max(left, 0.0), seg.max_quantity)
        out.append(take)
        left -= take
    return tuple(out)


def _benefit(curve: BidCurve, q: np.ndarray) -> np.ndarray:
    total = np.zeros_like(q)
    left = q.copy()
    for seg in curve.segments:
        take = np.clip(left, 0.0, seg.max_quantity)
        total += seg.benefit * take
        left = left - take
    return total


def _level_grid(cap: float, step: float) -> np.ndarray:
    k = int(math.floor(cap / step + 1e-9))
    return step * np.arange(k + 1)


def brute_force_clear(
    case: MarketCase, hour: int, step: float, max_points: int = 50_000_000
) -> OracleResult:
    """Best welfare over all per-bus load levels that are multiples of ``step``.

    Within a bus, segments fill in bid order (the cheapest feasible way to
    reach a given bus load). In constant mode the last responsive bus absorbs
    the balance so that total load equals the assigned power exactly.
    """
    violations = validate_case(case)
    if violations:
        raise InvalidCase(violations)
    net = case.network
    curves = {b.id: b.bid_at(hour) for b in net.sorted_buses() if b.bid_at(hour) is not None}
    responsive = list(curves)
    if len(responsive) > MAX_BUSES or any(len(c.segments) > MAX_SEGMENTS for c in curves.values()):
        raise TooLarge(f"oracle handles <= {MAX_BUSES} responsive buses with <= {MAX_SEGMENTS} segments")

    bus_ids = net.bus_ids
    col = {b: i for i, b in enumerate(bus_ids)}
    fixed = np.array([net.bus(b).fixed_at(hour) for b in bus_ids])
    lines = [ln for ln in net.sorted_lines() if ln.limited]
    subtree = np.zeros((len(lines), len(bus_ids)))
    for i, ln in enumerate(lines):
        subtree[i, [col[b] for b in net.subtree(ln.to_bus)]] = 1.0
    caps = np.array([ln.capacity for ln in lines])

    constant = case.mode is ClearingMode.CONSTANT
    tlmp = case.tlmp[hour]
    enumerated = responsive[:-1] if constant else responsive
    grids = [_level_grid(curves[b].capacity, step) for b in enumerated]
    total_points = int(np.prod([len(g) for g in grids])) if grids else 1
    if total_points > max_points:
        raise TooLarge(f"{total_points} grid points exceed the limit {max_points}")

    if len(grids) > 1:
        mesh = np.meshgrid(*grids[1:], indexing="ij")
        inner = np.stack([m.ravel() for m in mesh], axis=1)
    else:
        inner = np.zeros((1, 0))
    outer = grids[0] if grids else np.zeros(1)

    best_w, best_q = -math.inf, None
    for v in outer:
        if grids:
            levels = np.hstack([np.full((len(inner), 1), v), inner])
        else:
            levels = np.zeros((1, 0))
        q = np.zeros((len(levels), len(responsive)))
        q[:, : levels.shape[1]] = levels
        ok = np.ones(len(levels), dtype=bool)
        if constant and responsive:
            last = case.assigned_power[hour] - fixed.sum() - levels.sum(axis=1)
            cap_last = curves[responsive[-1]].capacity
            ok &= (last >= -1e-9) & (last <= cap_last + 1e-9)
            q[:, -1] = np.clip(last, 0.0, cap_last)
        elif constant:
            ok &= abs(case.assigned_power[hour] - fixed.sum()) <= 1e-9
        loads = np.tile(fixed, (len(q), 1))
        for j, b in enumerate(responsive):
            loads[:, col[b]] += q[:, j]
        if len(lines):
            flows = loads @ subtree.T
            ok &= np.all(np.abs(flows) <= caps + 1e-9, axis=1)
        if not ok.any():
            continue
        grid_power = case.assigned_power[hour] if constant else loads.sum(axis=1)
        welfare = sum(_benefit(curves[b], q[:, j]) for j, b in enumerate(responsive)) - tlmp * grid_power
        welfare = np.where(ok, welfare, -np.inf) if responsive else np.where(ok, -tlmp * grid_power, -np.inf)
        i = int(np.argmax(welfare))
        if welfare[i] > best_w:
            best_w, best_q = float(welfare[i]), q[i].copy()
    if best_q is None:
        raise InfeasibleMarket(hour, "no grid point satisfies the balance and line limits")
    alloc = {b: _greedy_fill(curves[b], float(best_q[j])) for j, b in enumerate(responsive)}
    return OracleResult(best_w, alloc, step, total_points)


def _active_set(case: MarketCase, res: ClearingResult, tol: float = 1e-9):
    interior = set()
    for bus, alloc in res.allocations.items():
        curve = case.network.bus(bus).bid_at(res.hour)
        for g, (q, seg) in enumerate(zip(alloc, curve.segments)):
            if tol < q < seg.max_quantity - tol:
                interior.add((bus, g))
    binding = {
        ln.id for ln in case.network.lines
        if ln.limited and abs(res.flows[ln.id]) >= ln.capacity - tol
    }
    return frozenset(interior), frozenset(binding), res.grid_power > tol


def perturbation_price(
    case: MarketCase, hour: int, bus: int, eps: float = 1e-3, tries: int = 3,
    base: Optional[ClearingResult] = None,
) -> float:
    """Finite-difference D-LMP: welfare lost per MW of extra fixed load at ``bus``.

    The step shrinks tenfold until the perturbed hour clears nondegenerately
    with the same active set as the unperturbed one.
    """
    at_root = bus == case.network.root
    if at_root and case.mode is not ClearingMode.CONSTANT:
        raise ValueError("root-bus perturbation is only defined in constant-power mode")
    base = base or clear_hour(case, hour)
    signature = _active_set(case, base)
    current = case.network.bus(bus).fixed_at(hour)
    e = eps
    for _ in range(tries):
        if current + e >= 0:
            # load at the root is the same as withholding assigned power
            if at_root:
                trial = case.with_assigned_at(hour, case.assigned_power[hour] - e)
            else:
                trial = case.with_fixed_load(bus, hour, current + e)
            try:
                pert = clear_hour(trial, hour)
            except InfeasibleMarket:
                pert = None
            if pert is not None and not pert.degenerate_prices and _active_set(case, pert) == signature:
                return (base.objective - pert.objective) / e
        e /= 10
    raise DegenerateAtAllTriedEps(f"bus {bus} hour {hour}: no clean perturbation down to eps={e * 10:g}")


def lp_vertex_optimum(lp: LinearProgram, tol: float = 1e-9):
    """(objective, x) of the best basic feasible solution, or None if there is none.

    Every combination of active constraints (all equalities plus a choice of
    inequality rows and finite bounds) is solved as a square system. Only
    meant for a handful of variables.
    """
    c, A_eq, b_eq, A_le, b_le, lo, hi = lp.arrays()
    n = len(c)
    candidates = [(A_le[i], b_le[i]) for i in range(len(b_le))]
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(lo[j]):
            candidates.append((e, lo[j]))
        if np.isfinite(hi[j]):
            candidates.append((e, hi[j]))
    # a maximal independent subset of the equality rows; the rest are
    # implied (or contradicted, which the residual check below catches)
    basis: list[int] = []
    for i in range(len(b_eq)):
        if np.linalg.matrix_rank(A_eq[basis + [i]]) > len(basis):
            basis.append(i)
    need = max(n - len(basis), 0)
    sign = 1.0 if lp.sense == "maximize" else -1.0
    best = None
    for combo in itertools.combinations(range(len(candidates)), need):
        rows = [A_eq[i] for i in basis] + [candidates[k][0] for k in combo]
        rhs = [b_eq[i] for i in basis] + [candidates[k][1] for k in combo]
        M = np.array(rows).reshape(len(rows), n)
        if M.shape[0] != n or abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, np.array(rhs))
        scale = 1.0 + np.max(np.abs(x))
        if np.any(np.abs(A_eq @ x - b_eq) > tol * scale):
            continue
        if np.any(A_le @ x - b_le > tol * scale):
            continue
        if np.any(x < lo - tol * scale) or np.any(x > hi + tol * scale):
            continue
        obj = float(c @ x)
        if best is None or sign * obj > sign * best[0] + 1e-12:
            best = (obj, x)
    return best
