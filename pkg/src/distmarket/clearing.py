"""Per-hour social-welfare clearing and D-LMP extraction.

Each hour is an independent LP:

    maximise   sum_mg b_mg DX_mg  [- tlmp_t * PM]          (PM term: variable mode)
    s.t.       sum_l a_lm PL_l + sum_g DX_mg = -Df_mt        every non-root bus m
               sum_l a_l0 PL_l = PM_t  (constant)  or  sum_l a_l0 PL_l - PM = 0
               0 <= DX_mg <= max_quantity,   -cap_l <= PL_l <= cap_l

with a_lm = +1 for a line leaving bus m toward its child and -1 for the line
entering it. With the rows arranged this way the equality dual of bus m is
directly the marginal welfare of one more MW served at m, which is what we
report as the bus D-LMP. Line shadow prices are the reduced costs of the
capacitated flow variables at their binding bound.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import (
    HorizonClearingError,
    HourOutOfRange,
    InfeasibleMarket,
    InvalidCase,
    NumericalBreakdown,
)
from .lp import INF, KKT_TOL, LinearProgram, LpSolution, LpStatus, solve
from .model import ClearingMode, MarketCase, validate_case

PM = "PM"


def dx_name(bus: int, seg: int) -> str:
    return f"DX[{bus},{seg}]"


def pl_name(line: int) -> str:
    return f"PL[{line}]"


def balance_name(bus: int) -> str:
    return f"balance[{bus}]"


@dataclass(frozen=True)
class ClearingResult:
    hour: int
    mode: ClearingMode
    allocations: dict[int, tuple[float, ...]]  # bus -> MW per segment (proactive buses)
    responsive_load: dict[int, float]  # every bus, 0 where no bid
    fixed_load: dict[int, float]
    flows: dict[int, float]
    grid_power: float
    tlmp: float
    dlmp: dict[int, float]
    line_shadow: dict[int, float]
    welfare: float  # bid benefit minus tlmp * grid power
    benefit: float
    degenerate_prices: bool

    def load(self, bus: int) -> float:
        return self.fixed_load[bus] + self.responsive_load[bus]

    @property
    def objective(self) -> float:
        """Value of the LP actually solved (the grid-cost term is a constant in constant mode)."""
        return self.benefit if self.mode is ClearingMode.CONSTANT else self.welfare

    @property
    def average_dlmp(self) -> float:
        return sum(self.dlmp.values()) / len(self.dlmp)

    def congested_lines(self, tol: float = KKT_TOL) -> list[int]:
        return [l for l, s in sorted(self.line_shadow.items()) if s > tol]


def _check(case: MarketCase, hour: int):
    violations = validate_case(case)
    if violations:
        raise InvalidCase(violations)
    if not 0 <= hour < case.horizon:
        raise HourOutOfRange(f"hour {hour} outside horizon 0..{case.horizon - 1}")


def build_clearing_lp(case: MarketCase, hour: int, *, validate: bool = True) -> LinearProgram:
    if validate:
        _check(case, hour)
    net = case.network
    lp = LinearProgram(sense="maximize")
    for bus in net.sorted_buses():
        curve = bus.bid_at(hour)
        if curve is None:
            continue
        for g, seg in enumerate(curve.segments):
            lp.add_variable(dx_name(bus.id, g), 0.0, seg.max_quantity, seg.benefit)
    for line in net.sorted_lines():
        cap = line.capacity if line.capacity is not None else INF
        lp.add_variable(pl_name(line.id), -cap, cap)
    variable = case.mode is ClearingMode.VARIABLE
    if variable:
        lp.add_variable(PM, 0.0, INF, -case.tlmp[hour])

    for bus in net.sorted_buses():
        coeffs: dict[str, float] = {}
        for line in net.lines:
            if line.from_bus == bus.id:
                coeffs[pl_name(line.id)] = 1.0
            elif line.to_bus == bus.id:
                coeffs[pl_name(line.id)] = -1.0
        if bus.id == net.root:
            if variable:
                coeffs[PM] = -1.0
                rhs = 0.0
            else:
                rhs = case.assigned_power[hour]
        else:
            curve = bus.bid_at(hour)
            if curve is not None:
                for g in range(len(curve.segments)):
                    coeffs[dx_name(bus.id, g)] = 1.0
            rhs = -bus.fixed_at(hour)
        lp.add_eq(balance_name(bus.id), coeffs, rhs)
    return lp


def _infeasibility_reason(case: MarketCase, hour: int) -> str:
    if case.mode is ClearingMode.VARIABLE:
        return "line capacities cannot deliver the fixed load"
    net = case.network
    fixed = sum(b.fixed_at(hour) for b in net.buses)
    willing = fixed + sum(b.bid_at(hour).capacity for b in net.buses if b.bid_at(hour) is not None)
    pm = case.assigned_power[hour]
    if pm > willing:
        return f"assigned power {pm:g} MW exceeds total willing demand {willing:g} MW"
    if pm < fixed:
        return f"assigned power {pm:g} MW is below total fixed load {fixed:g} MW"
    return f"line capacities cannot deliver assigned power {pm:g} MW"


def result_from_solution(case: MarketCase, hour: int, sol: LpSolution) -> ClearingResult:
    net = case.network
    allocations, responsive, fixed = {}, {}, {}
    benefit = 0.0
    for bus in net.sorted_buses():
        fixed[bus.id] = bus.fixed_at(hour)
        curve = bus.bid_at(hour)
        if curve is None:
            responsive[bus.id] = 0.0
            continue
        alloc = tuple(sol.value(dx_name(bus.id, g)) for g in range(len(curve.segments)))
        allocations[bus.id] = alloc
        responsive[bus.id] = sum(alloc)
        benefit += sum(s.benefit * q for s, q in zip(curve.segments, alloc))
    flows, shadow = {}, {}
    for line in net.sorted_lines():
        flows[line.id] = sol.value(pl_name(line.id))
        shadow[line.id] = abs(sol.reduced_cost(pl_name(line.id))) if line.limited else 0.0
    if case.mode is ClearingMode.VARIABLE:
        grid = sol.value(PM)
    else:
        grid = case.assigned_power[hour]
    tlmp = case.tlmp[hour]
    return ClearingResult(
        hour=hour,
        mode=case.mode,
        allocations=allocations,
        responsive_load=responsive,
        fixed_load=fixed,
        flows=flows,
        grid_power=grid,
        tlmp=tlmp,
        dlmp={b: sol.dual_eq(balance_name(b)) for b in net.bus_ids},
        line_shadow=shadow,
        welfare=benefit - tlmp * grid,
        benefit=benefit,
        degenerate_prices=sol.degenerate,
    )


def clear_hour(case: MarketCase, hour: int, *, validate: bool = True) -> ClearingResult:
    """Clear one hour and price every bus.

    Raises InfeasibleMarket when no allocation balances the network (for
    instance assigned power above total willing demand).
    """
    lp = build_clearing_lp(case, hour, validate=validate)
    sol = solve(lp)
    if sol.status is LpStatus.INFEASIBLE:
        raise InfeasibleMarket(hour, _infeasibility_reason(case, hour))
    if sol.status is LpStatus.UNBOUNDED:
        raise NumericalBreakdown(f"hour {hour}: clearing LP reported unbounded")
    return result_from_solution(case, hour, sol)


def clear_horizon(case: MarketCase, *, parallel: bool = False, workers: Optional[int] = None):
    """Clear every hour; hours are independent LPs.

    All hours are attempted. If any fail, HorizonClearingError carries the
    partial results and the per-hour failures.
    """
    violations = validate_case(case)
    if violations:
        raise InvalidCase(violations)

    def one(t):
        try:
            return clear_hour(case, t, validate=False), None
        except (InfeasibleMarket, NumericalBreakdown) as exc:
            return None, exc

    hours = range(case.horizon)
    if parallel:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, hours))
    else:
        outcomes = [one(t) for t in hours]
    results = [r for r, _ in outcomes]
    failures = {t: e for t, (_, e) in enumerate(outcomes) if e is not None}
    if failures:
        raise HorizonClearingError(results, failures)
    return results


@dataclass(frozen=True)
class SweepPoint:
    assigned_power: float
    average_dlmp: Optional[float]
    degenerate: bool = False
    infeasible: bool = False
    message: str = ""


def sweep_assigned_power(case: MarketCase, hour: int, grid: Sequence[float]) -> list[SweepPoint]:
    """Average D-LMP at ``hour`` for each assigned-power value in ``grid``."""
    if case.mode is not ClearingMode.CONSTANT:
        raise ValueError("assigned-power sweep requires constant-power mode")
    if any(p < 0 for p in grid):
        raise ValueError("sweep grid values must be >= 0")
    _check(case, hour)
    out = []
    for p in grid:
        trial = case.with_assigned_at(hour, p)
        try:
            res = clear_hour(trial, hour, validate=False)
        except InfeasibleMarket as exc:
            out.append(SweepPoint(float(p), None, infeasible=True, message=exc.reason))
            continue
        out.append(SweepPoint(float(p), res.average_dlmp, degenerate=res.degenerate_prices))
    return out
