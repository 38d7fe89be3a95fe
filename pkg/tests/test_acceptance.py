"""Acceptance criteria 1-10, one test each.

Each criterion is a plain function returning (passed, detail). The pytest
wrappers print one "[acceptance N] PASS/FAIL ..." line per criterion; running
this file directly prints the same lines without pytest.
"""
import filecmp
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from distmarket import scenarios  # noqa: E402
from distmarket.caseio import embedded_case, export_results, parse_case, serialize_case  # noqa: E402
from distmarket.cli import main as cli_main  # noqa: E402
from distmarket.clearing import build_clearing_lp, clear_horizon, clear_hour, sweep_assigned_power  # noqa: E402
from distmarket.lp import check_kkt, solve  # noqa: E402
from distmarket.oracle import brute_force_clear, perturbation_price  # noqa: E402
from distmarket.settlement import settle, surplus_decomposition  # noqa: E402

from helpers import random_case  # noqa: E402

GOLDEN = Path(__file__).parent / "golden" / "three_bus"
SEED = 20240917


def kkt_suite(n_cases=200, tol=1e-7, budget=60.0):
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    solves, worst, failures = 0, 0.0, []
    for i in range(n_cases):
        case = random_case(rng, max_buses=13, max_segments=3, horizon=int(rng.integers(1, 3)))
        for t in range(case.horizon):
            lp = build_clearing_lp(case, t)
            sol = solve(lp)
            if not sol.optimal:
                failures.append(f"case {i} hour {t}: {sol.status.value}")
                continue
            solves += 1
            rep = check_kkt(lp, sol, tol)
            res = clear_hour(case, t)
            gap_abs = rep.duality_gap * (1 + abs(sol.objective_value))
            worst = max(worst, *rep.blocks.values())
            if not rep.passed or gap_abs > tol * (1 + abs(res.welfare)):
                failures.append(f"case {i} hour {t}: {rep.failed_blocks()} gap {gap_abs:.2e}")
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed <= budget
    return ok, f"{n_cases} cases, {solves} solves, worst residual {worst:.1e}, {elapsed:.1f}s" + (
        f"; {failures[:3]}" if failures else ""
    )


def oracle_equivalence(n_cases=50, step=0.01, budget=120.0):
    rng = np.random.default_rng(SEED + 1)
    start = time.perf_counter()
    worst, failures = 0.0, []
    for i in range(n_cases):
        case = random_case(
            rng, n_buses=int(rng.integers(3, 6)), max_segments=2, max_responsive=3, min_responsive=2,
            quantum=0.1, max_segment_mw=1.5,
        )
        max_b = max(s.benefit for b in case.network.buses if b.bid for s in b.bid_at(0).segments)
        lp_w = clear_hour(case, 0).welfare
        o = brute_force_clear(case, 0, step)
        ratio = abs(lp_w - o.best_welfare) / (step * max_b)
        worst = max(worst, ratio)
        if ratio > 1.0:
            failures.append(f"case {i}: LP {lp_w:.6f} vs grid {o.best_welfare:.6f}")
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed <= budget
    return ok, f"{n_cases} cases, worst gap {worst:.3f} x (step*max benefit), {elapsed:.1f}s" + (
        f"; {failures[:3]}" if failures else ""
    )


def dual_validity(n_instances=30, rel=1e-3):
    rng = np.random.default_rng(SEED + 2)
    found, drawn, worst, failures = 0, 0, 0.0, []
    while found < n_instances and drawn < 20 * n_instances:
        drawn += 1
        case = random_case(rng, max_buses=10)
        res = clear_hour(case, 0)
        if res.degenerate_prices:
            continue
        found += 1
        for bus in case.network.bus_ids:
            if not case.network.bus(bus).is_proactive:
                continue
            try:
                p = perturbation_price(case, 0, bus, eps=1e-3, base=res)
            except Exception as exc:  # any failure here is a criterion failure
                failures.append(f"instance {found} bus {bus}: {exc}")
                continue
            err = abs(p - res.dlmp[bus]) / max(abs(res.dlmp[bus]), 1e-12)
            worst = max(worst, err)
            if err > rel:
                failures.append(f"instance {found} bus {bus}: {p} vs {res.dlmp[bus]}")
    ok = found == n_instances and not failures
    return ok, f"{found} nondegenerate instances ({drawn} drawn), worst relative error {worst:.1e}" + (
        f"; {failures[:3]}" if failures else ""
    )


def uncongested_uniformity(tol=1e-6):
    results = clear_horizon(scenarios.UNCONSTRAINED.case())
    spread = max(max(r.dlmp.values()) - min(r.dlmp.values()) for r in results)
    ok = spread <= tol and all(len(r.dlmp) == 13 for r in results)
    return ok, f"no line limits, 24 hours x 13 buses, max price spread {spread:.1e}"


def _path_sum(case, res, bus):
    total = 0.0
    for line in case.network.path_to_root(bus):
        direction = 1.0 if res.flows[line.id] >= 0 else -1.0
        total += direction * res.line_shadow[line.id]
    return total


def tlmp_parity(tol=1e-6):
    case = scenarios.VARIABLE.case()
    results = clear_horizon(case)
    clean = [r for r in results if not r.congested_lines()]
    parity = max((abs(p - r.tlmp) for r in clean for p in r.dlmp.values()), default=np.inf)
    imports = all(r.grid_power > 0 for r in clean)

    tight = scenarios.VARIABLE_TIGHT.case()
    tight_results = clear_horizon(tight)
    congested = [r for r in tight_results if r.congested_lines()]
    path_err = max(
        (abs(r.dlmp[b] - r.tlmp - _path_sum(tight, r, b)) for r in congested for b in r.dlmp), default=np.inf
    )
    ok = bool(clean) and imports and parity <= tol and bool(congested) and path_err <= tol
    return ok, (
        f"{len(clean)} uncongested hours, max |D-LMP - T-LMP| {parity:.1e}; "
        f"tightened variant: {len(congested)} congested hours, max path-sum error {path_err:.1e}"
    )


def congestion_pattern(tol=1e-6):
    case = scenarios.CONSTANT.case()
    net = case.network
    results = clear_horizon(case)
    problems, checked = [], 0
    for t in scenarios.CONGESTION_HOURS:
        res = results[t]
        for lid in scenarios.CONGESTED_LINES:
            line = net.line(lid)
            if lid not in res.congested_lines() or abs(abs(res.flows[lid]) - line.capacity) > tol:
                problems.append(f"hour {t}: line {line.from_bus}-{line.to_bus} not binding")
        for lid in res.congested_lines():
            line = net.line(lid)
            shadow = res.line_shadow[lid]
            downstream = [res.dlmp[b] for b in net.subtree(line.to_bus)]
            upstream = [res.dlmp[line.from_bus]] + [res.dlmp[ln.from_bus] for ln in net.path_to_root(line.from_bus)]
            jump = res.dlmp[line.to_bus] - res.dlmp[line.from_bus]
            checked += 1
            if abs(jump - shadow) > tol or min(downstream) < max(upstream) + shadow - tol:
                problems.append(f"hour {t}: prices across {line.from_bus}-{line.to_bus} do not separate by {shadow}")
    return not problems, (
        f"hours {list(scenarios.CONGESTION_HOURS)}: lines 5-6 and 4-9 bind, {checked} binding-line checks"
        + (f"; {problems[:3]}" if problems else "")
    )


def settlement_identities():
    problems, surpluses = [], {}
    for sc in scenarios.ALL:
        case = sc.case()
        results = clear_horizon(case)
        st = settle(results, case)
        surpluses[sc.name] = st.surplus
        if st.surplus != st.total_customer_payment - st.utility_payment:
            problems.append(f"{sc.name}: surplus is not C_c - C_u")
        for res, r in zip(results, st.balance_residuals):
            if r > 1e-6 * (1 + res.grid_power):
                problems.append(f"{sc.name} hour {res.hour}: balance residual {r:.2e}")
        dec = surplus_decomposition(st, results)
        if abs(dec.total - st.surplus) > 1e-9 * (1 + abs(st.surplus)):
            problems.append(f"{sc.name}: decomposition {dec.total} vs {st.surplus}")
    base, plus = surpluses[scenarios.CONSTANT.name], surpluses[scenarios.CONSTANT_PLUS10.name]
    if not (base > 0 > plus):
        problems.append(f"no sign flip: base {base:.2f}, +10% {plus:.2f}")
    return not problems, f"{len(scenarios.ALL)} scenarios; constant surplus {base:.2f} -> {plus:.2f} at +10%" + (
        f"; {problems[:3]}" if problems else ""
    )


def sweep_monotonicity(min_points=15):
    points = sweep_assigned_power(scenarios.CONSTANT.case(), scenarios.SWEEP_HOUR, scenarios.SWEEP_GRID)
    feasible = [p for p in points if not p.infeasible]
    clean = [p.average_dlmp for p in feasible if not p.degenerate]
    rising = [
        (a.assigned_power, b.assigned_power)
        for a, b in zip(feasible, feasible[1:])
        if not (a.degenerate or b.degenerate) and b.average_dlmp > a.average_dlmp + 1e-9
    ]
    monotone = all(a >= b - 1e-9 for a, b in zip(clean, clean[1:])) and not rising
    flagged = sum(p.degenerate for p in feasible)
    ok = len(feasible) >= min_points and monotone
    return ok, (
        f"hour {scenarios.SWEEP_HOUR}, {len(feasible)} feasible points "
        f"({flagged} flagged degenerate), avg D-LMP {feasible[0].average_dlmp:.2f} -> {feasible[-1].average_dlmp:.2f}"
    )


def determinism():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        codes = [
            cli_main(["clear", "--embedded", "--parallel", "--out", str(tmp / "p1")]),
            cli_main(["clear", "--embedded", "--parallel", "--out", str(tmp / "p2")]),
            cli_main(["clear", "--embedded", "--out", str(tmp / "serial")]),
        ]
        names = sorted(p.name for p in (tmp / "serial").iterdir())
        same = all(
            filecmp.cmp(tmp / "serial" / n, tmp / d / n, shallow=False) for n in names for d in ("p1", "p2")
        )
    return codes == [0, 0, 0] and same and bool(names), f"files {names} identical across 2 parallel + 1 serial run"


def round_trip_and_golden():
    text = serialize_case(embedded_case())
    stable = serialize_case(parse_case(text)) == text
    golden_case = (GOLDEN / "case.json").read_text()
    stable &= serialize_case(parse_case(golden_case)) == golden_case
    case = parse_case(golden_case)
    results = clear_horizon(case)
    sweep = sweep_assigned_power(case, 0, [2.0, 4.0, 8.0, 13.0, 14.0])
    with tempfile.TemporaryDirectory() as tmp:
        written = export_results(results, settle(results, case), tmp, case=case, sweep=sweep)
        mismatched = [p.name for p in written if p.read_bytes() != (GOLDEN / p.name).read_bytes()]
    return stable and not mismatched, f"round-trip byte-stable: {stable}; golden mismatches: {mismatched or 'none'}"


CRITERIA = {
    1: ("KKT suite", kkt_suite),
    2: ("oracle equivalence", oracle_equivalence),
    3: ("dual validity", dual_validity),
    4: ("uncongested uniformity", uncongested_uniformity),
    5: ("T-LMP parity", tlmp_parity),
    6: ("congestion pattern", congestion_pattern),
    7: ("settlement identities", settlement_identities),
    8: ("sweep monotonicity", sweep_monotonicity),
    9: ("determinism", determinism),
    10: ("round-trip and golden files", round_trip_and_golden),
}


def report(number):
    name, fn = CRITERIA[number]
    ok, detail = fn()
    return ok, f"[acceptance {number}] {'PASS' if ok else 'FAIL'}  {name}: {detail}"


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    ok, line = report(number)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [report(n) for n in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
