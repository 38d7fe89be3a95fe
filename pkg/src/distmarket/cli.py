"""distmarket command line: validate, clear, settle, sweep, aggregate.

Exit status: 0 ok, 1 parse/validation failure, 2 infeasible market,
3 numerical failure. Tables go to --out (or $DISTMARKET_OUTPUT_DIR).
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .aggregation import aggregate, aggregate_horizon
from .caseio import aggregate_table, embedded_case, export_results, read_case, sweep_table
from .clearing import clear_horizon, clear_hour, sweep_assigned_power
from .errors import (
    DmoError,
    HorizonClearingError,
    HourOutOfRange,
    InfeasibleMarket,
    InvalidCase,
    NumericalBreakdown,
    ParseError,
)
from .lp import KKT_TOL
from .model import ClearingMode, MarketCase
from .settlement import settle, surplus_decomposition

OUTPUT_ENV = "DISTMARKET_OUTPUT_DIR"
DEFAULT_OUTPUT = "distmarket-output"

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 1, 2, 3
COMMANDS = ("validate", "clear", "settle", "sweep", "aggregate")


@dataclass(frozen=True)
class RunConfig:
    command: str
    case_path: Optional[str] = None
    embedded: bool = False
    mode: Optional[ClearingMode] = None
    hour: Optional[int] = None
    grid: Optional[tuple[float, ...]] = None
    out: Optional[str] = None
    tol: float = KKT_TOL
    parallel: bool = False
    ignore_limits: bool = False
    scale_power: float = 1.0

    def output_dir(self) -> Path:
        return Path(self.out or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)


class UsageError(DmoError):
    pass


def parse_grid(spec: str) -> tuple[float, ...]:
    """'start:stop:step' with an inclusive stop, e.g. 1:10:0.5 -> 19 values."""
    try:
        start, stop, step = (float(x) for x in spec.split(":"))
    except ValueError:
        raise UsageError(f"grid must be start:stop:step, got {spec!r}") from None
    if step <= 0 or stop < start:
        raise UsageError(f"grid {spec!r} needs step > 0 and stop >= start")
    n = int(round((stop - start) / step + 1e-9)) + 1
    # round away binary noise so 1 + 17 * 0.5 prints as 9.5
    return tuple(round(start + i * step, 12) for i in range(n) if start + i * step <= stop + 1e-9)


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2, which would read as "infeasible"
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="distmarket", description="Distribution market clearing and settlement.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("case", nargs="?", help="case file (JSON)")
    p.add_argument("--embedded", action="store_true", help="use the bundled 13-bus case")
    p.add_argument("--mode", choices=[m.value for m in ClearingMode])
    p.add_argument("--hour", type=int)
    p.add_argument("--grid", help="sweep grid start:stop:step (stop inclusive)")
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
    p.add_argument("--tol", type=float, default=KKT_TOL, help="binding-line and residual tolerance")
    p.add_argument("--parallel", action="store_true", help="clear hours on a thread pool")
    p.add_argument("--ignore-limits", action="store_true", help="drop every line capacity")
    p.add_argument("--scale-power", type=float, default=1.0, help="multiply the assigned-power profile")
    return p


def config_from_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    if bool(ns.case) == ns.embedded:
        raise UsageError("give exactly one case source: a case file or --embedded")
    if ns.command == "sweep" and (ns.hour is None or ns.grid is None):
        raise UsageError("sweep needs --hour and --grid")
    return RunConfig(
        command=ns.command,
        case_path=ns.case,
        embedded=ns.embedded,
        mode=ClearingMode(ns.mode) if ns.mode else None,
        hour=ns.hour,
        grid=parse_grid(ns.grid) if ns.grid else None,
        out=ns.out,
        tol=ns.tol,
        parallel=ns.parallel,
        ignore_limits=ns.ignore_limits,
        scale_power=ns.scale_power,
    )


def load_case(cfg: RunConfig) -> MarketCase:
    case = embedded_case() if cfg.embedded else read_case(cfg.case_path)
    if cfg.mode is not None:
        case = case.with_mode(cfg.mode)
    if cfg.ignore_limits:
        case = case.without_line_limits()
    if cfg.scale_power != 1.0:
        case = case.scale_assigned_power(cfg.scale_power)
    return case


def _clear(case: MarketCase, cfg: RunConfig):
    if cfg.hour is not None:
        return [clear_hour(case, cfg.hour)]
    return clear_horizon(case, parallel=cfg.parallel)


def _print_clearing(results, case: MarketCase, cfg: RunConfig, out):
    for res in results:
        prices = " ".join(f"{b}:{p:.4f}" for b, p in sorted(res.dlmp.items()))
        binding = [
            f"{case.network.line(l).from_bus}-{case.network.line(l).to_bus}" for l in res.congested_lines(cfg.tol)
        ]
        flag = " (degenerate prices)" if res.degenerate_prices else ""
        print(f"hour {res.hour:2d}  P={res.grid_power:.4f} MW  welfare={res.welfare:.4f}{flag}", file=out)
        print(f"  dlmp  {prices}", file=out)
        print(f"  binding lines: {', '.join(binding) if binding else 'none'}", file=out)


def _written(paths, out):
    for path in paths:
        print(f"wrote {path}", file=out)


def run(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    case = load_case(cfg)
    if cfg.hour is not None and not 0 <= cfg.hour < case.horizon:
        raise HourOutOfRange(f"hour {cfg.hour} outside horizon 0..{case.horizon - 1}")

    if cfg.command == "validate":
        n_bids = sum(1 for b in case.network.buses if b.is_proactive)
        print(
            f"valid case: {len(case.network.buses)} buses, {len(case.network.lines)} lines, "
            f"{n_bids} proactive, horizon {case.horizon}, mode {case.mode.value}",
            file=out,
        )
        return EXIT_OK

    if cfg.command == "sweep":
        if case.mode is not ClearingMode.CONSTANT:
            raise UsageError("sweep requires constant-power mode")
        points = sweep_assigned_power(case, cfg.hour, cfg.grid)
        print("assigned_power_mw  avg_dlmp  flag", file=out)
        for p in points:
            avg = "infeasible" if p.infeasible else f"{p.average_dlmp:.4f}"
            print(f"{p.assigned_power:10.4f}  {avg}  {'degenerate' if p.degenerate else ''}".rstrip(), file=out)
        dest = cfg.output_dir()
        dest.mkdir(parents=True, exist_ok=True)
        path = dest / "sweep.csv"
        path.write_text(sweep_table(points))
        _written([path], out)
        return EXIT_OK

    if cfg.command == "aggregate":
        bids = [aggregate(case, cfg.hour)] if cfg.hour is not None else aggregate_horizon(case)
        for bid in bids:
            steps = ", ".join(f"({p:g}, {q:g})" for p, q in bid.breakpoints)
            print(f"hour {bid.hour:2d}  base {bid.base:.4f} MW  bid {steps}", file=out)
        dest = cfg.output_dir()
        dest.mkdir(parents=True, exist_ok=True)
        path = dest / "aggregate.csv"
        path.write_text(aggregate_table(bids))
        _written([path], out)
        return EXIT_OK

    if cfg.command == "settle" and cfg.hour is not None:
        raise UsageError("settle covers the whole horizon; drop --hour")
    results = _clear(case, cfg)
    _print_clearing(results, case, cfg, out)
    settlement = None
    if cfg.command == "settle":
        settlement = settle(results, case)
        decomposition = surplus_decomposition(settlement, results)
        print(f"C_c (customer payments): {settlement.total_customer_payment:.4f}", file=out)
        print(f"C_u (utility payment):   {settlement.utility_payment:.4f}", file=out)
        print(f"C_delta (surplus):       {settlement.surplus:.4f}", file=out)
        print("surplus by hour:", file=out)
        for t, (value, terms) in enumerate(zip(decomposition.hourly, decomposition.terms)):
            nonzero = ", ".join(f"{b}:{v:.4f}" for b, v in terms.items() if abs(v) > 5e-5)
            print(f"  hour {t:2d}  {value:.4f}  [{nonzero}]", file=out)
        ok = settlement.balance_ok(results, cfg.tol)
        print(f"balance residual check: {'pass' if ok else 'FAIL'}", file=out)
        if not ok:
            return EXIT_NUMERICAL
    _written(export_results(results, settlement, cfg.output_dir(), case=case), out)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    err = sys.stderr
    try:
        cfg = config_from_args(argv)
        return run(cfg)
    except (ParseError, InvalidCase) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INVALID
    except (UsageError, HourOutOfRange, ValueError, OSError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INVALID
    except HorizonClearingError as exc:
        print(f"error: {exc}", file=err)
        for t, failure in sorted(exc.failures.items()):
            print(f"  {failure}", file=err)
        numerical = any(isinstance(f, NumericalBreakdown) for f in exc.failures.values())
        return EXIT_NUMERICAL if numerical else EXIT_INFEASIBLE
    except InfeasibleMarket as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INFEASIBLE
    except NumericalBreakdown as exc:
        print(f"error: {exc}", file=err)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
