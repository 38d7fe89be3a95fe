"""Customer payments, utility payment and the DMO cost surplus."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .clearing import ClearingResult
from .errors import MismatchedInputs
from .lp import KKT_TOL
from .model import MarketCase


@dataclass(frozen=True)
class Settlement:
    customer_payments: list[dict[int, float]]  # per hour: bus -> $
    total_customer_payment: float
    hourly_utility_payment: list[float]
    utility_payment: float
    surplus: float
    balance_residuals: list[float]  # per hour |PM - sum of loads|, MW

    @property
    def hourly_customer_payment(self) -> list[float]:
        return [sum(p.values()) for p in self.customer_payments]

    @property
    def hourly_surplus(self) -> list[float]:
        return [c - u for c, u in zip(self.hourly_customer_payment, self.hourly_utility_payment)]

    def balance_ok(self, results: Sequence[ClearingResult], tol: float = KKT_TOL) -> bool:
        return all(r <= tol * (1 + res.grid_power) for r, res in zip(self.balance_residuals, results))


def _check_inputs(results: Sequence[ClearingResult], case: MarketCase):
    if len(results) != case.horizon:
        raise MismatchedInputs(f"{len(results)} results for a {case.horizon}-hour case")
    buses = set(case.network.bus_ids)
    for t, res in enumerate(results):
        if res is None or res.hour != t:
            raise MismatchedInputs(f"result {t} is missing or stamped with another hour")
        if set(res.dlmp) != buses:
            raise MismatchedInputs(f"hour {t}: result buses do not match the case network")
        if res.tlmp != case.tlmp[t]:
            raise MismatchedInputs(f"hour {t}: result T-LMP {res.tlmp} differs from case {case.tlmp[t]}")


def settle(results: Sequence[ClearingResult], case: MarketCase) -> Settlement:
    """Payments over the horizon. Fixed loads pay the bus D-LMP like responsive ones."""
    _check_inputs(results, case)
    payments, utility, residuals = [], [], []
    for res in results:
        payments.append({b: res.dlmp[b] * res.load(b) for b in sorted(res.dlmp)})
        utility.append(res.tlmp * res.grid_power)
        residuals.append(abs(res.grid_power - sum(res.load(b) for b in res.dlmp)))
    c_c = sum(sum(p.values()) for p in payments)
    c_u = sum(utility)
    return Settlement(payments, c_c, utility, c_u, c_c - c_u, residuals)


@dataclass(frozen=True)
class SurplusDecomposition:
    terms: list[dict[int, float]]  # per hour: bus -> (dlmp - tlmp) * load
    hourly: list[float]

    @property
    def total(self) -> float:
        return sum(self.hourly)


def surplus_decomposition(settlement: Settlement, results: Sequence[ClearingResult]) -> SurplusDecomposition:
    if len(results) != len(settlement.customer_payments):
        raise MismatchedInputs("settlement and results cover different horizons")
    terms = []
    for res in results:
        terms.append({b: (res.dlmp[b] - res.tlmp) * res.load(b) for b in sorted(res.dlmp)})
    return SurplusDecomposition(terms, [sum(t.values()) for t in terms])
