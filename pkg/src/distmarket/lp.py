"""Dense bounded-variable simplex with dual extraction.

Variable bounds are handled natively (nonbasic variables sit at a bound, or
at zero when free), so reduced costs double as bound multipliers. Pivoting
follows Bland's least-index rule for both the entering and the leaving
choice, which rules out cycling and makes the result a deterministic
function of the input.

Sign convention for every multiplier reported in ``LpSolution``: it is the
sensitivity of the optimal objective to the corresponding right-hand side or
bound. For a maximisation, duals of ``a.x <= b`` rows are therefore >= 0,
reduced costs are >= 0 at an upper bound and <= 0 at a lower bound. For a
minimisation the signs flip.

At a degenerate optimum (a basic variable sitting on one of its bounds) the
duals are not unique; the solver returns those of its terminal basis and sets
``LpSolution.degenerate``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import MalformedProgram, NumericalBreakdown

INF = math.inf
KKT_TOL = 1e-7


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class Variable:
    name: str
    lower: float = 0.0
    upper: float = INF
    cost: float = 0.0


@dataclass
class Row:
    name: str
    coeffs: dict[str, float]
    rhs: float


@dataclass
class LinearProgram:
    """Named-variable LP: optimise c.x subject to equality and <= rows and bounds."""

    sense: str = "maximize"
    variables: list[Variable] = field(default_factory=list)
    equalities: list[Row] = field(default_factory=list)
    inequalities: list[Row] = field(default_factory=list)

    def add_variable(self, name, lower=0.0, upper=INF, cost=0.0) -> str:
        self.variables.append(Variable(name, float(lower), float(upper), float(cost)))
        return name

    def add_eq(self, name, coeffs: Mapping[str, float], rhs: float):
        self.equalities.append(Row(name, dict(coeffs), float(rhs)))

    def add_le(self, name, coeffs: Mapping[str, float], rhs: float):
        self.inequalities.append(Row(name, dict(coeffs), float(rhs)))

    @property
    def variable_names(self) -> list[str]:
        return [v.name for v in self.variables]

    def validate(self):
        if self.sense not in ("maximize", "minimize"):
            raise MalformedProgram(f"unknown sense {self.sense!r}")
        names = set()
        for v in self.variables:
            if v.name in names:
                raise MalformedProgram(f"duplicate variable {v.name!r}")
            names.add(v.name)
            if not math.isfinite(v.cost):
                raise MalformedProgram(f"non-finite cost on {v.name!r}")
            if math.isnan(v.lower) or math.isnan(v.upper) or v.lower == INF or v.upper == -INF:
                raise MalformedProgram(f"bad bounds on {v.name!r}: [{v.lower}, {v.upper}]")
            if v.lower > v.upper:
                raise MalformedProgram(f"lower > upper on {v.name!r}: [{v.lower}, {v.upper}]")
        rows = set()
        for row in self.equalities + self.inequalities:
            if row.name in rows:
                raise MalformedProgram(f"duplicate row {row.name!r}")
            rows.add(row.name)
            if not math.isfinite(row.rhs):
                raise MalformedProgram(f"non-finite rhs on row {row.name!r}")
            for var, a in row.coeffs.items():
                if var not in names:
                    raise MalformedProgram(f"row {row.name!r} references unknown variable {var!r}")
                if not math.isfinite(a):
                    raise MalformedProgram(f"non-finite coefficient on {var!r} in row {row.name!r}")

    def arrays(self):
        """Return ``c, A_eq, b_eq, A_le, b_le, lower, upper`` as dense arrays."""
        index = {v.name: j for j, v in enumerate(self.variables)}
        n = len(self.variables)

        def dense(rows):
            A = np.zeros((len(rows), n))
            for i, row in enumerate(rows):
                for var, a in row.coeffs.items():
                    A[i, index[var]] += a
            return A, np.array([r.rhs for r in rows], dtype=float)

        A_eq, b_eq = dense(self.equalities)
        A_le, b_le = dense(self.inequalities)
        c = np.array([v.cost for v in self.variables], dtype=float)
        lo = np.array([v.lower for v in self.variables], dtype=float)
        hi = np.array([v.upper for v in self.variables], dtype=float)
        return c, A_eq, b_eq, A_le, b_le, lo, hi

    def dump(self) -> str:
        """Human-readable listing with stable ordering, one row per line."""

        def num(x):
            return f"{x:.12g}"

        def terms(coeffs):
            return " ".join(f"{num(a)}*{v}" for v, a in sorted(coeffs.items()) if a != 0)

        out = [f"{self.sense} {terms({v.name: v.cost for v in self.variables})}"]
        for row in sorted(self.equalities, key=lambda r: r.name):
            out.append(f"{row.name} = {num(row.rhs)} : {terms(row.coeffs)}")
        for row in sorted(self.inequalities, key=lambda r: r.name):
            out.append(f"{row.name} <= {num(row.rhs)} : {terms(row.coeffs)}")
        for v in sorted(self.variables, key=lambda v: v.name):
            out.append(f"bound {v.name} in [{num(v.lower)}, {num(v.upper)}]")
        return "\n".join(out) + "\n"


@dataclass
class LpSolution:
    status: LpStatus
    variable_names: list[str]
    eq_names: list[str]
    le_names: list[str]
    primal: np.ndarray
    objective_value: float
    duals_eq: np.ndarray
    duals_ineq: np.ndarray
    reduced_costs: np.ndarray
    degenerate: bool = False
    iterations: int = 0

    def __post_init__(self):
        self._var = {n: i for i, n in enumerate(self.variable_names)}
        self._eq = {n: i for i, n in enumerate(self.eq_names)}
        self._le = {n: i for i, n in enumerate(self.le_names)}

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    def value(self, name: str) -> float:
        return float(self.primal[self._var[name]])

    def reduced_cost(self, name: str) -> float:
        return float(self.reduced_costs[self._var[name]])

    def dual_eq(self, name: str) -> float:
        return float(self.duals_eq[self._eq[name]])

    def dual_ineq(self, name: str) -> float:
        return float(self.duals_ineq[self._le[name]])


class _Simplex:
    """Bounded primal simplex on ``min cost.x, A x = b, lo <= x <= hi``.

    Artificial columns (one per row) are appended for phase one and are
    pinned to zero afterwards.
    """

    PIVOT_TOL = 1e-9
    OPT_TOL = 1e-9

    def __init__(self, A, b, lo, hi):
        m, n = A.shape
        self.m, self.n = m, n
        x = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
        resid = b - A @ x
        sign = np.where(resid >= 0, 1.0, -1.0)
        self.A = np.hstack([A, np.diag(sign)]) if m else A.copy()
        self.b = b.astype(float)
        self.lo = np.concatenate([lo, np.zeros(m)])
        self.hi = np.concatenate([hi, np.full(m, INF)])
        self.x = np.concatenate([x, np.abs(resid)])
        self.basis = list(range(n, n + m))
        self.iterations = 0
        self.max_iter = 50 * (m + n) + 1000

    def _solve(self, M, rhs):
        if M.shape[0] == 0:
            return np.zeros(0)
        try:
            out = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError as exc:
            raise NumericalBreakdown(f"singular basis: {exc}") from None
        if not np.all(np.isfinite(out)):
            raise NumericalBreakdown("non-finite values in basis solve")
        return out

    def _basis_matrix(self):
        return self.A[:, self.basis]

    def _refresh(self, B):
        nonbasic = np.ones(self.A.shape[1], dtype=bool)
        nonbasic[self.basis] = False
        rhs = self.b - self.A[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = self._solve(B, rhs)

    def duals(self, cost):
        B = self._basis_matrix()
        y = self._solve(B.T, cost[self.basis])
        d = cost - self.A.T @ y
        d[self.basis] = 0.0
        return y, d

    def _entering(self, d):
        in_basis = np.zeros(self.A.shape[1], dtype=bool)
        in_basis[self.basis] = True
        for j in range(self.A.shape[1]):
            if in_basis[j] or self.hi[j] - self.lo[j] <= 0:
                continue
            if d[j] < -self.OPT_TOL and self.x[j] < self.hi[j]:
                return j, 1.0
            if d[j] > self.OPT_TOL and self.x[j] > self.lo[j]:
                return j, -1.0
        return None, 0.0

    def optimize(self, cost) -> LpStatus:
        while True:
            if self.iterations >= self.max_iter:
                raise NumericalBreakdown(f"iteration limit {self.max_iter} reached")
            B = self._basis_matrix()
            self._refresh(B)
            y = self._solve(B.T, cost[self.basis])
            d = cost - self.A.T @ y
            d[self.basis] = 0.0
            q, direction = self._entering(d)
            if q is None:
                return LpStatus.OPTIMAL
            self.iterations += 1
            alpha = self._solve(B, self.A[:, q])
            delta = -direction * alpha  # rate of change of x_B per unit step

            step = self.hi[q] - self.lo[q]
            leave = None
            for i, bi in enumerate(self.basis):
                if delta[i] < -self.PIVOT_TOL and math.isfinite(self.lo[bi]):
                    t = (self.x[bi] - self.lo[bi]) / -delta[i]
                elif delta[i] > self.PIVOT_TOL and math.isfinite(self.hi[bi]):
                    t = (self.hi[bi] - self.x[bi]) / delta[i]
                else:
                    continue
                t = max(t, 0.0)
                if t < step - 1e-12:
                    step, leave = t, i
                elif leave is not None and abs(t - step) <= 1e-12 and bi < self.basis[leave]:
                    step, leave = t, i
            if not math.isfinite(step):
                return LpStatus.UNBOUNDED

            if leave is None:
                self.x[q] = self.hi[q] if direction > 0 else self.lo[q]
                continue
            bl = self.basis[leave]
            self.x[q] += direction * step
            self.x[bl] = self.lo[bl] if delta[leave] < 0 else self.hi[bl]
            self.basis[leave] = q

    def drive_out_artificials(self):
        """Replace zero-valued artificial basics by structural columns where possible."""
        for r in range(self.m):
            if self.basis[r] < self.n:
                continue
            B = self._basis_matrix()
            e = np.zeros(self.m)
            e[r] = 1.0
            rho = self._solve(B.T, e)
            row = rho @ self.A[:, : self.n]
            row[[j for j in self.basis if j < self.n]] = 0.0
            j = int(np.argmax(np.abs(row))) if self.n else 0
            if self.n and abs(row[j]) > 1e-7:
                self.x[self.basis[r]] = 0.0
                self.basis[r] = j
        self._refresh(self._basis_matrix())

    def basic_at_bound(self) -> bool:
        for j in self.basis:
            if j >= self.n:
                continue
            for bound in (self.lo[j], self.hi[j]):
                if math.isfinite(bound) and abs(self.x[j] - bound) <= 1e-9 * (1 + abs(bound)):
                    return True
        return False


def solve(lp: LinearProgram) -> LpSolution:
    """Solve ``lp``; status is Optimal, Infeasible or Unbounded.

    Raises MalformedProgram for invalid input and NumericalBreakdown when the
    basis becomes singular or the iteration cap is hit.
    """
    lp.validate()
    c, A_eq, b_eq, A_le, b_le, lo, hi = lp.arrays()
    n, me, mi = len(c), len(b_eq), len(b_le)
    sigma = -1.0 if lp.sense == "maximize" else 1.0

    A = np.zeros((me + mi, n + mi))
    A[:me, :n] = A_eq
    A[me:, :n] = A_le
    A[me:, n:] = np.eye(mi)
    b = np.concatenate([b_eq, b_le])
    cost = np.concatenate([sigma * c, np.zeros(mi)])
    lower = np.concatenate([lo, np.zeros(mi)])
    upper = np.concatenate([hi, np.full(mi, INF)])

    sx = _Simplex(A, b, lower, upper)
    total = sx.A.shape[1]
    names = lp.variable_names
    eq_names = [r.name for r in lp.equalities]
    le_names = [r.name for r in lp.inequalities]

    def empty(status):
        nan = np.full(n, np.nan)
        return LpSolution(
            status, names, eq_names, le_names, nan, math.nan,
            np.full(me, np.nan), np.full(mi, np.nan), np.full(n, np.nan),
            iterations=sx.iterations,
        )

    phase1 = np.zeros(total)
    phase1[sx.n:] = 1.0
    sx.optimize(phase1)
    infeas = float(sx.x[sx.n:].sum())
    if infeas > 1e-8 * (1.0 + float(np.max(np.abs(b), initial=0.0))):
        return empty(LpStatus.INFEASIBLE)
    sx.drive_out_artificials()
    sx.hi[sx.n:] = 0.0
    for j in range(sx.n, total):
        if j not in sx.basis:
            sx.x[j] = 0.0

    phase2 = np.concatenate([cost, np.zeros(sx.m)])
    status = sx.optimize(phase2)
    if status is LpStatus.UNBOUNDED:
        return empty(status)
    y, d = sx.duals(phase2)
    x = sx.x[:n] + 0.0
    return LpSolution(
        LpStatus.OPTIMAL,
        names, eq_names, le_names,
        primal=x,
        objective_value=float(c @ x),
        duals_eq=sigma * y[:me] + 0.0,
        duals_ineq=sigma * y[me:] + 0.0,
        reduced_costs=sigma * d[:n] + 0.0,
        degenerate=sx.basic_at_bound(),
        iterations=sx.iterations,
    )


@dataclass
class KktReport:
    feasibility: float
    stationarity: float
    complementarity: float
    duality_gap: float  # relative: |primal - dual| / (1 + |primal|)
    tol: float

    @property
    def blocks(self) -> dict[str, float]:
        return {
            "feasibility": self.feasibility,
            "stationarity": self.stationarity,
            "complementarity": self.complementarity,
            "duality_gap": self.duality_gap,
        }

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.blocks.values())

    def failed_blocks(self) -> list[str]:
        return [k for k, v in self.blocks.items() if not v <= self.tol]


def check_kkt(lp: LinearProgram, sol: LpSolution, tol: float = KKT_TOL) -> KktReport:
    """Residuals of the optimality conditions for ``sol`` (must be Optimal).

    The stationarity block also carries dual-sign violations: a row or bound
    multiplier with the wrong sign for the optimisation sense, or a nonzero
    reduced cost pointing at an infinite bound.
    """
    c, A_eq, b_eq, A_le, b_le, lo, hi = lp.arrays()
    x = np.asarray(sol.primal, dtype=float)
    y = np.asarray(sol.duals_eq, dtype=float)
    mu = np.asarray(sol.duals_ineq, dtype=float)
    rc = np.asarray(sol.reduced_costs, dtype=float)
    s = 1.0 if lp.sense == "maximize" else -1.0

    def mx(a):
        return float(np.max(a, initial=0.0))

    slack = b_le - A_le @ x
    feas = max(
        mx(np.abs(A_eq @ x - b_eq)),
        mx(-slack),
        mx(np.where(np.isfinite(lo), lo - x, 0.0)),
        mx(np.where(np.isfinite(hi), x - hi, 0.0)),
    )

    grad = c - A_eq.T @ y - A_le.T @ mu - rc
    up = s * rc > 0  # multiplier on the upper bound
    down = s * rc < 0
    sign_bad = np.concatenate([
        np.maximum(-s * mu, 0.0),
        np.where(up & ~np.isfinite(hi), np.abs(rc), 0.0),
        np.where(down & ~np.isfinite(lo), np.abs(rc), 0.0),
    ])
    stat = max(mx(np.abs(grad)), mx(sign_bad))

    with np.errstate(invalid="ignore"):
        comp_rows = np.abs(mu) * np.maximum(slack, 0.0)
        comp_up = np.where(up & np.isfinite(hi), np.abs(rc) * np.abs(hi - x), 0.0)
        comp_down = np.where(down & np.isfinite(lo), np.abs(rc) * np.abs(x - lo), 0.0)
    comp = max(mx(comp_rows), mx(comp_up), mx(comp_down))

    bound_terms = np.where(up & np.isfinite(hi), rc * np.where(np.isfinite(hi), hi, 0.0), 0.0)
    bound_terms += np.where(down & np.isfinite(lo), rc * np.where(np.isfinite(lo), lo, 0.0), 0.0)
    dual_obj = float(b_eq @ y + b_le @ mu + bound_terms.sum())
    primal_obj = float(c @ x)
    gap = abs(primal_obj - dual_obj) / (1.0 + abs(primal_obj))
    return KktReport(feas, stat, comp, gap, tol)
