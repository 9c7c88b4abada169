"""Linear programs and the solvers behind them.

Exact mode runs a bounded-variable primal simplex over Fractions. Float mode defaults
to scipy's HiGHS; the same simplex can be selected in float mode for cross-checks.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import linprog

from .exceptions import DimensionMismatchError, InstrumentalError
from .numeric_helper import field_for

logger = logging.getLogger(__name__)

# --- Solver Constants ---
BACKEND_SIMPLEX = 'simplex'
BACKEND_HIGHS = 'highs'
OPTIMAL, INFEASIBLE, UNBOUNDED = 'optimal', 'infeasible', 'unbounded'
DEGENERATE_STREAK_FOR_BLAND = 50
MAX_PIVOTS = 200000
FLOAT_DROP = 1e-12
HIGHS_OPTIONS = {
    'primal_feasibility_tolerance': 1e-10,
    'dual_feasibility_tolerance': 1e-10,
}


class NumericalFailureError(InstrumentalError):
    code = 'numerical-failure'


@dataclass(frozen=True, eq=False)
class LPProblem:
    """``sense`` c·x subject to A_ub x <= b_ub, A_eq x = b_eq and per-variable bounds.

    A bound is ``(lower, upper)`` with ``None`` for an infinite side. ``var_blocks`` and
    ``row_blocks`` name contiguous slices so solutions can be read back by block.
    """
    sense: str
    c: np.ndarray
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    bounds: List[Tuple[Optional[object], Optional[object]]] = field(default_factory=list)
    var_blocks: Dict[str, slice] = field(default_factory=dict)
    row_blocks: Dict[str, slice] = field(default_factory=dict)
    exact: bool = False
    label: str = 'lp'

    def __post_init__(self):
        n = len(self.c)
        if self.sense not in ('max', 'min'):
            raise DimensionMismatchError(f"LP sense must be 'max' or 'min', got {self.sense!r}.")
        for name in ('ub', 'eq'):
            A, b = getattr(self, f"A_{name}"), getattr(self, f"b_{name}")
            if (A is None) != (b is None):
                raise DimensionMismatchError(f"A_{name} and b_{name} must be given together.")
            if A is not None and (A.ndim != 2 or A.shape[1] != n or A.shape[0] != len(b)):
                raise DimensionMismatchError(
                    f"A_{name} has shape {A.shape}, expected ({len(b)}, {n})."
                )
        if len(self.bounds) != n:
            raise DimensionMismatchError(f"{len(self.bounds)} bounds given for {n} variables.")
        for lower, upper in self.bounds:
            if lower is not None and upper is not None and lower > upper:
                raise DimensionMismatchError(f"Empty bound interval [{lower}, {upper}].")

    @property
    def n_vars(self):
        return len(self.c)

    @property
    def n_ub(self):
        return 0 if self.A_ub is None else self.A_ub.shape[0]

    @property
    def n_eq(self):
        return 0 if self.A_eq is None else self.A_eq.shape[0]

    @property
    def field(self):
        return field_for(self.exact)


@dataclass(frozen=True, eq=False)
class LPSolution:
    status: str
    objective: Optional[object] = None
    x: Optional[np.ndarray] = None
    var_blocks: Dict[str, slice] = field(default_factory=dict)
    backend: str = BACKEND_SIMPLEX
    pivots: int = 0

    @property
    def optimal(self):
        return self.status == OPTIMAL

    def block(self, name):
        return self.x[self.var_blocks[name]]

    @property
    def blocks(self):
        return {name: self.x[span] for name, span in self.var_blocks.items()}


def objective_value(problem, x):
    return problem.c @ x


# --- Bounded-variable simplex ---
class BoundedSimplex:
    """Primal simplex with native variable bounds over a NumberField.

    Rows are sparse dicts kept in tableau form: every row has coefficient 1 on its
    basic variable and 0 on the other basic variables. Variable values are carried
    explicitly, nonbasic ones sit at a finite bound (or at 0 when free).
    """

    def __init__(self, problem):
        self.problem = problem
        self.field = problem.field
        self.pivots = 0
        self._degenerate_streak = 0
        self._bland = False

    # -- setup --
    def _setup(self):
        problem, nf = self.problem, self.field
        n = problem.n_vars
        self.lower, self.upper = [], []
        for lower, upper in problem.bounds:
            self.lower.append(None if lower is None else nf.convert(lower))
            self.upper.append(None if upper is None else nf.convert(upper))
        self.value = []
        for lower, upper in zip(self.lower, self.upper):
            self.value.append(lower if lower is not None else (upper if upper is not None else nf.convert(0)))

        raw_rows = []
        for i in range(problem.n_ub):
            raw_rows.append((self._sparse(problem.A_ub[i]), nf.convert(problem.b_ub[i]), True))
        for i in range(problem.n_eq):
            raw_rows.append((self._sparse(problem.A_eq[i]), nf.convert(problem.b_eq[i]), False))

        self.rows, self.basis = [], []
        self.artificial = set()
        n_total = n
        for coeffs, rhs, is_ub in raw_rows:
            residual = rhs - sum(value * self.value[j] for j, value in coeffs.items())
            row = dict(coeffs)
            if is_ub:
                slack = n_total
                n_total += 1
                self.lower.append(nf.convert(0))
                self.upper.append(None)
                row[slack] = nf.convert(1)
                if not nf.is_negative(residual):
                    self.value.append(residual)
                    self.rows.append(row)
                    self.basis.append(slack)
                    continue
                self.value.append(nf.convert(0))
            sign = -1 if residual < 0 else 1
            artificial = n_total
            n_total += 1
            self.lower.append(nf.convert(0))
            self.upper.append(None)
            self.value.append(abs(residual))
            row[artificial] = nf.convert(sign)
            if sign < 0:
                row = {j: -value for j, value in row.items()}
            self.rows.append(row)
            self.basis.append(artificial)
            self.artificial.add(artificial)
        self.n_total = n_total

    def _sparse(self, dense):
        nf = self.field
        return {j: nf.convert(value) for j, value in enumerate(dense) if value != 0}

    # -- core iteration --
    def _reduced_costs(self, cost):
        d = {j: value for j, value in cost.items() if value != 0}
        for row, basic in zip(self.rows, self.basis):
            c_basic = cost.get(basic, 0)
            if c_basic == 0:
                continue
            for j, value in row.items():
                d[j] = d.get(j, 0) - c_basic * value
        basic_set = set(self.basis)
        return {j: value for j, value in d.items() if j not in basic_set and not self.field.is_zero(value)}

    def _entering(self, d, excluded):
        nf = self.field
        best, best_score = None, None
        for j in sorted(d) if self._bland else d:
            if j in excluded:
                continue
            dj = d[j]
            if nf.is_negative(dj) and (self.upper[j] is None or self.value[j] < self.upper[j]):
                direction = 1
            elif nf.is_positive(dj) and (self.lower[j] is None or self.value[j] > self.lower[j]):
                direction = -1
            else:
                continue
            if self._bland:
                return j, direction
            score = abs(dj)
            if best is None or score > best_score:
                best, best_score = (j, direction), score
        return best

    def _ratio_test(self, j, direction):
        nf = self.field
        theta, leaving = None, None
        if self.lower[j] is not None and self.upper[j] is not None:
            theta = self.upper[j] - self.lower[j]
        for r, row in enumerate(self.rows):
            a = row.get(j)
            if a is None or nf.is_zero(a):
                continue
            basic = self.basis[r]
            rate = -a * direction
            if rate < 0 and self.lower[basic] is not None:
                limit = (self.value[basic] - self.lower[basic]) / -rate
            elif rate > 0 and self.upper[basic] is not None:
                limit = (self.upper[basic] - self.value[basic]) / rate
            else:
                continue
            if limit < 0:
                limit = nf.convert(0)
            if theta is None or limit < theta or (
                    limit == theta and leaving is not None and basic < self.basis[leaving]):
                theta, leaving = limit, r
        return theta, leaving

    def _pivot(self, r, j, d):
        nf = self.field
        pivot_row = self.rows[r]
        a = pivot_row[j]
        pivot_row = {k: value / a for k, value in pivot_row.items()}
        pivot_row[j] = nf.convert(1)
        self.rows[r] = pivot_row
        for i, row in enumerate(self.rows):
            if i == r:
                continue
            factor = row.get(j)
            if factor is None:
                continue
            for k, value in pivot_row.items():
                updated = row.get(k, 0) - factor * value
                if updated == 0 or (not nf.exact and abs(updated) <= FLOAT_DROP):
                    row.pop(k, None)
                else:
                    row[k] = updated
            row.pop(j, None)
        dj = d.pop(j, None)
        if dj is not None:
            for k, value in pivot_row.items():
                if k == j:
                    continue
                updated = d.get(k, 0) - dj * value
                if nf.is_zero(updated):
                    d.pop(k, None)
                else:
                    d[k] = updated
        leaving = self.basis[r]
        self.basis[r] = j
        leaving_value = self.value[leaving]
        if self.lower[leaving] is not None and (
                self.upper[leaving] is None
                or abs(leaving_value - self.lower[leaving]) <= abs(leaving_value - self.upper[leaving])):
            self.value[leaving] = self.lower[leaving]
        else:
            self.value[leaving] = self.upper[leaving]

    def _iterate(self, d, excluded=frozenset()):
        nf = self.field
        while True:
            if self.pivots >= MAX_PIVOTS:
                raise NumericalFailureError(f"Simplex exceeded {MAX_PIVOTS} pivots on '{self.problem.label}'.")
            choice = self._entering(d, excluded)
            if choice is None:
                return OPTIMAL
            j, direction = choice
            theta, r = self._ratio_test(j, direction)
            if theta is None:
                return UNBOUNDED
            if nf.is_zero(theta):
                self._degenerate_streak += 1
                if self._degenerate_streak > DEGENERATE_STREAK_FOR_BLAND and not self._bland:
                    logger.debug(f"Switching to Bland's rule on '{self.problem.label}'.")
                    self._bland = True
            else:
                self._degenerate_streak = 0
            step = direction * theta
            self.value[j] += step
            for row, basic in zip(self.rows, self.basis):
                a = row.get(j)
                if a is not None:
                    self.value[basic] -= a * step
            self.pivots += 1
            if r is None:
                # bound flip
                self.value[j] = self.upper[j] if direction > 0 else self.lower[j]
                continue
            self._pivot(r, j, d)

    # -- phases --
    def _phase_one(self):
        nf = self.field
        if not self.artificial:
            return True
        cost = {j: nf.convert(1) for j in self.artificial}
        d = self._reduced_costs(cost)
        self._iterate(d)
        infeasibility = sum((self.value[j] for j in self.artificial), nf.convert(0))
        if nf.is_positive(infeasibility):
            return False
        logger.debug(f"Phase one of '{self.problem.label}' done after {self.pivots} pivots.")
        for r in range(len(self.rows) - 1, -1, -1):
            basic = self.basis[r]
            if basic not in self.artificial:
                continue
            candidates = [k for k, value in self.rows[r].items()
                          if k not in self.artificial and not nf.is_zero(value)]
            if candidates:
                self._pivot(r, min(candidates, key=lambda k: (-abs(self.rows[r][k]), k)), {})
            else:
                # redundant equality
                del self.rows[r]
                del self.basis[r]
        for row in self.rows:
            for k in self.artificial:
                row.pop(k, None)
        for k in self.artificial:
            self.value[k] = nf.convert(0)
        return True

    def solve(self):
        problem, nf = self.problem, self.field
        self._setup()
        if not self._phase_one():
            return LPSolution(INFEASIBLE, backend=BACKEND_SIMPLEX, pivots=self.pivots)
        sign = -1 if problem.sense == 'max' else 1
        cost = {j: sign * nf.convert(value) for j, value in enumerate(problem.c) if value != 0}
        d = self._reduced_costs(cost)
        status = self._iterate(d, excluded=frozenset(self.artificial))
        if status == UNBOUNDED:
            return LPSolution(UNBOUNDED, backend=BACKEND_SIMPLEX, pivots=self.pivots)
        x = nf.array(self.value[:problem.n_vars])
        logger.debug(f"Solved '{problem.label}' in {self.pivots} pivots.")
        return LPSolution(OPTIMAL, objective_value(problem, x), x, dict(problem.var_blocks),
                          BACKEND_SIMPLEX, self.pivots)


# --- HiGHS ---
def _solve_highs(problem):
    sign = -1.0 if problem.sense == 'max' else 1.0
    as_float = lambda values: None if values is None else np.asarray(values, dtype=np.float64)
    bounds = [(None if lower is None else float(lower), None if upper is None else float(upper))
              for lower, upper in problem.bounds]
    result = linprog(
        sign * as_float(problem.c),
        A_ub=as_float(problem.A_ub) if problem.n_ub else None,
        b_ub=as_float(problem.b_ub) if problem.n_ub else None,
        A_eq=as_float(problem.A_eq) if problem.n_eq else None,
        b_eq=as_float(problem.b_eq) if problem.n_eq else None,
        bounds=bounds, method='highs', options=HIGHS_OPTIONS,
    )
    if result.status == 2:
        return LPSolution(INFEASIBLE, backend=BACKEND_HIGHS)
    if result.status == 3:
        return LPSolution(UNBOUNDED, backend=BACKEND_HIGHS)
    if result.status != 0:
        raise NumericalFailureError(f"HiGHS failed on '{problem.label}': {result.message}")
    x = np.asarray(result.x, dtype=np.float64)
    return LPSolution(OPTIMAL, float(np.asarray(problem.c, dtype=np.float64) @ x), x,
                      dict(problem.var_blocks), BACKEND_HIGHS, int(getattr(result, 'nit', 0) or 0))


def solve(problem, backend=None):
    """Solves ``problem`` in its own number mode; exact problems always use the simplex."""
    if problem.exact or backend == BACKEND_SIMPLEX:
        return BoundedSimplex(problem).solve()
    if backend not in (None, BACKEND_HIGHS):
        raise NumericalFailureError(f"Unknown LP backend '{backend}'.")
    return _solve_highs(problem)


def as_float_problem(problem):
    """The same LP with float data, for backend cross-checks."""
    to_float = lambda values: None if values is None else np.asarray(values, dtype=np.float64)
    bounds = [(None if lower is None else float(lower), None if upper is None else float(upper))
              for lower, upper in problem.bounds]
    return LPProblem(problem.sense, to_float(problem.c), to_float(problem.A_ub), to_float(problem.b_ub),
                     to_float(problem.A_eq), to_float(problem.b_eq), bounds,
                     dict(problem.var_blocks), dict(problem.row_blocks), False, problem.label)
