import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

import numpy as np

from .exceptions import DimensionMismatchError, InstrumentalError
from .inequalities_helper import lift, select_branch
from .numeric_helper import field_for
from .simplex_helper import LPProblem, LPSolution, OPTIMAL, objective_value
from .strategies_helper import enumerate_strategies

logger = logging.getLogger(__name__)

CERTIFICATE_TOLERANCE = 1e-8
Y_UPPER = 2
LP_TERMS_PER_LINE = 8


class AlphaOutOfRangeError(InstrumentalError):
    code = 'alpha-out-of-range'


class UnsupportedDualizationError(InstrumentalError):
    code = 'unsupported-dualization'


@dataclass
class CertificateReport:
    primal_feasible: Optional[bool] = None
    dual_feasible: Optional[bool] = None
    primal_objective: Optional[object] = None
    dual_objective: Optional[object] = None
    gap: Optional[object] = None
    violations: List[str] = field(default_factory=list)
    tolerance: float = 0.0

    @property
    def ok(self):
        if self.violations:
            return False
        if self.gap is not None:
            return self.gap <= self.tolerance
        return True


# --- Builders ---
def _prepare(mats, ineq, alpha, p_x, branch):
    number_field = field_for(mats.exact)
    if ineq.ace_term:
        ineq = select_branch(ineq, branch)
    alpha = number_field.convert(alpha)
    if number_field.is_negative(alpha):
        raise AlphaOutOfRangeError(f"alpha must be >= 0, got {alpha}.")
    if p_x is not None:
        p_x = number_field.array(p_x)
        if p_x.shape != mats.p_x.shape or not all(
                number_field.equal(a, b) for a, b in zip(p_x, mats.p_x)):
            raise DimensionMismatchError(f"p_x {list(p_x)} does not match the matrices' marginal {list(mats.p_x)}.")
    return ineq, alpha, number_field


def build_primal(mats, ineq, alpha, p_x=None, branch='+'):
    """Maximize -1·t over (q, t) with [M,-1][q;t] <= 0, [-M,-1][q;t] <= 0, K·P·q <= -[alpha;0], Delta·q = p_x."""
    ineq, alpha, nf = _prepare(mats, ineq, alpha, p_x, branch)
    n = mats.n_columns
    KP = lift(ineq, mats)
    k_rows = KP.shape[0]
    identity = nf.array(np.eye(n, dtype=np.int64))
    A_ub = np.vstack([
        np.hstack([mats.M, -identity]),
        np.hstack([-mats.M, -identity]),
        np.hstack([KP, nf.zeros((k_rows, n))]),
    ])
    b_ub = nf.zeros(2 * n + k_rows)
    b_ub[2 * n] = -alpha
    A_eq = np.hstack([mats.Delta, nf.zeros((mats.scenario.x_card, n))])
    c = np.concatenate([nf.zeros(n), -nf.array(np.ones(n, dtype=np.int64))])
    return LPProblem(
        'max', c, A_ub, b_ub, A_eq, mats.p_x.copy(),
        bounds=[(0, None)] * n + [(None, None)] * n,
        var_blocks={'q': slice(0, n), 't': slice(n, 2 * n)},
        row_blocks={'abs_plus': slice(0, n), 'abs_minus': slice(n, 2 * n),
                    'K': slice(2 * n, 2 * n + k_rows), 'Delta': slice(0, mats.scenario.x_card)},
        exact=mats.exact, label=f"primal {ineq.id}{ineq.branch or ''} alpha={alpha}",
    )


def build_dual(mats, ineq, alpha, p_x=None, branch='+'):
    """Minimize -alpha·u + p_x·z s.t. M'y + (KP)'[u;v] + Delta'z >= 0, 0 <= y <= 2, u, v >= 0."""
    ineq, alpha, nf = _prepare(mats, ineq, alpha, p_x, branch)
    n = mats.n_columns
    m_x = mats.scenario.x_card
    KP = lift(ineq, mats)
    n_v = KP.shape[0] - 1
    A = np.hstack([mats.M.T, KP.T, mats.Delta.T])
    c = np.concatenate([nf.zeros(n), nf.array([-alpha]), nf.zeros(n_v), mats.p_x])
    u_at = n
    return LPProblem(
        'min', c, -A, nf.zeros(n), None, None,
        bounds=[(0, Y_UPPER)] * n + [(0, None)] * (1 + n_v) + [(None, None)] * m_x,
        var_blocks={'y': slice(0, n), 'u': slice(u_at, u_at + 1),
                    'v': slice(u_at + 1, u_at + 1 + n_v), 'z': slice(u_at + 1 + n_v, u_at + 1 + n_v + m_x)},
        row_blocks={'dual': slice(0, n)},
        exact=mats.exact, label=f"dual {ineq.id}{ineq.branch or ''} alpha={alpha}",
    )


def dualize(problem):
    """Mechanical dual of a maximization with <= / = rows and bounds [0,inf), (-inf,inf) or [0,u]."""
    if problem.sense != 'max':
        raise UnsupportedDualizationError('Only maximization problems are dualized.')
    nf = problem.field
    n = problem.n_vars
    ub_rows = [problem.A_ub] if problem.n_ub else []
    ub_rhs = [problem.b_ub] if problem.n_ub else []
    signs = []
    for j, (lower, upper) in enumerate(problem.bounds):
        if lower is None and upper is None:
            signs.append('free')
            continue
        if lower is None or nf.convert(lower) != 0:
            raise UnsupportedDualizationError(f"Variable {j} has unsupported bounds ({lower}, {upper}).")
        signs.append('nonneg')
        if upper is not None:
            row = nf.zeros((1, n))
            row[0, j] = nf.convert(1)
            ub_rows.append(row)
            ub_rhs.append(nf.array([upper]))
    A_ub = np.vstack(ub_rows) if ub_rows else nf.zeros((0, n))
    b_ub = np.concatenate(ub_rhs) if ub_rhs else nf.zeros(0)
    A_eq = problem.A_eq if problem.n_eq else nf.zeros((0, n))
    b_eq = problem.b_eq if problem.n_eq else nf.zeros(0)
    n_w, n_z = A_ub.shape[0], A_eq.shape[0]
    transposed = np.hstack([A_ub.T, A_eq.T])
    nonneg = [j for j in range(n) if signs[j] == 'nonneg']
    free = [j for j in range(n) if signs[j] == 'free']
    c_primal = nf.array(problem.c)
    return LPProblem(
        'min', np.concatenate([b_ub, b_eq]),
        -transposed[nonneg] if nonneg else None, -c_primal[nonneg] if nonneg else None,
        transposed[free] if free else None, c_primal[free] if free else None,
        bounds=[(0, None)] * n_w + [(None, None)] * n_z,
        var_blocks={'w': slice(0, n_w), 'z': slice(n_w, n_w + n_z)},
        exact=problem.exact, label=f"dualized {problem.label}",
    )


# --- Certificates ---
def _as_vector(problem, solution):
    if isinstance(solution, LPSolution):
        if solution.status != OPTIMAL:
            return None
        return solution.x
    return problem.field.array(solution)


def check_feasibility(problem, x, tolerance=None):
    """Every violated row or bound of ``problem`` at ``x``, by index."""
    nf = problem.field
    tolerance = 0 if nf.exact else (CERTIFICATE_TOLERANCE if tolerance is None else tolerance)
    violations = []
    if len(x) != problem.n_vars:
        return [f"assignment has {len(x)} entries, expected {problem.n_vars}"]
    if problem.n_ub:
        excess = problem.A_ub @ x - problem.b_ub
        for i, value in enumerate(excess):
            if value > tolerance:
                violations.append(f"{problem.label}: ub row {i} violated by {value}")
    if problem.n_eq:
        residual = problem.A_eq @ x - problem.b_eq
        for i, value in enumerate(residual):
            if abs(value) > tolerance:
                violations.append(f"{problem.label}: eq row {i} off by {value}")
    for j, ((lower, upper), value) in enumerate(zip(problem.bounds, x)):
        if lower is not None and value < nf.convert(lower) - tolerance:
            violations.append(f"{problem.label}: variable {j} below its lower bound")
        if upper is not None and value > nf.convert(upper) + tolerance:
            violations.append(f"{problem.label}: variable {j} above its upper bound")
    return violations


def check_certificate(primal_sol, dual_sol, problem_pair, tolerance=None):
    """Feasibility of each supplied assignment in its own program plus the duality gap.

    Either side may be an LPSolution or a raw assignment vector, or ``None`` to check
    only the other side.
    """
    primal_problem, dual_problem = problem_pair
    exact = (primal_problem or dual_problem).exact
    report = CertificateReport(tolerance=0 if exact else (tolerance or CERTIFICATE_TOLERANCE))
    for side, problem, solution in (('primal', primal_problem, primal_sol), ('dual', dual_problem, dual_sol)):
        if solution is None or problem is None:
            continue
        x = _as_vector(problem, solution)
        if x is None:
            report.violations.append(f"{side} solution is {solution.status}")
            setattr(report, f"{side}_feasible", False)
            continue
        violations = check_feasibility(problem, x, tolerance)
        report.violations.extend(violations)
        setattr(report, f"{side}_feasible", not violations)
        setattr(report, f"{side}_objective", objective_value(problem, x))
    if report.primal_objective is not None and report.dual_objective is not None:
        report.gap = abs(report.primal_objective - report.dual_objective)
    return report


def y_tilde(y):
    """ỹ_i = y_i - y_{i+n/2} for the two-valued instrument."""
    half = len(y) // 2
    return y[:half] - y[half:]


def y_from_tilde(tilde):
    return np.concatenate([1 + tilde / 2, 1 - tilde / 2])


def assemble(problem, **blocks):
    """Full variable vector for ``problem`` from named blocks; missing blocks are zero."""
    x = problem.field.zeros(problem.n_vars)
    for name, values in blocks.items():
        x[problem.var_blocks[name]] = problem.field.array(values)
    return x


def _binary_marginal(mats):
    if mats.scenario.x_card != 2:
        raise DimensionMismatchError('Closed-form certificates exist for a two-valued instrument only.')
    return mats.p_x[0], mats.p_x[1]


def pearl_dual_certificate(mats, dual_problem):
    """Dual feasible point for pearl-00 attaining -4 p0 p1 alpha."""
    p0, p1 = _binary_marginal(mats)
    strategies = enumerate_strategies(mats.scenario)[:16]
    tilde = []
    for strategy in strategies:
        if strategy.f[0] == 0 and strategy.g[0] == 0:
            tilde.append(2)
        elif strategy.f[1] == 0 and strategy.g[0] == 1:
            tilde.append(-2)
        else:
            tilde.append(0)
    tilde = mats_array(mats, tilde)
    z0 = 2 * p1 * (1 - 2 * p0)
    return assemble(dual_problem, y=y_from_tilde(tilde), u=[4 * p0 * p1], z=[z0, -(p0 / p1) * z0])


BALKE_PEARL_PLUS = (0, 1, 4, 8, 9, 12)
BALKE_PEARL_MINUS = (2, 3, 6, 7, 10, 14)


def balke_pearl_dual_certificate(mats, dual_problem):
    """Dual feasible point for the '+' branch of c1 attaining -4 p0 p1 alpha / (2 - p0)."""
    p0, p1 = _binary_marginal(mats)
    ratio = p0 / (2 - p0)
    tilde = [0] * 16
    for index in BALKE_PEARL_PLUS:
        tilde[index] = 2
    for index in BALKE_PEARL_MINUS:
        tilde[index] = -2
    tilde[5] = tilde[13] = 2 - 4 * ratio
    tilde[11] = tilde[15] = -2 * ratio
    tilde = mats_array(mats, tilde)
    z0 = -2 * p1 * (1 - 4 * p1 / (2 - p0))
    return assemble(dual_problem, y=y_from_tilde(tilde), u=[4 * p0 * p1 / (2 - p0)],
                    z=[z0, -(p0 / p1) * z0])


def mats_array(mats, values):
    return field_for(mats.exact).array(values)


# --- LP file dump ---
def _variable_names(problem):
    names = [f"x{j}" for j in range(problem.n_vars)]
    for block, span in problem.var_blocks.items():
        indices = range(problem.n_vars)[span]
        for offset, j in enumerate(indices):
            names[j] = block if len(indices) == 1 else f"{block}{offset}"
    return names


def _lp_number(value):
    if isinstance(value, Fraction) and value.denominator == 1:
        return str(value.numerator)
    return format(float(value), '.17g')


def _expression(coeffs, names):
    terms = []
    for j, value in enumerate(coeffs):
        if value == 0:
            continue
        sign = '-' if value < 0 else '+'
        terms.append(f"{sign} {_lp_number(abs(value))} {names[j]}")
    if not terms:
        return '0 ' + names[0]
    lines = [' '.join(terms[i:i + LP_TERMS_PER_LINE]) for i in range(0, len(terms), LP_TERMS_PER_LINE)]
    return '\n   '.join(lines)


def format_lp(problem):
    """CPLEX LP text of ``problem``: objective, named rows, bounds, ``End``."""
    names = _variable_names(problem)
    out = [f"\\ {problem.label}", 'Maximize' if problem.sense == 'max' else 'Minimize',
           f" obj: {_expression(problem.c, names)}", 'Subject To']
    ub_names = [f"r{i}" for i in range(problem.n_ub)]
    eq_names = [f"e{i}" for i in range(problem.n_eq)]
    for block, span in problem.row_blocks.items():
        targets = eq_names if block == 'Delta' else ub_names
        for offset, i in enumerate(range(len(targets))[span]):
            targets[i] = f"{block}_{offset}"
    for i in range(problem.n_ub):
        out.append(f" {ub_names[i]}: {_expression(problem.A_ub[i], names)} <= {_lp_number(problem.b_ub[i])}")
    for i in range(problem.n_eq):
        out.append(f" {eq_names[i]}: {_expression(problem.A_eq[i], names)} = {_lp_number(problem.b_eq[i])}")
    out.append('Bounds')
    for name, (lower, upper) in zip(names, problem.bounds):
        if lower is None and upper is None:
            out.append(f" {name} free")
        elif upper is None:
            out.append(f" {name} >= {_lp_number(lower)}")
        elif lower is None:
            out.append(f" -inf <= {name} <= {_lp_number(upper)}")
        else:
            out.append(f" {_lp_number(lower)} <= {name} <= {_lp_number(upper)}")
    out.append('End')
    return '\n'.join(out) + '\n'


def write_lp_file(problem, path):
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write(format_lp(problem))
    logger.info(f"Wrote LP '{problem.label}' to {path}.")
