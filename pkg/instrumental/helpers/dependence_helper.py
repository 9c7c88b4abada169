import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from .exceptions import DimensionMismatchError, InstrumentalError, OutOfRangeError
from .inequalities_helper import get_inequality, linearize, max_violation
from .lp_helper import AlphaOutOfRangeError, build_dual, build_primal, check_certificate
from .numeric_helper import field_for, format_number
from .scenario_helper import Scenario
from .simplex_helper import NumericalFailureError, solve
from .strategies_helper import build_matrices, check_marginal

logger = logging.getLogger(__name__)

DEFAULT_CURVE_GRID = 50
MAX_CURVE_EVALUATIONS = 64
CLOSED_FORM_KINDS = ('pearl', 'c1')


class UnsupportedClosedFormError(InstrumentalError):
    code = 'unsupported-closed-form'


@dataclass(frozen=True, eq=False)
class DependencePoint:
    """One solved point: the minimal dependence and the dual support line ``slope*alpha + intercept``."""
    alpha: object
    dependence: object
    slope: object
    intercept: object
    branch: Optional[str] = None

    def support(self, alpha):
        return self.slope * alpha + self.intercept


@dataclass(frozen=True, eq=False)
class MinDependenceResult:
    ineq_id: str
    p_x: np.ndarray
    alpha: object
    dependence: object
    branch: Optional[str]
    primal_problem: object
    primal: object
    dual_problem: object = None
    dual: object = None
    certificate: object = None

    @property
    def slope(self):
        return None if self.dual is None else self.dual.block('u')[0]

    def as_dict(self):
        payload = {
            'ineq': self.ineq_id,
            'p_x': [format_number(value) for value in self.p_x],
            'alpha': format_number(self.alpha),
            'dependence': format_number(self.dependence),
            'branch': self.branch,
        }
        if self.dual is not None:
            payload['certificate'] = {
                'u': format_number(self.dual.block('u')[0]),
                'v': [format_number(value) for value in self.dual.block('v')],
                'z': [format_number(value) for value in self.dual.block('z')],
                'y': [format_number(value) for value in self.dual.block('y')],
                'primal_objective': format_number(self.certificate.primal_objective),
                'dual_objective': format_number(self.certificate.dual_objective),
                'gap': format_number(self.certificate.gap),
                'ok': self.certificate.ok,
            }
        return payload


@dataclass(frozen=True, eq=False)
class DependenceCurve:
    ineq_id: str
    p_x: np.ndarray
    breakpoints: List[Tuple[object, object]]
    slopes: List[object]
    alpha_max: object
    branch_breakpoints: Dict[str, List[Tuple[object, object]]] = field(default_factory=dict)
    exact: bool = False

    @property
    def first_slope(self):
        if not self.slopes:
            raise OutOfRangeError(f"'{self.ineq_id}' cannot be violated at this p_x; the curve has no segment.")
        return self.slopes[0]

    def value_at(self, alpha):
        if alpha < 0 or field_for(self.exact).is_positive(alpha - self.alpha_max):
            raise AlphaOutOfRangeError(f"alpha={alpha} outside [0, {self.alpha_max}].")
        for (a0, d0), (a1, _), slope in zip(self.breakpoints, self.breakpoints[1:], self.slopes):
            if alpha <= a1:
                return d0 + slope * (alpha - a0)
        return self.breakpoints[-1][1]

    def segment_slope_at(self, alpha):
        for (_, _), (a1, _), slope in zip(self.breakpoints, self.breakpoints[1:], self.slopes):
            if alpha <= a1:
                return slope
        return self.slopes[-1] if self.slopes else 0

    def max_violation_given_dependence(self, level):
        """Largest alpha whose minimal dependence does not exceed ``level``."""
        if level < 0:
            raise OutOfRangeError(f"Dependence level must be >= 0, got {level}.")
        for (a0, d0), (a1, d1), slope in zip(self.breakpoints, self.breakpoints[1:], self.slopes):
            if level <= d1:
                return a0 + (level - d0) / slope
        return self.alpha_max

    def sample(self, grid_points=DEFAULT_CURVE_GRID):
        """(alpha, dependence, segment_slope) on an evenly spaced grid over [0, alpha_max]."""
        rows = []
        for i in range(grid_points):
            if self.exact:
                alpha = self.alpha_max * Fraction(i, max(grid_points - 1, 1))
            else:
                alpha = float(self.alpha_max) * i / max(grid_points - 1, 1)
            rows.append((alpha, self.value_at(alpha), self.segment_slope_at(alpha)))
        return rows


@dataclass(frozen=True)
class AdaptedInequality:
    base_id: str
    p_x: tuple
    slope: object
    dependence_level: object
    threshold: object
    statement: str

    def holds_for(self, k_value):
        return k_value >= self.threshold


# --- Single points ---
def _context(ineq, p_x, exact):
    scenario = Scenario(ineq.x_card)
    return scenario, check_marginal(scenario, p_x, exact), field_for(exact)


def _matrices(scenario, p_x, branch, exact, cache):
    key = branch.needs_interventional
    if key not in cache:
        cache[key] = build_matrices(scenario, p_x, with_do=key, exact=exact)
    return cache[key]


def solve_min_dependence(ineq, p_x, alpha, exact=False, backend=None, certify=True, alpha_max=None,
                         certificate_tolerance=None):
    """Minimal l1 dependence explaining violation ``alpha``, minimized over ACE sign branches."""
    if isinstance(ineq, str):
        ineq = get_inequality(ineq)
    scenario, p_x, nf = _context(ineq, p_x, exact)
    alpha = nf.convert(alpha)
    if nf.is_negative(alpha):
        raise AlphaOutOfRangeError(f"alpha must be >= 0, got {alpha}.")
    if alpha_max is None:
        alpha_max = max_violation(ineq, p_x, exact, backend)
    if nf.is_positive(alpha - alpha_max):
        raise AlphaOutOfRangeError(
            f"alpha={format_number(alpha)} exceeds the maximal violation {format_number(alpha_max)} "
            f"of '{ineq.id}' at p_x={[format_number(v) for v in p_x]}."
        )
    cache, best = {}, None
    for branch in linearize(ineq):
        mats = _matrices(scenario, p_x, branch, exact, cache)
        problem = build_primal(mats, branch, alpha)
        solution = solve(problem, backend)
        if not solution.optimal:
            logger.debug(f"Branch {branch.branch} of '{ineq.id}' is {solution.status} at alpha={alpha}.")
            continue
        dependence = -solution.objective
        if best is None or nf.is_negative(dependence - best[0]):
            best = (dependence, branch, mats, problem, solution)
    if best is None:
        raise AlphaOutOfRangeError(f"No latent model reaches alpha={format_number(alpha)} for '{ineq.id}'.")
    dependence, branch, mats, problem, solution = best
    if nf.is_negative(dependence):
        dependence = nf.convert(0)
    result = MinDependenceResult(ineq.id, p_x, alpha, dependence, branch.branch, problem, solution)
    if not certify:
        return result
    dual_problem = build_dual(mats, branch, alpha)
    dual = solve(dual_problem, backend)
    if not dual.optimal:
        raise NumericalFailureError(f"Dual of '{problem.label}' is {dual.status} although the primal is optimal.")
    certificate = check_certificate(solution, dual, (problem, dual_problem), certificate_tolerance)
    if not certificate.ok:
        logger.warning(f"Certificate for '{problem.label}' is not tight: gap={certificate.gap}, "
                       f"violations={certificate.violations[:3]}")
    return MinDependenceResult(ineq.id, p_x, alpha, dependence, branch.branch, problem, solution,
                               dual_problem, dual, certificate)


def min_dependence(ineq, p_x, alpha, exact=False, backend=None):
    return solve_min_dependence(ineq, p_x, alpha, exact, backend, certify=False).dependence


def _solve_point(mats, branch, alpha, backend, nf):
    problem = build_primal(mats, branch, alpha)
    solution = solve(problem, backend)
    if not solution.optimal:
        return None
    dual = solve(build_dual(mats, branch, alpha), backend)
    if not dual.optimal:
        raise NumericalFailureError(f"Dual of '{problem.label}' is {dual.status}.")
    slope = dual.block('u')[0]
    intercept = -(mats.p_x @ dual.block('z'))
    dependence = -solution.objective
    if dependence < 0:
        dependence = nf.convert(0)
    return DependencePoint(alpha, dependence, slope, intercept, branch.branch)


# --- Curves ---
def _branch_curve(mats, branch, alpha_max, backend, nf):
    """Exact breakpoints of one convex branch by intersecting dual support lines."""
    zero = nf.convert(0)
    if not nf.is_positive(alpha_max):
        return [(zero, zero)]
    start = DependencePoint(zero, zero, zero, zero, branch.branch)
    end = _solve_point(mats, branch, alpha_max, backend, nf)
    if end is None:
        raise NumericalFailureError(f"Branch {branch.branch} of '{branch.id}' is infeasible at its own alpha_max.")
    points = {zero: start, alpha_max: end}
    pending = [(zero, alpha_max)]
    evaluations = 1
    while pending:
        a, b = pending.pop()
        left, right = points[a], points[b]
        chord = (right.dependence - left.dependence) / (b - a)
        if nf.equal(chord, left.slope) or nf.equal(chord, right.slope) or nf.equal(left.slope, right.slope):
            continue
        c = (right.intercept - left.intercept) / (left.slope - right.slope)
        if not (a < c < b):
            c = (a + b) / 2
        if evaluations >= MAX_CURVE_EVALUATIONS:
            logger.warning(f"Curve for '{branch.id}' stopped after {evaluations} evaluations; "
                           f"[{a}, {b}] kept as a chord.")
            continue
        middle = _solve_point(mats, branch, c, backend, nf)
        evaluations += 1
        points[c] = middle
        if nf.equal(middle.dependence, left.support(c)):
            continue
        pending.extend([(a, c), (c, b)])
    logger.info(f"Branch {branch.branch or '='} of '{branch.id}': {evaluations} LP points solved.")
    return [(alpha, points[alpha].dependence) for alpha in sorted(points)]


def _branch_curve_job(mats, branch, alpha_max, backend, exact):
    return _branch_curve(mats, branch, alpha_max, backend, field_for(exact))


def _interpolate(points, alpha):
    for (a0, d0), (a1, d1) in zip(points, points[1:]):
        if alpha <= a1:
            return d0 if a1 == a0 else d0 + (d1 - d0) * (alpha - a0) / (a1 - a0)
    return None


def _merge_collinear(points, nf):
    merged = [points[0]]
    for point in points[1:]:
        if nf.equal(point[0], merged[-1][0]):
            continue
        if len(merged) >= 2:
            (a0, d0), (a1, d1) = merged[-2], merged[-1]
            if nf.equal((d1 - d0) / (a1 - a0), (point[1] - d1) / (point[0] - a1)):
                merged[-1] = point
                continue
        merged.append(point)
    return merged


def _lower_envelope(branch_points, nf):
    """Pointwise minimum of piecewise-linear branch curves, each defined up to its last alpha."""
    candidates = sorted({alpha for points in branch_points for alpha, _ in points})
    curves = list(branch_points)
    extra = []
    for lo, hi in zip(candidates, candidates[1:]):
        live = [points for points in curves if points[-1][0] >= hi]
        for i in range(len(live)):
            for j in range(i + 1, len(live)):
                gap_lo = _interpolate(live[i], lo) - _interpolate(live[j], lo)
                gap_hi = _interpolate(live[i], hi) - _interpolate(live[j], hi)
                if (nf.is_negative(gap_lo) and nf.is_positive(gap_hi)) or (
                        nf.is_positive(gap_lo) and nf.is_negative(gap_hi)):
                    extra.append(lo + (hi - lo) * gap_lo / (gap_lo - gap_hi))
    envelope = []
    for alpha in sorted(set(candidates) | set(extra)):
        values = [_interpolate(points, alpha) for points in curves if points[-1][0] >= alpha]
        envelope.append((alpha, min(values)))
    return _merge_collinear(envelope, nf)


def dependence_curve(ineq, p_x, exact=False, backend=None, workers=1):
    """Piecewise-linear minimal dependence as a function of alpha over [0, alpha_max]."""
    if isinstance(ineq, str):
        ineq = get_inequality(ineq)
    scenario, p_x, nf = _context(ineq, p_x, exact)
    branches = linearize(ineq)
    cache = {}
    jobs = []
    for branch in branches:
        branch_max = max_violation(branch, p_x, exact, backend)
        jobs.append((_matrices(scenario, p_x, branch, exact, cache), branch, branch_max))
    if workers > 1 and len(jobs) > 1:
        branch_points = Parallel(n_jobs=min(workers, len(jobs)))(
            delayed(_branch_curve_job)(mats, branch, branch_max, backend, exact) for mats, branch, branch_max in jobs)
    else:
        branch_points = [_branch_curve(mats, branch, branch_max, backend, nf) for mats, branch, branch_max in jobs]
    breakpoints = _lower_envelope(branch_points, nf)
    slopes = [(d1 - d0) / (a1 - a0) for (a0, d0), (a1, d1) in zip(breakpoints, breakpoints[1:])]
    alpha_max = breakpoints[-1][0]
    logger.info(f"Curve for '{ineq.id}': {len(slopes)} segment(s), alpha_max={format_number(alpha_max)}.")
    return DependenceCurve(
        ineq.id, p_x, breakpoints, slopes, alpha_max,
        {branch.branch or '=': points for branch, points in zip(branches, branch_points)}, exact,
    )


def is_convex(curve, tolerance=0.0):
    return all(later >= earlier - tolerance for earlier, later in zip(curve.slopes, curve.slopes[1:]))


# --- Adapted bounds ---
def _render_terms(coeffs):
    parts = []
    for (a, b, x), value in sorted(coeffs.items(), key=lambda item: (item[0][2], item[0][0], item[0][1])):
        magnitude = abs(value)
        factor = '' if magnitude == 1 else f"{format_number(magnitude)}"
        sign = '-' if value < 0 else '+'
        parts.append((sign, f"{factor}p({a},{b}|{x})"))
    if not parts:
        return '0'
    text = ('-' if parts[0][0] == '-' else '') + parts[0][1]
    for sign, term in parts[1:]:
        text += f" {sign} {term}"
    return text


def adapted_bound(ineq, p_x, level, exact=False, backend=None, curve=None):
    """K + M/u >= 0 with u the certified first-segment slope."""
    if isinstance(ineq, str):
        ineq = get_inequality(ineq)
    nf = field_for(exact)
    level = nf.convert(level)
    if nf.is_negative(level):
        raise OutOfRangeError(f"Dependence level must be >= 0, got {level}.")
    curve = curve or dependence_curve(ineq, p_x, exact, backend)
    slope = curve.first_slope
    threshold = -level / slope
    flipped = {key: -value for key, value in ineq.obs_coeffs.items()}
    offset = nf.convert(ineq.constant) + level / slope
    if ineq.ace_term:
        # ACE + constant + sum(c p) >= -M/u  <=>  ACE >= sum(-c p) - (constant + M/u)
        sign = '-' if offset >= 0 else '+'
        statement = f"ACE >= {_render_terms(flipped)} {sign} {format_number(abs(offset))}"
    else:
        statement = f"{_render_terms(flipped)} <= {format_number(offset)}"
    return AdaptedInequality(ineq.id, tuple(format_number(v) for v in curve.p_x), slope, level, threshold, statement)


# --- Closed forms and sweeps ---
def closed_form_binary(kind, p_x, alpha):
    if kind not in CLOSED_FORM_KINDS:
        raise UnsupportedClosedFormError(f"No closed form for '{kind}'; expected one of {CLOSED_FORM_KINDS}.")
    if len(p_x) != 2:
        raise DimensionMismatchError(f"Closed forms hold for a two-valued instrument, got {len(p_x)} values.")
    if alpha < 0 or alpha > 1:
        raise AlphaOutOfRangeError(f"alpha must lie in [0, 1], got {alpha}.")
    p0, p1 = p_x
    value = 4 * p0 * p1 * alpha
    return value if kind == 'pearl' else value / (2 - p0)


def _sweep_point(ineq, alpha, p0, exact, backend):
    try:
        return p0, min_dependence(ineq, [p0, 1 - p0], alpha, exact, backend)
    except AlphaOutOfRangeError:
        return p0, None


def worst_case_instrument(ineq, alpha, p0_values, exact=False, backend=None, workers=1):
    """Sweeps p(X=0) and returns ``(best_p0, best_dependence, [(p0, dependence or None), ...])``."""
    if isinstance(ineq, str):
        ineq = get_inequality(ineq)
    if ineq.x_card != 2:
        raise DimensionMismatchError('The instrument sweep varies p(X=0) of a two-valued instrument.')

    if workers > 1:
        sweep = Parallel(n_jobs=workers)(
            delayed(_sweep_point)(ineq, alpha, p0, exact, backend) for p0 in p0_values)
    else:
        sweep = [_sweep_point(ineq, alpha, p0, exact, backend) for p0 in p0_values]
    feasible = [(p0, value) for p0, value in sweep if value is not None]
    if not feasible:
        raise AlphaOutOfRangeError(f"alpha={alpha} is out of range for every p0 in the sweep.")
    best_p0, best_value = max(feasible, key=lambda item: item[1])
    return best_p0, best_value, sweep
