import logging
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Optional, Tuple

import numpy as np

from .exceptions import DimensionMismatchError, InstrumentalError
from .numeric_helper import field_for, format_number
from .scenario_helper import A_CARD, B_CARD, Scenario
from .simplex_helper import LPProblem, solve
from .strategies_helper import (
    build_matrices,
    check_marginal,
    do_row,
    forward_distribution,
    interventional,
    observed_row,
    ZeroMarginalError,
)

logger = logging.getLogger(__name__)

F = Fraction

# p(0|do(0)) - p(0|do(1)), keyed (a, b)
ACE_CONTRAST = {(0, 0): F(1), (1, 0): F(-1)}
BRANCHES = ('+', '-')

RELABEL_PATTERN = re.compile(r'^(?:x(?P<x>\d+))?(?:a(?P<a>[01]))?(?:b(?P<b>[01]{2}))?$')


class UnsupportedCardinalityError(InstrumentalError):
    code = 'unsupported-cardinality'


class UnknownInequalityError(InstrumentalError):
    code = 'unknown-inequality'


class MissingInterventionalError(InstrumentalError):
    code = 'missing-interventional'


class UnsupportedRelabelingError(InstrumentalError):
    code = 'unsupported-relabeling'


@dataclass(frozen=True)
class InequalitySpec:
    """Linear functional K over p(a,b|x) (keys ``(a, b, x)``) and p(b|do(a)) (keys ``(a, b)``).

    Validity means K >= 0 for every perfect instrumental model. With ``ace_term`` the
    functional also contains +ACE; ``linearize`` turns it into two branches whose
    ``sign_constraints`` each hold a do-combination required to be >= 0.
    """
    id: str
    x_card: int
    obs_coeffs: Mapping[Tuple[int, int, int], Fraction]
    constant: Fraction = F(0)
    ace_term: bool = False
    do_coeffs: Mapping[Tuple[int, int], Fraction] = field(default_factory=dict)
    sign_constraints: Tuple[Mapping[Tuple[int, int], Fraction], ...] = ()
    branch: Optional[str] = None

    @property
    def is_causal_bound(self):
        return self.ace_term or bool(self.do_coeffs) or self.branch is not None

    @property
    def needs_interventional(self):
        return self.ace_term or bool(self.do_coeffs)


@dataclass(frozen=True)
class ViolationReport:
    ineq_id: str
    k_value: object
    alpha: object
    violated: bool

    def as_dict(self):
        return {
            'ineq': self.ineq_id,
            'k_value': format_number(self.k_value),
            'alpha': format_number(self.alpha),
            'violated': self.violated,
        }


@dataclass(frozen=True)
class Relabeling:
    """Permutation of X values plus output flips of A (global) and B (per value of a)."""
    x_perm: Tuple[int, ...]
    a_flip: int = 0
    b_flip: Tuple[int, int] = (0, 0)

    def map(self, x, a, b):
        return self.x_perm[x], a ^ self.a_flip, b ^ self.b_flip[a]

    def map_do(self, a, b):
        return a ^ self.a_flip, b ^ self.b_flip[a]

    @property
    def suffix(self):
        return f"@x{''.join(map(str, self.x_perm))}a{self.a_flip}b{self.b_flip[0]}{self.b_flip[1]}"


def _p(*triples):
    return {(a, b, x): F(c) for (c, a, b, x) in triples}


# --- Catalog ---
def _pearl(j, swap):
    if swap:
        coeffs = _p((-1, j, 0, 1), (-1, j, 1, 0))
    else:
        coeffs = _p((-1, j, 0, 0), (-1, j, 1, 1))
    return InequalitySpec(f"pearl-{j}{swap}", 2, coeffs, F(1))


def _causal(ineq_id, x_card, bound_terms, bound_constant):
    # K = ACE - C with C = sum(bound_terms) + bound_constant
    coeffs = {key: -value for key, value in bound_terms.items()}
    return InequalitySpec(ineq_id, x_card, coeffs, -F(bound_constant), ace_term=True)


BASE_INEQUALITIES = {
    'pearl-00': _pearl(0, 0),
    'pearl-01': _pearl(0, 1),
    'pearl-10': _pearl(1, 0),
    'pearl-11': _pearl(1, 1),
    'bonet': InequalitySpec('bonet', 3, _p(
        (-1, 0, 1, 0), (1, 0, 1, 1), (1, 1, 1, 1), (1, 1, 0, 2), (1, 0, 1, 2))),
    'kedagni': InequalitySpec('kedagni', 4, _p(
        (-1, 0, 0, 0), (-1, 1, 0, 0), (1, 0, 1, 1), (1, 1, 0, 1),
        (1, 0, 0, 2), (1, 1, 0, 2), (1, 0, 0, 3), (1, 1, 1, 3))),
    'c1': _causal('c1', 2, _p((2, 0, 0, 0), (1, 1, 1, 0), (1, 0, 1, 1), (1, 1, 1, 1)), -2),
    'c2': _causal('c2', 3, _p((1, 0, 0, 0), (1, 0, 0, 2), (1, 1, 0, 0), (1, 1, 1, 1), (1, 1, 1, 2)), -2),
    'c3': _causal('c3', 3, _p(
        (1, 0, 0, 0), (1, 0, 0, 1), (-1, 0, 1, 1), (1, 0, 1, 2),
        (1, 1, 0, 0), (-1, 1, 0, 1), (1, 1, 1, 1), (1, 1, 1, 2)), -2),
}

ALIASES = {'i1': 'pearl-00', 'i2': 'bonet', 'i3': 'kedagni'}

CATALOG_IDS = {
    2: ('pearl-00', 'pearl-01', 'pearl-10', 'pearl-11', 'c1', 'c1@x10', 'c1@a1', 'c1@b11'),
    3: ('bonet', 'c2', 'c3'),
    4: ('kedagni',),
}


def parse_relabeling(text, x_card):
    match = RELABEL_PATTERN.match(text)
    if not match or not text:
        raise UnknownInequalityError(f"Malformed relabeling suffix '@{text}'.")
    x_perm = tuple(int(digit) for digit in match.group('x')) if match.group('x') else tuple(range(x_card))
    if sorted(x_perm) != list(range(x_card)):
        raise UnsupportedRelabelingError(f"'{match.group('x')}' is not a permutation of {x_card} values.")
    a_flip = int(match.group('a') or 0)
    b_flip = tuple(int(digit) for digit in match.group('b')) if match.group('b') else (0, 0)
    return Relabeling(x_perm, a_flip, b_flip)


def relabel(ineq, relabeling, ineq_id=None):
    if len(relabeling.x_perm) != ineq.x_card:
        raise UnsupportedRelabelingError(
            f"Relabeling acts on {len(relabeling.x_perm)} inputs but '{ineq.id}' has {ineq.x_card}."
        )
    if ineq.ace_term and relabeling.b_flip[0] != relabeling.b_flip[1]:
        raise UnsupportedRelabelingError('A B-flip that depends on a does not preserve the ACE.')
    obs = {}
    for (a, b, x), value in ineq.obs_coeffs.items():
        x2, a2, b2 = relabeling.map(x, a, b)
        obs[(a2, b2, x2)] = value
    map_do = lambda coeffs: {relabeling.map_do(a, b): value for (a, b), value in coeffs.items()}
    return replace(
        ineq,
        id=ineq_id or f"{ineq.id}{relabeling.suffix}",
        obs_coeffs=obs,
        do_coeffs=map_do(ineq.do_coeffs),
        sign_constraints=tuple(map_do(row) for row in ineq.sign_constraints),
    )


def get_inequality(ineq_id, x_card=None):
    """Resolves ``base[@x<perm>a<flip>b<flips>]`` into an InequalitySpec."""
    base_id, _, suffix = ineq_id.strip().partition('@')
    base_id = ALIASES.get(base_id.lower(), base_id.lower())
    if base_id not in BASE_INEQUALITIES:
        raise UnknownInequalityError(f"Unknown inequality '{ineq_id}'.")
    ineq = BASE_INEQUALITIES[base_id]
    if x_card is not None and x_card != ineq.x_card:
        raise UnsupportedCardinalityError(
            f"'{base_id}' needs x_card={ineq.x_card}, requested x_card={x_card}."
        )
    if suffix:
        ineq = relabel(ineq, parse_relabeling(suffix, ineq.x_card), ineq_id=f"{base_id}@{suffix}")
    return ineq


def catalog(scenario):
    return [get_inequality(ineq_id) for ineq_id in CATALOG_IDS.get(scenario.x_card, ())]


def linearize(ineq):
    """Splits the ACE term into the two sign branches; other inequalities pass through."""
    if not ineq.ace_term:
        return [ineq]
    branches = []
    for branch, sign in zip(BRANCHES, (1, -1)):
        contrast = {key: sign * value for key, value in ACE_CONTRAST.items()}
        do_coeffs = dict(ineq.do_coeffs)
        for key, value in contrast.items():
            do_coeffs[key] = do_coeffs.get(key, F(0)) + value
        branches.append(replace(
            ineq, ace_term=False, do_coeffs=do_coeffs,
            sign_constraints=ineq.sign_constraints + (contrast,), branch=branch,
        ))
    return branches


def select_branch(ineq, branch):
    for candidate in linearize(ineq):
        if candidate.branch == branch:
            return candidate
    raise UnknownInequalityError(f"'{ineq.id}' has no branch '{branch}'.")


# --- Evaluation ---
def ace(do_dist):
    table = do_dist.p_b_do_a
    return max(abs(table[a, b] - table[a2, b])
               for a in range(A_CARD) for a2 in range(A_CARD) for b in range(B_CARD))


def evaluate(ineq, dist, do_dist=None):
    if dist.scenario.x_card != ineq.x_card:
        raise UnsupportedCardinalityError(
            f"'{ineq.id}' needs x_card={ineq.x_card}, distribution has x_card={dist.scenario.x_card}."
        )
    if ineq.needs_interventional and do_dist is None:
        raise MissingInterventionalError(f"'{ineq.id}' needs the interventional distribution p(b|do(a)).")
    number_field = field_for(dist.exact)
    k_value = number_field.convert(ineq.constant)
    for (a, b, x), value in ineq.obs_coeffs.items():
        k_value += number_field.convert(value) * dist.p_ab_given_x[x, a, b]
    if ineq.needs_interventional:
        if ineq.ace_term:
            k_value += ace(do_dist)
        for (a, b), value in ineq.do_coeffs.items():
            k_value += number_field.convert(value) * do_dist.p_b_do_a[a, b]
    alpha = max(number_field.convert(0), -k_value)
    return ViolationReport(ineq.id, k_value, alpha, number_field.is_negative(k_value))


def evaluate_joint(ineq, q):
    do_dist = interventional(q) if ineq.needs_interventional else None
    return evaluate(ineq, forward_distribution(q), do_dist)


def coefficient_tensor(ineq):
    """Float arrays ``(constant, C[x,a,b], D[a,b])`` for vectorized evaluation."""
    obs = np.zeros((ineq.x_card, A_CARD, B_CARD))
    for (a, b, x), value in ineq.obs_coeffs.items():
        obs[x, a, b] = float(value)
    do = np.zeros((A_CARD, B_CARD))
    for (a, b), value in ineq.do_coeffs.items():
        do[a, b] = float(value)
    return float(ineq.constant), obs, do


def evaluate_batch(ineq, p_ab_given_x, p_b_do_a=None):
    """K for many conditional tables at once, shapes ``(n, x, a, b)`` and ``(n, a, b)``."""
    constant, obs, do = coefficient_tensor(ineq)
    k_values = constant + np.einsum('nxab,xab->n', p_ab_given_x, obs)
    if ineq.needs_interventional:
        if p_b_do_a is None:
            raise MissingInterventionalError(f"'{ineq.id}' needs the interventional distribution p(b|do(a)).")
        k_values = k_values + np.einsum('nab,ab->n', p_b_do_a, do)
        if ineq.ace_term:
            k_values = k_values + np.abs(p_b_do_a[:, 0, 0] - p_b_do_a[:, 1, 0])
    return k_values


# --- Lifting to strategy columns ---
def lift(ineq, mats):
    """Rows of K·P over strategy columns for a linear (branch) inequality.

    Row 0 is K with the constant folded in through sum(q) = 1, so that K·P·q equals
    K on the forward statistics of q; the remaining rows are the negated sign
    constraints, so every row reads ``row · q <= rhs``.
    """
    if ineq.ace_term:
        raise DimensionMismatchError(f"'{ineq.id}' must be linearized before lifting.")
    if ineq.x_card != mats.scenario.x_card:
        raise UnsupportedCardinalityError(
            f"'{ineq.id}' needs x_card={ineq.x_card}, matrices have x_card={mats.scenario.x_card}."
        )
    if ineq.needs_interventional and not mats.with_do:
        raise MissingInterventionalError(f"'{ineq.id}' needs matrices built with the do-block.")
    number_field = field_for(mats.exact)
    zero = [x for x, value in enumerate(mats.p_x) if number_field.is_zero(value)]
    if zero:
        raise ZeroMarginalError(f"Conditional coefficients need p(x) > 0; p(x) vanishes for x in {zero}.")
    weights = number_field.zeros(mats.P.shape[0])
    for (a, b, x), value in ineq.obs_coeffs.items():
        weights[observed_row(x, a, b)] += number_field.convert(value) / mats.p_x[x]
    for (a, b), value in ineq.do_coeffs.items():
        weights[do_row(mats.scenario, a, b)] += number_field.convert(value)
    rows = [number_field.convert(ineq.constant) + weights @ mats.P]
    for constraint in ineq.sign_constraints:
        sign_weights = number_field.zeros(mats.P.shape[0])
        for (a, b), value in constraint.items():
            sign_weights[do_row(mats.scenario, a, b)] += number_field.convert(value)
        rows.append(-(sign_weights @ mats.P))
    return np.vstack(rows)


def max_violation(ineq, p_x, exact=False, backend=None):
    """Largest alpha with K = -alpha attainable by a latent model with instrument marginal p_x."""
    scenario = Scenario(ineq.x_card)
    p_x = check_marginal(scenario, p_x, exact)
    number_field = field_for(exact)
    best = None
    for branch in linearize(ineq):
        mats = build_matrices(scenario, p_x, with_do=branch.needs_interventional, exact=exact)
        KP = lift(branch, mats)
        if len(KP) == 1:
            # Blocks decouple: each lambda_x block puts its mass on its smallest column.
            blocks = KP[0].reshape(scenario.x_card, -1)
            value = -sum(p_x[x] * min(blocks[x]) for x in range(scenario.x_card))
        else:
            n = mats.n_columns
            problem = LPProblem(
                sense='max', c=-KP[0], A_ub=KP[1:], b_ub=number_field.zeros(len(KP) - 1),
                A_eq=mats.Delta, b_eq=p_x, bounds=[(0, None)] * n,
                var_blocks={'q': slice(0, n)}, exact=exact, label=f"max-violation {branch.id}{branch.branch}",
            )
            solution = solve(problem, backend=backend)
            if solution.status != 'optimal':
                logger.debug(f"Branch {branch.branch} of '{ineq.id}' is {solution.status}.")
                continue
            value = solution.objective
        best = value if best is None else max(best, value)
    if best is None:
        return number_field.convert(0)
    return max(number_field.convert(0), best)
