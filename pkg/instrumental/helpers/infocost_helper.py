import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict

import numpy as np
from scipy.stats import entropy

from .exceptions import OutOfRangeError
from .dependence_helper import UnsupportedClosedFormError
from .inequalities_helper import evaluate_batch, get_inequality
from .numeric_helper import field_for, to_fraction
from .scenario_helper import Scenario
from .strategies_helper import (
    LatentJoint,
    enumerate_strategies,
    n_strategies,
    observed_joint_batch,
    strategy_index,
)

logger = logging.getLogger(__name__)

LOG_BASE = 2
UNIFORM_TOLERANCE = 1e-12
# lambda_a with f = 0 on both inputs; lambda_b = 0 is g = 0 and lambda_b = 3 is g = 1
WITNESS_LAMBDA_A = 0
WITNESS_GROUPS = {0: 0, 1: 3}


@dataclass(frozen=True, eq=False)
class InfoCostModel:
    k_value: object
    witness: LatentJoint
    grouping: Dict[int, int]
    bound: float


def binary_entropy(p):
    """h(p) in bits, with 0 log 0 = 0."""
    p = float(p)
    if not 0 <= p <= 1:
        raise OutOfRangeError(f"Binary entropy needs 0 <= p <= 1, got {p}.")
    return float(entropy([p, 1 - p], base=LOG_BASE))


def shannon_entropy(probabilities):
    probabilities = np.asarray(probabilities, dtype=np.float64).ravel()
    if probabilities.sum() == 0:
        return 0.0
    return float(entropy(probabilities, base=LOG_BASE))


def min_info_cost(k_value, p_x=None):
    """1 - h((1 - K)/2): the least I(X;Lambda) that explains Pearl value K under uniform X."""
    if p_x is not None:
        p_x = [float(value) for value in p_x]
        if len(p_x) != 2 or abs(p_x[0] - 0.5) > UNIFORM_TOLERANCE:
            raise UnsupportedClosedFormError(
                f"The information bound is known for a uniform two-valued instrument only, got p_x={p_x}."
            )
    if float(k_value) < -1:
        raise OutOfRangeError(f"Pearl values lie in [-1, 1], got {k_value}.")
    if k_value >= 0:
        logger.info(f"K={k_value} is not a violation; no information cost is required.")
        return 0.0
    return 1.0 - binary_entropy((1 - float(k_value)) / 2)


def conditional_entropy(joint):
    """H(row | column) in bits for a 2-D joint table."""
    joint = np.asarray(joint, dtype=np.float64)
    return shannon_entropy(joint) - shannon_entropy(joint.sum(axis=0))


def mutual_information(q):
    """I(X;Lambda) in bits between lambda_x (= X) and (lambda_a, lambda_b)."""
    joint = np.asarray(q.blocks(), dtype=np.float64)
    return max(0.0, shannon_entropy(joint.sum(axis=1)) - conditional_entropy(joint))


def mutual_information_batch(scenario, Q):
    """I(X;Lambda) for many float latent joints, one per row of ``Q``."""
    blocks = np.asarray(Q, dtype=np.float64).reshape(len(Q), scenario.x_card, -1)
    p_x = blocks.sum(axis=2, keepdims=True)
    p_s = blocks.sum(axis=1, keepdims=True)
    with np.errstate(divide='ignore', invalid='ignore'):
        terms = np.where(blocks > 0, blocks * np.log2(blocks / (p_x * p_s)), 0.0)
    return np.maximum(terms.sum(axis=(1, 2)), 0.0)


def sampled_bound_check(rng, n_samples, p_x=(0.5, 0.5), ineq_id='pearl-00'):
    """Counts random violating models whose I(X;Lambda) falls below 1 - h((1 - K)/2).

    Under uniform X the count is zero. For any other instrument marginal the bound is
    not established, so shortfalls are only reported.
    """
    scenario = Scenario(2)
    ineq = get_inequality(ineq_id, scenario.x_card)
    p_x = np.asarray([float(value) for value in p_x])
    block = n_strategies(scenario) // scenario.x_card
    rows = rng.dirichlet(np.ones(block), size=(n_samples, scenario.x_card))
    Q = (p_x[None, :, None] * rows).reshape(n_samples, -1)
    conditional = observed_joint_batch(scenario, Q) / p_x[None, :, None, None]
    k_values = evaluate_batch(ineq, conditional)
    violating = k_values < 0
    flips = np.clip((1 - k_values[violating]) / 2, 0.0, 1.0)
    bounds = 1.0 - np.array([binary_entropy(p) for p in flips])
    information = mutual_information_batch(scenario, Q[violating])
    shortfalls = int(np.count_nonzero(information < bounds - UNIFORM_TOLERANCE))
    uniform = abs(p_x[0] - 0.5) <= UNIFORM_TOLERANCE
    if shortfalls and not uniform:
        logger.warning(
            f"{shortfalls} of {int(violating.sum())} violating models with p_x={p_x.tolist()} "
            f"fall below the uniform-instrument information bound."
        )
    else:
        logger.info(f"Sampled {n_samples} models, {int(violating.sum())} violate '{ineq.id}', {shortfalls} below bound.")
    return shortfalls


def grouping(scenario):
    """E = g(0): lambda_b in the first group sends A = 0 to B = 0."""
    return {lambda_b: strategy.g[0]
            for lambda_b, strategy in enumerate(enumerate_strategies(scenario)[:4])}


def achievability_model(k_value, exact=None):
    """Latent model with uniform X and Pearl value ``k_value`` whose I(X;Lambda) meets the bound."""
    if exact is None:
        exact = isinstance(k_value, (Fraction, int))
    nf = field_for(exact)
    k_value = to_fraction(k_value) if exact else float(k_value)
    if not (-1 <= k_value < 0):
        raise OutOfRangeError(f"The witness needs -1 <= K < 0, got {k_value}.")
    scenario = Scenario(2)
    r = (1 - k_value) / 2
    q = nf.zeros(n_strategies(scenario))
    for group, lambda_b in WITNESS_GROUPS.items():
        # p(X = E | group) = r and p(E) = 1/2
        for x in range(2):
            weight = r if x == group else 1 - r
            q[strategy_index(scenario, x, WITNESS_LAMBDA_A, lambda_b)] = weight / 2
    witness = LatentJoint(scenario, q, exact)
    return InfoCostModel(k_value, witness, grouping(scenario), min_info_cost(k_value))
