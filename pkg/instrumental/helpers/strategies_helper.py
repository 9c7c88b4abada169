"""Deterministic latent strategies of the instrumental scenario and the LP matrices.

Strategy order (shared by q, the LP variables and every certificate): the index is
``(lambda_x * 2**m_x + lambda_a) * 4 + lambda_b``. Inside a response table the value
for input 0 is the most significant bit, so ``f_la(x)`` is bit ``m_x - 1 - x`` of
``lambda_a`` and ``g_lb(a)`` is bit ``1 - a`` of ``lambda_b``. With this order
``lambda_b = 0`` is g = 0, ``1`` the identity, ``2`` the negation and ``3`` g = 1.
"""
import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, StrictFloat, StrictInt, ValidationError

from .exceptions import (
    DimensionMismatchError,
    InstrumentalError,
    InvalidDistributionError,
    MalformedDocumentError,
)
from .numeric_helper import field_for, format_number
from .scenario_helper import (
    A_CARD,
    B_CARD,
    SCHEMA_VERSION,
    Scenario,
    make_distribution,
    make_interventional,
)

logger = logging.getLogger(__name__)

G_TABLES = 4
OUTCOMES_PER_X = A_CARD * B_CARD


class ZeroMarginalError(InstrumentalError):
    code = 'zero-marginal'


class InvalidMarginalError(InstrumentalError):
    code = 'invalid-marginal'


@dataclass(frozen=True)
class DeterministicStrategy:
    index: int
    lambda_x: int
    lambda_a: int
    lambda_b: int
    f: tuple
    g: tuple

    def outcome(self):
        """The unique (x, a, b) this strategy produces."""
        a = self.f[self.lambda_x]
        return self.lambda_x, a, self.g[a]


@dataclass(frozen=True, eq=False)
class LatentJoint:
    scenario: Scenario
    q: np.ndarray
    exact: bool = False

    def __post_init__(self):
        number_field = field_for(self.exact)
        if self.q.shape != (n_strategies(self.scenario),):
            raise DimensionMismatchError(
                f"q must have {n_strategies(self.scenario)} entries for x_card={self.scenario.x_card}, "
                f"got shape {self.q.shape}."
            )
        if any(number_field.is_negative(value) for value in self.q):
            raise InvalidDistributionError('q has negative entries.')
        if not number_field.is_zero(self.q.sum() - 1):
            raise InvalidDistributionError('q does not sum to 1.')

    def blocks(self):
        """q reshaped to ``[lambda_x][lambda_a, lambda_b]``."""
        return self.q.reshape(self.scenario.x_card, -1)


@dataclass(frozen=True, eq=False)
class ScenarioMatrices:
    scenario: Scenario
    p_x: np.ndarray
    M: np.ndarray
    P: np.ndarray
    Delta: np.ndarray
    with_do: bool
    exact: bool

    @property
    def n_obs(self):
        return OUTCOMES_PER_X * self.scenario.x_card

    @property
    def n_columns(self):
        return self.M.shape[1]

    @property
    def P_obs(self):
        return self.P[:self.n_obs]

    @property
    def P_do(self):
        if not self.with_do:
            raise DimensionMismatchError('These matrices were built without the do-block.')
        return self.P[self.n_obs:]


# --- Indexing ---
def n_strategies(scenario):
    return scenario.x_card * 2 ** scenario.x_card * G_TABLES


def response_table(code, n_inputs):
    return tuple((code >> (n_inputs - 1 - i)) & 1 for i in range(n_inputs))


def strategy_index(scenario, lambda_x, lambda_a, lambda_b):
    return (lambda_x * 2 ** scenario.x_card + lambda_a) * G_TABLES + lambda_b


def strategy_components(scenario, index):
    rest, lambda_b = divmod(index, G_TABLES)
    lambda_x, lambda_a = divmod(rest, 2 ** scenario.x_card)
    return lambda_x, lambda_a, lambda_b


def observed_row(x, a, b):
    return x * OUTCOMES_PER_X + a * B_CARD + b


def do_row(scenario, a, b):
    return OUTCOMES_PER_X * scenario.x_card + a * B_CARD + b


@lru_cache(maxsize=None)
def enumerate_strategies(scenario):
    strategies = []
    for index in range(n_strategies(scenario)):
        lambda_x, lambda_a, lambda_b = strategy_components(scenario, index)
        strategies.append(DeterministicStrategy(
            index, lambda_x, lambda_a, lambda_b,
            response_table(lambda_a, scenario.x_card),
            response_table(lambda_b, A_CARD),
        ))
    return tuple(strategies)


@lru_cache(maxsize=None)
def _incidence(scenario, with_do):
    strategies = enumerate_strategies(scenario)
    n_rows = OUTCOMES_PER_X * scenario.x_card + (OUTCOMES_PER_X if with_do else 0)
    P = np.zeros((n_rows, len(strategies)), dtype=np.int64)
    Delta = np.zeros((scenario.x_card, len(strategies)), dtype=np.int64)
    for strategy in strategies:
        P[observed_row(*strategy.outcome()), strategy.index] = 1
        Delta[strategy.lambda_x, strategy.index] = 1
        if with_do:
            for a in range(A_CARD):
                P[do_row(scenario, a, strategy.g[a]), strategy.index] = 1
    P.setflags(write=False)
    Delta.setflags(write=False)
    return P, Delta


def check_marginal(scenario, p_x, exact=False):
    number_field = field_for(exact)
    p_x = number_field.array(p_x)
    if p_x.shape != (scenario.x_card,):
        raise DimensionMismatchError(f"p_x must have {scenario.x_card} entries, got shape {p_x.shape}.")
    if any(number_field.is_negative(value) for value in p_x):
        raise InvalidMarginalError(f"p_x has negative entries: {list(p_x)}.")
    if not number_field.is_zero(p_x.sum() - 1):
        raise InvalidMarginalError(f"p_x does not sum to 1: {list(p_x)}.")
    return p_x


def build_matrices(scenario, p_x, with_do=True, exact=False):
    number_field = field_for(exact)
    p_x = check_marginal(scenario, p_x, exact)
    P, Delta = _typed_incidence(scenario, with_do, exact)
    block = G_TABLES * 2 ** scenario.x_card
    identity = number_field.array(np.eye(scenario.x_card, dtype=np.int64))
    centering = identity - np.outer(p_x, number_field.array(np.ones(scenario.x_card, dtype=np.int64)))
    M = np.kron(centering, number_field.array(np.eye(block, dtype=np.int64)))
    logger.debug(f"Built matrices for x_card={scenario.x_card}: M {M.shape}, P {P.shape}.")
    return ScenarioMatrices(scenario, p_x, M, P, Delta, with_do, exact)


# --- Latent Joints ---
def make_latent_joint(q, exact=False):
    q = field_for(exact).array(q)
    if q.ndim != 1:
        raise DimensionMismatchError(f"q must be a vector, got shape {q.shape}.")
    x_card = _x_card_for_length(len(q))
    return LatentJoint(Scenario(x_card), q, exact)


def _x_card_for_length(length):
    x_card = 2
    while n_strategies(Scenario(x_card)) < length:
        x_card += 1
    if n_strategies(Scenario(x_card)) != length:
        raise DimensionMismatchError(f"No scenario has {length} strategies.")
    return x_card


def product_joint(p_x, r, exact=False):
    number_field = field_for(exact)
    p_x, r = number_field.array(p_x), number_field.array(r)
    return make_latent_joint(np.kron(p_x, r), exact)


def random_joint(scenario, rng):
    return LatentJoint(scenario, rng.dirichlet(np.ones(n_strategies(scenario))))


def random_independent_joint(scenario, rng, p_x=None):
    if p_x is None:
        p_x = rng.dirichlet(np.ones(scenario.x_card))
    r = rng.dirichlet(np.ones(n_strategies(scenario) // scenario.x_card))
    return LatentJoint(scenario, np.kron(np.asarray(p_x, dtype=np.float64), r))


def joint_with_marginal(scenario, rng, p_x):
    """Random q whose lambda_x marginal is exactly ``p_x`` (float mode)."""
    block = n_strategies(scenario) // scenario.x_card
    rows = rng.dirichlet(np.ones(block), size=scenario.x_card)
    return LatentJoint(scenario, (np.asarray(p_x, dtype=np.float64)[:, None] * rows).reshape(-1))


@lru_cache(maxsize=None)
def _typed_incidence(scenario, with_do, exact):
    number_field = field_for(exact)
    P, Delta = _incidence(scenario, with_do)
    return number_field.array(P), number_field.array(Delta)


def _incidence_for(q, with_do):
    return _typed_incidence(q.scenario, with_do, q.exact)


def observed_joint_batch(scenario, Q):
    """p(a,b,x) for many latent joints at once; ``Q`` has one q per row."""
    P, _ = _incidence(scenario, False)
    return (np.asarray(Q, dtype=np.float64) @ P.T).reshape(-1, scenario.x_card, A_CARD, B_CARD)


def do_table_batch(scenario, Q):
    P, _ = _incidence(scenario, True)
    do_block = P[OUTCOMES_PER_X * scenario.x_card:]
    return (np.asarray(Q, dtype=np.float64) @ do_block.T).reshape(-1, A_CARD, B_CARD)


def forward_distribution(q):
    P, Delta = _incidence_for(q, with_do=False)
    p_x = Delta @ q.q
    number_field = field_for(q.exact)
    zero = [x for x, value in enumerate(p_x) if not number_field.is_positive(value)]
    if zero:
        raise ZeroMarginalError(f"Instrument marginal p(x) vanishes for x in {zero}.")
    joint = (P @ q.q).reshape(q.scenario.x_card, A_CARD, B_CARD)
    return make_distribution(p_x, joint / p_x[:, None, None], q.exact)


def interventional(q):
    P, _ = _incidence_for(q, with_do=True)
    do_block = P[OUTCOMES_PER_X * q.scenario.x_card:]
    return make_interventional((do_block @ q.q).reshape(A_CARD, B_CARD), q.exact)


def instrument_marginal(q):
    return q.blocks().sum(axis=1)


def dependence_measure(q):
    """Direct l1 distance between p(x, lambda_a, lambda_b) and p(x) p(lambda_a, lambda_b)."""
    blocks = q.blocks()
    p_x = blocks.sum(axis=1)
    p_s = blocks.sum(axis=0)
    return np.abs(blocks - np.outer(p_x, p_s)).sum()


def dependence_measure_matrix(q):
    """The same measure computed as ``||M q||_1`` with M built from q's own marginal."""
    mats = build_matrices(q.scenario, instrument_marginal(q), with_do=False, exact=q.exact)
    return np.abs(mats.M @ q.q).sum()


# --- LatentJoint Documents ---
class LatentJointDocument(BaseModel):
    schema_version: Optional[int] = None
    x_card: int
    q: List[Union[StrictInt, StrictFloat, str]]


def parse_latent_joint(text, exact=False):
    try:
        document = LatentJointDocument.model_validate_json(text)
    except ValidationError as exc:
        raise MalformedDocumentError(f"Malformed latent joint: {exc}") from exc
    scenario = Scenario(document.x_card)
    if len(document.q) != n_strategies(scenario):
        raise DimensionMismatchError(
            f"q has {len(document.q)} entries, expected {n_strategies(scenario)} for x_card={scenario.x_card}."
        )
    return LatentJoint(scenario, field_for(exact).array(document.q), exact)


def serialize_latent_joint(q):
    return json.dumps({
        'schema_version': SCHEMA_VERSION,
        'x_card': q.scenario.x_card,
        'q': [format_number(value) for value in q.q],
    }, indent=2)


def point_mass(scenario, lambda_x, lambda_a, lambda_b, weight=Fraction(1)):
    q = field_for(True).zeros(n_strategies(scenario))
    q[strategy_index(scenario, lambda_x, lambda_a, lambda_b)] = weight
    return q
