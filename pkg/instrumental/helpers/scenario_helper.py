import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, StrictFloat, StrictInt, ValidationError

from .exceptions import (
    DimensionMismatchError,
    InstrumentalError,
    InvalidDistributionError,
    MalformedDocumentError,
)
from .numeric_helper import field_for, format_number

logger = logging.getLogger(__name__)

# --- Scenario Constants ---
A_CARD = 2
B_CARD = 2
SCHEMA_VERSION = 1
SAMPLE_COLUMNS = ['x', 'a', 'b']
BETA_VARIANTS = ('correlation', 'covariance')

NumberLike = Union[StrictInt, StrictFloat, str]


class DegenerateSampleError(InstrumentalError):
    code = 'division-by-zero'


# --- Domain Types ---
@dataclass(frozen=True)
class Scenario:
    x_card: int
    a_card: int = A_CARD
    b_card: int = B_CARD

    def __post_init__(self):
        if isinstance(self.x_card, bool) or not isinstance(self.x_card, (int, np.integer)) or self.x_card < 2:
            raise DimensionMismatchError(f"x_card must be an integer >= 2, got {self.x_card!r}.")
        if self.a_card != A_CARD or self.b_card != B_CARD:
            raise DimensionMismatchError("Only binary A and B are supported.")


@dataclass(frozen=True)
class ValidationReport:
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations


@dataclass(frozen=True, eq=False)
class ObservedDistribution:
    """Conditional table p(a,b|x), indexed ``[x][a][b]``, together with p(x)."""
    scenario: Scenario
    p_x: np.ndarray
    p_ab_given_x: np.ndarray
    exact: bool = False

    def prob(self, a, b, x):
        return self.p_ab_given_x[x, a, b]

    def __eq__(self, other):
        if not isinstance(other, ObservedDistribution):
            return NotImplemented
        return (self.scenario == other.scenario and self.exact == other.exact
                and np.array_equal(self.p_x, other.p_x)
                and np.array_equal(self.p_ab_given_x, other.p_ab_given_x))


@dataclass(frozen=True, eq=False)
class InterventionalDistribution:
    """Table p(b|do(a)) indexed ``[a][b]``."""
    p_b_do_a: np.ndarray
    exact: bool = False

    def prob(self, b, a):
        return self.p_b_do_a[a, b]

    def __eq__(self, other):
        if not isinstance(other, InterventionalDistribution):
            return NotImplemented
        return self.exact == other.exact and np.array_equal(self.p_b_do_a, other.p_b_do_a)


@dataclass(frozen=True, eq=False)
class Sample:
    scenario: Scenario
    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows)
        if rows.ndim != 2 or rows.shape[1] != 3:
            raise DimensionMismatchError(f"Sample rows must have shape (n, 3), got {rows.shape}.")
        limits = (self.scenario.x_card, A_CARD, B_CARD)
        for column, (name, limit) in enumerate(zip(SAMPLE_COLUMNS, limits)):
            values = rows[:, column]
            if len(values) and (values.min() < 0 or values.max() >= limit):
                raise InvalidDistributionError(f"Sample column '{name}' has values outside [0, {limit}).")

    def __len__(self):
        return len(self.rows)


# --- Pydantic Documents ---
class ScenarioDocument(BaseModel):
    x_card: int


class DistributionDocument(BaseModel):
    schema_version: Optional[int] = None
    scenario: ScenarioDocument
    p_x: List[NumberLike]
    p_ab_given_x: List[List[List[NumberLike]]]


class InterventionalDocument(BaseModel):
    schema_version: Optional[int] = None
    p_b_do_a: List[List[NumberLike]]


# --- Construction and Validation ---
def make_distribution(p_x, p_ab_given_x, exact=False, validate=True):
    number_field = field_for(exact)
    p_x = number_field.array(p_x)
    table = number_field.array(p_ab_given_x)
    if p_x.ndim != 1:
        raise DimensionMismatchError(f"p_x must be a vector, got shape {p_x.shape}.")
    scenario = Scenario(len(p_x))
    if table.shape != (scenario.x_card, A_CARD, B_CARD):
        raise DimensionMismatchError(
            f"p_ab_given_x must have shape ({scenario.x_card}, 2, 2), got {table.shape}."
        )
    dist = ObservedDistribution(scenario, p_x, table, exact)
    if validate:
        report = validate_distribution(dist)
        if not report.ok:
            raise InvalidDistributionError('; '.join(report.violations), report.violations)
    return dist


def uniform_distribution(scenario, exact=False):
    quarter = Fraction(1, 4)
    share = Fraction(1, scenario.x_card)
    return make_distribution([share] * scenario.x_card,
                             [[[quarter] * B_CARD] * A_CARD] * scenario.x_card, exact)


def _check_entries(values, label, number_field, violations):
    for index in np.ndindex(values.shape):
        value = values[index]
        position = ','.join(str(i) for i in index)
        if number_field.is_negative(value):
            violations.append(f"{label}entry < 0 at ({position})")
        elif number_field.is_positive(value - 1):
            violations.append(f"{label}entry > 1 at ({position})")


def validate_distribution(dist):
    """Lists every nonnegativity and normalization failure; never raises."""
    number_field = field_for(dist.exact)
    violations = []
    m_x = dist.scenario.x_card
    if len(dist.p_x) != m_x:
        violations.append(f"p_x has {len(dist.p_x)} entries, expected {m_x}")
    else:
        _check_entries(dist.p_x, 'p_x ', number_field, violations)
        if not number_field.is_zero(sum(dist.p_x) - 1):
            violations.append('p_x not normalized')
    if dist.p_ab_given_x.shape != (m_x, A_CARD, B_CARD):
        violations.append(f"p_ab_given_x has shape {dist.p_ab_given_x.shape}, expected ({m_x}, 2, 2)")
        return ValidationReport(violations)
    _check_entries(dist.p_ab_given_x, '', number_field, violations)
    for x in range(m_x):
        if not number_field.is_zero(dist.p_ab_given_x[x].sum() - 1):
            violations.append(f"x={x} not normalized")
    return ValidationReport(violations)


def validate_interventional(do_dist):
    number_field = field_for(do_dist.exact)
    violations = []
    if do_dist.p_b_do_a.shape != (A_CARD, B_CARD):
        return ValidationReport([f"p_b_do_a has shape {do_dist.p_b_do_a.shape}, expected (2, 2)"])
    _check_entries(do_dist.p_b_do_a, '', number_field, violations)
    for a in range(A_CARD):
        if not number_field.is_zero(do_dist.p_b_do_a[a].sum() - 1):
            violations.append(f"do(a={a}) not normalized")
    return ValidationReport(violations)


def make_interventional(p_b_do_a, exact=False, validate=True):
    table = field_for(exact).array(p_b_do_a)
    do_dist = InterventionalDistribution(table, exact)
    if validate:
        report = validate_interventional(do_dist)
        if not report.ok:
            raise InvalidDistributionError('; '.join(report.violations), report.violations)
    return do_dist


def joint_table(dist):
    """p(a,b,x) = p(a,b|x) p(x), indexed ``[x][a][b]``."""
    return dist.p_ab_given_x * dist.p_x[:, None, None]


# --- Serialization ---
def _load_document(model, text):
    try:
        return model.model_validate_json(text)
    except ValidationError as exc:
        raise MalformedDocumentError(f"Malformed {model.__name__}: {exc}") from exc


def parse_distribution(text, exact=False, validate=True):
    document = _load_document(DistributionDocument, text)
    x_card = document.scenario.x_card
    if len(document.p_x) != x_card:
        raise DimensionMismatchError(f"p_x has {len(document.p_x)} entries but x_card is {x_card}.")
    if len(document.p_ab_given_x) != x_card:
        raise DimensionMismatchError(
            f"p_ab_given_x has {len(document.p_ab_given_x)} x-rows but x_card is {x_card}."
        )
    for x, block in enumerate(document.p_ab_given_x):
        if len(block) != A_CARD or any(len(row) != B_CARD for row in block):
            raise DimensionMismatchError(f"p_ab_given_x[{x}] is not a 2x2 table.")
    return make_distribution(document.p_x, document.p_ab_given_x, exact, validate)


def serialize_distribution(dist):
    payload = {
        'schema_version': SCHEMA_VERSION,
        'scenario': {'x_card': dist.scenario.x_card},
        'p_x': [format_number(value) for value in dist.p_x],
        'p_ab_given_x': [[[format_number(value) for value in row] for row in block]
                         for block in dist.p_ab_given_x],
    }
    return json.dumps(payload, indent=2)


def parse_interventional(text, exact=False):
    document = _load_document(InterventionalDocument, text)
    if len(document.p_b_do_a) != A_CARD or any(len(row) != B_CARD for row in document.p_b_do_a):
        raise DimensionMismatchError('p_b_do_a must be a 2x2 table.')
    return make_interventional(document.p_b_do_a, exact)


def serialize_interventional(do_dist):
    payload = {
        'schema_version': SCHEMA_VERSION,
        'p_b_do_a': [[format_number(value) for value in row] for row in do_dist.p_b_do_a],
    }
    return json.dumps(payload, indent=2)


# --- Samples ---
def read_samples(path, x_card=None):
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise MalformedDocumentError(f"Cannot read samples from '{path}': {exc}") from exc
    missing = [column for column in SAMPLE_COLUMNS if column not in frame.columns]
    if missing:
        raise MalformedDocumentError(f"Sample file '{path}' is missing columns {missing}.")
    rows = frame[SAMPLE_COLUMNS].to_numpy()
    if not np.issubdtype(rows.dtype, np.integer):
        raise MalformedDocumentError(f"Sample file '{path}' must contain integer values only.")
    if x_card is None:
        x_card = max(2, int(rows[:, 0].max()) + 1) if len(rows) else 2
    return Sample(Scenario(x_card), rows.astype(np.int64))


def write_samples(sample, path):
    pd.DataFrame(sample.rows, columns=SAMPLE_COLUMNS).to_csv(path, index=False)


# --- Instrumental Variable Estimators ---
def _checked_ratio(numerator, denominator, label):
    if denominator == 0:
        raise DegenerateSampleError(f"Cannot estimate beta: {label} vanishes on the sample.")
    return numerator / denominator


def iv_beta_from_arrays(x, a, b, exact=False):
    """β = corr(X,B)/corr(X,A) with corr(U,V) = ⟨UV⟩/(⟨U⟩⟨V⟩)."""
    x, a, b = (np.asarray(values) for values in (x, a, b))
    if not (len(x) == len(a) == len(b)) or len(x) == 0:
        raise DimensionMismatchError('x, a and b must be non-empty and of equal length.')
    if exact:
        n = len(x)
        mean = lambda values: Fraction(int(np.sum(values, dtype=object)), n)
    else:
        mean = lambda values: float(np.mean(values))
    mean_x, mean_a, mean_b = mean(x), mean(a), mean(b)
    for label, value in (('<X>', mean_x), ('<A>', mean_a), ('<B>', mean_b)):
        if value == 0:
            raise DegenerateSampleError(f"Cannot estimate beta: {label} vanishes on the sample.")
    corr_xb = mean(x * b) / (mean_x * mean_b)
    corr_xa = _checked_ratio(mean(x * a), mean_x * mean_a, '<XA>')
    return _checked_ratio(corr_xb, corr_xa, 'corr(X,A)')


def iv_beta_covariance_from_arrays(x, a, b):
    """Wald estimator cov(X,B)/cov(X,A)."""
    x, a, b = (np.asarray(values, dtype=np.float64) for values in (x, a, b))
    cov_xb = float(np.mean(x * b) - np.mean(x) * np.mean(b))
    cov_xa = float(np.mean(x * a) - np.mean(x) * np.mean(a))
    return _checked_ratio(cov_xb, cov_xa, 'cov(X,A)')


def iv_beta(samples, exact=False):
    rows = samples.rows
    return iv_beta_from_arrays(rows[:, 0], rows[:, 1], rows[:, 2], exact)


def iv_beta_covariance(samples):
    rows = samples.rows
    return iv_beta_covariance_from_arrays(rows[:, 0], rows[:, 1], rows[:, 2])
