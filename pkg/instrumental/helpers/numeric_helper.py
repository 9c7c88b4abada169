import logging
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from .exceptions import MalformedDocumentError

logger = logging.getLogger(__name__)

FLOAT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class NumberField:
    """Arithmetic context shared by tables, matrices and the simplex engine.

    The exact field holds ``Fraction`` values and compares without tolerance;
    the float field holds ``float`` values and compares with ``tolerance``.
    """
    name: str
    exact: bool
    tolerance: float

    @property
    def dtype(self):
        return object if self.exact else np.float64

    def convert(self, value):
        if self.exact:
            return to_fraction(value)
        if isinstance(value, (str, bool, Fraction)):
            return float(to_fraction(value))
        return float(value)

    def array(self, values):
        if not self.exact and isinstance(values, np.ndarray) and values.dtype.kind in "biuf":
            return values.astype(np.float64)
        values = np.asarray(values, dtype=object)
        if values.size == 0:
            return values.astype(self.dtype)
        return np.vectorize(self.convert, otypes=[self.dtype])(values)

    def zeros(self, shape):
        if self.exact:
            result = np.empty(shape, dtype=object)
            result.fill(Fraction(0))
            return result
        return np.zeros(shape, dtype=np.float64)

    def is_zero(self, value):
        return value == 0 if self.exact else abs(value) <= self.tolerance

    def is_positive(self, value):
        return value > self.tolerance

    def is_negative(self, value):
        return value < -self.tolerance

    def leq(self, left, right):
        return left <= right + self.tolerance

    def equal(self, left, right):
        return self.is_zero(left - right)


EXACT = NumberField('exact', True, 0.0)
FLOAT = NumberField('float', False, FLOAT_TOLERANCE)


def field_for(exact):
    return EXACT if exact else FLOAT


def to_fraction(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise MalformedDocumentError(f"Boolean {value!r} is not a probability.")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, (float, np.floating)):
        # repr gives the shortest decimal that round-trips, so 0.1 becomes 1/10.
        return Fraction(repr(float(value)))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise MalformedDocumentError(f"Cannot parse number {value!r}: {exc}") from exc
    raise MalformedDocumentError(f"Unsupported number {value!r} of type {type(value).__name__}.")


def parse_number(value, exact=False):
    """Parses a JSON number, decimal string or fraction string such as ``"1/3"``."""
    fraction = to_fraction(value)
    return fraction if exact else float(fraction)


def parse_vector(text, exact=False):
    """Parses a comma separated vector such as ``1/2,1/2`` from the command line."""
    items = [item for item in (part.strip() for part in str(text).split(',')) if item]
    if not items:
        raise MalformedDocumentError(f"Empty vector {text!r}.")
    return [parse_number(item, exact) for item in items]


def format_number(value):
    """JSON-friendly rendering: fraction strings for exact values, floats otherwise."""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (np.integer, int)) and not isinstance(value, bool):
        return int(value)
    return float(value)
