import argparse
import logging

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from .exceptions import InstrumentalError
from .numeric_helper import parse_number, parse_vector
from .output_helper import ResultWriter
from .simplex_helper import BACKEND_HIGHS, BACKEND_SIMPLEX

logger = logging.getLogger(__name__)

DOMAIN_ERROR_STATUS = 1


def grid_points(text):
    """argparse type for evenly spaced grids: an integer of at least 2."""
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid int value: '{text}'")
    if value < 2:
        raise argparse.ArgumentTypeError(f"a grid needs at least 2 points, got {value}")
    return value


def instrumental_setting(key):
    return settings.INSTRUMENTAL[key]


def read_text(path):
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return f.read()
    except OSError as exc:
        raise InstrumentalError(f"Cannot read '{path}': {exc}", code='io-error') from exc


class InstrumentalCommand(BaseCommand):
    """Base for the toolkit's commands: shared flags and ``[code] message`` error reporting.

    Subclasses implement ``run(**options)`` instead of ``handle``.
    """

    def add_arguments(self, parser):
        parser.add_argument(
            '--exact',
            action='store_true',
            help='Uses exact rational arithmetic instead of floating point.'
        )
        parser.add_argument(
            '--backend',
            choices=[BACKEND_SIMPLEX, BACKEND_HIGHS],
            default=None,
            help='LP solver for floating point runs (exact runs always use the rational simplex).'
        )
        parser.add_argument(
            '--quiet',
            action='store_true',
            help='Suppresses progress bars.'
        )

    def writer(self):
        return ResultWriter(output_stream=self.stdout.write, style=self.style)

    def parse_px(self, text, exact):
        return parse_vector(text, exact) if text is not None else None

    def parse_value(self, text, exact):
        return parse_number(text, exact)

    def handle(self, *args, **options):
        try:
            return self.run(**options)
        except InstrumentalError as exc:
            logger.debug(f"{type(exc).__name__}: {exc}")
            raise CommandError(f"[{exc.code}] {exc}", returncode=DOMAIN_ERROR_STATUS) from exc

    def run(self, **options):
        raise NotImplementedError('Subclasses of InstrumentalCommand must provide a run() method.')
