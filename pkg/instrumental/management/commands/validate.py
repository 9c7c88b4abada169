import logging

from ...helpers.command_helper import InstrumentalCommand, read_text
from ...helpers.exceptions import InvalidDistributionError
from ...helpers.scenario_helper import (
    BETA_VARIANTS,
    iv_beta,
    iv_beta_covariance,
    parse_distribution,
    read_samples,
    validate_distribution,
)
from ...helpers.simulation_helper import empirical_distribution

logger = logging.getLogger(__name__)


class Command(InstrumentalCommand):
    help = (
        'Checks an observed distribution p(x), p(a,b|x) for nonnegativity and normalization, '
        'or summarizes a sample CSV (x,a,b) with its empirical distribution and IV estimate.'
    )

    def add_arguments(self, parser):
        super().add_arguments(parser)
        source = parser.add_mutually_exclusive_group(required=True)
        source.add_argument(
            '--input',
            type=str,
            help='Path to the distribution JSON document.'
        )
        source.add_argument(
            '--samples',
            type=str,
            help='Path to a sample CSV with columns x,a,b (used instead of --input).'
        )
        parser.add_argument(
            '--x_card',
            type=int,
            default=None,
            help='Number of instrument values in the sample; inferred from the data when omitted.'
        )
        parser.add_argument(
            '--variant',
            choices=BETA_VARIANTS,
            default=BETA_VARIANTS[0],
            help='IV estimator for samples: ratio of normalized correlations, or the covariance ratio.'
        )
        parser.add_argument(
            '--out',
            type=str,
            default=None,
            help='Writes the report JSON here instead of standard output.'
        )

    def run(self, **options):
        exact = options['exact']
        writer = self.writer()

        if options['samples']:
            samples = read_samples(options['samples'], options['x_card'])
            dist = empirical_distribution(samples, exact)
            beta = iv_beta(samples, exact) if options['variant'] == 'correlation' else iv_beta_covariance(samples)
            self.stdout.write(self.style.SUCCESS(f"Read {len(samples)} rows with x_card={samples.scenario.x_card}."))
            writer.emit_json({
                'ok': True,
                'violations': [],
                'n': len(samples),
                'p_x': dist.p_x,
                'p_ab_given_x': dist.p_ab_given_x,
                'beta': beta,
                'variant': options['variant'],
            }, options['out'])
            return

        dist = parse_distribution(read_text(options['input']), exact, validate=False)
        report = validate_distribution(dist)
        writer.emit_json({'ok': report.ok, 'violations': report.violations}, options['out'])
        if not report.ok:
            for violation in report.violations:
                self.stdout.write(self.style.WARNING(violation))
            raise InvalidDistributionError(
                f"{len(report.violations)} problem(s) in '{options['input']}'.", report.violations
            )
        self.stdout.write(self.style.SUCCESS(f"'{options['input']}' is a valid distribution."))
