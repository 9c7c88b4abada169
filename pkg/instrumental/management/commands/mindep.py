from ...helpers.command_helper import InstrumentalCommand, instrumental_setting
from ...helpers.dependence_helper import solve_min_dependence
from ...helpers.inequalities_helper import get_inequality
from ...helpers.lp_helper import write_lp_file
from ...helpers.numeric_helper import format_number


class Command(InstrumentalCommand):
    help = (
        'Solves the minimal instrument-confounder dependence needed to explain a violation alpha, '
        'and reports the optimal dual as a certificate.'
    )

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--ineq',
            type=str,
            required=True,
            help='Inequality id, e.g. pearl-00, bonet, c1.'
        )
        parser.add_argument(
            '--px',
            type=str,
            required=True,
            help='Instrument marginal as comma separated values, e.g. 1/2,1/2.'
        )
        parser.add_argument(
            '--alpha',
            type=str,
            required=True,
            help='Violation magnitude, as a decimal or a fraction.'
        )
        parser.add_argument(
            '--dump-lp',
            type=str,
            default=None,
            help='Writes the primal LP of the optimal branch in CPLEX LP format to this path.'
        )
        parser.add_argument(
            '--out',
            type=str,
            default=None,
            help='Writes the result JSON here instead of standard output.'
        )

    def run(self, **options):
        exact = options['exact']
        ineq = get_inequality(options['ineq'])
        p_x = self.parse_px(options['px'], exact)
        alpha = self.parse_value(options['alpha'], exact)

        result = solve_min_dependence(
            ineq, p_x, alpha, exact, options['backend'],
            certificate_tolerance=instrumental_setting('CERTIFICATE_TOLERANCE'),
        )
        if options['dump_lp']:
            write_lp_file(result.primal_problem, options['dump_lp'])
            self.stdout.write(f"Primal LP written to {options['dump_lp']}")

        self.writer().emit_json(result.as_dict(), options['out'])
        if result.certificate.ok:
            self.stdout.write(self.style.SUCCESS(
                f"Minimal dependence {format_number(result.dependence)} at alpha={format_number(alpha)}, "
                f"certified (gap {format_number(result.certificate.gap)})."
            ))
        else:
            self.stdout.write(self.style.WARNING(
                f"Minimal dependence {format_number(result.dependence)}, but the dual certificate did not close: "
                f"{result.certificate.violations[:3]}"
            ))
