from ...helpers.command_helper import InstrumentalCommand
from ...helpers.dependence_helper import adapted_bound
from ...helpers.inequalities_helper import get_inequality


class Command(InstrumentalCommand):
    help = 'Prints the inequality relaxed so that it stays valid when instrument-confounder dependence is at most --level.'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--ineq',
            type=str,
            required=True,
            help='Inequality id, e.g. pearl-00 or c1.'
        )
        parser.add_argument(
            '--px',
            type=str,
            required=True,
            help='Instrument marginal as comma separated values.'
        )
        parser.add_argument(
            '--level',
            type=str,
            required=True,
            help='Dependence level M, as a decimal or a fraction.'
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
        level = self.parse_value(options['level'], exact)

        adapted = adapted_bound(ineq, p_x, level, exact, options['backend'])
        self.writer().emit_json({
            'ineq': adapted.base_id,
            'p_x': list(adapted.p_x),
            'slope': adapted.slope,
            'level': adapted.dependence_level,
            'threshold': adapted.threshold,
            'statement': adapted.statement,
        }, options['out'])
        self.stdout.write(self.style.SUCCESS(adapted.statement))
