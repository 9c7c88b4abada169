from ...helpers.command_helper import InstrumentalCommand, read_text
from ...helpers.inequalities_helper import evaluate, evaluate_joint, get_inequality
from ...helpers.scenario_helper import parse_distribution, parse_interventional
from ...helpers.strategies_helper import parse_latent_joint


class Command(InstrumentalCommand):
    help = 'Evaluates an instrumental inequality or causal bound K and reports the violation alpha = max(0, -K).'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--ineq',
            type=str,
            required=True,
            help='Inequality id, e.g. pearl-00, bonet, kedagni, c1, or a relabeled id such as c1@x10.'
        )
        source = parser.add_mutually_exclusive_group(required=True)
        source.add_argument(
            '--input',
            type=str,
            help='Path to the observed distribution JSON document.'
        )
        parser.add_argument(
            '--interventional',
            type=str,
            default=None,
            help='Path to the p(b|do(a)) JSON document; required for causal bounds.'
        )
        source.add_argument(
            '--latent',
            type=str,
            default=None,
            help='Path to a latent joint JSON document, evaluated through its forward statistics.'
        )
        parser.add_argument(
            '--out',
            type=str,
            default=None,
            help='Writes the report JSON here instead of standard output.'
        )

    def run(self, **options):
        exact = options['exact']
        if options['latent']:
            q = parse_latent_joint(read_text(options['latent']), exact)
            ineq = get_inequality(options['ineq'], q.scenario.x_card)
            report = evaluate_joint(ineq, q)
        else:
            dist = parse_distribution(read_text(options['input']), exact)
            ineq = get_inequality(options['ineq'], dist.scenario.x_card)
            do_dist = None
            if options['interventional']:
                do_dist = parse_interventional(read_text(options['interventional']), exact)
            report = evaluate(ineq, dist, do_dist)

        self.writer().emit_json(report.as_dict(), options['out'])
        if report.violated:
            self.stdout.write(self.style.WARNING(f"'{ineq.id}' is violated by alpha={report.alpha}."))
        else:
            self.stdout.write(self.style.SUCCESS(f"'{ineq.id}' holds (K={report.k_value})."))
