from ...helpers.command_helper import InstrumentalCommand
from ...helpers.infocost_helper import achievability_model, min_info_cost, mutual_information
from ...helpers.strategies_helper import serialize_latent_joint


class Command(InstrumentalCommand):
    help = (
        'Prints the least mutual information I(X;Lambda), in bits, needed to explain a Pearl '
        'value K < 0 with a uniform binary instrument, optionally with a model attaining it.'
    )

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--kinst',
            type=str,
            required=True,
            help='Pearl inequality value K, as a decimal or a fraction.'
        )
        parser.add_argument(
            '--px',
            type=str,
            default=None,
            help='Instrument marginal; the bound is only known for 1/2,1/2.'
        )
        parser.add_argument(
            '--witness',
            action='store_true',
            help='Also prints a latent joint that attains the bound.'
        )
        parser.add_argument(
            '--out',
            type=str,
            default=None,
            help='Writes the result JSON here instead of standard output.'
        )

    def run(self, **options):
        exact = options['exact']
        k_value = self.parse_value(options['kinst'], exact)
        p_x = self.parse_px(options['px'], exact)

        bound = min_info_cost(k_value, p_x)
        payload = {'k_value': k_value, 'bits': bound}
        if options['witness']:
            model = achievability_model(k_value, exact) if k_value < 0 else None
            if model is None:
                self.stdout.write(self.style.WARNING('K >= 0 needs no dependence; there is no witness to print.'))
            else:
                payload['witness_information'] = mutual_information(model.witness)
                payload['grouping'] = model.grouping
        self.writer().emit_json(payload, options['out'])
        if options['witness'] and k_value < 0:
            self.stdout.write(serialize_latent_joint(model.witness))
        self.stdout.write(self.style.SUCCESS(f"I(X;Lambda) >= {bound:.6f} bits"))
