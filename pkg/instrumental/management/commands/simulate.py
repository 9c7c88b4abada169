import os

from ...helpers.command_helper import InstrumentalCommand, instrumental_setting, read_text
from ...helpers.scenario_helper import DegenerateSampleError, serialize_distribution, write_samples
from ...helpers.simulation_helper import empirical_distribution, simulate
from ...helpers.strategies_helper import forward_distribution, parse_latent_joint


class Command(InstrumentalCommand):
    help = (
        'Pushes a latent joint through the instrumental model: writes its exact observed distribution '
        'and n sampled rows (x,a,b) drawn with a seeded generator.'
    )

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--latent',
            type=str,
            required=True,
            help='Path to the latent joint JSON document.'
        )
        parser.add_argument(
            '--n',
            type=int,
            required=True,
            help='Number of rows to draw.'
        )
        parser.add_argument(
            '--seed',
            type=int,
            default=None,
            help='Seed of the PCG64 generator.'
        )
        parser.add_argument(
            '--out-dist',
            type=str,
            default=None,
            help='Path for the observed distribution JSON.'
        )
        parser.add_argument(
            '--out-samples',
            type=str,
            default=None,
            help='Path for the sample CSV.'
        )

    def run(self, **options):
        exact = options['exact']
        seed = options['seed'] if options['seed'] is not None else instrumental_setting('DEFAULT_SEED')
        q = parse_latent_joint(read_text(options['latent']), exact)

        dist = forward_distribution(q)
        if options['out_dist']:
            os.makedirs(os.path.dirname(os.path.abspath(options['out_dist'])), exist_ok=True)
            with open(options['out_dist'], 'w', encoding='utf-8') as f:
                f.write(serialize_distribution(dist) + '\n')
            self.stdout.write(self.style.SUCCESS(f"Observed distribution written to {options['out_dist']}"))

        sample = simulate(q, options['n'], seed)
        if options['out_samples']:
            write_samples(sample, options['out_samples'])
            self.stdout.write(self.style.SUCCESS(f"{len(sample)} rows written to {options['out_samples']}"))

        payload = {'n': len(sample), 'p_x': dist.p_x}
        try:
            empirical = empirical_distribution(sample)
            payload['empirical_p_x'] = empirical.p_x
            payload['empirical_p_ab_given_x'] = empirical.p_ab_given_x
        except DegenerateSampleError as exc:
            self.stdout.write(self.style.WARNING(str(exc)))
        self.writer().emit_json(payload, seed=seed)
