import numpy as np
from tqdm import tqdm

from ...helpers.command_helper import InstrumentalCommand, instrumental_setting
from ...helpers.dependence_helper import min_dependence, worst_case_instrument
from ...helpers.inequalities_helper import get_inequality
from ...helpers.lp_helper import AlphaOutOfRangeError
from ...helpers.quantum_helper import maximize_violation


class Command(InstrumentalCommand):
    help = (
        'Searches two-qubit strategies (partially entangled state, real-plane projective measurements) '
        'for the largest violation of an inequality, and the classical dependence that violation would need.'
    )

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--target',
            type=str,
            required=True,
            help='Inequality id to violate, e.g. c1, bonet, kedagni.'
        )
        parser.add_argument(
            '--grid',
            type=int,
            default=None,
            help='Coarse design size per angle; the design has 2**ceil(log2(grid**3)) points.'
        )
        parser.add_argument(
            '--seed',
            type=int,
            default=None,
            help='Seed of the scrambled Sobol design.'
        )
        parser.add_argument(
            '--starts',
            type=int,
            default=None,
            help='Number of best design points refined with Nelder-Mead.'
        )
        parser.add_argument(
            '--px',
            type=str,
            default=None,
            help='Instrument marginal for the classical minimal dependence (default uniform).'
        )
        parser.add_argument(
            '--sweep',
            type=int,
            default=0,
            help='For two-valued instruments, also sweeps p(X=0) over this many interior points.'
        )
        parser.add_argument(
            '--out',
            type=str,
            default=None,
            help='Writes the result JSON here instead of standard output.'
        )

    def run(self, **options):
        ineq = get_inequality(options['target'])
        grid = options['grid'] or instrumental_setting('QUANTUM_GRID')
        seed = options['seed'] if options['seed'] is not None else instrumental_setting('DEFAULT_SEED')
        starts = options['starts'] or instrumental_setting('QUANTUM_STARTS')
        p_x = self.parse_px(options['px'], False) or [1 / ineq.x_card] * ineq.x_card

        self.stdout.write(f"Optimizing '{ineq.id}' (grid {grid}, seed {seed}, {starts} starts)...")
        optimum = maximize_violation(ineq, grid, seed, starts, instrumental_setting('NELDER_MEAD_TOLERANCE'))

        try:
            dependence = min_dependence(ineq, p_x, optimum.alpha, False, options['backend'])
        except AlphaOutOfRangeError:
            dependence = None
            self.stdout.write(self.style.WARNING(
                f"alpha={optimum.alpha:.6f} is beyond every classical model at p_x={p_x}."
            ))
        payload = {
            'ineq': ineq.id,
            'alpha': optimum.alpha,
            'angles': optimum.family.as_dict(),
            'p_ab_given_x': optimum.p_table,
            'p_b_do_a': optimum.do_table,
            'evaluations': optimum.evaluations,
            'converged': optimum.converged,
            'p_x': p_x,
            'min_dependence': dependence,
        }

        if options['sweep']:
            p0_values = np.linspace(0, 1, options['sweep'] + 2)[1:-1]
            progress = tqdm(p0_values, desc='p(X=0) sweep', disable=options['quiet'])
            best_p0, best_value, sweep = worst_case_instrument(
                ineq, optimum.alpha, progress, False, options['backend'], instrumental_setting('WORKERS'))
            payload['sweep'] = {
                'best_p0': best_p0,
                'best_dependence': best_value,
                'points': [[p0, value] for p0, value in sweep],
            }

        self.writer().emit_json(payload, options['out'], seed=seed)
        self.stdout.write(self.style.SUCCESS(f"Best violation of '{ineq.id}': alpha = {optimum.alpha:.10f}"))
